#pragma once

#include <cstdint>
#include <filesystem>

#include "pohlab/plane.hpp"

namespace pohlab {

/// Grayscale raster as read from disk, with the format's maximum sample value.
struct GrayImage {
  Plane<std::uint16_t> pixels;
  int max_value = 255;
};

/// Reads binary PGM (P5, 8- or 16-bit) or grayscale PNG, chosen by file signature.
GrayImage read_gray_image(const std::filesystem::path& path);

GrayImage read_pgm(const std::filesystem::path& path);
GrayImage read_png(const std::filesystem::path& path);

/// 8-bit binary PGM.
void write_pgm(const std::filesystem::path& path, const Plane<std::uint8_t>& image);
/// 8-bit grayscale PNG.
void write_png(const std::filesystem::path& path, const Plane<std::uint8_t>& image);

/// Binary PBM (P4). Set bits (black) map to true.
Mask read_pbm(const std::filesystem::path& path);
void write_pbm(const std::filesystem::path& path, const Mask& mask);

}  // namespace pohlab
