#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pohlab/cgh.hpp"
#include "pohlab/plane.hpp"
#include "pohlab/subhologram.hpp"
#include "pohlab/wavefield.hpp"

namespace pohlab {

/// Set of coded SLM pixels. The coded fraction is kept current on every mutation.
class RoiMask {
 public:
  RoiMask() = default;
  RoiMask(int width, int height, bool value = false);
  explicit RoiMask(Mask bits);

  static RoiMask full(int width, int height) { return RoiMask(width, height, true); }

  int width() const noexcept { return bits_.width(); }
  int height() const noexcept { return bits_.height(); }
  std::size_t size() const noexcept { return bits_.size(); }

  bool get(int x, int y) const { return bits_.at(x, y) != 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(int x, int y, bool value);
  void set(std::size_t i, bool value);

  std::size_t coded_count() const noexcept { return coded_; }
  /// rho = coded pixels / all pixels.
  double coded_fraction() const noexcept {
    return bits_.empty() ? 0.0 : static_cast<double>(coded_) / static_cast<double>(bits_.size());
  }
  const Mask& mask() const noexcept { return bits_; }

  friend bool operator==(const RoiMask& a, const RoiMask& b) { return a.bits_ == b.bits_; }

 private:
  Mask bits_;
  std::size_t coded_ = 0;
};

enum class CodingMode : std::uint8_t { kBitPlane = 0, kLevel = 1 };
enum class FillMode : std::uint8_t { kConstant = 0, kSeededRandom = 1 };

/// How the decoder fills pixels outside the RoI.
struct FillSpec {
  FillMode mode = FillMode::kSeededRandom;
  std::uint32_t value = 0x5EED;  // seed, or the constant sample for kConstant

  static FillSpec constant(std::uint8_t sample) { return {FillMode::kConstant, sample}; }
  static FillSpec seeded(std::uint32_t seed) { return {FillMode::kSeededRandom, seed}; }
};

/// Sample that seeded-random fill places at raster index i.
std::uint8_t fill_sample(std::uint32_t seed, std::size_t index) noexcept;

// --- quantizers -----------------------------------------------------------

/// Reconstruction levels round(i * 255 / (L - 1)), i = 0..L-1.
std::vector<std::uint8_t> quantizer_levels(int levels);

/// Index of the nearest level (ties to the lower one). The wrap-aware variant
/// measures distance around the 256-count phase circle.
int nearest_level_index(std::uint8_t sample, int levels, bool wrap_aware = false);

PhaseHologram quantize_levels(const PhaseHologram& poh, int levels, bool wrap_aware = false);

/// log2(L) bits per coded pixel.
double nominal_level_rate(int levels);

/// Transmitted value: the b most significant bits.
std::uint8_t bitplane_code(std::uint8_t sample, int bits);
/// Cell-midpoint reconstruction of a b-bit code.
std::uint8_t bitplane_reconstruct(std::uint32_t code, int bits);
/// bitplane_reconstruct(bitplane_code(sample, b), b).
std::uint8_t quantize_bitplanes(std::uint8_t sample, int bits);
PhaseHologram quantize_bitplanes(const PhaseHologram& poh, int bits);

// --- bitstream ------------------------------------------------------------

struct PohHeader {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  CodingMode mode = CodingMode::kBitPlane;
  std::uint8_t bits = 8;     // bit-plane depth, or ceil(log2 L) in level mode
  std::uint16_t levels = 0;  // level mode only
  std::uint8_t layer_count = 0;
  FillSpec fill;
};

/// Serialized size of the fixed header that precedes the RoI runs.
inline constexpr std::size_t kPohHeaderBytes = 22;
/// Level mode packs this many symbols per group.
inline constexpr int kLevelGroupSize = 32;

/// Coded POH. Layout (little-endian):
///   "POH1" u16 width u16 height u8 mode u8 bits u16 levels u8 layer_count
///   u8 fill_mode u32 fill_value u32 run_count u32 runs[run_count]
///   layer payload, MSB first, layers back to back, zero padded to a byte.
/// Runs alternate false/true over the raster and start with a false run.
class PohBitstream {
 public:
  const PohHeader& header() const noexcept { return header_; }
  const std::vector<std::uint32_t>& roi_runs() const noexcept { return runs_; }
  std::size_t coded_pixels() const noexcept { return coded_; }

  /// Bits of layer k (0 = most significant).
  std::size_t layer_bits(int layer) const;
  std::size_t payload_bits() const noexcept;
  /// Layers fully present in the stream (less than layer_count when truncated).
  int layers_present() const noexcept { return layers_present_; }

  std::size_t header_bits() const noexcept { return kPohHeaderBytes * 8; }
  std::size_t rle_bits() const noexcept { return runs_.size() * 32; }
  std::size_t padding_bits() const noexcept;
  /// header + RLE + payload + padding; always a multiple of 8.
  std::size_t total_bits() const noexcept;
  double bpp_total() const noexcept;
  double bpp_payload() const noexcept;

  RoiMask roi() const;

  std::vector<std::uint8_t> serialize() const;
  /// Strict parse: the byte count must match the header exactly.
  static PohBitstream parse(std::span<const std::uint8_t> bytes);
  /// Accepts a stream cut after any whole number of layers.
  static PohBitstream parse_prefix(std::span<const std::uint8_t> bytes);

  /// Stream bytes holding only the first k layers.
  std::vector<std::uint8_t> truncated(int layers) const;

  /// Validates and assembles a stream from its parts. `payload` holds
  /// `payload_bit_count` bits, which may stop after any whole layer.
  static PohBitstream assemble(const PohHeader& header, std::vector<std::uint32_t> runs,
                               std::vector<std::uint8_t> payload, std::size_t payload_bit_count);
  std::span<const std::uint8_t> payload() const noexcept { return payload_; }

 private:
  static PohBitstream parse_impl(std::span<const std::uint8_t> bytes, bool allow_prefix);

  PohHeader header_;
  std::vector<std::uint32_t> runs_;
  std::size_t coded_ = 0;
  std::vector<std::uint8_t> payload_;  // packed layers
  std::size_t payload_bit_count_ = 0;  // bits actually present
  int layers_present_ = 0;
};

/// Bit-plane mode: layer k carries the k-th most significant bit of every
/// RoI pixel in raster order.
PohBitstream encode(const PhaseHologram& poh, const RoiMask& roi, int bits,
                    FillSpec fill = FillSpec{});

/// Level mode: one layer of base-L level indices, packed 32 symbols per group.
PohBitstream encode_levels(const PhaseHologram& poh, const RoiMask& roi, int levels,
                           FillSpec fill = FillSpec{}, bool wrap_aware = false);

/// Reconstructs from the first `layers` layers (midpoint fill for the rest).
/// layers = 0 means every layer present in the stream.
PhaseHologram decode(const PohBitstream& stream, int layers = 0);
PhaseHologram decode(std::span<const std::uint8_t> bytes, int layers = 0);

void write_poh(const std::filesystem::path& path, const PohBitstream& stream);
PohBitstream read_poh(const std::filesystem::path& path);

// --- RoI derivation ---------------------------------------------------------

/// Union over layers of the support dilated by a disk of radius
/// ceil(subhologram_radius(z) / pitch) pixels.
RoiMask roi_from_scene(const TargetScene& scene, const SlmParams& slm,
                       const SubhologramParams& sub = {});

/// Scanline run lengths, starting with a (possibly empty) false run.
std::vector<std::uint32_t> roi_runs(const Mask& mask);
Mask roi_from_runs(std::span<const std::uint32_t> runs, int width, int height);

}  // namespace pohlab
