#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pohlab/image_io.hpp"
#include "pohlab/plane.hpp"
#include "pohlab/wavefield.hpp"

namespace pohlab {

/// Border kept free of content by the bundled scenes and excluded from
/// signal masks.
inline constexpr int kGuardBand = 32;

inline constexpr double kMinSceneDepth = 0.25;
inline constexpr double kMaxSceneDepth = 5.0;

struct SceneLayer {
  Plane<double> amplitude;  // [0, 1], on the SLM grid
  double depth = 0.5;       // meters
};

struct TargetScene {
  std::vector<SceneLayer> layers;
  double support_threshold = 0.05;

  int width() const { return layers.empty() ? 0 : layers.front().amplitude.width(); }
  int height() const { return layers.empty() ? 0 : layers.front().amplitude.height(); }

  /// Throws UsageError if the scene is malformed or not on the given grid.
  void validate(const SlmParams& slm) const;
  void validate() const;

  /// Index of the layer carrying the most energy (first one on ties).
  std::size_t dominant_layer() const;
  double focus_depth() const { return layers.at(dominant_layer()).depth; }

  /// Sum of the amplitudes of all layers sharing the focus depth.
  Plane<double> focus_amplitude() const;

  /// Union over layers of amplitude > threshold.
  Mask support() const;
};

/// Centers an image on the grid (zero padded) with amplitude = pixel / max_value.
TargetScene scene_from_image(const GrayImage& image, double depth, double threshold,
                             const SlmParams& slm);

TargetScene load_scene(const std::filesystem::path& image_path, double depth, double threshold,
                       const SlmParams& slm);

struct DepthMapConfig {
  double z_min = 0.25;
  double z_max = 5.0;
  int layers = 4;
};

/// Splits an image into depth layers using an 8-bit depth map of the same
/// size. Map value v lies at z_min + v/255 * (z_max - z_min); the value range
/// is cut into `layers` equal buckets, each placed at its bucket's center
/// depth. Empty buckets are dropped.
TargetScene load_layered_scene(const std::filesystem::path& image_path,
                               const std::filesystem::path& depth_map_path,
                               const DepthMapConfig& cfg, double threshold,
                               const SlmParams& slm);

TargetScene layered_scene_from_images(const GrayImage& image, const GrayImage& depth_map,
                                      const DepthMapConfig& cfg, double threshold,
                                      const SlmParams& slm);

struct CghOptions {
  /// Band limit applied to the diffused object field, cycles/m. Zero keeps
  /// the full SLM band.
  double diffuser_cutoff = 0.0;
};

/// Layered Fresnel hologram. Every layer gets the same seeded uniform random
/// phase map and is propagated by -depth to the SLM plane; layers are summed.
ComplexField generate_complex_hologram(const TargetScene& scene, const SlmParams& slm,
                                       std::uint64_t seed, const CghOptions& options = {});

/// Seeded uniform phase in [0, 2*pi), identical on every platform.
std::vector<double> random_phase_map(std::size_t count, std::uint64_t seed);

}  // namespace pohlab
