#include "pohlab/cgh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

namespace pohlab {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void check_depth(double depth) {
  if (!(depth >= kMinSceneDepth && depth <= kMaxSceneDepth)) {
    throw UsageError("scene depth " + std::to_string(depth) + " m outside [0.25, 5.0]");
  }
}

Plane<double> centered_amplitude(const GrayImage& image, const SlmParams& slm,
                                 const std::function<bool(int, int)>& keep = {}) {
  const int iw = image.pixels.width();
  const int ih = image.pixels.height();
  if (iw > slm.width || ih > slm.height) {
    throw UsageError("image " + std::to_string(iw) + "x" + std::to_string(ih) +
                     " is larger than the SLM grid");
  }
  if (image.max_value <= 0) throw UsageError("image max value must be positive");
  const int ox = (slm.width - iw) / 2;
  const int oy = (slm.height - ih) / 2;
  const double scale = 1.0 / image.max_value;
  Plane<double> amp(slm.width, slm.height);
  for (int y = 0; y < ih; ++y) {
    for (int x = 0; x < iw; ++x) {
      if (keep && !keep(x, y)) continue;
      amp.at(x + ox, y + oy) = std::min(1.0, image.pixels.at(x, y) * scale);
    }
  }
  return amp;
}

}  // namespace

std::vector<double> random_phase_map(std::size_t count, std::uint64_t seed) {
  std::vector<double> phase(count);
  std::uint64_t state = seed;
  for (auto& p : phase) {
    // 53 random mantissa bits, so the map does not depend on the C++ library.
    const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    p = 2.0 * std::numbers::pi * u;
  }
  return phase;
}

void TargetScene::validate() const {
  if (layers.empty()) throw UsageError("scene has no layers");
  if (!(support_threshold >= 0.0 && support_threshold <= 1.0)) {
    throw UsageError("support threshold must lie in [0, 1]");
  }
  const auto& first = layers.front().amplitude;
  for (const auto& layer : layers) {
    check_depth(layer.depth);
    if (!layer.amplitude.same_shape(first)) throw UsageError("scene layers differ in size");
    for (double a : layer.amplitude.values()) {
      if (!(a >= 0.0 && a <= 1.0)) throw UsageError("scene amplitude outside [0, 1]");
    }
  }
}

void TargetScene::validate(const SlmParams& slm) const {
  validate();
  if (width() != slm.width || height() != slm.height) {
    throw UsageError("scene is " + std::to_string(width()) + "x" + std::to_string(height()) +
                     " but the SLM grid is " + std::to_string(slm.width) + "x" +
                     std::to_string(slm.height));
  }
}

std::size_t TargetScene::dominant_layer() const {
  if (layers.empty()) throw UsageError("scene has no layers");
  std::size_t best = 0;
  double best_energy = -1.0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    double e = 0.0;
    for (double a : layers[i].amplitude.values()) e += a * a;
    if (e > best_energy) {
      best_energy = e;
      best = i;
    }
  }
  return best;
}

Plane<double> TargetScene::focus_amplitude() const {
  const double z = focus_depth();
  Plane<double> out(width(), height());
  for (const auto& layer : layers) {
    if (layer.depth != z) continue;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += layer.amplitude[i];
  }
  return out;
}

Mask TargetScene::support() const {
  Mask m(width(), height());
  for (const auto& layer : layers) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (layer.amplitude[i] > support_threshold) m[i] = 1;
    }
  }
  return m;
}

TargetScene scene_from_image(const GrayImage& image, double depth, double threshold,
                             const SlmParams& slm) {
  slm.validate();
  check_depth(depth);
  TargetScene scene;
  scene.support_threshold = threshold;
  scene.layers.push_back({centered_amplitude(image, slm), depth});
  scene.validate(slm);
  return scene;
}

TargetScene load_scene(const std::filesystem::path& image_path, double depth, double threshold,
                       const SlmParams& slm) {
  return scene_from_image(read_gray_image(image_path), depth, threshold, slm);
}

TargetScene layered_scene_from_images(const GrayImage& image, const GrayImage& depth_map,
                                      const DepthMapConfig& cfg, double threshold,
                                      const SlmParams& slm) {
  slm.validate();
  if (cfg.layers < 1 || cfg.layers > 256) throw UsageError("depth layer count must be 1..256");
  check_depth(cfg.z_min);
  check_depth(cfg.z_max);
  if (cfg.z_max < cfg.z_min) throw UsageError("depth map range is inverted");
  if (!image.pixels.same_shape(depth_map.pixels)) {
    throw UsageError("depth map and image differ in size");
  }
  if (depth_map.max_value != 255) throw UsageError("depth map must be 8-bit");

  auto bucket_of = [&](int x, int y) {
    return std::min(cfg.layers - 1, depth_map.pixels.at(x, y) * cfg.layers / 256);
  };
  TargetScene scene;
  scene.support_threshold = threshold;
  for (int b = 0; b < cfg.layers; ++b) {
    auto amp = centered_amplitude(image, slm, [&](int x, int y) { return bucket_of(x, y) == b; });
    if (std::all_of(amp.values().begin(), amp.values().end(), [](double a) { return a == 0.0; })) {
      continue;
    }
    const double center = (b + 0.5) / cfg.layers;
    scene.layers.push_back({std::move(amp), cfg.z_min + center * (cfg.z_max - cfg.z_min)});
  }
  if (scene.layers.empty()) {
    // All-black content still yields a valid single-layer scene.
    scene.layers.push_back({Plane<double>(slm.width, slm.height), cfg.z_min});
  }
  scene.validate(slm);
  return scene;
}

TargetScene load_layered_scene(const std::filesystem::path& image_path,
                               const std::filesystem::path& depth_map_path,
                               const DepthMapConfig& cfg, double threshold,
                               const SlmParams& slm) {
  return layered_scene_from_images(read_gray_image(image_path), read_gray_image(depth_map_path),
                                   cfg, threshold, slm);
}

ComplexField generate_complex_hologram(const TargetScene& scene, const SlmParams& slm,
                                       std::uint64_t seed, const CghOptions& options) {
  scene.validate(slm);
  const auto phase = random_phase_map(slm.pixel_count(), seed);
  PropagationOptions prop;
  prop.aperture_cutoff = options.diffuser_cutoff;

  ComplexField hologram(slm);
  for (const auto& layer : scene.layers) {
    ComplexField object(slm);
    for (std::size_t i = 0; i < object.size(); ++i) {
      const double a = layer.amplitude[i];
      if (a != 0.0) object[i] = std::polar(a, phase[i]);
    }
    const auto at_slm = propagate(object, -layer.depth, prop);
    for (std::size_t i = 0; i < hologram.size(); ++i) hologram[i] += at_slm[i];
  }
  return hologram;
}

}  // namespace pohlab
