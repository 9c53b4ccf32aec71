#include "pohlab/scenes.hpp"

#include <algorithm>
#include <cmath>

namespace pohlab {
namespace {

// Rectangle [x0, x1) x [y0, y1) in 512-grid coordinates, scaled to the target.
void fill_rect(Plane<double>& amp, int x0, int y0, int x1, int y1, double value) {
  const int w = amp.width();
  const int h = amp.height();
  auto sx = [w](int x) { return std::clamp(x * w / 512, 0, w); };
  auto sy = [h](int y) { return std::clamp(y * h / 512, 0, h); };
  for (int y = sy(y0); y < sy(y1); ++y) {
    for (int x = sx(x0); x < sx(x1); ++x) amp.at(x, y) = value;
  }
}

void check_size(int width, int height) {
  if (width < 2 * kGuardBand + 8 || height < 2 * kGuardBand + 8) {
    throw UsageError("scene grid too small for the guard band");
  }
}

}  // namespace

Plane<double> sparse_cards_amplitude(int width, int height) {
  check_size(width, height);
  Plane<double> amp(width, height);
  fill_rect(amp, 80, 120, 260, 200, 0.35);
  for (int k = 0; k < 6; ++k) fill_rect(amp, 95 + k * 26, 140, 109 + k * 26, 180, 1.0);
  fill_rect(amp, 250, 300, 430, 380, 0.35);
  for (int k = 0; k < 5; ++k) fill_rect(amp, 268 + k * 32, 320, 286 + k * 32, 360, 0.8);
  return amp;
}

Plane<double> info_cards_amplitude(int width, int height, int card_width, int card_height) {
  check_size(width, height);
  if (card_width < 8 || card_height < 8) throw UsageError("info card too small");
  Plane<double> amp(width, height);
  struct Card {
    int cx, cy;
    double glyph;
  };
  const Card cards[] = {{width / 3, height / 3, 1.0}, {2 * width / 3, 2 * height / 3, 0.8}};
  const int gw = card_width / 4;
  for (const auto& c : cards) {
    const int x0 = c.cx - card_width / 2;
    const int y0 = c.cy - card_height / 2;
    if (x0 < kGuardBand || y0 < kGuardBand || x0 + card_width > width - kGuardBand ||
        y0 + card_height > height - kGuardBand) {
      throw UsageError("info cards do not fit inside the guard band");
    }
    for (int y = y0; y < y0 + card_height; ++y) {
      for (int x = x0; x < x0 + card_width; ++x) amp.at(x, y) = 0.3;
    }
    for (int k = 0; k < 3; ++k) {
      const int gx = x0 + gw / 4 + k * (gw * 5 / 4);
      for (int y = c.cy - card_height / 4; y < c.cy + card_height / 4; ++y) {
        for (int x = gx; x < gx + gw; ++x) amp.at(x, y) = c.glyph;
      }
    }
  }
  return amp;
}

Plane<double> full_frame_amplitude(int width, int height, double level) {
  check_size(width, height);
  Plane<double> amp(width, height);
  for (int y = kGuardBand; y < height - kGuardBand; ++y) {
    for (int x = kGuardBand; x < width - kGuardBand; ++x) amp.at(x, y) = level;
  }
  return amp;
}

Plane<double> square_amplitude(int width, int height, int side) {
  check_size(width, height);
  if (side < 1 || side > std::min(width, height) - 2 * kGuardBand) {
    throw UsageError("square side out of range");
  }
  Plane<double> amp(width, height);
  const int x0 = (width - side) / 2;
  const int y0 = (height - side) / 2;
  for (int y = y0; y < y0 + side; ++y) {
    for (int x = x0; x < x0 + side; ++x) amp.at(x, y) = 1.0;
  }
  return amp;
}

std::vector<std::string> builtin_scene_names() {
  return {"sparse-cards", "info-cards", "full-frame", "square"};
}

TargetScene builtin_scene(const std::string& name, const SlmParams& slm, double depth,
                          double threshold) {
  slm.validate();
  Plane<double> amp;
  if (name == "sparse-cards") {
    amp = sparse_cards_amplitude(slm.width, slm.height);
  } else if (name == "info-cards") {
    amp = info_cards_amplitude(slm.width, slm.height);
  } else if (name == "full-frame") {
    amp = full_frame_amplitude(slm.width, slm.height);
  } else if (name == "square") {
    amp = square_amplitude(slm.width, slm.height, std::min(slm.width, slm.height) / 4);
  } else {
    throw UsageError("unknown builtin scene '" + name + "'");
  }
  TargetScene scene;
  scene.support_threshold = threshold;
  scene.layers.push_back({std::move(amp), depth});
  scene.validate(slm);
  return scene;
}

TargetScene resolve_scene(const std::string& source, const SlmParams& slm, double depth,
                          double threshold) {
  constexpr std::string_view prefix = "builtin:";
  if (source.starts_with(prefix)) {
    return builtin_scene(source.substr(prefix.size()), slm, depth, threshold);
  }
  return load_scene(source, depth, threshold, slm);
}

Plane<std::uint8_t> amplitude_to_gray(const Plane<double>& amplitude) {
  Plane<std::uint8_t> out(amplitude.width(), amplitude.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(amplitude[i], 0.0, 1.0) * 255.0));
  }
  return out;
}

}  // namespace pohlab
