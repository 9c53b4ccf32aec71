#pragma once

#include <string>
#include <vector>

#include "pohlab/cgh.hpp"

namespace pohlab {

/// Two grey cards with bright glyph bars on black, the default sparse test
/// content. Coordinates are laid out for 512x512 and scaled for other sizes.
Plane<double> sparse_cards_amplitude(int width, int height);

/// Two small cards (default 96x64 px at 512^2) on the main diagonal. Used to
/// calibrate RoI coding.
Plane<double> info_cards_amplitude(int width, int height, int card_width = 96,
                                   int card_height = 64);

/// Uniform amplitude inside the guard band.
Plane<double> full_frame_amplitude(int width, int height, double level = 1.0);

/// Centered bright square with the given side.
Plane<double> square_amplitude(int width, int height, int side);

std::vector<std::string> builtin_scene_names();

/// Looks up "sparse-cards", "info-cards", "full-frame" or "square". Throws
/// UsageError for unknown names.
TargetScene builtin_scene(const std::string& name, const SlmParams& slm, double depth,
                          double threshold = 0.05);

/// Accepts either "builtin:<name>" or an image path.
TargetScene resolve_scene(const std::string& source, const SlmParams& slm, double depth,
                          double threshold = 0.05);

/// 8-bit rendering of an amplitude plane.
Plane<std::uint8_t> amplitude_to_gray(const Plane<double>& amplitude);

}  // namespace pohlab
