#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pohlab/cgh.hpp"
#include "pohlab/wavefield.hpp"

namespace pohlab {

struct FidocConfig {
  int iterations = 30;
  double feedback = 0.5;  // 0 gives plain Gerchberg-Saxton error reduction
  Mask signal_mask;       // true = constrained; empty plane means "use the default mask"
  bool quantize_each_iter = false;
  /// Pupil applied to every propagation of the loop, cycles/m. Zero = off.
  double aperture_cutoff = 0.0;

  void validate(int width, int height) const;
};

/// Per-iteration RMSE between |U| and the scaled target over the signal region,
/// measured before the amplitude replacement of that iteration.
struct RetrievalTrace {
  std::vector<double> rmse;
  /// Least-squares gain fitted on the first iteration; the target is alpha * A.
  double target_gain = 1.0;
};

struct FidocResult {
  PhaseHologram poh;
  RetrievalTrace trace;
};

/// Fienup iteration with don't-care regions. Projects onto the scene's focus
/// depth; only pixels inside the signal mask are constrained.
FidocResult fidoc(const ComplexField& hologram, const TargetScene& scene,
                  const FidocConfig& cfg = {});

/// Support (amplitude > threshold) dilated by a square of the given radius,
/// with the border guard band always excluded.
Mask default_signal_mask(const TargetScene& scene, int dilation = 8, int guard = kGuardBand);

std::string trace_csv(const RetrievalTrace& trace);
void write_trace_csv(const std::filesystem::path& path, const RetrievalTrace& trace);

}  // namespace pohlab
