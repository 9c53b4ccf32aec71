#include "pohlab/phase_retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "bytes.hpp"
#include "pohlab/morphology.hpp"

namespace pohlab {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Complex unit_phasor(Complex v) {
  const double m = std::abs(v);
  return m > 0.0 ? v / m : Complex(1.0, 0.0);
}

Complex quantized_phasor(Complex v) {
  if (v.real() == 0.0 && v.imag() == 0.0) return {1.0, 0.0};
  double angle = std::atan2(v.imag(), v.real());
  if (angle < 0.0) angle += kTwoPi;
  const long code = std::lround(angle * 256.0 / kTwoPi) & 0xFF;
  return std::polar(1.0, kTwoPi * static_cast<double>(code) / 256.0);
}

}  // namespace

void FidocConfig::validate(int width, int height) const {
  if (iterations < 1) throw UsageError("FIDOC needs at least one iteration");
  if (!(feedback >= 0.0 && feedback <= 1.0)) throw UsageError("FIDOC feedback must be in [0, 1]");
  if (!(aperture_cutoff >= 0.0)) throw UsageError("aperture cutoff must be non-negative");
  if (!signal_mask.empty() && (signal_mask.width() != width || signal_mask.height() != height)) {
    throw UsageError("signal mask does not match the grid");
  }
}

Mask default_signal_mask(const TargetScene& scene, int dilation, int guard) {
  if (dilation < 0) throw UsageError("signal mask dilation must be non-negative");
  if (guard < 0) throw UsageError("guard band must be non-negative");
  scene.validate();
  const Mask grown = dilate_square(scene.support(), dilation);
  return mask_and(grown, interior_mask(scene.width(), scene.height(), guard));
}

FidocResult fidoc(const ComplexField& hologram, const TargetScene& scene, const FidocConfig& cfg) {
  scene.validate(hologram.params());
  cfg.validate(hologram.width(), hologram.height());
  if (!hologram.all_finite()) throw UsageError("fidoc: non-finite hologram");

  const Mask mask = cfg.signal_mask.empty() ? default_signal_mask(scene) : cfg.signal_mask;
  const std::size_t constrained = count_true(mask);
  if (constrained == 0) {
    // Nothing is constrained, so every iteration returns the input phase.
    return {field_to_phase(hologram), RetrievalTrace{std::vector<double>(cfg.iterations, 0.0), 1.0}};
  }

  const double z = scene.focus_depth();
  const Plane<double> target = scene.focus_amplitude();
  PropagationOptions prop;
  prop.aperture_cutoff = cfg.aperture_cutoff;

  ComplexField slm(hologram.params());
  for (std::size_t i = 0; i < slm.size(); ++i) {
    slm[i] = cfg.quantize_each_iter ? quantized_phasor(hologram[i]) : unit_phasor(hologram[i]);
  }

  RetrievalTrace trace;
  trace.rmse.reserve(cfg.iterations);
  double gain = 0.0;
  ComplexField back(hologram.params());

  for (int k = 0; k < cfg.iterations; ++k) {
    ComplexField image = propagate(slm, z, prop);
    if (k == 0) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < image.size(); ++i) {
        if (!mask[i]) continue;
        num += std::abs(image[i]) * target[i];
        den += target[i] * target[i];
      }
      gain = den > 0.0 ? num / den : 1.0;
      trace.target_gain = gain;
    }
    double err = 0.0;
    for (std::size_t i = 0; i < image.size(); ++i) {
      if (!mask[i]) continue;
      const double mag = std::abs(image[i]);
      const double t = gain * target[i];
      err += (mag - t) * (mag - t);
      const double replaced = std::max(t + cfg.feedback * (t - mag), 0.0);
      image[i] = replaced * unit_phasor(image[i]);
    }
    trace.rmse.push_back(std::sqrt(err / static_cast<double>(constrained)));

    back = propagate(image, -z, prop);
    const bool last = k + 1 == cfg.iterations;
    if (last) break;
    for (std::size_t i = 0; i < slm.size(); ++i) {
      slm[i] = cfg.quantize_each_iter ? quantized_phasor(back[i]) : unit_phasor(back[i]);
    }
  }
  return {field_to_phase(back), std::move(trace)};
}

std::string trace_csv(const RetrievalTrace& trace) {
  std::ostringstream out;
  out << "iteration,rmse\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.rmse.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.12g\n", i + 1, trace.rmse[i]);
    out << buf;
  }
  return out.str();
}

void write_trace_csv(const std::filesystem::path& path, const RetrievalTrace& trace) {
  const std::string text = trace_csv(trace);
  detail::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                     text.size()));
}

}  // namespace pohlab
