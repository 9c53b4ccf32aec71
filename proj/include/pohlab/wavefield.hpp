#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pohlab/plane.hpp"

namespace pohlab {

using Complex = std::complex<double>;

/// Physical description of the phase-mode SLM grid.
struct SlmParams {
  int width = 512;
  int height = 512;
  double pixel_pitch = 8e-6;   // meters
  double wavelength = 638e-9;  // meters
  int phase_bits = 8;

  /// Throws UsageError when an invariant is violated.
  void validate() const;

  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  /// Square desk-scale grid with the bench pitch and wavelength.
  static SlmParams desk(int size = 512);
  static SlmParams full_hd();

  friend bool operator==(const SlmParams&, const SlmParams&) = default;
};

/// Sampled complex wavefield on the SLM grid, row-major.
class ComplexField {
 public:
  explicit ComplexField(const SlmParams& params);
  ComplexField(const SlmParams& params, std::vector<Complex> data);

  const SlmParams& params() const noexcept { return params_; }
  int width() const noexcept { return params_.width; }
  int height() const noexcept { return params_.height; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<Complex> data() noexcept { return data_; }
  std::span<const Complex> data() const noexcept { return data_; }
  Complex& operator[](std::size_t i) { return data_[i]; }
  const Complex& operator[](std::size_t i) const { return data_[i]; }
  Complex& at(int x, int y) { return data_[static_cast<std::size_t>(y) * params_.width + x]; }
  const Complex& at(int x, int y) const {
    return data_[static_cast<std::size_t>(y) * params_.width + x];
  }

  /// Sum of |U|^2.
  double energy() const noexcept;
  bool all_finite() const noexcept;
  double max_abs() const noexcept;

 private:
  SlmParams params_;
  std::vector<Complex> data_;
};

/// Display-ready phase-only hologram: sample p encodes phase 2*pi*p/256.
class PhaseHologram {
 public:
  explicit PhaseHologram(const SlmParams& params);
  PhaseHologram(const SlmParams& params, std::vector<std::uint8_t> samples);

  const SlmParams& params() const noexcept { return params_; }
  int width() const noexcept { return params_.width; }
  int height() const noexcept { return params_.height; }
  std::size_t size() const noexcept { return samples_.size(); }

  std::span<std::uint8_t> samples() noexcept { return samples_; }
  std::span<const std::uint8_t> samples() const noexcept { return samples_; }
  std::uint8_t& operator[](std::size_t i) { return samples_[i]; }
  std::uint8_t operator[](std::size_t i) const { return samples_[i]; }
  std::uint8_t at(int x, int y) const {
    return samples_[static_cast<std::size_t>(y) * params_.width + x];
  }

  friend bool operator==(const PhaseHologram& a, const PhaseHologram& b) {
    return a.params_.width == b.params_.width && a.params_.height == b.params_.height &&
           a.samples_ == b.samples_;
  }

 private:
  SlmParams params_;
  std::vector<std::uint8_t> samples_;
};

using IntensityImage = Plane<double>;

struct PropagationOptions {
  /// Radius of a circular pupil in the Fourier plane, cycles/m. Zero disables it.
  double aperture_cutoff = 0.0;
  /// Zero-padding factor of the computation grid. 1 keeps the transfer all-pass.
  int padding = 1;
};

/// Largest |z| for which the Fresnel transfer chirp is sampled without aliasing.
double aliasing_free_distance(const SlmParams& params) noexcept;

/// Band-limited Fresnel angular-spectrum propagation over signed distance z.
ComplexField propagate(const ComplexField& field, double z,
                       const PropagationOptions& options = {});

ComplexField phase_to_field(const PhaseHologram& poh);

/// Keeps only the phase, rounded to the nearest 8-bit code.
PhaseHologram field_to_phase(const ComplexField& field);

IntensityImage intensity(const ComplexField& field);

/// Receives non-fatal diagnostics such as chirp aliasing. Pass an empty
/// function to restore the default handler, which prints the first message
/// of each kind to stderr.
void set_warning_handler(std::function<void(const std::string&)> handler);

/// Field dumps: "CFLD", u32 width, u32 height, u32 reserved, then
/// little-endian f64 (re, im) pairs. The header does not carry pitch or wavelength.
std::vector<std::uint8_t> encode_cfld(const ComplexField& field);
ComplexField decode_cfld(std::span<const std::uint8_t> bytes, double pixel_pitch = 8e-6,
                         double wavelength = 638e-9);
void write_cfld(const std::filesystem::path& path, const ComplexField& field);
ComplexField read_cfld(const std::filesystem::path& path, double pixel_pitch = 8e-6,
                       double wavelength = 638e-9);

namespace detail {
void warn(const std::string& key, const std::string& message);
}  // namespace detail

}  // namespace pohlab
