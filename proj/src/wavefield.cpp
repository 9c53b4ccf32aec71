#include "pohlab/wavefield.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>

#include "bytes.hpp"
#include "fft.hpp"

namespace pohlab {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kUsage: return "E_USAGE";
    case ErrorCode::kIo: return "E_IO";
    case ErrorCode::kCodec: return "E_CODEC";
    case ErrorCode::kCapacity: return "E_CAPACITY";
  }
  return "E_UNKNOWN";
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxDistance = 10.0;

std::mutex g_warn_mutex;
std::function<void(const std::string&)> g_warn_handler;
std::set<std::string> g_warned_keys;

const std::array<Complex, 256>& phase_table() {
  static const std::array<Complex, 256> table = [] {
    std::array<Complex, 256> t{};
    for (int p = 0; p < 256; ++p) t[p] = std::polar(1.0, kTwoPi * p / 256.0);
    return t;
  }();
  return table;
}

// Spatial frequencies of DFT bin i on an n-point grid with pitch dx.
std::vector<double> dft_frequencies(int n, double dx) {
  std::vector<double> f(n);
  for (int i = 0; i < n; ++i) {
    const int k = i < (n + 1) / 2 ? i : i - n;
    f[i] = static_cast<double>(k) / (n * dx);
  }
  return f;
}

}  // namespace

namespace detail {

void warn(const std::string& key, const std::string& message) {
  std::lock_guard lock(g_warn_mutex);
  if (g_warn_handler) {
    g_warn_handler(message);
    return;
  }
  if (g_warned_keys.insert(key).second) std::cerr << "pohlab: warning: " << message << "\n";
}

}  // namespace detail

void set_warning_handler(std::function<void(const std::string&)> handler) {
  std::lock_guard lock(g_warn_mutex);
  g_warn_handler = std::move(handler);
}

void SlmParams::validate() const {
  if (width < 8 || height < 8) throw UsageError("SLM grid must be at least 8x8");
  if (width > 65535 || height > 65535) throw UsageError("SLM grid dimension exceeds 65535");
  if (!(pixel_pitch > 0.0) || !std::isfinite(pixel_pitch)) {
    throw UsageError("pixel pitch must be positive");
  }
  if (!(wavelength > 0.0) || !std::isfinite(wavelength)) {
    throw UsageError("wavelength must be positive");
  }
  if (phase_bits != 8) throw UsageError("phase container depth must be 8 bits");
}

SlmParams SlmParams::desk(int size) {
  SlmParams p;
  p.width = size;
  p.height = size;
  return p;
}

SlmParams SlmParams::full_hd() {
  SlmParams p;
  p.width = 1920;
  p.height = 1080;
  return p;
}

ComplexField::ComplexField(const SlmParams& params) : params_(params) {
  params_.validate();
  data_.assign(params_.pixel_count(), Complex{});
}

ComplexField::ComplexField(const SlmParams& params, std::vector<Complex> data)
    : params_(params), data_(std::move(data)) {
  params_.validate();
  if (data_.size() != params_.pixel_count()) {
    throw UsageError("field data length does not match grid");
  }
}

double ComplexField::energy() const noexcept {
  double e = 0.0;
  for (const auto& v : data_) e += std::norm(v);
  return e;
}

bool ComplexField::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](const Complex& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

double ComplexField::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& v : data_) m = std::max(m, std::abs(v));
  return m;
}

PhaseHologram::PhaseHologram(const SlmParams& params) : params_(params) {
  params_.validate();
  samples_.assign(params_.pixel_count(), 0);
}

PhaseHologram::PhaseHologram(const SlmParams& params, std::vector<std::uint8_t> samples)
    : params_(params), samples_(std::move(samples)) {
  params_.validate();
  if (samples_.size() != params_.pixel_count()) {
    throw UsageError("hologram sample count does not match grid");
  }
}

double aliasing_free_distance(const SlmParams& params) noexcept {
  // Adjacent-bin phase step of the chirp at Nyquist stays below pi.
  const int n = std::min(params.width, params.height);
  return n * params.pixel_pitch * params.pixel_pitch / params.wavelength;
}

ComplexField propagate(const ComplexField& field, double z, const PropagationOptions& options) {
  if (!std::isfinite(z) || std::abs(z) > kMaxDistance) {
    throw UsageError("propagation distance must be finite with |z| <= 10 m");
  }
  if (options.padding < 1 || options.padding > 8) {
    throw UsageError("padding factor must be in 1..8");
  }
  if (options.aperture_cutoff < 0.0 || !std::isfinite(options.aperture_cutoff)) {
    throw UsageError("aperture cutoff must be finite and non-negative");
  }
  if (!field.all_finite()) throw UsageError("propagate: non-finite input field");

  const bool has_aperture = options.aperture_cutoff > 0.0;
  if (z == 0.0 && !has_aperture && options.padding == 1) return field;

  const SlmParams& sp = field.params();
  if (std::abs(z) > aliasing_free_distance(sp)) {
    std::ostringstream key;
    key << "alias:" << sp.width << "x" << sp.height;
    std::ostringstream msg;
    msg << "propagation over " << std::abs(z) << " m exceeds the alias-free distance "
        << aliasing_free_distance(sp) << " m for a " << sp.width << "x" << sp.height
        << " grid; transfer chirp is undersampled";
    detail::warn(key.str(), msg.str());
  }

  const int pw = sp.width * options.padding;
  const int ph = sp.height * options.padding;
  const int ox = (pw - sp.width) / 2;
  const int oy = (ph - sp.height) / 2;

  std::vector<Complex> work(static_cast<std::size_t>(pw) * ph);
  for (int y = 0; y < sp.height; ++y) {
    std::copy_n(field.data().begin() + static_cast<std::ptrdiff_t>(y) * sp.width, sp.width,
                work.begin() + static_cast<std::ptrdiff_t>(y + oy) * pw + ox);
  }

  detail::fft2d(work, pw, ph, false);

  // The Fresnel chirp is separable in fx and fy.
  const double dx = sp.pixel_pitch;
  const double lambda = sp.wavelength;
  const auto fx = dft_frequencies(pw, dx);
  const auto fy = dft_frequencies(ph, dx);
  const double chirp = -std::numbers::pi * lambda * z;
  std::vector<Complex> hx(pw), hy(ph);
  for (int i = 0; i < pw; ++i) hx[i] = std::polar(1.0, chirp * fx[i] * fx[i]);
  for (int i = 0; i < ph; ++i) hy[i] = std::polar(1.0, chirp * fy[i] * fy[i]);
  const Complex carrier = std::polar(1.0, std::fmod(kTwoPi / lambda * z, kTwoPi));
  const double cutoff2 = options.aperture_cutoff * options.aperture_cutoff;

  // Every DFT bin already lies within Nyquist, padded or not, so the band
  // limit only bites through the optional pupil.
  for (int y = 0; y < ph; ++y) {
    const Complex row = carrier * hy[y];
    Complex* line = work.data() + static_cast<std::size_t>(y) * pw;
    for (int x = 0; x < pw; ++x) {
      const bool in_band = !has_aperture || fx[x] * fx[x] + fy[y] * fy[y] <= cutoff2;
      line[x] = in_band ? line[x] * (row * hx[x]) : Complex{};
    }
  }

  detail::fft2d(work, pw, ph, true);

  ComplexField out(sp);
  for (int y = 0; y < sp.height; ++y) {
    std::copy_n(work.begin() + static_cast<std::ptrdiff_t>(y + oy) * pw + ox, sp.width,
                out.data().begin() + static_cast<std::ptrdiff_t>(y) * sp.width);
  }
  return out;
}

ComplexField phase_to_field(const PhaseHologram& poh) {
  const auto& table = phase_table();
  std::vector<Complex> data(poh.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = table[poh[i]];
  return ComplexField(poh.params(), std::move(data));
}

PhaseHologram field_to_phase(const ComplexField& field) {
  std::vector<std::uint8_t> samples(field.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Complex v = field[i];
    if (v.real() == 0.0 && v.imag() == 0.0) {
      samples[i] = 0;
      continue;
    }
    double angle = std::atan2(v.imag(), v.real());
    if (angle < 0.0) angle += kTwoPi;
    const long code = std::lround(angle * 256.0 / kTwoPi);
    samples[i] = static_cast<std::uint8_t>(code & 0xFF);
  }
  return PhaseHologram(field.params(), std::move(samples));
}

IntensityImage intensity(const ComplexField& field) {
  IntensityImage out(field.width(), field.height());
  for (std::size_t i = 0; i < field.size(); ++i) out[i] = std::norm(field[i]);
  return out;
}

std::vector<std::uint8_t> encode_cfld(const ComplexField& field) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + field.size() * 16);
  detail::put_magic(out, "CFLD");
  detail::put_u32(out, static_cast<std::uint32_t>(field.width()));
  detail::put_u32(out, static_cast<std::uint32_t>(field.height()));
  detail::put_u32(out, 0);  // reserved, pads the header to 16 bytes
  for (const auto& v : field.data()) {
    detail::put_f64(out, v.real());
    detail::put_f64(out, v.imag());
  }
  return out;
}

ComplexField decode_cfld(std::span<const std::uint8_t> bytes, double pixel_pitch,
                         double wavelength) {
  detail::ByteReader in(bytes);
  in.expect_magic("CFLD");
  SlmParams sp;
  sp.width = static_cast<int>(in.u32());
  sp.height = static_cast<int>(in.u32());
  in.u32();
  sp.pixel_pitch = pixel_pitch;
  sp.wavelength = wavelength;
  sp.validate();
  if (in.remaining() != sp.pixel_count() * 16) throw CodecError("CFLD payload size mismatch");
  std::vector<Complex> data(sp.pixel_count());
  for (auto& v : data) {
    const double re = in.f64();
    const double im = in.f64();
    v = Complex(re, im);
  }
  ComplexField field(sp, std::move(data));
  if (!field.all_finite()) throw CodecError("CFLD contains non-finite samples");
  return field;
}

void write_cfld(const std::filesystem::path& path, const ComplexField& field) {
  detail::write_file(path, encode_cfld(field));
}

ComplexField read_cfld(const std::filesystem::path& path, double pixel_pitch,
                       double wavelength) {
  return decode_cfld(detail::read_file(path), pixel_pitch, wavelength);
}

}  // namespace pohlab
