#include <algorithm>
#include <cmath>
#include <numbers>

#include "bitio.hpp"
#include "bytes.hpp"
#include "pohlab/baselines.hpp"

namespace pohlab {
namespace {

constexpr int kBlock = 8;

constexpr std::array<int, 64> kZigzag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,  12, 19, 26, 33, 40, 48,
    41, 34, 27, 20, 13, 6,  7,  14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23,
    30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

constexpr std::array<int, 64> kLuminance = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

const std::array<double, 64>& dct_basis() {
  static const std::array<double, 64> basis = [] {
    std::array<double, 64> c{};
    for (int k = 0; k < kBlock; ++k) {
      const double a = k == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
      for (int n = 0; n < kBlock; ++n) {
        c[k * kBlock + n] = a * std::cos((2 * n + 1) * k * std::numbers::pi / (2.0 * kBlock));
      }
    }
    return c;
  }();
  return basis;
}

void forward_dct(const double* in, double* out) {
  const auto& c = dct_basis();
  double tmp[64];
  for (int y = 0; y < kBlock; ++y) {
    for (int k = 0; k < kBlock; ++k) {
      double s = 0.0;
      for (int n = 0; n < kBlock; ++n) s += c[k * kBlock + n] * in[y * kBlock + n];
      tmp[y * kBlock + k] = s;
    }
  }
  for (int x = 0; x < kBlock; ++x) {
    for (int k = 0; k < kBlock; ++k) {
      double s = 0.0;
      for (int n = 0; n < kBlock; ++n) s += c[k * kBlock + n] * tmp[n * kBlock + x];
      out[k * kBlock + x] = s;
    }
  }
}

void inverse_dct(const double* in, double* out) {
  const auto& c = dct_basis();
  double tmp[64];
  for (int x = 0; x < kBlock; ++x) {
    for (int n = 0; n < kBlock; ++n) {
      double s = 0.0;
      for (int k = 0; k < kBlock; ++k) s += c[k * kBlock + n] * in[k * kBlock + x];
      tmp[n * kBlock + x] = s;
    }
  }
  for (int y = 0; y < kBlock; ++y) {
    for (int n = 0; n < kBlock; ++n) {
      double s = 0.0;
      for (int k = 0; k < kBlock; ++k) s += c[k * kBlock + n] * tmp[y * kBlock + k];
      out[y * kBlock + n] = s;
    }
  }
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

int padded(int n) { return (n + kBlock - 1) / kBlock * kBlock; }

// Level-shifted block at (bx, by) of the reflect-padded image.
void load_block(const SampleImage& img, int bx, int by, double shift, double* out) {
  for (int y = 0; y < kBlock; ++y) {
    const int sy = reflect(by * kBlock + y, img.height());
    for (int x = 0; x < kBlock; ++x) {
      const int sx = reflect(bx * kBlock + x, img.width());
      out[y * kBlock + x] = static_cast<double>(img.at(sx, sy)) - shift;
    }
  }
}

}  // namespace

void DctCodecConfig::validate() const {
  if (sample_bits != 8 && sample_bits != 10 && sample_bits != 12 && sample_bits != 16) {
    throw UsageError("DCT sample depth must be 8, 10, 12 or 16 bits");
  }
  if (scheme == QuantScheme::kFlat) {
    if (!(step > 0.0) || !std::isfinite(step)) throw UsageError("flat step must be positive");
  } else if (scheme == QuantScheme::kDefault) {
    if (quality < 1 || quality > 100) throw UsageError("quality must be in 1..100");
  } else {
    throw UsageError("unknown quantization scheme");
  }
}

std::array<double, 64> dct_quant_steps(const DctCodecConfig& cfg) {
  cfg.validate();
  std::array<double, 64> steps{};
  if (cfg.scheme == QuantScheme::kFlat) {
    steps.fill(cfg.step);
    return steps;
  }
  const int s = cfg.quality < 50 ? 5000 / cfg.quality : 200 - 2 * cfg.quality;
  const double depth_scale = std::ldexp(1.0, cfg.sample_bits - 8);
  for (int i = 0; i < 64; ++i) {
    steps[i] = std::max((kLuminance[i] * s + 50) / 100, 1) * depth_scale;
  }
  return steps;
}

std::vector<double> dct_coefficients(const SampleImage& image) {
  const int bw = padded(image.width()) / kBlock;
  const int bh = padded(image.height()) / kBlock;
  std::vector<double> coeffs(static_cast<std::size_t>(bw) * bh * 64);
  double block[64];
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      load_block(image, bx, by, 0.0, block);
      forward_dct(block, &coeffs[(static_cast<std::size_t>(by) * bw + bx) * 64]);
    }
  }
  return coeffs;
}

std::vector<std::uint8_t> dct_encode(const SampleImage& image, const DctCodecConfig& cfg) {
  const auto steps = dct_quant_steps(cfg);
  if (image.width() < 1 || image.height() < 1) throw UsageError("empty image");
  const std::uint32_t max_sample = (1U << cfg.sample_bits) - 1;
  for (auto v : image.values()) {
    if (v > max_sample) throw UsageError("sample exceeds the configured depth");
  }
  const double shift = std::ldexp(1.0, cfg.sample_bits - 1);

  std::vector<std::uint8_t> out;
  detail::put_magic(out, "DCT1");
  detail::put_u32(out, static_cast<std::uint32_t>(image.width()));
  detail::put_u32(out, static_cast<std::uint32_t>(image.height()));
  detail::put_u8(out, static_cast<std::uint8_t>(cfg.scheme));
  detail::put_u8(out, static_cast<std::uint8_t>(cfg.sample_bits));
  detail::put_u8(out, static_cast<std::uint8_t>(cfg.quality));
  detail::put_f64(out, cfg.step);

  detail::BitWriter w;
  const int bw = padded(image.width()) / kBlock;
  const int bh = padded(image.height()) / kBlock;
  double block[64], coeff[64];
  std::int64_t levels[64];
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      load_block(image, bx, by, shift, block);
      forward_dct(block, coeff);
      int nonzero = 0;
      for (int i = 0; i < 64; ++i) {
        const double q = coeff[kZigzag[i]] / steps[kZigzag[i]];
        if (std::abs(q) > 0x1.0p52) throw UsageError("quantizer step too small");
        levels[i] = std::llround(q);
        nonzero += levels[i] != 0;
      }
      w.put_ue(static_cast<std::uint64_t>(nonzero));
      int run = 0;
      for (int i = 0; i < 64; ++i) {
        if (levels[i] == 0) {
          ++run;
          continue;
        }
        w.put_ue(static_cast<std::uint64_t>(run));
        w.put_ue(static_cast<std::uint64_t>(std::llabs(levels[i]) - 1));
        w.put_bit(levels[i] < 0);
        run = 0;
      }
    }
  }
  const auto payload = std::move(w).finish();
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

SampleImage dct_decode(std::span<const std::uint8_t> stream) {
  detail::ByteReader in(stream);
  in.expect_magic("DCT1");
  const std::uint32_t width = in.u32();
  const std::uint32_t height = in.u32();
  if (width == 0 || height == 0 || width > 65535 || height > 65535) {
    throw CodecError("DCT stream has bad dimensions");
  }
  DctCodecConfig cfg;
  const std::uint8_t scheme = in.u8();
  if (scheme > 1) throw CodecError("unknown quantization scheme");
  cfg.scheme = static_cast<QuantScheme>(scheme);
  cfg.sample_bits = in.u8();
  cfg.quality = in.u8();
  cfg.step = in.f64();
  std::array<double, 64> steps{};
  try {
    steps = dct_quant_steps(cfg);
  } catch (const UsageError& e) {
    throw CodecError(std::string("DCT stream header: ") + e.what());
  }
  const double shift = std::ldexp(1.0, cfg.sample_bits - 1);
  const double max_sample = std::ldexp(1.0, cfg.sample_bits) - 1.0;

  detail::BitReader r(in.rest());
  SampleImage out(static_cast<int>(width), static_cast<int>(height));
  const int bw = padded(static_cast<int>(width)) / kBlock;
  const int bh = padded(static_cast<int>(height)) / kBlock;
  double coeff[64], block[64];
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      std::fill(std::begin(coeff), std::end(coeff), 0.0);
      const std::uint64_t nonzero = r.get_ue();
      if (nonzero > 64) throw CodecError("corrupt DCT block");
      int pos = 0;
      for (std::uint64_t k = 0; k < nonzero; ++k) {
        const std::uint64_t run = r.get_ue();
        if (run > 63 || pos + static_cast<int>(run) > 63) throw CodecError("corrupt DCT run");
        pos += static_cast<int>(run);
        const std::uint64_t mag = r.get_ue();
        if (mag >= (std::uint64_t{1} << 53)) throw CodecError("corrupt DCT level");
        const double level = static_cast<double>(mag + 1) * (r.get_bit() ? -1.0 : 1.0);
        const int idx = kZigzag[pos];
        coeff[idx] = level * steps[idx];
        ++pos;
      }
      inverse_dct(coeff, block);
      for (int y = 0; y < kBlock; ++y) {
        const int oy = by * kBlock + y;
        if (oy >= static_cast<int>(height)) break;
        for (int x = 0; x < kBlock; ++x) {
          const int ox = bx * kBlock + x;
          if (ox >= static_cast<int>(width)) break;
          const double v = std::clamp(std::round(block[y * kBlock + x] + shift), 0.0, max_sample);
          out.at(ox, oy) = static_cast<std::uint16_t>(v);
        }
      }
    }
  }
  return out;
}

SampleImage poh_samples(const PhaseHologram& poh) {
  SampleImage out(poh.width(), poh.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = poh[i];
  return out;
}

PhaseHologram samples_to_poh(const SampleImage& samples, const SlmParams& params) {
  if (samples.width() != params.width || samples.height() != params.height) {
    throw UsageError("sample image does not match the grid");
  }
  PhaseHologram out(params);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::min<std::uint16_t>(samples[i], 255));
  }
  return out;
}

}  // namespace pohlab
