#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pohlab/baselines.hpp"

namespace pohlab {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int wrap_counts(int d) {
  if (d > 128) return d - 256;
  if (d < -128) return d + 256;
  return d;
}

// Smallest depth >= 8 whose integer range holds `span` + 1 distinct values.
int bits_for_count_span(std::int64_t span) {
  int bits = 8;
  while (bits < 62 && (std::int64_t{1} << bits) - 1 < span) ++bits;
  return bits;
}

// Largest multiple of 256 counts not above v, so shifting by it keeps the phase.
std::int64_t whole_turns_below(std::int64_t v) {
  const std::int64_t t = v >= 0 ? v / 256 : -((-v + 255) / 256);
  return t * 256;
}

int codec_depth(int bits) {
  for (int d : {8, 10, 12, 16}) {
    if (bits <= d) return d;
  }
  return 16;
}

}  // namespace

int bits_for_span(double span_radians) {
  if (!(span_radians >= 0.0) || !std::isfinite(span_radians)) {
    throw UsageError("phase span must be finite and non-negative");
  }
  const double turns = span_radians / kTwoPi;
  if (turns <= 1.0) return 8;
  // Smallest n with 2^n >= turns, tolerant of rounding in span / 2pi.
  int n = 0;
  while (std::ldexp(1.0, n) < turns * (1.0 - 1e-12)) ++n;
  return 8 + n;
}

Plane<double> poh_to_radians(const PhaseHologram& poh) {
  Plane<double> out(poh.width(), poh.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = kTwoPi * poh[i] / 256.0;
  return out;
}

UnwrappedPhase itoh_unwrap(const Plane<double>& wrapped) {
  const int w = wrapped.width();
  const int h = wrapped.height();
  for (double v : wrapped.values()) {
    if (!(v >= 0.0 && v < kTwoPi)) throw UsageError("wrapped phase must lie in [0, 2pi)");
  }
  UnwrappedPhase out;
  out.phase = Plane<double>(w, h);
  if (wrapped.empty()) return out;

  // Whole turns added to each sample; the output is wrapped + 2 pi * turns.
  Plane<std::int64_t> turns(w, h);
  auto step = [&](int x, int y, int px, int py) {
    const double d = wrapped.at(x, y) - wrapped.at(px, py);
    std::int64_t t = turns.at(px, py);
    if (d > std::numbers::pi) {
      --t;
    } else if (d < -std::numbers::pi) {
      ++t;
    }
    turns.at(x, y) = t;
  };
  for (int y = 1; y < h; ++y) step(0, y, 0, y - 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 1; x < w; ++x) step(x, y, x - 1, y);
  }

  out.min = std::numeric_limits<double>::infinity();
  out.max = -out.min;
  for (std::size_t i = 0; i < out.phase.size(); ++i) {
    const double u = wrapped[i] + kTwoPi * static_cast<double>(turns[i]);
    out.phase[i] = u;
    out.min = std::min(out.min, u);
    out.max = std::max(out.max, u);
  }
  out.container_bits = bits_for_span(out.span());
  return out;
}

Plane<std::int64_t> itoh_unwrap_counts(const Plane<std::uint8_t>& wrapped) {
  const int w = wrapped.width();
  const int h = wrapped.height();
  Plane<std::int64_t> out(w, h);
  if (wrapped.empty()) return out;
  out.at(0, 0) = wrapped.at(0, 0);
  for (int y = 1; y < h; ++y) {
    out.at(0, y) = out.at(0, y - 1) + wrap_counts(wrapped.at(0, y) - wrapped.at(0, y - 1));
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 1; x < w; ++x) {
      out.at(x, y) = out.at(x - 1, y) + wrap_counts(wrapped.at(x, y) - wrapped.at(x - 1, y));
    }
  }
  return out;
}

BlockUnwrap itoh_unwrap_blocks(const PhaseHologram& poh, int block, int container_bits) {
  if (block < 2) throw UsageError("unwrap block must be at least 2 pixels");
  if (poh.width() % block != 0 || poh.height() % block != 0) {
    throw UsageError("hologram dimensions must be multiples of the block size");
  }
  if (container_bits != 0 && (container_bits < 8 || container_bits > 16)) {
    throw UsageError("container depth must be 0 (auto) or 8..16");
  }
  const int bw = poh.width() / block;
  const int bh = poh.height() / block;

  BlockUnwrap out;
  out.block_bits.reserve(static_cast<std::size_t>(bw) * bh);
  std::vector<Plane<std::int64_t>> unwrapped;
  unwrapped.reserve(out.block_bits.capacity());
  std::vector<double> spans;
  spans.reserve(out.block_bits.capacity());

  Plane<std::uint8_t> tile(block, block);
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      for (int y = 0; y < block; ++y) {
        for (int x = 0; x < block; ++x) tile.at(x, y) = poh.at(bx * block + x, by * block + y);
      }
      auto u = itoh_unwrap_counts(tile);
      const auto [lo, hi] = std::minmax_element(u.values().begin(), u.values().end());
      const std::int64_t base = whole_turns_below(*lo);
      const std::int64_t span = *hi - *lo;
      for (auto& v : u.values()) v -= base;
      out.block_bits.push_back(bits_for_count_span(*hi - base));
      spans.push_back(kTwoPi * static_cast<double>(span) / 256.0);
      unwrapped.push_back(std::move(u));
    }
  }

  out.container_bits =
      container_bits != 0
          ? container_bits
          : std::min(16, *std::max_element(out.block_bits.begin(), out.block_bits.end()));
  const std::int64_t range = std::int64_t{1} << out.container_bits;
  out.samples = SampleImage(poh.width(), poh.height());
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      const std::size_t b = static_cast<std::size_t>(by) * bw + bx;
      if (out.block_bits[b] > out.container_bits) ++out.blocks_rewrapped;
      const auto& u = unwrapped[b];
      for (int y = 0; y < block; ++y) {
        for (int x = 0; x < block; ++x) {
          // Range is a multiple of 256 counts, so rewrapping keeps the phase.
          out.samples.at(bx * block + x, by * block + y) =
              static_cast<std::uint16_t>(u.at(x, y) % range);
        }
      }
    }
  }
  std::nth_element(spans.begin(), spans.begin() + spans.size() / 2, spans.end());
  out.median_block_span = spans[spans.size() / 2];
  return out;
}

UnwrapPipelineResult unwrap_pipeline_roundtrip(const PhaseHologram& poh,
                                               const UnwrapPipelineConfig& cfg) {
  SampleImage samples;
  int bits = 8;
  switch (cfg.unwrap) {
    case UnwrapMode::kNone:
      samples = poh_samples(poh);
      break;
    case UnwrapMode::kWhole: {
      if (cfg.container_bits != 0 && (cfg.container_bits < 8 || cfg.container_bits > 16)) {
        throw UsageError("container depth must be 0 (auto) or 8..16");
      }
      Plane<std::uint8_t> wrapped(poh.width(), poh.height(),
                                  std::vector<std::uint8_t>(poh.samples().begin(),
                                                            poh.samples().end()));
      auto u = itoh_unwrap_counts(wrapped);
      const auto [lo, hi] = std::minmax_element(u.values().begin(), u.values().end());
      const std::int64_t base = whole_turns_below(*lo);
      bits = cfg.container_bits != 0 ? cfg.container_bits
                                     : std::min(16, bits_for_count_span(*hi - base));
      const std::int64_t range = std::int64_t{1} << bits;
      samples = SampleImage(poh.width(), poh.height());
      for (std::size_t i = 0; i < samples.size(); ++i) {
        samples[i] = static_cast<std::uint16_t>((u[i] - base) % range);
      }
      break;
    }
    case UnwrapMode::kBlock: {
      auto blocks = itoh_unwrap_blocks(poh, cfg.block, cfg.container_bits);
      samples = std::move(blocks.samples);
      bits = blocks.container_bits;
      break;
    }
  }

  UnwrapPipelineResult result{PhaseHologram(poh.params())};
  result.container_bits = bits;
  SampleImage decoded;
  if (cfg.use_codec) {
    DctCodecConfig codec = cfg.codec;
    codec.sample_bits = codec_depth(bits);
    const auto stream = dct_encode(samples, codec);
    result.stream_bytes = stream.size();
    result.bpp = 8.0 * static_cast<double>(stream.size()) / static_cast<double>(poh.size());
    decoded = dct_decode(stream);
  } else {
    decoded = std::move(samples);
    result.bpp = bits;
  }
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    result.poh[i] = static_cast<std::uint8_t>(decoded[i] & 0xFF);
  }
  return result;
}

}  // namespace pohlab
