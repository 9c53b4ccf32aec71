#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pohlab/plane.hpp"
#include "pohlab/wavefield.hpp"

namespace pohlab {

// --- 8x8 DCT transform codec ----------------------------------------------------

enum class QuantScheme : std::uint8_t { kFlat = 0, kDefault = 1 };

struct DctCodecConfig {
  QuantScheme scheme = QuantScheme::kFlat;
  double step = 8.0;  // flat step, in coefficient units of the sample scale
  int quality = 50;   // 1..100, default-matrix scheme
  int sample_bits = 8;

  void validate() const;

  static DctCodecConfig flat(double step, int sample_bits = 8) {
    return {QuantScheme::kFlat, step, 50, sample_bits};
  }
  static DctCodecConfig standard(int quality, int sample_bits = 8) {
    return {QuantScheme::kDefault, 8.0, quality, sample_bits};
  }
};

/// Integer samples in [0, 2^sample_bits).
using SampleImage = Plane<std::uint16_t>;

/// The 64 quantizer steps in natural (row-major) order.
std::array<double, 64> dct_quant_steps(const DctCodecConfig& cfg);

/// "DCT1" framed stream: orthonormal 8x8 DCT-II, uniform rounding quantizer,
/// zig-zag scan, per block ue(nonzero count) then ue(run), ue(|level| - 1),
/// sign bit per nonzero coefficient. Sizes that are not a multiple of 8 are
/// reflect-padded.
std::vector<std::uint8_t> dct_encode(const SampleImage& image, const DctCodecConfig& cfg);
SampleImage dct_decode(std::span<const std::uint8_t> stream);

/// Orthonormal DCT coefficients of the reflect-padded image, 64 per block in
/// natural order, blocks in raster order. No level shift.
std::vector<double> dct_coefficients(const SampleImage& image);

SampleImage poh_samples(const PhaseHologram& poh);
/// Clamps to [0, 255].
PhaseHologram samples_to_poh(const SampleImage& samples, const SlmParams& params);

// --- Itoh phase unwrapping ---------------------------------------------------------

struct UnwrappedPhase {
  Plane<double> phase;  // radians
  double min = 0.0;
  double max = 0.0;
  int container_bits = 8;

  double span() const noexcept { return max - min; }
};

/// 8 + max(0, ceil(log2(span / 2 pi))).
int bits_for_span(double span_radians);

/// Path-following unwrap: first column top to bottom, then every row left to
/// right. Input must lie in [0, 2 pi).
UnwrappedPhase itoh_unwrap(const Plane<double>& wrapped);

/// Same path in 8-bit phase counts (256 per turn), exact integer arithmetic.
Plane<std::int64_t> itoh_unwrap_counts(const Plane<std::uint8_t>& wrapped);

Plane<double> poh_to_radians(const PhaseHologram& poh);

struct BlockUnwrap {
  SampleImage samples;  // unwrapped counts, shifted by whole turns to be non-negative, rewrapped
  std::vector<int> block_bits;  // lossless container depth per block
  int container_bits = 10;      // depth of `samples`
  int blocks_rewrapped = 0;     // blocks whose span exceeded the container
  double median_block_span = 0.0;  // radians
};

/// Unwraps each block independently. Blocks that exceed 2^container_bits
/// counts are rewrapped modulo that range. container_bits = 0 picks the
/// smallest depth that holds every block.
BlockUnwrap itoh_unwrap_blocks(const PhaseHologram& poh, int block = 8, int container_bits = 10);

enum class UnwrapMode { kNone, kWhole, kBlock };

struct UnwrapPipelineConfig {
  UnwrapMode unwrap = UnwrapMode::kBlock;
  int block = 8;
  /// Container depth; 0 = smallest lossless depth (capped at 16).
  int container_bits = 10;
  /// No codec means the lossless path.
  bool use_codec = true;
  DctCodecConfig codec = DctCodecConfig::flat(8.0, 10);
};

struct UnwrapPipelineResult {
  PhaseHologram poh;
  std::size_t stream_bytes = 0;
  double bpp = 0.0;
  int container_bits = 8;
};

/// unwrap -> integer container -> DCT encode/decode -> rewrap to 8-bit phase.
UnwrapPipelineResult unwrap_pipeline_roundtrip(const PhaseHologram& poh,
                                               const UnwrapPipelineConfig& cfg);

}  // namespace pohlab
