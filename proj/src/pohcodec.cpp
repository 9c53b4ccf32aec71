#include "pohlab/pohcodec.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <string>

#include "bitio.hpp"
#include "bytes.hpp"
#include "pohlab/morphology.hpp"

namespace pohlab {
namespace {

void check_levels(int levels) {
  if (levels < 2 || levels > 256) throw UsageError("level count must be in 2..256");
}

void check_bits(int bits) {
  if (bits < 1 || bits > 8) throw UsageError("bit depth must be in 1..8");
}

int ceil_log2(int n) { return std::bit_width(static_cast<unsigned>(n - 1)); }

// Bits for `count` level symbols packed in groups of kLevelGroupSize.
std::size_t level_layer_bits(std::size_t count, int levels) {
  const std::size_t groups = count / kLevelGroupSize;
  const int rest = static_cast<int>(count % kLevelGroupSize);
  std::size_t bits = groups * detail::packed_group_bits(levels, kLevelGroupSize);
  if (rest) bits += detail::packed_group_bits(levels, rest);
  return bits;
}

SlmParams grid_params(int width, int height) {
  SlmParams p;
  p.width = width;
  p.height = height;
  return p;
}

PohBitstream finish_stream(const RoiMask& roi, const PohHeader& header,
                           detail::BitWriter&& writer) {
  const std::size_t bits = writer.bit_count();
  return PohBitstream::assemble(header, roi_runs(roi.mask()), std::move(writer).finish(), bits);
}

void check_inputs(const PhaseHologram& poh, const RoiMask& roi) {
  if (roi.width() != poh.width() || roi.height() != poh.height()) {
    throw UsageError("RoI mask does not match the hologram grid");
  }
  if (poh.width() > 65535 || poh.height() > 65535) {
    throw UsageError("hologram too large for the stream header");
  }
}

PohHeader base_header(const PhaseHologram& poh, FillSpec fill) {
  if (fill.mode == FillMode::kConstant && fill.value > 255) {
    throw UsageError("constant fill sample must be 0..255");
  }
  PohHeader h;
  h.width = static_cast<std::uint16_t>(poh.width());
  h.height = static_cast<std::uint16_t>(poh.height());
  h.fill = fill;
  return h;
}

}  // namespace

// --- RoiMask ----------------------------------------------------------------

RoiMask::RoiMask(int width, int height, bool value)
    : bits_(width, height, static_cast<std::uint8_t>(value)),
      coded_(value ? bits_.size() : 0) {}

RoiMask::RoiMask(Mask bits) : bits_(std::move(bits)) {
  for (auto& v : bits_.values()) v = v != 0;
  coded_ = count_true(bits_);
}

void RoiMask::set(std::size_t i, bool value) {
  const bool old = bits_[i] != 0;
  if (old == value) return;
  bits_[i] = value;
  if (value) {
    ++coded_;
  } else {
    --coded_;
  }
}

void RoiMask::set(int x, int y, bool value) {
  set(static_cast<std::size_t>(y) * bits_.width() + x, value);
}

// --- fill ---------------------------------------------------------------------

std::uint8_t fill_sample(std::uint32_t seed, std::size_t index) noexcept {
  std::uint64_t z = ((static_cast<std::uint64_t>(seed) << 32) + index) + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return static_cast<std::uint8_t>(z >> 56);
}

// --- quantizers ---------------------------------------------------------------

std::vector<std::uint8_t> quantizer_levels(int levels) {
  check_levels(levels);
  std::vector<std::uint8_t> out(levels);
  const int d = levels - 1;
  // round(i * 255 / d), half up, in integers.
  for (int i = 0; i < levels; ++i) out[i] = static_cast<std::uint8_t>((2 * i * 255 + d) / (2 * d));
  return out;
}

int nearest_level_index(std::uint8_t sample, int levels, bool wrap_aware) {
  const auto table = quantizer_levels(levels);
  int best = 0;
  int best_dist = 1 << 30;
  for (int i = 0; i < levels; ++i) {
    int d = std::abs(static_cast<int>(sample) - table[i]);
    if (wrap_aware) d = std::min(d, 256 - d);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

PhaseHologram quantize_levels(const PhaseHologram& poh, int levels, bool wrap_aware) {
  const auto table = quantizer_levels(levels);
  std::array<std::uint8_t, 256> lut{};
  for (int s = 0; s < 256; ++s) {
    lut[s] = table[nearest_level_index(static_cast<std::uint8_t>(s), levels, wrap_aware)];
  }
  PhaseHologram out(poh.params());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = lut[poh[i]];
  return out;
}

double nominal_level_rate(int levels) {
  check_levels(levels);
  return std::log2(static_cast<double>(levels));
}

std::uint8_t bitplane_code(std::uint8_t sample, int bits) {
  check_bits(bits);
  return static_cast<std::uint8_t>(sample >> (8 - bits));
}

std::uint8_t bitplane_reconstruct(std::uint32_t code, int bits) {
  check_bits(bits);
  if (code >> bits) throw UsageError("bit-plane code wider than its depth");
  const std::uint32_t fill = bits < 8 ? 1U << (7 - bits) : 0U;
  return static_cast<std::uint8_t>((code << (8 - bits)) | fill);
}

std::uint8_t quantize_bitplanes(std::uint8_t sample, int bits) {
  return bitplane_reconstruct(bitplane_code(sample, bits), bits);
}

PhaseHologram quantize_bitplanes(const PhaseHologram& poh, int bits) {
  std::array<std::uint8_t, 256> lut{};
  for (int s = 0; s < 256; ++s) lut[s] = quantize_bitplanes(static_cast<std::uint8_t>(s), bits);
  PhaseHologram out(poh.params());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = lut[poh[i]];
  return out;
}

// --- RLE ----------------------------------------------------------------------

std::vector<std::uint32_t> roi_runs(const Mask& mask) {
  std::vector<std::uint32_t> runs;
  bool current = false;
  std::uint32_t length = 0;
  for (auto v : mask.values()) {
    const bool b = v != 0;
    if (b != current) {
      runs.push_back(length);
      current = b;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

Mask roi_from_runs(std::span<const std::uint32_t> runs, int width, int height) {
  Mask mask(width, height);
  std::size_t pos = 0;
  bool value = false;
  for (auto run : runs) {
    if (run > mask.size() - pos) throw CodecError("RoI runs overrun the frame");
    if (value) std::fill_n(mask.values().begin() + static_cast<std::ptrdiff_t>(pos), run, 1);
    pos += run;
    value = !value;
  }
  if (pos != mask.size()) throw CodecError("RoI runs do not cover the frame");
  return mask;
}

// --- PohBitstream ---------------------------------------------------------------

std::size_t PohBitstream::layer_bits(int layer) const {
  if (layer < 0 || layer >= header_.layer_count) throw UsageError("layer index out of range");
  if (header_.mode == CodingMode::kLevel) return level_layer_bits(coded_, header_.levels);
  return coded_;
}

std::size_t PohBitstream::payload_bits() const noexcept { return payload_bit_count_; }

std::size_t PohBitstream::padding_bits() const noexcept {
  return (8 - payload_bit_count_ % 8) % 8;
}

std::size_t PohBitstream::total_bits() const noexcept {
  return header_bits() + rle_bits() + payload_bits() + padding_bits();
}

double PohBitstream::bpp_total() const noexcept {
  return static_cast<double>(total_bits()) /
         (static_cast<double>(header_.width) * static_cast<double>(header_.height));
}

double PohBitstream::bpp_payload() const noexcept {
  return static_cast<double>(payload_bits()) /
         (static_cast<double>(header_.width) * static_cast<double>(header_.height));
}

RoiMask PohBitstream::roi() const {
  return RoiMask(roi_from_runs(runs_, header_.width, header_.height));
}

PohBitstream PohBitstream::assemble(const PohHeader& header, std::vector<std::uint32_t> runs,
                                    std::vector<std::uint8_t> payload,
                                    std::size_t payload_bit_count) {
  if (header.width < 8 || header.height < 8) throw CodecError("frame smaller than 8x8");
  if (header.fill.mode != FillMode::kConstant && header.fill.mode != FillMode::kSeededRandom) {
    throw CodecError("unknown fill mode");
  }
  if (header.fill.mode == FillMode::kConstant && header.fill.value > 255) {
    throw CodecError("constant fill sample out of range");
  }
  if (header.mode == CodingMode::kBitPlane) {
    if (header.bits < 1 || header.bits > 8) throw CodecError("bit-plane depth out of range");
    if (header.levels != 0) throw CodecError("level count set in bit-plane mode");
    if (header.layer_count != header.bits) throw CodecError("layer count differs from depth");
  } else if (header.mode == CodingMode::kLevel) {
    if (header.levels < 2 || header.levels > 256) throw CodecError("level count out of range");
    if (header.bits != ceil_log2(header.levels)) throw CodecError("level marker mismatch");
    if (header.layer_count != 1) throw CodecError("level mode carries one layer");
  } else {
    throw CodecError("unknown coding mode");
  }

  const std::size_t pixels = static_cast<std::size_t>(header.width) * header.height;
  if (runs.empty() || runs.size() > pixels + 1) throw CodecError("bad RoI run count");
  std::size_t covered = 0, coded = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    covered += runs[i];
    if (covered > pixels) throw CodecError("RoI runs overrun the frame");
    if (i % 2 == 1) coded += runs[i];
  }
  if (covered != pixels) throw CodecError("RoI runs do not cover the frame");

  PohBitstream s;
  s.header_ = header;
  s.runs_ = std::move(runs);
  s.coded_ = coded;
  const std::size_t per_layer = s.layer_bits(0);
  const std::size_t full = per_layer * header.layer_count;
  if (payload_bit_count > full) throw CodecError("payload longer than the header allows");
  if (payload.size() != (payload_bit_count + 7) / 8) throw CodecError("payload size mismatch");
  s.layers_present_ = per_layer == 0 ? header.layer_count
                                     : static_cast<int>(payload_bit_count / per_layer);
  if (static_cast<std::size_t>(s.layers_present_) * per_layer != payload_bit_count) {
    throw CodecError("payload ends inside a layer");
  }
  if (payload_bit_count % 8 != 0) {
    const std::uint8_t pad_mask = static_cast<std::uint8_t>(0xFFU >> (payload_bit_count % 8));
    if (payload.back() & pad_mask) throw CodecError("nonzero padding bits");
  }
  s.payload_ = std::move(payload);
  s.payload_bit_count_ = payload_bit_count;
  return s;
}

std::vector<std::uint8_t> PohBitstream::serialize() const {
  std::vector<std::uint8_t> out;
  out.reserve(kPohHeaderBytes + runs_.size() * 4 + payload_.size());
  detail::put_magic(out, "POH1");
  detail::put_u16(out, header_.width);
  detail::put_u16(out, header_.height);
  detail::put_u8(out, static_cast<std::uint8_t>(header_.mode));
  detail::put_u8(out, header_.bits);
  detail::put_u16(out, header_.levels);
  detail::put_u8(out, header_.layer_count);
  detail::put_u8(out, static_cast<std::uint8_t>(header_.fill.mode));
  detail::put_u32(out, header_.fill.value);
  detail::put_u32(out, static_cast<std::uint32_t>(runs_.size()));
  for (auto r : runs_) detail::put_u32(out, r);
  out.insert(out.end(), payload_.begin(), payload_.end());
  return out;
}

PohBitstream PohBitstream::parse_impl(std::span<const std::uint8_t> bytes, bool allow_prefix) {
  detail::ByteReader in(bytes);
  in.expect_magic("POH1");
  PohHeader h;
  h.width = in.u16();
  h.height = in.u16();
  const std::uint8_t mode = in.u8();
  if (mode > 1) throw CodecError("unknown coding mode");
  h.mode = static_cast<CodingMode>(mode);
  h.bits = in.u8();
  h.levels = in.u16();
  h.layer_count = in.u8();
  const std::uint8_t fill_mode = in.u8();
  if (fill_mode > 1) throw CodecError("unknown fill mode");
  h.fill.mode = static_cast<FillMode>(fill_mode);
  h.fill.value = in.u32();
  const std::uint32_t run_count = in.u32();
  if (run_count == 0 || run_count > in.remaining() / 4) throw CodecError("bad RoI run count");
  std::vector<std::uint32_t> runs(run_count);
  for (auto& r : runs) r = in.u32();

  // Payload size is implied by the header and the coded pixel count.
  std::size_t coded = 0;
  for (std::size_t i = 1; i < runs.size(); i += 2) coded += runs[i];
  std::size_t per_layer = coded;
  if (h.mode == CodingMode::kLevel) {
    if (h.levels < 2 || h.levels > 256) throw CodecError("level count out of range");
    per_layer = level_layer_bits(coded, h.levels);
  }
  const std::size_t full_bits = per_layer * h.layer_count;
  const std::size_t full_bytes = (full_bits + 7) / 8;
  const auto rest = in.rest();
  std::size_t bits = full_bits;
  if (rest.size() != full_bytes) {
    if (!allow_prefix || rest.size() > full_bytes) throw CodecError("payload size mismatch");
    const std::size_t layers = per_layer == 0 ? 0 : rest.size() * 8 / per_layer;
    bits = layers * per_layer;
    if (layers == 0) throw CodecError("stream holds no complete layer");
  }
  std::vector<std::uint8_t> payload(rest.begin(), rest.begin() + (bits + 7) / 8);
  if (bits % 8 != 0 && bits != full_bits) {
    // A cut stream may carry the start of the next layer in its last byte.
    payload.back() &= static_cast<std::uint8_t>(0xFF00U >> (bits % 8));
  }
  return assemble(h, std::move(runs), std::move(payload), bits);
}

PohBitstream PohBitstream::parse(std::span<const std::uint8_t> bytes) {
  return parse_impl(bytes, false);
}

PohBitstream PohBitstream::parse_prefix(std::span<const std::uint8_t> bytes) {
  return parse_impl(bytes, true);
}

std::vector<std::uint8_t> PohBitstream::truncated(int layers) const {
  if (layers < 1 || layers > layers_present_) throw UsageError("layer count out of range");
  auto out = serialize();
  const std::size_t keep_bits = static_cast<std::size_t>(layers) * layer_bits(0);
  const std::size_t payload_start = out.size() - payload_.size();
  out.resize(payload_start + (keep_bits + 7) / 8);
  return out;
}

// --- encode / decode --------------------------------------------------------------

PohBitstream encode(const PhaseHologram& poh, const RoiMask& roi, int bits, FillSpec fill) {
  check_bits(bits);
  check_inputs(poh, roi);
  PohHeader h = base_header(poh, fill);
  h.mode = CodingMode::kBitPlane;
  h.bits = static_cast<std::uint8_t>(bits);
  h.levels = 0;
  h.layer_count = static_cast<std::uint8_t>(bits);

  std::vector<std::uint8_t> samples;
  samples.reserve(roi.coded_count());
  for (std::size_t i = 0; i < poh.size(); ++i) {
    if (roi[i]) samples.push_back(poh[i]);
  }
  detail::BitWriter w;
  for (int k = 0; k < bits; ++k) {
    for (auto s : samples) w.put_bit((s >> (7 - k)) & 1U);
  }
  return finish_stream(roi, h, std::move(w));
}

PohBitstream encode_levels(const PhaseHologram& poh, const RoiMask& roi, int levels,
                           FillSpec fill, bool wrap_aware) {
  check_levels(levels);
  check_inputs(poh, roi);
  PohHeader h = base_header(poh, fill);
  h.mode = CodingMode::kLevel;
  h.bits = static_cast<std::uint8_t>(ceil_log2(levels));
  h.levels = static_cast<std::uint16_t>(levels);
  h.layer_count = 1;

  std::array<std::uint8_t, 256> index{};
  for (int s = 0; s < 256; ++s) {
    index[s] = static_cast<std::uint8_t>(
        nearest_level_index(static_cast<std::uint8_t>(s), levels, wrap_aware));
  }
  std::vector<std::uint8_t> symbols;
  symbols.reserve(roi.coded_count());
  for (std::size_t i = 0; i < poh.size(); ++i) {
    if (roi[i]) symbols.push_back(index[poh[i]]);
  }

  detail::BitWriter w;
  const int full_group_bits = detail::packed_group_bits(levels, kLevelGroupSize);
  for (std::size_t g = 0; g < symbols.size(); g += kLevelGroupSize) {
    const int n = static_cast<int>(std::min<std::size_t>(kLevelGroupSize, symbols.size() - g));
    const int nbits = n == kLevelGroupSize ? full_group_bits : detail::packed_group_bits(levels, n);
    // value = sum s_i * L^i, first symbol least significant.
    detail::SmallBigInt value;
    for (int i = n - 1; i >= 0; --i) value.mul_add(levels, symbols[g + i]);
    for (int b = nbits - 1; b >= 0; --b) w.put_bit(value.bit(b));
  }
  return finish_stream(roi, h, std::move(w));
}

PhaseHologram decode(const PohBitstream& stream, int layers) {
  const PohHeader& h = stream.header();
  if (layers == 0) layers = stream.layers_present();
  if (layers < 1 || layers > h.layer_count) throw UsageError("requested layers out of range");
  if (layers > stream.layers_present()) {
    throw CodecError("stream holds only " + std::to_string(stream.layers_present()) + " layers");
  }

  const Mask roi = roi_from_runs(stream.roi_runs(), h.width, h.height);
  PhaseHologram out(grid_params(h.width, h.height));
  const std::size_t coded = stream.coded_pixels();
  std::vector<std::uint8_t> values(coded);
  detail::BitReader r(stream.payload(), stream.payload_bits());

  if (h.mode == CodingMode::kBitPlane) {
    std::vector<std::uint32_t> codes(coded, 0);
    for (int k = 0; k < layers; ++k) {
      for (auto& c : codes) c = (c << 1) | static_cast<std::uint32_t>(r.get_bit());
    }
    for (std::size_t i = 0; i < coded; ++i) values[i] = bitplane_reconstruct(codes[i], layers);
  } else {
    const auto table = quantizer_levels(h.levels);
    const int full_group_bits = detail::packed_group_bits(h.levels, kLevelGroupSize);
    for (std::size_t g = 0; g < coded; g += kLevelGroupSize) {
      const int n = static_cast<int>(std::min<std::size_t>(kLevelGroupSize, coded - g));
      const int nbits =
          n == kLevelGroupSize ? full_group_bits : detail::packed_group_bits(h.levels, n);
      detail::SmallBigInt value;
      for (int b = nbits - 1; b >= 0; --b) {
        if (r.get_bit()) value.set_bit(b);
      }
      for (int i = 0; i < n; ++i) values[g + i] = table[value.div_small(h.levels)];
      if (!value.is_zero()) throw CodecError("level group value out of range");
    }
  }

  std::size_t next = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (roi[i]) {
      out[i] = values[next++];
    } else if (h.fill.mode == FillMode::kConstant) {
      out[i] = static_cast<std::uint8_t>(h.fill.value);
    } else {
      out[i] = fill_sample(h.fill.value, i);
    }
  }
  return out;
}

PhaseHologram decode(std::span<const std::uint8_t> bytes, int layers) {
  return decode(PohBitstream::parse_prefix(bytes), layers);
}

void write_poh(const std::filesystem::path& path, const PohBitstream& stream) {
  detail::write_file(path, stream.serialize());
}

PohBitstream read_poh(const std::filesystem::path& path) {
  return PohBitstream::parse_prefix(detail::read_file(path));
}

// --- sub-holograms and RoI ------------------------------------------------------

void SubhologramParams::validate() const {
  if (!(eyebox_diameter > 0.0) || !std::isfinite(eyebox_diameter)) {
    throw UsageError("eye-box diameter must be positive");
  }
  if (!(eye_relief > 0.0) || !std::isfinite(eye_relief)) {
    throw UsageError("eye relief must be positive");
  }
}

double subhologram_radius(const SubhologramParams& sub, double z, const SlmParams& slm) {
  sub.validate();
  if (!(z > 0.0)) throw UsageError("depth must be positive");
  double r = 0.5 * sub.eyebox_diameter * z / (z + sub.eye_relief);
  if (sub.diffraction_cap) {
    const double s = slm.wavelength / (2.0 * slm.pixel_pitch);
    if (s < 1.0) r = std::min(r, z * std::tan(std::asin(s)));
  }
  return r;
}

double eyebox_cutoff(const SubhologramParams& sub, double z, const SlmParams& slm) {
  sub.validate();
  if (!(z > 0.0)) throw UsageError("depth must be positive");
  double fc = 0.5 * sub.eyebox_diameter / (slm.wavelength * (z + sub.eye_relief));
  if (sub.diffraction_cap) fc = std::min(fc, 1.0 / (2.0 * slm.pixel_pitch));
  return fc;
}

RoiMask roi_from_scene(const TargetScene& scene, const SlmParams& slm,
                       const SubhologramParams& sub) {
  scene.validate(slm);
  sub.validate();
  const double threshold = scene.support_threshold;
  Mask roi(slm.width, slm.height);
  for (const auto& layer : scene.layers) {
    Mask support(slm.width, slm.height);
    for (std::size_t i = 0; i < support.size(); ++i) support[i] = layer.amplitude[i] > threshold;
    const double radius = std::ceil(subhologram_radius(sub, layer.depth, slm) / slm.pixel_pitch);
    const Mask grown = dilate_disk(support, radius);
    for (std::size_t i = 0; i < roi.size(); ++i) roi[i] |= grown[i];
  }
  return RoiMask(std::move(roi));
}

}  // namespace pohlab
