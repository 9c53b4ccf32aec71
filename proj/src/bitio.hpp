#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pohlab::detail {

/// MSB-first bit packer.
class BitWriter {
 public:
  void put(std::uint64_t value, int nbits);
  void put_bit(bool bit);
  /// Exp-Golomb, order 0.
  void put_ue(std::uint64_t value);

  std::size_t bit_count() const noexcept { return bits_; }
  /// Pads the final byte with zeros.
  std::vector<std::uint8_t> finish() &&;
  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bits_ = 0;
};

/// MSB-first bit reader over a byte span; overruns throw CodecError.
class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes, std::size_t bit_limit = SIZE_MAX);

  std::uint64_t get(int nbits);
  bool get_bit();
  std::uint64_t get_ue();

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return limit_ - pos_; }
  void seek(std::size_t bit) { pos_ = bit; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

/// Unsigned integer of at most a few hundred bits, little-endian 32-bit limbs.
/// Just enough arithmetic for packing groups of base-L symbols.
class SmallBigInt {
 public:
  void mul_add(std::uint32_t mul, std::uint32_t add);
  /// Divides in place and returns the remainder.
  std::uint32_t div_small(std::uint32_t divisor);
  bool is_zero() const noexcept;
  int bit_length() const noexcept;
  bool bit(int i) const noexcept;
  void set_bit(int i);

 private:
  std::vector<std::uint32_t> limbs_;
};

/// Bits needed to hold any value below base^count, i.e. bit_length(base^count - 1).
int packed_group_bits(std::uint32_t base, int count);

}  // namespace pohlab::detail
