#include "bitio.hpp"

#include <algorithm>
#include <bit>

#include "pohlab/error.hpp"

namespace pohlab::detail {

void BitWriter::put(std::uint64_t value, int nbits) {
  for (int i = nbits - 1; i >= 0; --i) put_bit((value >> i) & 1U);
}

void BitWriter::put_bit(bool bit) {
  if (bits_ % 8 == 0) bytes_.push_back(0);
  if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80U >> (bits_ % 8));
  ++bits_;
}

void BitWriter::put_ue(std::uint64_t value) {
  if (value == UINT64_MAX) throw CodecError("Exp-Golomb value too large");
  const std::uint64_t v = value + 1;
  const int len = std::bit_width(v);
  put(0, len - 1);
  put(v, len);
}

std::vector<std::uint8_t> BitWriter::finish() && { return std::move(bytes_); }

BitReader::BitReader(std::span<const std::uint8_t> bytes, std::size_t bit_limit)
    : bytes_(bytes), limit_(std::min(bit_limit, bytes.size() * 8)) {}

bool BitReader::get_bit() {
  if (pos_ >= limit_) throw CodecError("bit stream truncated");
  const bool bit = (bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1U;
  ++pos_;
  return bit;
}

std::uint64_t BitReader::get(int nbits) {
  if (static_cast<std::size_t>(nbits) > remaining()) throw CodecError("bit stream truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < nbits; ++i) v = (v << 1) | static_cast<std::uint64_t>(get_bit());
  return v;
}

std::uint64_t BitReader::get_ue() {
  int zeros = 0;
  while (!get_bit()) {
    if (++zeros > 63) throw CodecError("corrupt Exp-Golomb code");
  }
  const std::uint64_t rest = get(zeros);
  return ((std::uint64_t{1} << zeros) | rest) - 1;
}

void SmallBigInt::mul_add(std::uint32_t mul, std::uint32_t add) {
  std::uint64_t carry = add;
  for (auto& limb : limbs_) {
    const std::uint64_t t = static_cast<std::uint64_t>(limb) * mul + carry;
    limb = static_cast<std::uint32_t>(t);
    carry = t >> 32;
  }
  if (carry) limbs_.push_back(static_cast<std::uint32_t>(carry));
}

std::uint32_t SmallBigInt::div_small(std::uint32_t divisor) {
  std::uint64_t rem = 0;
  for (auto it = limbs_.rbegin(); it != limbs_.rend(); ++it) {
    const std::uint64_t cur = (rem << 32) | *it;
    *it = static_cast<std::uint32_t>(cur / divisor);
    rem = cur % divisor;
  }
  while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
  return static_cast<std::uint32_t>(rem);
}

bool SmallBigInt::is_zero() const noexcept {
  for (auto l : limbs_) {
    if (l) return false;
  }
  return true;
}

int SmallBigInt::bit_length() const noexcept {
  for (int i = static_cast<int>(limbs_.size()) - 1; i >= 0; --i) {
    if (limbs_[i]) return 32 * i + std::bit_width(limbs_[i]);
  }
  return 0;
}

bool SmallBigInt::bit(int i) const noexcept {
  const std::size_t limb = static_cast<std::size_t>(i) / 32;
  return limb < limbs_.size() && ((limbs_[limb] >> (i % 32)) & 1U);
}

void SmallBigInt::set_bit(int i) {
  const std::size_t limb = static_cast<std::size_t>(i) / 32;
  if (limb >= limbs_.size()) limbs_.resize(limb + 1, 0);
  limbs_[limb] |= 1U << (i % 32);
}

int packed_group_bits(std::uint32_t base, int count) {
  SmallBigInt v;
  v.mul_add(0, 1);
  for (int i = 0; i < count; ++i) v.mul_add(base, 0);
  // bit_length(base^count - 1): equal to bit_length(base^count) unless it is a power of two.
  const int len = v.bit_length();
  bool power_of_two = true;
  for (int i = 0; i < len - 1; ++i) {
    if (v.bit(i)) {
      power_of_two = false;
      break;
    }
  }
  return power_of_two ? len - 1 : len;
}

}  // namespace pohlab::detail
