#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

namespace hinfer {

using u8 = std::uint8_t;
using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

// 128-bit value used for AES blocks and garbled-circuit wire labels.
struct Block {
  u64 lo = 0;
  u64 hi = 0;

  constexpr Block() = default;
  constexpr Block(u64 low, u64 high) : lo(low), hi(high) {}

  constexpr Block operator^(const Block& o) const { return {lo ^ o.lo, hi ^ o.hi}; }
  constexpr Block operator&(const Block& o) const { return {lo & o.lo, hi & o.hi}; }
  constexpr Block& operator^=(const Block& o) {
    lo ^= o.lo;
    hi ^= o.hi;
    return *this;
  }
  constexpr bool operator==(const Block& o) const = default;

  constexpr bool lsb() const { return (lo & 1) != 0; }
  // Linear orthomorphism (l, h) -> (l ^ h, l) used by the garbling hash.
  constexpr Block sigma() const { return {lo ^ hi, lo}; }
};

inline constexpr Block kZeroBlock{};

// Returns all-ones if bit is set, zero otherwise.
constexpr Block select_mask(bool bit) {
  const u64 m = bit ? ~u64{0} : u64{0};
  return {m, m};
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hinfer
