#include "hinfer/prg.hpp"

#include <sodium.h>

#include <algorithm>
#include <bit>

namespace hinfer {

Prg::Prg(u64 seed, u64 stream) : aes_(Block{seed, stream ^ 0x9e3779b97f4a7c15ULL}) {}

Prg::Prg(const Block& key) : aes_(key) {}

Prg Prg::from_entropy() {
  if (sodium_init() < 0) throw Error("libsodium initialisation failed");
  Block key;
  randombytes_buf(&key, sizeof(key));
  return Prg(key);
}

void Prg::refill() {
  for (auto& b : buffer_) b = Block{counter_++, 0};
  aes_.encrypt_blocks(buffer_);
  used_ = 0;
}

Block Prg::next_block() {
  if (used_ == buffer_.size()) refill();
  return buffer_[used_++];
}

u64 Prg::next_u64() {
  return next_block().lo;
}

bool Prg::next_bit() {
  if (bits_left_ == 0) {
    bit_pool_ = next_u64();
    bits_left_ = 64;
  }
  const bool b = (bit_pool_ & 1) != 0;
  bit_pool_ >>= 1;
  --bits_left_;
  return b;
}

u64 Prg::uniform(u64 bound) {
  if (bound == 0) throw std::invalid_argument("uniform: zero bound");
  if ((bound & (bound - 1)) == 0) return next_u64() & (bound - 1);
  const int shift = std::countl_zero(bound - 1);
  const u64 mask = ~u64{0} >> shift;
  for (;;) {
    const u64 v = next_u64() & mask;
    if (v < bound) return v;
  }
}

void Prg::fill(std::span<u8> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    const Block b = next_block();
    u8 bytes[16];
    std::memcpy(bytes, &b.lo, 8);
    std::memcpy(bytes + 8, &b.hi, 8);
    const std::size_t take = std::min<std::size_t>(16, out.size() - i);
    std::memcpy(out.data() + i, bytes, take);
    i += take;
  }
}

}  // namespace hinfer
