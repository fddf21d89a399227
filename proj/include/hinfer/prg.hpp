#pragma once

#include <array>
#include <span>

#include "hinfer/aes.hpp"

namespace hinfer {

// AES-CTR pseudorandom generator. Deterministic for a given seed; one
// instance must stay confined to one thread.
class Prg {
 public:
  explicit Prg(u64 seed, u64 stream = 0);
  explicit Prg(const Block& key);

  // Seeded from the operating system's entropy source.
  static Prg from_entropy();

  Block next_block();
  u64 next_u64();
  bool next_bit();
  // Uniform in [0, bound) by rejection sampling; bound > 0.
  u64 uniform(u64 bound);
  void fill(std::span<u8> out);

 private:
  void refill();

  Aes128 aes_;
  u64 counter_ = 0;
  std::array<Block, 8> buffer_{};
  std::size_t used_ = 8;
  u64 bit_pool_ = 0;
  int bits_left_ = 0;
};

}  // namespace hinfer
