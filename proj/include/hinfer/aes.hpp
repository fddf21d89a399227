#pragma once

#include <array>
#include <span>

#include "hinfer/common.hpp"

namespace hinfer {

// AES-128 encryption with AES-NI. Only the forward direction is needed: the
// PRG runs it in counter mode and the garbling hash uses it as a fixed-key
// permutation.
class Aes128 {
 public:
  explicit Aes128(const Block& key);

  Block encrypt(const Block& in) const;
  void encrypt_blocks(std::span<Block> blocks) const;

 private:
  std::array<Block, 11> round_keys_;
};

}  // namespace hinfer
