#include <algorithm>
#include <bit>
#include <stdexcept>

#include "hinfer/pahe.hpp"

namespace hinfer {

int digit_count(int w_relin) {
  if (w_relin < 1) throw std::invalid_argument("digit_count: window must be positive");
  return (ModulusQ::kBits + w_relin - 1) / w_relin;
}

int window_count(const ModulusP& p, int w_pt) {
  if (w_pt < 1) throw std::invalid_argument("window_count: window must be positive");
  const int bits = std::bit_width(p.value() / 2) + 1;
  return std::max(1, (bits + w_pt - 1) / w_pt);
}

double default_flood_bits(const RingParams& rp) {
  return std::log2(NoiseModel::line(rp)) - 2.0;
}

}  // namespace hinfer
