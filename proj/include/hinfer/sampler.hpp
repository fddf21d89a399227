#pragma once

#include <vector>

#include "hinfer/prg.hpp"

namespace hinfer {

// Discrete Gaussian over Z by cumulative-table inversion, truncated at
// tail * sigma.
class GaussianSampler {
 public:
  explicit GaussianSampler(double sigma, double tail = 6.0);

  i64 sample(Prg& prg) const;
  std::vector<i64> sample_vector(std::size_t n, Prg& prg) const;
  i64 bound() const { return bound_; }

 private:
  i64 bound_;
  std::vector<u64> cdt_;  // cumulative probabilities of |x|, scaled to 2^63
};

std::vector<i64> sample_ternary(std::size_t n, Prg& prg);
std::vector<i64> sample_uniform_signed(std::size_t n, u64 bound, Prg& prg);
std::vector<u64> sample_uniform_mod(std::size_t n, u64 modulus, Prg& prg);

}  // namespace hinfer
