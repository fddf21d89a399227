#include "hinfer/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hinfer {

GaussianSampler::GaussianSampler(double sigma, double tail) {
  if (!(sigma > 0) || !(tail > 0)) throw std::invalid_argument("GaussianSampler: sigma and tail must be positive");
  bound_ = static_cast<i64>(std::floor(tail * sigma));
  std::vector<double> weight(static_cast<std::size_t>(bound_) + 1);
  double total = 0;
  for (i64 x = 0; x <= bound_; ++x) {
    const double rho = std::exp(-static_cast<double>(x * x) / (2 * sigma * sigma));
    weight[static_cast<std::size_t>(x)] = x == 0 ? rho : 2 * rho;
    total += weight[static_cast<std::size_t>(x)];
  }
  const double scale = std::ldexp(1.0, 63);
  cdt_.resize(weight.size());
  double acc = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    acc += weight[i];
    cdt_[i] = static_cast<u64>(std::min(scale, acc / total * scale));
  }
  cdt_.back() = u64{1} << 63;
}

i64 GaussianSampler::sample(Prg& prg) const {
  const u64 r = prg.next_u64();
  const u64 u = r >> 1;
  const auto it = std::upper_bound(cdt_.begin(), cdt_.end(), u);
  const i64 mag = static_cast<i64>(it - cdt_.begin());
  return (mag != 0 && (r & 1)) ? -mag : mag;
}

std::vector<i64> GaussianSampler::sample_vector(std::size_t n, Prg& prg) const {
  std::vector<i64> out(n);
  for (auto& v : out) v = sample(prg);
  return out;
}

std::vector<i64> sample_ternary(std::size_t n, Prg& prg) {
  std::vector<i64> out(n);
  for (auto& v : out) v = static_cast<i64>(prg.uniform(3)) - 1;
  return out;
}

std::vector<i64> sample_uniform_signed(std::size_t n, u64 bound, Prg& prg) {
  std::vector<i64> out(n);
  for (auto& v : out) v = static_cast<i64>(prg.uniform(2 * bound + 1)) - static_cast<i64>(bound);
  return out;
}

std::vector<u64> sample_uniform_mod(std::size_t n, u64 modulus, Prg& prg) {
  std::vector<u64> out(n);
  for (auto& v : out) v = prg.uniform(modulus);
  return out;
}

}  // namespace hinfer
