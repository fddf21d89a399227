#include <bit>
#include <cmath>
#include <stdexcept>

#include "hinfer/modarith.hpp"

namespace hinfer {

ModulusQ::ModulusQ(u64 q) : q_(q), delta_(kTwo60 - q) {
  if (q >= kTwo60 || q < (u64{1} << 59)) throw std::invalid_argument("ModulusQ: q must lie in [2^59, 2^60)");
  if (static_cast<u128>(delta_) * delta_ >= q) throw std::invalid_argument("ModulusQ: delta^2 must be below q");
  if (!is_prime(q)) throw std::invalid_argument("ModulusQ: q is not prime");
}

ModulusP::ModulusP(u64 p) : p_(p), mu_(0), bits_(std::bit_width(p)) {
  if (p < 3 || p >= (u64{1} << 31)) throw std::invalid_argument("ModulusP: p must lie in [3, 2^31)");
  if (!is_prime(p)) throw std::invalid_argument("ModulusP: p is not prime");
  mu_ = static_cast<u64>((static_cast<u128>(1) << 64) / p);
}

RingParams RingParams::create(u64 m, u64 p, u64 q, double sigma) {
  if (m < 8 || (m & (m - 1)) != 0) throw std::invalid_argument("RingParams: m must be a power of two >= 8");
  ModulusQ mq(q);
  ModulusP mp(p);
  if (q % m != 1) throw std::invalid_argument("RingParams: q != 1 (mod m)");
  if (p % m != 1) throw std::invalid_argument("RingParams: p != 1 (mod m)");
  if (q % p == 0) throw std::invalid_argument("RingParams: p divides q");
  i64 r = static_cast<i64>(q % p);
  if (static_cast<u64>(r) > p / 2) r -= static_cast<i64>(p);
  if (r < -2 || r > 2) throw std::invalid_argument("RingParams: |q mod p| must be 1 or 2");
  if (!(sigma > 0)) throw std::invalid_argument("RingParams: sigma must be positive");
  return RingParams{m, m / 2, mq, mp, sigma, r};
}

RingParams RingParams::standard() {
  return create(4096, 307201, ModulusQ::kTwo60 - 4096 * u64{63549} + 1);
}

RingParams RingParams::toy64() {
  return create(128, kToy64P, kToy64Q);
}

RingParams RingParams::toy8() {
  return create(16, 17, kToy8Q);
}

u64 RingParams::scale() const {
  return static_cast<u64>((static_cast<i128>(q.value()) - r) / static_cast<i128>(p.value()));
}

double RingParams::correctness_bits() const {
  return std::log2(static_cast<double>(q.value()) / (2.0 * static_cast<double>(p.value())));
}

}  // namespace hinfer
