#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hinfer/common.hpp"

namespace hinfer {

u64 pow_mod(u64 base, u64 exp, u64 mod);
u64 inv_mod(u64 a, u64 mod);
// Deterministic Miller-Rabin; exact for every 64-bit input.
bool is_prime(u64 n);

// Ciphertext modulus q = 2^60 - delta. Reduction folds the bits above 2^60
// back in via 2^60 = delta (mod q), so no division is ever executed.
class ModulusQ {
 public:
  static constexpr int kBits = 60;
  static constexpr u64 kTwo60 = u64{1} << kBits;
  static constexpr u64 kLow60 = kTwo60 - 1;

  explicit ModulusQ(u64 q);

  u64 value() const { return q_; }
  u64 delta() const { return delta_; }

  // Any x < 2^64.
  u64 reduce(u64 x) const {
    x = (x >> kBits) * delta_ + (x & kLow60);
    return x >= q_ ? x - q_ : x;
  }

  u64 reduce_wide(u128 x) const {
    while ((x >> 64) != 0) x = (x >> kBits) * delta_ + (static_cast<u64>(x) & kLow60);
    return reduce(static_cast<u64>(x));
  }

  // a, b < q. The 120-bit product is folded twice before the final reduce.
  u64 mul(u64 a, u64 b) const {
    const u128 t = static_cast<u128>(a) * b;
    const u64 lo = static_cast<u64>(t) & kLow60;
    const u128 u = static_cast<u128>(static_cast<u64>(t >> kBits)) * delta_;
    const u64 u_lo = static_cast<u64>(u) & kLow60;
    const u64 u_hi = static_cast<u64>(u >> kBits);
    return reduce(lo + u_lo + u_hi * delta_);
  }

  // a < 2^62, b < 2^60; result in [0, 2q) and not fully reduced.
  u64 mul_lazy(u64 a, u64 b) const {
    const u128 t = static_cast<u128>(a) * b;
    const u128 u = static_cast<u128>(static_cast<u64>(t >> kBits)) * delta_;
    u64 x = (static_cast<u64>(t) & kLow60) + (static_cast<u64>(u) & kLow60);
    x += static_cast<u64>(u >> kBits) * delta_;
    return (x >> kBits) * delta_ + (x & kLow60);
  }

  u64 add(u64 a, u64 b) const {
    const u64 s = a + b;
    return s >= q_ ? s - q_ : s;
  }
  u64 sub(u64 a, u64 b) const { return a >= b ? a - b : a + q_ - b; }
  u64 neg(u64 a) const { return a == 0 ? 0 : q_ - a; }

  bool operator==(const ModulusQ& o) const { return q_ == o.q_; }

 private:
  u64 q_;
  u64 delta_;
};

// Plaintext modulus with Barrett reduction (mu = floor(2^64 / p)).
class ModulusP {
 public:
  explicit ModulusP(u64 p);

  u64 value() const { return p_; }
  u64 barrett_const() const { return mu_; }
  int bit_count() const { return bits_; }

  u64 reduce(u64 x) const {
    const u64 qhat = static_cast<u64>((static_cast<u128>(x) * mu_) >> 64);
    const u64 r = x - qhat * p_;
    return r >= p_ ? r - p_ : r;
  }
  u64 mul(u64 a, u64 b) const { return reduce(a * b); }
  // a < 4p, b < p; Barrett quotient without the final correction, so the
  // result lies in [0, 2p).
  u64 mul_lazy(u64 a, u64 b) const {
    const u64 x = a * b;
    return x - static_cast<u64>((static_cast<u128>(x) * mu_) >> 64) * p_;
  }
  u64 add(u64 a, u64 b) const {
    const u64 s = a + b;
    return s >= p_ ? s - p_ : s;
  }
  u64 sub(u64 a, u64 b) const { return a >= b ? a - b : a + p_ - b; }
  u64 neg(u64 a) const { return a == 0 ? 0 : p_ - a; }

  // Signed representative in (-p/2, p/2].
  i64 centered(u64 a) const { return a > p_ / 2 ? static_cast<i64>(a) - static_cast<i64>(p_) : static_cast<i64>(a); }
  u64 from_signed(i64 v) const {
    const i64 r = v % static_cast<i64>(p_);
    return static_cast<u64>(r < 0 ? r + static_cast<i64>(p_) : r);
  }

  bool operator==(const ModulusP& o) const { return p_ == o.p_; }

 private:
  u64 p_;
  u64 mu_;
  int bits_;
};

// Reference backend using hardware division; the baseline for the
// fast-reduction benchmarks.
class NaiveModulus {
 public:
  explicit NaiveModulus(u64 m) : m_(m) {}
  u64 value() const { return m_; }
  u64 reduce(u64 x) const { return x % m_; }
  u64 mul(u64 a, u64 b) const { return static_cast<u64>(static_cast<u128>(a) * b % m_); }
  u64 add(u64 a, u64 b) const { return static_cast<u64>((static_cast<u128>(a) + b) % m_); }
  u64 sub(u64 a, u64 b) const { return static_cast<u64>((static_cast<u128>(a) + m_ - b) % m_); }
  u64 neg(u64 a) const { return a == 0 ? 0 : m_ - a; }
  u64 reduce_wide(u128 x) const { return static_cast<u64>(x % m_); }

 private:
  u64 m_;
};

inline constexpr u64 kToy64P = 65537;
inline constexpr u64 kToy64Q = 1152921504590073601ULL;
inline constexpr u64 kToy8Q = 1152921504606844513ULL;

struct RingParams {
  u64 m = 0;  // cyclotomic order, power of two
  u64 n = 0;  // slot count, m / 2
  ModulusQ q;
  ModulusP p;
  double sigma = 4.0;
  i64 r = 0;  // q mod p, signed representative

  // Validates every structural invariant; throws std::invalid_argument.
  static RingParams create(u64 m, u64 p, u64 q, double sigma = 4.0);

  // m = 4096, p = 307201 and its pseudo-Mersenne partner.
  static RingParams standard();
  // n = 64 parameters for fast exhaustive-style tests.
  static RingParams toy64();
  // n = 8, p = 17.
  static RingParams toy8();

  // log2(q / (2p)): decryption is correct while the noise stays below 2^this.
  double correctness_bits() const;
  // Scaling factor (q - r) / p.
  u64 scale() const;
};

struct PrimePair {
  ModulusP p;
  ModulusQ q;
  i64 r;
};

// Smallest admissible delta for the given p: q = 2^60 - delta prime,
// q = 1 (mod m), q = r (mod p) for some 0 < |r| <= r_bound, delta^2 < q.
std::optional<PrimePair> find_q_for_p(u64 p, u64 m, int r_bound);

// Walks p = 1 (mod m) through [2^log_p_target, 2^(log_p_target+1)) in
// increasing order and returns the first p that admits a pseudo-Mersenne
// partner q with |r| = 1. Only if the whole range fails is |r| = 2 tried, and
// so on up to r_bound.
PrimePair find_prime_pair(int log_p_target, u64 m, int r_bound, u64 candidate_budget = u64{1} << 24);

}  // namespace hinfer
