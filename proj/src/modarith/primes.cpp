#include <algorithm>
#include <bit>
#include <stdexcept>

#include "hinfer/modarith.hpp"

namespace hinfer {

u64 pow_mod(u64 base, u64 exp, u64 mod) {
  u64 result = 1 % mod;
  base %= mod;
  while (exp != 0) {
    if (exp & 1) result = static_cast<u64>(static_cast<u128>(result) * base % mod);
    base = static_cast<u64>(static_cast<u128>(base) * base % mod);
    exp >>= 1;
  }
  return result;
}

u64 inv_mod(u64 a, u64 mod) {
  i128 t = 0, new_t = 1;
  i128 r = mod, new_r = a % mod;
  while (new_r != 0) {
    const i128 quot = r / new_r;
    std::tie(t, new_t) = std::pair<i128, i128>{new_t, t - quot * new_t};
    std::tie(r, new_r) = std::pair<i128, i128>{new_r, r - quot * new_r};
  }
  if (r != 1) throw std::invalid_argument("inv_mod: not invertible");
  if (t < 0) t += mod;
  return static_cast<u64>(t);
}

bool is_prime(u64 n) {
  if (n < 2) return false;
  static constexpr u64 kSmall[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (u64 s : kSmall) {
    if (n == s) return true;
    if (n % s == 0) return false;
  }
  u64 d = n - 1;
  int twos = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++twos;
  }
  for (u64 a : kSmall) {
    u64 x = pow_mod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < twos; ++i) {
      x = static_cast<u64>(static_cast<u128>(x) * x % n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

std::optional<PrimePair> find_q_for_p(u64 p, u64 m, int r_bound) {
  if (m == 0 || (m & (m - 1)) != 0) throw std::invalid_argument("find_q_for_p: m must be a power of two");
  const u64 two60 = ModulusQ::kTwo60;
  const u64 m_inv = inv_mod(m % p, p);
  const u128 step = static_cast<u128>(p) * m;
  std::optional<std::pair<u64, i64>> best;
  for (int a = 1; a <= r_bound; ++a) {
    for (const i64 r : {static_cast<i64>(a), -static_cast<i64>(a)}) {
      // delta = m*k - 1 with m*k = 2^60 - r + 1 (mod p).
      const i64 t = static_cast<i64>(two60 % p) - r + 1;
      const u64 t_mod = static_cast<u64>(((t % static_cast<i64>(p)) + static_cast<i64>(p)) % static_cast<i64>(p));
      const u64 k = static_cast<u64>(static_cast<u128>(t_mod) * m_inv % p);
      for (u128 d = static_cast<u128>(m) * k + (k == 0 ? step : 0) - 1; d * d < two60 - d; d += step) {
        if (best && d >= best->first) break;
        const u64 q = two60 - static_cast<u64>(d);
        if (is_prime(q)) {
          best = std::pair<u64, i64>{static_cast<u64>(d), r};
          break;
        }
      }
    }
  }
  if (!best) return std::nullopt;
  return PrimePair{ModulusP(p), ModulusQ(two60 - best->first), best->second};
}

PrimePair find_prime_pair(int log_p_target, u64 m, int r_bound, u64 candidate_budget) {
  if (m < 8 || (m & (m - 1)) != 0) throw std::invalid_argument("find_prime_pair: m must be a power of two >= 8");
  if (log_p_target < 16 || log_p_target > 30) throw std::invalid_argument("find_prime_pair: log_p_target outside [16, 30]");
  if (r_bound < 1) throw std::invalid_argument("find_prime_pair: r_bound must be positive");
  const u64 lo = u64{1} << log_p_target;
  const u64 hi = lo << 1;
  u64 first = (lo - 1) / m * m + 1;
  if (first < lo) first += m;
  u64 tried = 0;
  for (int level = 1; level <= r_bound; ++level) {
    for (u64 p = first; p < hi; p += m) {
      if (tried++ >= candidate_budget) throw Error("find_prime_pair: candidate budget exhausted");
      if (!is_prime(p)) continue;
      if (auto pair = find_q_for_p(p, m, level)) return *pair;
    }
  }
  throw Error("find_prime_pair: no admissible pair in the bit range");
}

}  // namespace hinfer
