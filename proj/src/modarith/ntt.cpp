#include "hinfer/ntt.hpp"

#include <bit>

#include "hinfer/modarith.hpp"
#include "hinfer/prg.hpp"

namespace hinfer {

NttTables::NttTables(u64 modulus, std::size_t n) : mod_(modulus), n_(n), log_n_(0), psi_(0), n_inv_(0) {
  if (n < 2 || (n & (n - 1)) != 0) throw std::invalid_argument("NttTables: n must be a power of two >= 2");
  if ((modulus - 1) % (2 * n) != 0) throw std::invalid_argument("NttTables: modulus != 1 (mod 2n)");
  log_n_ = std::countr_zero(n);

  const u64 cofactor = (modulus - 1) / (2 * n);
  Prg prg(modulus, n);
  for (;;) {
    const u64 g = 2 + prg.uniform(modulus - 3);
    const u64 cand = pow_mod(g, cofactor, modulus);
    // Order exactly 2n iff cand^n = -1.
    if (pow_mod(cand, n, modulus) == modulus - 1) {
      psi_ = cand;
      break;
    }
  }
  n_inv_ = inv_mod(n, modulus);
  const u64 psi_inv = inv_mod(psi_, modulus);

  bitrev_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    u32 r = 0;
    for (int b = 0; b < log_n_; ++b) r |= static_cast<u32>((i >> b) & 1) << (log_n_ - 1 - b);
    bitrev_[i] = r;
  }
  fwd_.resize(n);
  inv_.resize(n);
  std::vector<u64> pw(n), pw_inv(n);
  pw[0] = pw_inv[0] = 1;
  for (std::size_t i = 1; i < n; ++i) {
    pw[i] = static_cast<u64>(static_cast<u128>(pw[i - 1]) * psi_ % modulus);
    pw_inv[i] = static_cast<u64>(static_cast<u128>(pw_inv[i - 1]) * psi_inv % modulus);
  }
  for (std::size_t i = 0; i < n; ++i) {
    fwd_[i] = pw[bitrev_[i]];
    inv_[i] = pw_inv[bitrev_[i]];
  }
}

}  // namespace hinfer
