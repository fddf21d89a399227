#pragma once

#include <concepts>
#include <span>
#include <stdexcept>
#include <vector>

#include "hinfer/common.hpp"

namespace hinfer {

// Twiddles for the negacyclic transform of length n modulo a prime
// modulus = 1 (mod 2n). Slot k of the forward transform is the evaluation at
// psi^(2*bitrev(k)+1).
class NttTables {
 public:
  NttTables(u64 modulus, std::size_t n);

  std::size_t size() const { return n_; }
  int log_size() const { return log_n_; }
  u64 modulus() const { return mod_; }
  u64 psi() const { return psi_; }
  u64 n_inv() const { return n_inv_; }

  // psi^bitrev(i), i in [0, n).
  const std::vector<u64>& forward_twiddles() const { return fwd_; }
  // psi^-(bitrev(i)), i in [0, n).
  const std::vector<u64>& inverse_twiddles() const { return inv_; }
  const std::vector<u32>& bitrev() const { return bitrev_; }

  // Odd exponent e in [0, 2n) evaluated by slot k.
  u64 slot_exponent(std::size_t k) const { return 2 * static_cast<u64>(bitrev_[k]) + 1; }
  // Inverse of slot_exponent; e must be odd.
  std::size_t slot_of_exponent(u64 e) const { return bitrev_[(e % (2 * n_)) >> 1]; }

 private:
  u64 mod_;
  std::size_t n_;
  int log_n_;
  u64 psi_;
  u64 n_inv_;
  std::vector<u64> fwd_;
  std::vector<u64> inv_;
  std::vector<u32> bitrev_;
};

// Moduli offering mul_lazy run the butterflies on values in [0, 4m), which
// needs 4m < 2^64; everything else reduces fully after every operation.
template <class Mod>
concept LazyModulus = requires(const Mod& m, u64 a) {
  { m.mul_lazy(a, a) } -> std::convertible_to<u64>;
};

namespace detail {

inline u64 csub(u64 x, u64 m) { return x >= m ? x - m : x; }

template <LazyModulus Mod>
void ntt_forward_lazy(std::span<u64> a, const NttTables& t, const Mod& mod) {
  const std::size_t n = t.size();
  const u64 m1 = mod.value();
  const u64 m2 = 2 * m1;
  const u64* w = t.forward_twiddles().data();
  std::size_t len = n;
  for (std::size_t m = 1; m < n; m <<= 1) {
    len >>= 1;
    for (std::size_t i = 0; i < m; ++i) {
      const u64 s = w[m + i];
      u64* x = a.data() + 2 * i * len;
      u64* y = x + len;
      for (std::size_t j = 0; j < len; ++j) {
        const u64 u = csub(x[j], m2);
        const u64 v = mod.mul_lazy(y[j], s);
        x[j] = u + v;
        y[j] = u - v + m2;
      }
    }
  }
  for (auto& v : a) v = csub(csub(v, m2), m1);
}

template <LazyModulus Mod>
void ntt_inverse_lazy(std::span<u64> a, const NttTables& t, const Mod& mod) {
  const std::size_t n = t.size();
  const u64 m1 = mod.value();
  const u64 m2 = 2 * m1;
  const u64* w = t.inverse_twiddles().data();
  std::size_t len = 1;
  for (std::size_t m = n >> 1; m >= 1; m >>= 1) {
    for (std::size_t i = 0; i < m; ++i) {
      const u64 s = w[m + i];
      u64* x = a.data() + 2 * i * len;
      u64* y = x + len;
      for (std::size_t j = 0; j < len; ++j) {
        const u64 u = x[j];
        const u64 v = y[j];
        x[j] = csub(u + v, m2);
        y[j] = mod.mul_lazy(u - v + m2, s);
      }
    }
    len <<= 1;
  }
  const u64 ninv = t.n_inv();
  for (auto& v : a) v = csub(mod.mul_lazy(v, ninv), m1);
}

}  // namespace detail

// Cooley-Tukey, natural order in, bit-reversed slot order out.
template <class Mod>
void ntt_forward(std::span<u64> a, const NttTables& t, const Mod& mod) {
  const std::size_t n = t.size();
  if (a.size() != n) throw std::invalid_argument("ntt_forward: length mismatch");
  if constexpr (LazyModulus<Mod>) {
    detail::ntt_forward_lazy(a, t, mod);
    return;
  }
  const u64* w = t.forward_twiddles().data();
  std::size_t len = n;
  for (std::size_t m = 1; m < n; m <<= 1) {
    len >>= 1;
    for (std::size_t i = 0; i < m; ++i) {
      const u64 s = w[m + i];
      u64* x = a.data() + 2 * i * len;
      u64* y = x + len;
      for (std::size_t j = 0; j < len; ++j) {
        const u64 u = x[j];
        const u64 v = mod.mul(y[j], s);
        x[j] = mod.add(u, v);
        y[j] = mod.sub(u, v);
      }
    }
  }
}

// Gentleman-Sande, bit-reversed slot order in, natural order out.
template <class Mod>
void ntt_inverse(std::span<u64> a, const NttTables& t, const Mod& mod) {
  const std::size_t n = t.size();
  if (a.size() != n) throw std::invalid_argument("ntt_inverse: length mismatch");
  if constexpr (LazyModulus<Mod>) {
    detail::ntt_inverse_lazy(a, t, mod);
    return;
  }
  const u64* w = t.inverse_twiddles().data();
  std::size_t len = 1;
  for (std::size_t m = n >> 1; m >= 1; m >>= 1) {
    for (std::size_t i = 0; i < m; ++i) {
      const u64 s = w[m + i];
      u64* x = a.data() + 2 * i * len;
      u64* y = x + len;
      for (std::size_t j = 0; j < len; ++j) {
        const u64 u = x[j];
        const u64 v = y[j];
        x[j] = mod.add(u, v);
        y[j] = mod.mul(mod.sub(u, v), s);
      }
    }
    len <<= 1;
  }
  const u64 ninv = t.n_inv();
  for (auto& v : a) v = mod.mul(v, ninv);
}

}  // namespace hinfer
