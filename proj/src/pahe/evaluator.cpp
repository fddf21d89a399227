#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hinfer/pahe.hpp"
#include "hinfer/sampler.hpp"
#include "poly_ops.hpp"

namespace hinfer {

using detail::with_q;

namespace {

void check_shape(const Context& ctx, const Ciphertext& a) {
  if (a.c0.size() != ctx.n() || a.c1.size() != ctx.n()) throw std::invalid_argument("ciphertext does not match the context");
}

// Balanced base-2^w digits of v; the top digit absorbs the remainder.
std::vector<std::vector<i64>> balanced_digits(std::span<const i64> v, int w, int count) {
  std::vector<std::vector<i64>> d(static_cast<std::size_t>(count), std::vector<i64>(v.size()));
  const i64 base = i64{1} << w;
  const i64 half = base >> 1;
  for (std::size_t i = 0; i < v.size(); ++i) {
    i64 x = v[i];
    for (int k = 0; k + 1 < count; ++k) {
      i64 r = x & (base - 1);
      if (r >= half) r -= base;
      d[static_cast<std::size_t>(k)][i] = r;
      x = (x - r) >> w;
    }
    d[static_cast<std::size_t>(count - 1)][i] = x;
  }
  return d;
}

}  // namespace

PlaintextWindows Evaluator::encode_windows(std::span<const u64> slots, int w_pt) const {
  const Context& ctx = *ctx_;
  const auto coeffs = ctx.slots_to_coeffs(slots);
  const int windows = window_count(ctx.p(), w_pt);
  PlaintextWindows out;
  out.w_pt = w_pt;
  out.zero = std::all_of(coeffs.begin(), coeffs.end(), [](i64 c) { return c == 0; });
  const auto digits = windows == 1 ? std::vector<std::vector<i64>>{coeffs} : balanced_digits(coeffs, w_pt, windows);
  with_q(ctx, backend_, [&](const auto& mod) {
    for (const auto& d : digits) {
      u64 norm = 0;
      double sq = 0, sum = 0;
      for (i64 c : d) {
        const u64 a = static_cast<u64>(c < 0 ? -c : c);
        norm = std::max(norm, a);
        sq += static_cast<double>(a) * static_cast<double>(a);
        sum += static_cast<double>(a);
      }
      out.norms.push_back(norm);
      out.l2.push_back(std::sqrt(sq));
      out.l1.push_back(sum);
      out.chunks.push_back(detail::to_eval(std::span<const i64>(d), ctx.ntt_q(), mod));
    }
  });
  return out;
}

Ciphertext Evaluator::zero() const {
  Ciphertext ct;
  ct.c0.assign(ctx_->n(), 0);
  ct.c1.assign(ctx_->n(), 0);
  return ct;
}

Ciphertext Evaluator::add(const Ciphertext& a, const Ciphertext& b) const {
  Ciphertext out = a;
  add_inplace(out, b);
  return out;
}

void Evaluator::add_inplace(Ciphertext& a, const Ciphertext& b) const {
  check_shape(*ctx_, a);
  check_shape(*ctx_, b);
  with_q(*ctx_, backend_, [&](const auto& mod) {
    detail::add_to(a.c0, b.c0, mod);
    detail::add_to(a.c1, b.c1, mod);
  });
  a.noise = NoiseModel::add(ctx_->params(), a.noise, b.noise);
  ++counters_.add;
}

Ciphertext Evaluator::sub(const Ciphertext& a, const Ciphertext& b) const {
  check_shape(*ctx_, a);
  check_shape(*ctx_, b);
  Ciphertext out = a;
  with_q(*ctx_, backend_, [&](const auto& mod) {
    detail::sub_from(out.c0, b.c0, mod);
    detail::sub_from(out.c1, b.c1, mod);
  });
  out.noise = NoiseModel::add(ctx_->params(), a.noise, b.noise);
  ++counters_.add;
  return out;
}

Ciphertext Evaluator::negate(const Ciphertext& a) const {
  check_shape(*ctx_, a);
  Ciphertext out = a;
  with_q(*ctx_, backend_, [&](const auto& mod) {
    for (auto& v : out.c0) v = mod.neg(v);
    for (auto& v : out.c1) v = mod.neg(v);
  });
  out.noise = NoiseModel::add_plain(ctx_->params(), a.noise);
  return out;
}

Ciphertext Evaluator::add_plain(const Ciphertext& a, std::span<const u64> slots) const {
  check_shape(*ctx_, a);
  const auto m = ctx_->slots_to_coeffs(slots);
  Ciphertext out = a;
  with_q(*ctx_, backend_, [&](const auto& mod) { detail::add_to(out.c0, detail::scaled_message(*ctx_, std::span<const i64>(m), mod), mod); });
  out.noise = NoiseModel::add_plain(ctx_->params(), a.noise);
  ++counters_.add_plain;
  return out;
}

Ciphertext Evaluator::scmult(const WindowedCiphertext& ct, const PlaintextWindows& w) const {
  if (w.chunks.empty()) throw std::invalid_argument("scmult: empty plaintext");
  if (ct.parts.size() < w.chunks.size()) throw std::invalid_argument("scmult: missing window ciphertexts");
  if (w.chunks.size() > 1 && ct.w_pt != w.w_pt) throw std::invalid_argument("scmult: window width mismatch");
  const std::size_t n = ctx_->n();
  Ciphertext out;
  out.c0.assign(n, 0);
  out.c1.assign(n, 0);
  ++counters_.scmult;
  if (w.zero) return out;
  for (std::size_t k = 0; k < w.chunks.size(); ++k) check_shape(*ctx_, ct.parts[k]);
  with_q(*ctx_, backend_, [&](const auto& mod) {
    const std::size_t windows = w.chunks.size();
    for (std::size_t i = 0; i < n; ++i) {
      u128 a0 = 0, a1 = 0;
      for (std::size_t k = 0; k < windows; ++k) {
        const u64 v = w.chunks[k][i];
        a0 += static_cast<u128>(ct.parts[k].c0[i]) * v;
        a1 += static_cast<u128>(ct.parts[k].c1[i]) * v;
      }
      out.c0[i] = mod.reduce_wide(a0);
      out.c1[i] = mod.reduce_wide(a1);
    }
  });
  double noise = 0;
  double l1 = 0;
  for (std::size_t k = 0; k < w.chunks.size(); ++k) {
    noise += ct.parts[k].noise * NoiseModel::mult_factor(w.l2[k]);
    l1 += w.l1[k];
  }
  out.noise = noise + NoiseModel::scmult_carry(ctx_->params(), l1);
  return out;
}

Ciphertext Evaluator::scmult(const Ciphertext& ct, const PlaintextWindows& w) const {
  if (w.chunks.size() != 1) throw std::invalid_argument("scmult: missing window ciphertexts");
  WindowedCiphertext wc;
  wc.parts.push_back(ct);
  wc.w_pt = w.w_pt;
  return scmult(wc, w);
}

HoistedCiphertext Evaluator::perm_decomp(const Ciphertext& ct, int w_relin) const {
  check_shape(*ctx_, ct);
  const int count = digit_count(w_relin);
  HoistedCiphertext h;
  h.c0 = ct.c0;
  h.w_relin = w_relin;
  h.noise = ct.noise;
  with_q(*ctx_, backend_, [&](const auto& mod) {
    Poly c1 = ct.c1;
    ntt_inverse(std::span<u64>(c1), ctx_->ntt_q(), mod);
    std::vector<i64> centered(c1.size());
    for (std::size_t i = 0; i < c1.size(); ++i) centered[i] = detail::center(c1[i], mod.value());
    auto digits = balanced_digits(centered, w_relin, count);
    h.digits.reserve(digits.size());
    for (const auto& d : digits) h.digits.push_back(detail::to_eval(std::span<const i64>(d), ctx_->ntt_q(), mod));
  });
  counters_.ntt += static_cast<u64>(count) + 1;
  ++counters_.perm_decomp;
  return h;
}

Ciphertext Evaluator::perm_auto(const HoistedCiphertext& h, const PermutationKey& key) const {
  if (key.w_relin != h.w_relin || key.k0.size() != h.digits.size()) throw std::invalid_argument("perm_auto: key and decomposition windows differ");
  const std::size_t n = ctx_->n();
  if (h.c0.size() != n || key.index.size() != n) throw std::invalid_argument("perm_auto: key does not match the context");
  Ciphertext out;
  out.c0.resize(n);
  out.c1.resize(n);
  const std::size_t digits = h.digits.size();
  const u32* idx = key.index.data();
  with_q(*ctx_, backend_, [&](const auto& mod) {
    for (std::size_t k = 0; k < n; ++k) {
      const u32 src = idx[k];
      u128 a0 = h.c0[src];
      u128 a1 = 0;
      for (std::size_t j = 0; j < digits; ++j) {
        const u64 d = h.digits[j][src];
        a0 += static_cast<u128>(d) * key.k0[j][k];
        a1 += static_cast<u128>(d) * key.k1[j][k];
      }
      out.c0[k] = mod.reduce_wide(a0);
      out.c1[k] = mod.reduce_wide(a1);
    }
  });
  out.noise = h.noise + NoiseModel::rot(ctx_->params(), key.w_relin);
  ++counters_.perm_auto;
  return out;
}

Ciphertext Evaluator::perm(const Ciphertext& ct, const PermutationKey& key) const {
  return perm_auto(perm_decomp(ct, key.w_relin), key);
}

Ciphertext Evaluator::flood(const Ciphertext& ct, const RerandKey& rk, double bits, Prg& prg) const {
  check_shape(*ctx_, ct);
  const std::size_t n = ctx_->n();
  const double bound_d = std::floor(std::exp2(bits));
  const u64 bound = bound_d < 1 ? 0 : static_cast<u64>(bound_d);
  const GaussianSampler gauss(ctx_->params().sigma, NoiseModel::kTail);
  Ciphertext out = ct;
  with_q(*ctx_, backend_, [&](const auto& mod) {
    const auto u = sample_ternary(n, prg);
    const Poly u_eval = detail::to_eval(std::span<const i64>(u), ctx_->ntt_q(), mod);
    const auto e1 = sample_uniform_signed(n, bound, prg);
    const auto e2 = gauss.sample_vector(n, prg);
    detail::add_to(out.c0, detail::to_eval(std::span<const i64>(e1), ctx_->ntt_q(), mod), mod);
    detail::mul_add_to(out.c0, rk.b, u_eval, mod);
    detail::add_to(out.c1, detail::to_eval(std::span<const i64>(e2), ctx_->ntt_q(), mod), mod);
    detail::mul_add_to(out.c1, rk.a, u_eval, mod);
  });
  // e*u + e2*s with ternary u, s of variance 2/3.
  const double zero_noise = NoiseModel::fresh(ctx_->params()) * std::sqrt(2.0 * static_cast<double>(n) * 2.0 / 3.0);
  out.noise = ct.noise + zero_noise + static_cast<double>(bound);
  return out;
}

}  // namespace hinfer
