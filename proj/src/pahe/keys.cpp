#include <stdexcept>

#include "hinfer/pahe.hpp"
#include "hinfer/sampler.hpp"
#include "poly_ops.hpp"

namespace hinfer {

using detail::with_q;

SecretKey KeyGenerator::secret_key(Prg& prg) const {
  SecretKey sk;
  sk.ctx = ctx_;
  sk.coeffs = sample_ternary(ctx_->n(), prg);
  sk.ntt = with_q(*ctx_, backend_, [&](const auto& mod) { return detail::to_eval(std::span<const i64>(sk.coeffs), ctx_->ntt_q(), mod); });
  return sk;
}

RerandKey KeyGenerator::rerand_key(const SecretKey& sk, Prg& prg) const {
  const GaussianSampler gauss(ctx_->params().sigma, NoiseModel::kTail);
  return with_q(*ctx_, backend_, [&](const auto& mod) {
    RerandKey rk;
    rk.a = sample_uniform_mod(ctx_->n(), mod.value(), prg);
    const auto e = gauss.sample_vector(ctx_->n(), prg);
    rk.b = detail::to_eval(std::span<const i64>(e), ctx_->ntt_q(), mod);
    detail::sub_from(rk.b, detail::mul(rk.a, sk.ntt, mod), mod);
    return rk;
  });
}

PermutationKey KeyGenerator::perm_key(const SecretKey& sk, const PermId& id, int w_relin, Prg& prg) const {
  if (w_relin < 1 || w_relin > 30) throw std::invalid_argument("perm_key: w_relin must lie in [1, 30]");
  PermutationKey key;
  key.id = id;
  key.galois = ctx_->galois_element(id);
  key.w_relin = w_relin;
  key.index = ctx_->automorphism_index(key.galois);
  const int digits = digit_count(w_relin);
  const GaussianSampler gauss(ctx_->params().sigma, NoiseModel::kTail);
  with_q(*ctx_, backend_, [&](const auto& mod) {
    const std::size_t n = ctx_->n();
    Poly s_auto(n);
    for (std::size_t k = 0; k < n; ++k) s_auto[k] = sk.ntt[key.index[k]];
    for (int j = 0; j < digits; ++j) {
      Poly a = sample_uniform_mod(n, mod.value(), prg);
      const auto e = gauss.sample_vector(n, prg);
      Poly k0 = detail::to_eval(std::span<const i64>(e), ctx_->ntt_q(), mod);
      detail::sub_from(k0, detail::mul(a, sk.ntt, mod), mod);
      const u64 factor = mod.reduce(u64{1} << (w_relin * j));
      for (std::size_t k = 0; k < n; ++k) k0[k] = mod.add(k0[k], mod.mul(s_auto[k], factor));
      key.k0.push_back(std::move(k0));
      key.k1.push_back(std::move(a));
    }
  });
  return key;
}

Ciphertext Encryptor::encrypt(std::span<const u64> slots, Prg& prg) const {
  const Context& ctx = *sk_.ctx;
  const auto m = ctx.slots_to_coeffs(slots);
  const GaussianSampler gauss(ctx.params().sigma, NoiseModel::kTail);
  return with_q(ctx, backend_, [&](const auto& mod) {
    Ciphertext ct;
    ct.c1 = sample_uniform_mod(ctx.n(), mod.value(), prg);
    const auto e = gauss.sample_vector(ctx.n(), prg);
    ct.c0 = detail::to_eval(std::span<const i64>(e), ctx.ntt_q(), mod);
    detail::add_to(ct.c0, detail::scaled_message(ctx, std::span<const i64>(m), mod), mod);
    detail::sub_from(ct.c0, detail::mul(ct.c1, sk_.ntt, mod), mod);
    ct.noise = NoiseModel::fresh(ctx.params());
    return ct;
  });
}

Ciphertext Encryptor::encrypt_zero(Prg& prg) const {
  const PlaintextVector zero(sk_.ctx->n(), 0);
  return encrypt(zero, prg);
}

WindowedCiphertext Encryptor::encrypt_windowed(std::span<const u64> slots, int w_pt, Prg& prg) const {
  const Context& ctx = *sk_.ctx;
  const ModulusP& p = ctx.p();
  const int windows = window_count(p, w_pt);
  WindowedCiphertext out;
  out.w_pt = w_pt;
  PlaintextVector cur(slots.begin(), slots.end());
  const u64 shift = p.reduce(w_pt >= 63 ? 0 : (u64{1} << w_pt));
  for (int k = 0; k < windows; ++k) {
    out.parts.push_back(encrypt(cur, prg));
    for (auto& v : cur) v = p.mul(v, shift);
  }
  return out;
}

namespace {

// Coefficients of c0 + c1*s, centered mod q.
template <class Mod>
std::vector<i64> decrypt_raw(const SecretKey& sk, const Ciphertext& ct, const Mod& mod) {
  const Context& ctx = *sk.ctx;
  if (ct.c0.size() != ctx.n() || ct.c1.size() != ctx.n()) throw std::invalid_argument("decrypt: ciphertext has wrong length");
  Poly x = ct.c0;
  detail::mul_add_to(x, ct.c1, sk.ntt, mod);
  ntt_inverse<Mod>(x, ctx.ntt_q(), mod);
  std::vector<i64> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = detail::center(x[i], mod.value());
  return out;
}

i64 round_div(i128 num, i128 den) {
  // floor((2*num + den) / (2*den)) for den > 0.
  const i128 a = 2 * num + den;
  const i128 b = 2 * den;
  i128 q = a / b;
  if ((a % b != 0) && (a < 0)) --q;
  return static_cast<i64>(q);
}

std::vector<i64> decode_message(const Context& ctx, std::span<const i64> x) {
  const i128 q = ctx.q().value();
  const i128 p = ctx.p().value();
  std::vector<i64> m(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) m[i] = ctx.p().centered(ctx.p().from_signed(round_div(static_cast<i128>(x[i]) * p, q)));
  return m;
}

double noise_against(const Context& ctx, std::span<const i64> x, std::span<const i64> m) {
  const u64 q = ctx.q().value();
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const i128 expect = static_cast<i128>(m[i]) * static_cast<i128>(ctx.scale());
    i128 diff = (static_cast<i128>(x[i]) - expect) % static_cast<i128>(q);
    if (diff < 0) diff += q;
    const i64 c = detail::center(static_cast<u64>(diff), q);
    worst = std::max(worst, static_cast<double>(c < 0 ? -c : c));
  }
  return worst;
}

}  // namespace

PlaintextVector Encryptor::decrypt(const Ciphertext& ct) const {
  const Context& ctx = *sk_.ctx;
  const auto x = with_q(ctx, backend_, [&](const auto& mod) { return decrypt_raw(sk_, ct, mod); });
  const auto m = decode_message(ctx, x);
  return ctx.coeffs_to_slots(m);
}

double Encryptor::measured_noise(const Ciphertext& ct) const {
  const Context& ctx = *sk_.ctx;
  const auto x = with_q(ctx, backend_, [&](const auto& mod) { return decrypt_raw(sk_, ct, mod); });
  const auto m = decode_message(ctx, x);
  return noise_against(ctx, x, m);
}

double Encryptor::measured_noise(const Ciphertext& ct, std::span<const u64> expected) const {
  const Context& ctx = *sk_.ctx;
  const auto x = with_q(ctx, backend_, [&](const auto& mod) { return decrypt_raw(sk_, ct, mod); });
  const auto m = ctx.slots_to_coeffs(expected);
  return noise_against(ctx, x, m);
}

}  // namespace hinfer
