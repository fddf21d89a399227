#include <stdexcept>

#include "hinfer/pahe.hpp"
#include "poly_ops.hpp"

namespace hinfer {

Context::Context(const RingParams& params)
    : params_(params),
      q_naive_(params.q.value()),
      p_naive_(params.p.value()),
      ntt_q_(params.q.value(), params.n),
      ntt_p_(params.p.value(), params.n),
      scale_(params.scale()) {
  const std::size_t n = params_.n;
  const u64 two_n = 2 * n;
  slot_exp_.resize(n);
  u64 e = 1;
  for (std::size_t j = 0; j < n / 2; ++j) {
    slot_exp_[j] = e;
    slot_exp_[j + n / 2] = two_n - e;
    e = e * 3 % two_n;
  }
  slot_to_pidx_.resize(n);
  for (std::size_t j = 0; j < n; ++j) slot_to_pidx_[j] = static_cast<u32>(ntt_p_.slot_of_exponent(slot_exp_[j]));
}

std::shared_ptr<const Context> Context::create(const RingParams& params) {
  return std::shared_ptr<const Context>(new Context(params));
}

u64 Context::galois_element(const PermId& id) const {
  const u64 two_n = 2 * n();
  if (id.rot >= n() / 2) throw std::invalid_argument("galois_element: rotation outside the half-rotation group");
  const u64 g = pow_mod(3, id.rot, two_n);
  return id.swap ? two_n - g : g;
}

std::size_t Context::slot_source(std::size_t j, const PermId& id) const {
  const std::size_t half = n() / 2;
  const std::size_t h = (j / half) ^ (id.swap ? 1 : 0);
  return h * half + (j % half + id.rot) % half;
}

PermId Context::compose(const PermId& a, const PermId& b) const {
  return PermId{static_cast<u32>((a.rot + b.rot) % (n() / 2)), a.swap != b.swap};
}

PermId Context::inverse(const PermId& a) const {
  const u32 half = static_cast<u32>(n() / 2);
  return PermId{(half - a.rot % half) % half, a.swap};
}

std::vector<u32> Context::automorphism_index(u64 galois) const {
  const std::size_t n = this->n();
  const u64 two_n = 2 * n;
  if ((galois & 1) == 0) throw std::invalid_argument("automorphism_index: galois element must be odd");
  std::vector<u32> idx(n);
  for (std::size_t k = 0; k < n; ++k) {
    const u64 e = ntt_q_.slot_exponent(k) * galois % two_n;
    idx[k] = static_cast<u32>(ntt_q_.slot_of_exponent(e));
  }
  return idx;
}

std::vector<i64> Context::slots_to_coeffs(std::span<const u64> slots) const {
  const std::size_t n = this->n();
  if (slots.size() != n) throw std::invalid_argument("slots_to_coeffs: length mismatch");
  const ModulusP& p = params_.p;
  std::vector<u64> a(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (slots[j] >= p.value()) throw std::invalid_argument("slots_to_coeffs: slot value not reduced mod p");
    a[slot_to_pidx_[j]] = slots[j];
  }
  ntt_inverse<ModulusP>(a, ntt_p_, p);
  std::vector<i64> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = p.centered(a[i]);
  return out;
}

PlaintextVector Context::coeffs_to_slots(std::span<const i64> coeffs) const {
  const std::size_t n = this->n();
  if (coeffs.size() != n) throw std::invalid_argument("coeffs_to_slots: length mismatch");
  const ModulusP& p = params_.p;
  std::vector<u64> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = p.from_signed(coeffs[i]);
  ntt_forward<ModulusP>(a, ntt_p_, p);
  PlaintextVector out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = a[slot_to_pidx_[j]];
  return out;
}

}  // namespace hinfer
