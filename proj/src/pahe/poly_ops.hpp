#pragma once

#include <span>
#include <vector>

#include "hinfer/pahe.hpp"

namespace hinfer::detail {

template <class Mod>
u64 lift(i64 v, const Mod& mod) {
  const u64 m = mod.value();
  return v >= 0 ? static_cast<u64>(v) % m : mod.neg(static_cast<u64>(-v) % m);
}

template <class Mod>
Poly lift_poly(std::span<const i64> v, const Mod& mod) {
  Poly out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = lift(v[i], mod);
  return out;
}

inline i64 center(u64 x, u64 m) { return x > m / 2 ? static_cast<i64>(x) - static_cast<i64>(m) : static_cast<i64>(x); }

template <class Mod>
Poly to_eval(std::span<const i64> v, const NttTables& t, const Mod& mod) {
  Poly out = lift_poly(v, mod);
  ntt_forward<Mod>(out, t, mod);
  return out;
}

template <class Mod>
void add_to(Poly& a, const Poly& b, const Mod& mod) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = mod.add(a[i], b[i]);
}

template <class Mod>
void sub_from(Poly& a, const Poly& b, const Mod& mod) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = mod.sub(a[i], b[i]);
}

template <class Mod>
Poly mul(const Poly& a, const Poly& b, const Mod& mod) {
  Poly out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = mod.mul(a[i], b[i]);
  return out;
}

template <class Mod>
void mul_add_to(Poly& acc, const Poly& a, const Poly& b, const Mod& mod) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = mod.add(acc[i], mod.mul(a[i], b[i]));
}

// Runs f with the selected q-arithmetic backend.
template <class F>
decltype(auto) with_q(const Context& ctx, Backend backend, F&& f) {
  if (backend == Backend::naive) return f(ctx.q_naive());
  return f(ctx.q());
}

// Evaluation-domain polynomial of scale * m for a centered message m.
template <class Mod>
Poly scaled_message(const Context& ctx, std::span<const i64> m, const Mod& mod) {
  Poly out = lift_poly(m, mod);
  const u64 s = ctx.scale();
  for (auto& v : out) v = mod.mul(v, s);
  ntt_forward<Mod>(out, ctx.ntt_q(), mod);
  return out;
}

}  // namespace hinfer::detail
