#include "hinfer/serialize.hpp"

#include "hinfer/bytes.hpp"

namespace hinfer {

namespace {

void put_header(ByteWriter& w, const Context& ctx, PaheKind kind, u32 polys) {
  w.put(kPaheMagic);
  w.put(kPaheVersion);
  w.put(static_cast<u16>(kind));
  w.put(static_cast<u32>(ctx.n()));
  w.put(polys);
  w.put(ctx.q().value());
  w.put(ctx.p().value());
}

u32 read_header(ByteReader& r, const Context& ctx, PaheKind kind) {
  if (r.get<u32>() != kPaheMagic) throw Error("bad object magic");
  if (r.get<u16>() != kPaheVersion) throw Error("unsupported object version");
  if (r.get<u16>() != static_cast<u16>(kind)) throw Error("unexpected object kind");
  if (r.get<u32>() != ctx.n()) throw Error("ring dimension mismatch");
  const u32 polys = r.get<u32>();
  if (r.get<u64>() != ctx.q().value()) throw Error("ciphertext modulus mismatch");
  if (r.get<u64>() != ctx.p().value()) throw Error("plaintext modulus mismatch");
  return polys;
}

Poly read_poly(ByteReader& r, const Context& ctx) {
  Poly p(ctx.n());
  r.get_u64s(p);
  for (u64 v : p)
    if (v >= ctx.q().value()) throw Error("coefficient not reduced mod q");
  return p;
}

}  // namespace

std::vector<u8> serialize(const Context& ctx, const Ciphertext& ct) {
  ByteWriter w;
  put_header(w, ctx, PaheKind::ciphertext, 2);
  w.put_u64s(ct.c0);
  w.put_u64s(ct.c1);
  return w.take();
}

Ciphertext deserialize_ciphertext(const Context& ctx, std::span<const u8> bytes) {
  ByteReader r(bytes);
  if (read_header(r, ctx, PaheKind::ciphertext) != 2) throw Error("ciphertext must carry two polynomials");
  Ciphertext ct;
  ct.c0 = read_poly(r, ctx);
  ct.c1 = read_poly(r, ctx);
  r.expect_end();
  ct.noise = NoiseModel::fresh(ctx.params());
  return ct;
}

std::vector<u8> serialize(const Context& ctx, const PermutationKey& key) {
  ByteWriter w;
  put_header(w, ctx, PaheKind::perm_key, static_cast<u32>(2 * key.k0.size()));
  w.put(key.id.rot);
  w.put(static_cast<u16>(key.id.swap ? 1 : 0));
  w.put(static_cast<u16>(key.w_relin));
  for (std::size_t j = 0; j < key.k0.size(); ++j) {
    w.put_u64s(key.k0[j]);
    w.put_u64s(key.k1[j]);
  }
  return w.take();
}

PermutationKey deserialize_perm_key(const Context& ctx, std::span<const u8> bytes) {
  ByteReader r(bytes);
  const u32 polys = read_header(r, ctx, PaheKind::perm_key);
  PermutationKey key;
  key.id.rot = r.get<u32>();
  key.id.swap = r.get<u16>() != 0;
  key.w_relin = r.get<u16>();
  if (key.w_relin < 1 || key.w_relin > 30 || polys != 2u * static_cast<u32>(digit_count(key.w_relin))) throw Error("permutation key has inconsistent windows");
  key.galois = ctx.galois_element(key.id);
  key.index = ctx.automorphism_index(key.galois);
  for (u32 j = 0; j < polys / 2; ++j) {
    key.k0.push_back(read_poly(r, ctx));
    key.k1.push_back(read_poly(r, ctx));
  }
  r.expect_end();
  return key;
}

std::vector<u8> serialize(const Context& ctx, const RerandKey& key) {
  ByteWriter w;
  put_header(w, ctx, PaheKind::rerand_key, 2);
  w.put_u64s(key.b);
  w.put_u64s(key.a);
  return w.take();
}

RerandKey deserialize_rerand_key(const Context& ctx, std::span<const u8> bytes) {
  ByteReader r(bytes);
  if (read_header(r, ctx, PaheKind::rerand_key) != 2) throw Error("rerandomization key must carry two polynomials");
  RerandKey key;
  key.b = read_poly(r, ctx);
  key.a = read_poly(r, ctx);
  r.expect_end();
  return key;
}

std::size_t ciphertext_wire_size(const Context& ctx) {
  return kPaheHeaderSize + 2 * ctx.n() * sizeof(u64);
}

}  // namespace hinfer
