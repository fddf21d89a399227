#pragma once

#include <memory>

#include "hinfer/linalg.hpp"
#include "hinfer/pahe.hpp"

namespace hinfer::testing {

struct Party {
  ContextPtr ctx;
  KeyGenerator kg;
  SecretKey sk;
  Encryptor enc;
  Evaluator ev;
  KeyRing keys;
  Prg prg;

  explicit Party(const RingParams& rp, u64 seed = 1)
      : ctx(Context::create(rp)), kg(ctx), sk(make_key(kg, seed)), enc(sk), ev(ctx), prg(seed, 7) {}

  static SecretKey make_key(const KeyGenerator& kg, u64 seed) {
    Prg p(seed, 3);
    return kg.secret_key(p);
  }

  u64 p() const { return ctx->p().value(); }
  std::size_t n() const { return ctx->n(); }

  std::vector<u64> random_vec(std::size_t len) {
    std::vector<u64> v(len);
    for (auto& x : v) x = prg.uniform(p());
    return v;
  }

  void ensure(std::span<const PermId> ids, int w_relin) { ensure_keys(keys, kg, sk, ids, w_relin, prg); }
};

}  // namespace hinfer::testing
