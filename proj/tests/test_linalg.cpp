#include <set>

#include "doctest.h"
#include "support.hpp"

using namespace hinfer;
using hinfer::testing::Party;

namespace {

constexpr MatvecAlgorithm kAll[] = {MatvecAlgorithm::naive, MatvecAlgorithm::output_packed, MatvecAlgorithm::input_packed,
                                    MatvecAlgorithm::diagonal, MatvecAlgorithm::hybrid};

struct Run {
  std::vector<u64> out;
  std::vector<PlaintextVector> slots;
  MatvecResult res;
  OpCounters raw;
};

Run run(Party& P, const EncodedMatrix& enc, std::span<const u64> v) {
  const auto ids = required_perms(enc);
  P.ensure(ids, enc.opt.w_relin);
  const auto ct = P.enc.encrypt_windowed(pack_input(enc, v), enc.opt.w_pt, P.prg);
  P.ev.counters().reset();
  Run r;
  r.res = matvec(enc, ct, P.keys, P.ev, P.prg);
  r.raw = P.ev.counters();
  for (const auto& c : r.res.cts) {
    CHECK(P.enc.measured_noise(c) <= c.noise);
    if (enc.algorithm != MatvecAlgorithm::output_packed) CHECK(c.noise < NoiseModel::line(P.ctx->params()));
    r.slots.push_back(P.enc.decrypt(c));
  }
  r.out = unpack_output(enc, r.slots);
  return r;
}

bool valid_shape(MatvecAlgorithm a, std::size_t n, std::size_t n_i, std::size_t n_o) {
  if (a == MatvecAlgorithm::input_packed && n_i >= n) return false;
  if (a == MatvecAlgorithm::hybrid && n_o > n_i) return false;
  return true;
}

void check_oracle(Party& P, MatvecAlgorithm a, std::size_t n_i, std::size_t n_o, int instances) {
  for (int t = 0; t < instances; ++t) {
    const auto W = WeightMatrix::random(n_o, n_i, P.p(), P.prg);
    const auto v = P.random_vec(n_i);
    const auto enc = encode_matrix(W, a, default_options(a), P.ev);
    const auto r = run(P, enc, v);
    CHECK(r.out == W.apply(v, P.ctx->p()));
    CHECK(r.res.ops == count_ops(a, P.n(), n_i, n_o));
  }
}

}  // namespace

TEST_CASE("closed-form counts reproduce the hybrid microbenchmark rows") {
  struct Row {
    std::size_t n_i, n_o;
    u64 in_rot, out_rot, mac;
  };
  for (const Row& r : {Row{2048, 1, 0, 11, 1}, Row{1024, 128, 63, 4, 64}, Row{1024, 16, 7, 7, 8}, Row{128, 16, 0, 7, 1}}) {
    const auto c = count_ops(MatvecAlgorithm::hybrid, 2048, r.n_i, r.n_o);
    CHECK(c.perm_hoisted == r.in_rot);
    CHECK(c.perm == r.out_rot);
    CHECK(c.scmult == r.mac);
    CHECK(c.output_cts == 1);
  }
  const auto naive = count_ops(MatvecAlgorithm::naive, 2048, 1024, 128);
  CHECK(naive.perm == 1280);
  CHECK(naive.scmult == 128);
  CHECK(count_ops(MatvecAlgorithm::naive, 2048, 128, 16).perm == 112);
}

TEST_CASE("closed-form instantiations") {
  const auto d = count_ops(MatvecAlgorithm::diagonal, 2048, 2048, 2048);
  CHECK(d.perm_hoisted == 2047);
  CHECK(d.perm == 0);
  const auto h = count_ops(MatvecAlgorithm::hybrid, 2048, 2048, 2048);
  CHECK(h.perm_hoisted == d.perm_hoisted);
  CHECK(h.perm == 0);
  CHECK(h.scmult == d.scmult);
  const auto ip = count_ops(MatvecAlgorithm::input_packed, 2048, 128, 64);
  CHECK(ip.output_cts == 4);
  CHECK(ip.perm == 4 * 7);
  const auto op = count_ops(MatvecAlgorithm::output_packed, 2048, 16, 16);
  CHECK(op.perm == 16 * 4 + 15);
  CHECK(op.scmult == 32);
  CHECK(op.add == 16 * 4 + 16);
  CHECK_THROWS_AS(count_ops(MatvecAlgorithm::hybrid, 2048, 16, 32), Error);
  CHECK_THROWS_AS(count_ops(MatvecAlgorithm::naive, 2048, 24, 16), Error);
  CHECK_THROWS_AS(count_ops(MatvecAlgorithm::naive, 2048, 4096, 16), Error);
  CHECK_THROWS_AS(count_ops(MatvecAlgorithm::input_packed, 2048, 2048, 1), Error);
}

TEST_CASE("diagonal encoding of the 2x2 identity") {
  Party P(RingParams::toy64());
  WeightMatrix W = WeightMatrix::zeros(2, 2);
  W.at(0, 0) = W.at(1, 1) = 1;
  const auto enc = encode_matrix(W, MatvecAlgorithm::diagonal, default_options(MatvecAlgorithm::diagonal), P.ev);
  REQUIRE(enc.slots.size() == 2);
  CHECK(enc.slots[0][0] == 1);
  CHECK(enc.slots[0][1] == 1);
  CHECK(enc.slots[1][0] == 0);
  CHECK(enc.slots[1][1] == 0);
}

TEST_CASE("hybrid encoding of a 128x1024 matrix has 64 diagonals") {
  Party P(RingParams::standard());
  const auto W = WeightMatrix::random(128, 1024, P.p(), P.prg);
  const auto enc = encode_matrix(W, MatvecAlgorithm::hybrid, default_options(MatvecAlgorithm::hybrid), P.ev);
  CHECK(enc.plains.size() == 64);
  CHECK(enc.k == 64);
  CHECK(decode_matrix(enc, *P.ctx).w == W.w);
}

TEST_CASE("encodings decode to the original matrix") {
  for (const RingParams& rp : {RingParams::toy64(), RingParams::standard()}) {
    Party P(rp, 5);
    const std::size_t n = P.n();
    for (int t = 0; t < 12; ++t) {
      const std::size_t n_i = std::size_t{1} << (1 + P.prg.uniform(static_cast<u64>(std::countr_zero(n))));
      const std::size_t n_o = std::size_t{1} << P.prg.uniform(static_cast<u64>(std::countr_zero(n_i)) + 1);
      const auto W = WeightMatrix::random(n_o, n_i, P.p(), P.prg);
      for (auto a : kAll) {
        if (!valid_shape(a, n, n_i, n_o)) continue;
        if (n == 2048 && (a == MatvecAlgorithm::naive || a == MatvecAlgorithm::output_packed) && n_o > 64) continue;
        const auto enc = encode_matrix(W, a, default_options(a), P.ev);
        CHECK(decode_matrix(enc, *P.ctx).w == W.w);
      }
    }
  }
}

TEST_CASE("extended diagonals keep interacting entries apart") {
  Party P(RingParams::standard());
  const std::size_t n = P.n();
  for (auto [n_i, n_o] : {std::pair<std::size_t, std::size_t>{1024, 128}, {1024, 16}, {128, 16}, {2048, 1}, {256, 256}, {64, 8}}) {
    for (auto a : {MatvecAlgorithm::diagonal, MatvecAlgorithm::hybrid}) {
      const auto W = WeightMatrix::random(n_o, n_i, P.p(), P.prg);
      const auto enc = encode_matrix(W, a, default_options(a), P.ev);
      const auto map = matrix_entries(enc, *P.ctx);
      const std::size_t chunk = a == MatvecAlgorithm::diagonal ? n : n_o;
      for (const auto& pt : map)
        for (std::size_t base = 0; base < n; base += chunk) {
          std::set<int> rows;
          std::size_t used = 0;
          for (std::size_t x = base; x < base + chunk; ++x) {
            if (pt[x] < 0) continue;
            rows.insert(pt[x] / static_cast<int>(n_i));
            ++used;
          }
          CHECK(rows.size() == used);
        }
      for (std::size_t x = 0; x < n; ++x) {
        std::set<int> cols;
        std::size_t used = 0;
        for (const auto& pt : map) {
          if (pt[x] < 0) continue;
          cols.insert(pt[x] % static_cast<int>(n_i));
          ++used;
        }
        CHECK(cols.size() == used);
      }
    }
  }
}

TEST_CASE("every algorithm matches the plaintext oracle at toy parameters") {
  Party P(RingParams::toy64(), 11);
  const std::size_t n = P.n();
  for (auto a : kAll) {
    int done = 0;
    while (done < 50) {
      const std::size_t n_i = std::size_t{1} << (1 + P.prg.uniform(6));
      const std::size_t n_o = std::size_t{1} << P.prg.uniform(7);
      if (!valid_shape(a, n, n_i, n_o) || n_o > n) continue;
      check_oracle(P, a, n_i, n_o, 1);
      ++done;
    }
  }
}

TEST_CASE("every algorithm matches the plaintext oracle at full parameters") {
  Party P(RingParams::standard(), 12);
  for (auto [n_i, n_o] : {std::pair<std::size_t, std::size_t>{16, 16}, {128, 16}, {1024, 16}, {1024, 128}}) {
    check_oracle(P, MatvecAlgorithm::hybrid, n_i, n_o, 3);
    check_oracle(P, MatvecAlgorithm::diagonal, n_i, n_o, 1);
    check_oracle(P, MatvecAlgorithm::input_packed, n_i, n_o, 1);
    check_oracle(P, MatvecAlgorithm::naive, n_i, n_o, 1);
    if (n_i <= 16) check_oracle(P, MatvecAlgorithm::output_packed, n_i, n_o, 1);
  }
  check_oracle(P, MatvecAlgorithm::hybrid, 2048, 1, 2);
  check_oracle(P, MatvecAlgorithm::hybrid, 2048, 2048, 1);
  check_oracle(P, MatvecAlgorithm::hybrid, 16, 4, 2);
}

TEST_CASE("identity and zero matrices") {
  Party P(RingParams::standard(), 3);
  for (auto a : kAll) {
    auto I = WeightMatrix::zeros(16, 16);
    for (std::size_t i = 0; i < 16; ++i) I.at(i, i) = 1;
    const auto v = P.random_vec(16);
    CHECK(run(P, encode_matrix(I, a, default_options(a), P.ev), v).out == v);
    const auto Z = WeightMatrix::zeros(16, 16);
    CHECK(run(P, encode_matrix(Z, a, default_options(a), P.ev), v).out == std::vector<u64>(16, 0));
  }
}

TEST_CASE("instrumented counters agree with the closed forms") {
  Party P(RingParams::standard(), 4);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n_i = std::size_t{1} << (3 + P.prg.uniform(8));
    const std::size_t n_o = std::size_t{1} << P.prg.uniform(5);
    for (auto a : kAll) {
      if (!valid_shape(a, P.n(), n_i, n_o)) continue;
      if (a == MatvecAlgorithm::output_packed && n_o > 8) continue;
      const auto W = WeightMatrix::random(n_o, n_i, P.p(), P.prg);
      const auto enc = encode_matrix(W, a, default_options(a), P.ev);
      const auto r = run(P, enc, P.random_vec(n_i));
      const OpCount want = count_ops(a, P.n(), n_i, n_o);
      CHECK(r.res.ops == want);
      const u64 parts = static_cast<u64>(window_count(P.ctx->p(), enc.opt.w_pt));
      const bool hoists = want.perm_hoisted > 0;
      CHECK(r.raw.scmult == want.scmult);
      CHECK(r.raw.add == want.add);
      CHECK(r.raw.perm_decomp == want.perm + (hoists ? parts : 0));
      CHECK(r.raw.perm_auto == want.perm + want.perm_hoisted * parts);
    }
  }
}

TEST_CASE("hoisting decomposes each input ciphertext once") {
  Party P(RingParams::standard(), 6);
  for (auto a : {MatvecAlgorithm::diagonal, MatvecAlgorithm::hybrid}) {
    const auto W = WeightMatrix::random(16, 256, P.p(), P.prg);
    const auto enc = encode_matrix(W, a, default_options(a), P.ev);
    const auto r = run(P, enc, P.random_vec(256));
    const u64 parts = static_cast<u64>(window_count(P.ctx->p(), enc.opt.w_pt));
    CHECK(r.raw.perm_decomp - r.res.ops.perm == parts);
  }
}

TEST_CASE("slots outside the result region are randomized") {
  Party P(RingParams::standard(), 8);
  for (auto a : {MatvecAlgorithm::naive, MatvecAlgorithm::hybrid, MatvecAlgorithm::input_packed}) {
    const std::size_t n_i = 64, n_o = 8;
    auto W1 = WeightMatrix::random(n_o, n_i, P.p(), P.prg);
    auto W2 = W1;
    for (std::size_t r = 0; r < n_o; ++r) W2.at(r, 0) = P.prg.uniform(P.p());
    auto v = P.random_vec(n_i);
    v[0] = 0;
    const auto e1 = encode_matrix(W1, a, default_options(a), P.ev);
    const auto e2 = encode_matrix(W2, a, default_options(a), P.ev);
    const auto r1 = run(P, e1, v);
    const auto r2 = run(P, e2, v);
    CHECK(r1.out == r2.out);
    std::size_t garbage = 0, differ = 0;
    for (std::size_t c = 0; c < r1.slots.size(); ++c)
      for (std::size_t x = 0; x < P.n(); ++x) {
        bool result = false;
        for (std::size_t i = 0; i < n_o; ++i) result |= output_position(e1, i) == std::pair<std::size_t, std::size_t>{c, x};
        if (result) continue;
        ++garbage;
        differ += r1.slots[c][x] != r2.slots[c][x];
      }
    CHECK(garbage > 0);
    CHECK(differ * 100 >= garbage * 99);
  }
}

TEST_CASE("noise estimates follow the ordering of the algorithms") {
  Party P(RingParams::standard(), 9);
  const auto& rp = P.ctx->params();
  for (auto [n_i, n_o] : {std::pair<std::size_t, std::size_t>{1024, 128}, {128, 16}, {1024, 16}, {16, 16}}) {
    const auto W = WeightMatrix::random(n_o, n_i, P.p(), P.prg);
    const auto v = P.random_vec(n_i);
    const auto diag = run(P, encode_matrix(W, MatvecAlgorithm::diagonal, default_options(MatvecAlgorithm::diagonal), P.ev), v);
    const auto hyb = run(P, encode_matrix(W, MatvecAlgorithm::hybrid, default_options(MatvecAlgorithm::hybrid), P.ev), v);
    const double rot = NoiseModel::rot(rp, default_options(MatvecAlgorithm::hybrid).w_relin);
    CHECK(hyb.res.cts[0].noise <= diag.res.cts[0].noise + rot * (static_cast<double>(n_i) / static_cast<double>(n_o) - 1));
    CHECK(hyb.res.cts[0].noise < NoiseModel::line(rp));
    if (n_i <= 16) {
      const auto op = run(P, encode_matrix(W, MatvecAlgorithm::output_packed, default_options(MatvecAlgorithm::output_packed), P.ev), v);
      CHECK(op.res.cts[0].noise > hyb.res.cts[0].noise);
      CHECK(op.out == hyb.out);
    }
  }
}

TEST_CASE("output packing overflows the correctness line on wide inputs") {
  Party P(RingParams::standard(), 10);
  const auto& rp = P.ctx->params();
  const auto W = WeightMatrix::random(4, 1024, P.p(), P.prg);
  const auto v = P.random_vec(1024);
  const auto enc = encode_matrix(W, MatvecAlgorithm::output_packed, default_options(MatvecAlgorithm::output_packed), P.ev);
  P.ensure(required_perms(enc), enc.opt.w_relin);
  const auto ct = P.enc.encrypt_windowed(pack_input(enc, v), enc.opt.w_pt, P.prg);
  const auto res = matvec(enc, ct, P.keys, P.ev, P.prg);
  CHECK(res.cts[0].noise > NoiseModel::line(rp));
  std::vector<u64> expect(P.n(), 0);
  const auto want = W.apply(v, P.ctx->p());
  std::copy(want.begin(), want.end(), expect.begin());
  CHECK(P.enc.measured_noise(res.cts[0], expect) <= res.cts[0].noise);
}

TEST_CASE("missing keys and malformed inputs are rejected") {
  Party P(RingParams::toy64());
  const auto W = WeightMatrix::random(8, 32, P.p(), P.prg);
  const auto enc = encode_matrix(W, MatvecAlgorithm::hybrid, default_options(MatvecAlgorithm::hybrid), P.ev);
  const auto ct = P.enc.encrypt_windowed(pack_input(enc, P.random_vec(32)), enc.opt.w_pt, P.prg);
  KeyRing empty;
  CHECK_THROWS_AS(matvec(enc, ct, empty, P.ev, P.prg), Error);
  CHECK_THROWS_AS(encode_matrix(WeightMatrix::random(3, 8, P.p(), P.prg), MatvecAlgorithm::diagonal, {}, P.ev), Error);
  CHECK_THROWS_AS(encode_matrix(WeightMatrix::random(8, 128, P.p(), P.prg), MatvecAlgorithm::diagonal, {}, P.ev), Error);
  CHECK_THROWS(pack_input(enc, P.random_vec(31)));
  CHECK(matvec_algorithm_from_string("hybrid") == MatvecAlgorithm::hybrid);
  CHECK_THROWS_AS(matvec_algorithm_from_string("fast"), Error);
}
