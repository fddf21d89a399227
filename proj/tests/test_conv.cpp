#include <set>

#include "doctest.h"
#include "hinfer/conv.hpp"
#include "support.hpp"

using namespace hinfer;
using hinfer::testing::Party;

namespace {

ConvSpec shape(std::size_t wh, std::size_t c_i, std::size_t f, std::size_t c_o, std::size_t s = 1, Padding pad = Padding::same) {
  return ConvSpec{wh, wh, c_i, f, f, c_o, s, s, pad};
}

struct Run {
  Tensor3 out;
  std::vector<PlaintextVector> slots;
  ConvResult res;
  OpCounters raw;
};

Run run(Party& P, const EncodedFilter& enc, const Tensor3& in) {
  P.ensure(required_perms(enc), enc.opt.w_relin);
  std::vector<WindowedCiphertext> cts;
  for (const auto& v : pack_conv_input(enc.geo, in, P.p())) cts.push_back(P.enc.encrypt_windowed(v, enc.opt.w_pt, P.prg));
  P.ev.counters().reset();
  Run r;
  r.res = conv(enc, cts, P.keys, P.ev, P.prg);
  r.raw = P.ev.counters();
  for (const auto& c : r.res.cts) {
    CHECK(P.enc.measured_noise(c) <= c.noise);
    CHECK(c.noise < NoiseModel::line(P.ctx->params()));
    r.slots.push_back(P.enc.decrypt(c));
  }
  r.out = unpack_conv_output(enc.geo, r.slots, enc.spec.c_o);
  return r;
}

void check_oracle(Party& P, const ConvSpec& s, ConvVariant v, ConvOptions opt = {}) {
  CAPTURE(to_string(v));
  CAPTURE(s.w_i);
  CAPTURE(s.h_i);
  CAPTURE(s.c_i);
  CAPTURE(s.f_w);
  CAPTURE(s.f_h);
  CAPTURE(s.c_o);
  CAPTURE(s.s_w);
  CAPTURE(s.s_h);
  const auto f = ConvFilter::random(s, P.p(), P.prg);
  const auto in = Tensor3::random(s.c_i, s.h_i, s.w_i, P.p(), P.prg);
  const auto enc = encode_filter(f, v, opt, P.ev);
  const auto r = run(P, enc, in);
  CHECK(r.out == conv_reference(f, in, P.ctx->p()));
  const ConvCount want = conv_counts(s, v, P.n(), opt.c_n);
  CHECK(r.res.ops.perm_decomp == want.perm_decomp);
  CHECK(r.res.ops.perm == want.perm);
  CHECK(enc.geo.in_cts == want.in_cts);
  CHECK(r.res.ops.out_cts == want.out_cts);
}

std::vector<ConvVariant> applicable(const ConvSpec& s) {
  std::vector<ConvVariant> out{ConvVariant::one_per_ct, ConvVariant::input_rotation, ConvVariant::output_rotation};
  if (s.c_i == 1 && s.c_o == 1 && s.s_w == 1 && s.s_h == 1) {
    out.push_back(ConvVariant::packed_siso);
    out.push_back(ConvVariant::padded_siso);
  }
  return out;
}

// Random spec whose lowered image fits in `max_pixels` slots.
ConvSpec random_spec(Prg& prg, std::size_t max_dim, std::size_t max_pixels, std::size_t n) {
  for (;;) {
    ConvSpec s;
    s.w_i = 1 + prg.uniform(max_dim);
    s.h_i = 1 + prg.uniform(max_dim);
    s.c_i = 1 + prg.uniform(8);
    s.c_o = 1 + prg.uniform(8);
    if (prg.uniform(4) == 0) s.c_i = s.c_o = 1;
    s.f_w = 1 + 2 * prg.uniform(3);
    s.f_h = 1 + 2 * prg.uniform(3);
    s.s_w = s.s_h = 1 + prg.uniform(2);
    s.padding = prg.uniform(3) == 0 ? Padding::valid : Padding::same;
    if (s.padding == Padding::valid && prg.uniform(2) == 0) s.f_w += 1;
    try {
      const auto g = conv_geometry(s, ConvVariant::input_rotation, n);
      if (g.h * g.w > max_pixels) continue;
      if (s.c_i == 1 && s.c_o == 1 && s.s_w == 1) conv_geometry(s, ConvVariant::padded_siso, n);
    } catch (const std::invalid_argument&) {
      continue;
    }
    return s;
  }
}

}  // namespace

TEST_CASE("closed forms on the convolution microbenchmark shapes") {
  const std::size_t n = 2048;
  struct Row {
    ConvSpec s;
    ConvCount in_rot, out_rot;
  };
  const Row rows[] = {
      {shape(28, 1, 5, 5, 2), {1, 35, 1, 2}, {7, 14, 1, 2}},
      {shape(16, 128, 1, 128), {16, 112, 16, 16}, {1808, 1792, 16, 16}},
      {shape(32, 32, 3, 32), {16, 272, 16, 16}, {272, 384, 16, 16}},
      {shape(16, 128, 3, 128), {16, 1136, 16, 16}, {1808, 1920, 16, 16}},
  };
  for (const auto& r : rows) {
    CHECK(conv_counts(r.s, ConvVariant::input_rotation, n) == r.in_rot);
    CHECK(conv_counts(r.s, ConvVariant::output_rotation, n) == r.out_rot);
  }
  CHECK(conv_counts(shape(16, 128, 1, 128), ConvVariant::one_per_ct, n) == ConvCount{128, 0, 128, 128});
  CHECK(conv_counts(shape(32, 32, 3, 32), ConvVariant::one_per_ct, n) == ConvCount{32, 256, 32, 32});
  CHECK(conv_counts(shape(28, 1, 5, 1), ConvVariant::packed_siso, n) == ConvCount{1, 24, 1, 1});
  CHECK(conv_counts(shape(28, 1, 5, 1), ConvVariant::padded_siso, n) == ConvCount{1, 24, 1, 1});
  CHECK(conv_counts(shape(4, 1, 3, 1), ConvVariant::padded_siso, n).perm == 8);
}

TEST_CASE("slot usage of the single-channel layouts") {
  const auto packed = conv_geometry(shape(28, 1, 5, 1), ConvVariant::packed_siso, 2048);
  CHECK(packed.h * packed.w == 784);
  const auto padded = conv_geometry(shape(28, 1, 5, 1), ConvVariant::padded_siso, 2048);
  CHECK(padded.pad_h * padded.pad_w == 1024);
}

TEST_CASE("strided convolutions lower to phase channels") {
  const auto g = conv_geometry(shape(28, 1, 5, 5, 2), ConvVariant::input_rotation, 2048);
  CHECK(g.c_in == 4);
  CHECK(g.h == 14);
  CHECK(g.w == 14);
  CHECK(g.taps.size() == 9);
  CHECK(g.c_n == 4);
  CHECK(g.h_o == 14);
  const auto g3 = conv_geometry(shape(8, 1, 3, 1, 2), ConvVariant::input_rotation, 2048);
  CHECK(g3.taps.size() == 4);
  const auto g1 = conv_geometry(shape(8, 3, 3, 2, 1), ConvVariant::input_rotation, 2048);
  CHECK(g1.phases == 1);
  CHECK(g1.c_in == 3);
  CHECK(g1.taps.size() == 9);
}

TEST_CASE("variant choice") {
  const std::size_t n = 2048;
  CHECK(choose_variant(shape(28, 1, 5, 5, 2), n) == ConvVariant::output_rotation);
  CHECK(choose_variant(shape(16, 128, 1, 128), n) == ConvVariant::input_rotation);
  CHECK(choose_variant(shape(32, 32, 3, 32), n) == ConvVariant::output_rotation);
  CHECK(choose_variant(shape(16, 128, 3, 128), n) == ConvVariant::output_rotation);
  // (9-1)(2-1) against (2-1)*16*0.5: a tie.
  CHECK(choose_variant(shape(32, 32, 3, 32), n, 0.5) == ConvVariant::input_rotation);
  CHECK(choose_variant(shape(32, 32, 3, 32), n, 0.49) == ConvVariant::output_rotation);
  CHECK(choose_variant(shape(32, 1, 3, 1), n) == ConvVariant::input_rotation);
}

TEST_CASE("diagonal grouping never shares a channel inside an intermediate ciphertext") {
  Party P(RingParams::standard(), 4);
  for (const auto& s : {shape(8, 8, 3, 8), shape(16, 32, 1, 16), shape(28, 1, 5, 5, 2), shape(16, 6, 3, 3)}) {
    for (auto v : {ConvVariant::input_rotation, ConvVariant::output_rotation}) {
      const auto f = ConvFilter::random(s, P.p(), P.prg);
      const auto enc = encode_filter(f, v, {}, P.ev);
      const auto& geo = enc.geo;
      std::set<std::pair<std::size_t, std::size_t>> all;
      for (std::size_t o = 0; o < geo.out_cts; ++o)
        for (std::size_t i = 0; i < geo.in_cts; ++i)
          for (std::size_t g = 0; g < enc.group.size(); ++g) {
            std::set<std::size_t> outs, ins;
            for (const auto& [oc, ic] : enc.grouping(o, i, g)) {
              CHECK(outs.insert(oc).second);
              CHECK(ins.insert(ic).second);
              CHECK(all.insert({oc, ic}).second);
            }
          }
      CHECK(all.size() == geo.c_in * geo.c_out);
    }
  }
}

TEST_CASE("punctured plaintexts vanish exactly where the tap leaves the image") {
  Party P(RingParams::standard(), 5);
  const auto s = shape(4, 1, 3, 1);
  auto f = ConvFilter::zeros(s);
  for (auto& x : f.w) x = 1 + P.prg.uniform(P.p() - 1);
  const auto geo = conv_geometry(s, ConvVariant::packed_siso, P.n());
  for (std::size_t t = 0; t < geo.taps.size(); ++t) {
    const auto pt = conv_plaintext(f, geo, *P.ctx, 0, 0, 0, t);
    for (std::size_t x = 0; x < P.n(); ++x) {
      const long pix = static_cast<long>(x % geo.block);
      const long y = pix / 4 + geo.taps[t].ty, xx = pix % 4 + geo.taps[t].tx;
      const bool inside = pix < 16 && y >= 0 && y < 4 && xx >= 0 && xx < 4;
      CHECK((pt[x] != 0) == inside);
    }
  }
}

TEST_CASE("every variant matches the plaintext oracle at toy parameters") {
  Party P(RingParams::toy64(), 21);
  for (int k = 0; k < 60; ++k) {
    const ConvSpec s = random_spec(P.prg, 8, P.n() / 2, P.n());
    for (auto v : applicable(s)) check_oracle(P, s, v);
  }
}

TEST_CASE("every variant matches the plaintext oracle at full parameters") {
  Party P(RingParams::standard(), 22);
  for (int k = 0; k < 50; ++k) {
    const ConvSpec s = random_spec(P.prg, 16, 256, P.n());
    for (auto v : applicable(s)) check_oracle(P, s, v);
  }
}

TEST_CASE("fixed oracle cases") {
  Party P(RingParams::standard(), 23);
  check_oracle(P, shape(28, 1, 5, 5, 2), ConvVariant::input_rotation);
  check_oracle(P, shape(28, 1, 5, 5, 2), ConvVariant::output_rotation);
  check_oracle(P, shape(8, 1, 3, 1, 2), ConvVariant::input_rotation);
  check_oracle(P, shape(8, 3, 3, 2, 2), ConvVariant::output_rotation);
  check_oracle(P, shape(28, 1, 5, 1), ConvVariant::packed_siso);
  check_oracle(P, shape(28, 1, 5, 1), ConvVariant::padded_siso);
  check_oracle(P, shape(8, 8, 3, 8), ConvVariant::input_rotation, ConvOptions{10, 5, 4});
  check_oracle(P, shape(8, 8, 3, 8), ConvVariant::output_rotation, ConvOptions{10, 5, 4});
  check_oracle(P, shape(16, 32, 3, 32), ConvVariant::input_rotation);
  check_oracle(P, shape(16, 32, 3, 32), ConvVariant::output_rotation);
  check_oracle(P, shape(16, 16, 1, 16), ConvVariant::output_rotation);
  check_oracle(P, shape(4, 1, 3, 1), ConvVariant::padded_siso);
  Party T(RingParams::toy64(), 24);
  check_oracle(T, shape(3, 1, 3, 1), ConvVariant::padded_siso);
  CHECK_THROWS_AS(conv_geometry(shape(4, 1, 3, 1), ConvVariant::padded_siso, T.n()), std::invalid_argument);
}

TEST_CASE("single channel packing degenerates to one channel per ciphertext") {
  Party P(RingParams::standard(), 6);
  const auto s = shape(8, 3, 3, 2);
  const auto f = ConvFilter::random(s, P.p(), P.prg);
  const auto in = Tensor3::random(3, 8, 8, P.p(), P.prg);
  const auto a = run(P, encode_filter(f, ConvVariant::input_rotation, ConvOptions{10, 5, 1}, P.ev), in);
  const auto b = run(P, encode_filter(f, ConvVariant::one_per_ct, {}, P.ev), in);
  CHECK(a.slots == b.slots);
  CHECK(a.res.ops.perm == b.res.ops.perm);
  CHECK(a.res.ops.perm_decomp == b.res.ops.perm_decomp);
  CHECK(conv_counts(s, ConvVariant::input_rotation, P.n(), 1) == conv_counts(s, ConvVariant::one_per_ct, P.n()));

  const auto s1 = shape(8, 1, 3, 1);
  const auto f1 = ConvFilter::random(s1, P.p(), P.prg);
  const auto in1 = Tensor3::random(1, 8, 8, P.p(), P.prg);
  const auto c = run(P, encode_filter(f1, ConvVariant::one_per_ct, {}, P.ev), in1);
  const auto d = run(P, encode_filter(f1, ConvVariant::packed_siso, {}, P.ev), in1);
  CHECK(c.slots == d.slots);
}

TEST_CASE("packed single-channel output has no partial sums in any slot") {
  Party P(RingParams::standard(), 7);
  for (auto wh : {std::size_t{5}, std::size_t{8}, std::size_t{28}}) {
    const auto s = shape(wh, 1, 3, 1);
    const auto f = ConvFilter::random(s, P.p(), P.prg);
    const auto in = Tensor3::random(1, wh, wh, P.p(), P.prg);
    const auto enc = encode_filter(f, ConvVariant::packed_siso, {}, P.ev);
    const auto r = run(P, enc, in);
    const auto want = conv_reference(f, in, P.ctx->p());
    for (std::size_t x = 0; x < P.n(); ++x) {
      const std::size_t pix = x % enc.geo.block;
      const u64 expect = pix < wh * wh ? want.v[pix] : 0;
      CHECK(r.slots[0][x] == expect);
    }
  }
}

TEST_CASE("padded single-channel convolution") {
  Party P(RingParams::standard(), 8);
  SUBCASE("1x1 filter of one is the identity") {
    const auto s = shape(5, 1, 1, 1);
    auto f = ConvFilter::zeros(s);
    f.w[0] = 1;
    const auto in = Tensor3::random(1, 5, 5, P.p(), P.prg);
    const auto r = run(P, encode_filter(f, ConvVariant::padded_siso, {}, P.ev), in);
    CHECK(r.out == in);
    CHECK(r.res.ops.perm == 0);
  }
  SUBCASE("3x3 on 4x4 rotates eight times off one decomposition") {
    const auto s = shape(4, 1, 3, 1);
    const auto f = ConvFilter::random(s, P.p(), P.prg);
    const auto in = Tensor3::random(1, 4, 4, P.p(), P.prg);
    const auto enc = encode_filter(f, ConvVariant::padded_siso, {}, P.ev);
    const auto r = run(P, enc, in);
    CHECK(r.out == conv_reference(f, in, P.ctx->p()));
    CHECK(r.res.ops.perm == 8);
    CHECK(r.res.ops.perm_decomp == 1);
    CHECK(r.raw.perm_decomp == r.raw.perm_auto / 8);
    std::size_t nonzero = 0;
    for (std::size_t x = 0; x < P.n(); ++x)
      if (x % enc.geo.w >= 4 || x / enc.geo.w >= 4) nonzero += r.slots[0][x] != 0;
    CHECK(nonzero > P.n() / 2);
    CHECK(enc.geo.pad_h * enc.geo.pad_w == 36);
  }
}

TEST_CASE("zero filters give zero outputs") {
  Party P(RingParams::standard(), 9);
  for (auto v : {ConvVariant::input_rotation, ConvVariant::output_rotation, ConvVariant::packed_siso}) {
    const auto s = v == ConvVariant::packed_siso ? shape(8, 1, 3, 1) : shape(8, 4, 3, 4);
    const auto in = Tensor3::random(s.c_i, 8, 8, P.p(), P.prg);
    const auto r = run(P, encode_filter(ConvFilter::zeros(s), v, {}, P.ev), in);
    CHECK(r.out == Tensor3::zeros(s.c_o, 8, 8));
    CHECK(r.res.ops.scmult == 0);
  }
}

TEST_CASE("malformed convolutions are rejected") {
  Party P(RingParams::standard(), 10);
  CHECK_THROWS_AS(conv_geometry(shape(64, 1, 3, 1), ConvVariant::input_rotation, 2048), std::invalid_argument);
  CHECK_THROWS_AS(conv_geometry(ConvSpec{8, 8, 1, 2, 2, 1}, ConvVariant::input_rotation, 2048), std::invalid_argument);
  CHECK_THROWS_AS(conv_geometry(shape(8, 2, 3, 1), ConvVariant::padded_siso, 2048), std::invalid_argument);
  CHECK_THROWS_AS(conv_geometry(shape(8, 1, 3, 1, 2), ConvVariant::packed_siso, 2048), std::invalid_argument);
  CHECK_THROWS_AS(conv_geometry(shape(32, 1, 3, 1), ConvVariant::padded_siso, 2048), std::invalid_argument);
  CHECK_THROWS_AS(conv_geometry(shape(2, 1, 7, 1), ConvVariant::input_rotation, 2048), std::invalid_argument);
  CHECK_THROWS_AS(conv_geometry(shape(8, 8, 3, 8), ConvVariant::input_rotation, 2048, 3), std::invalid_argument);
  CHECK_THROWS_AS(conv_variant_from_string("winograd"), std::invalid_argument);

  const auto s = shape(8, 4, 3, 4);
  const auto enc = encode_filter(ConvFilter::random(s, P.p(), P.prg), ConvVariant::input_rotation, {}, P.ev);
  const auto v = pack_conv_input(enc.geo, Tensor3::random(4, 8, 8, P.p(), P.prg), P.p());
  const auto ct = P.enc.encrypt_windowed(v[0], enc.opt.w_pt, P.prg);
  KeyRing empty;
  CHECK_THROWS(conv(enc, {ct}, empty, P.ev, P.prg));
  CHECK_THROWS_AS(conv(enc, {}, P.keys, P.ev, P.prg), std::invalid_argument);
  WindowedCiphertext thin;
  thin.parts.push_back(ct.parts[0]);
  P.ensure(required_perms(enc), enc.opt.w_relin);
  CHECK_THROWS_AS(conv(enc, {thin}, P.keys, P.ev, P.prg), std::invalid_argument);
}
