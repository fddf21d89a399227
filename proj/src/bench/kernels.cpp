#include <chrono>
#include <cmath>

#include "hinfer/bench.hpp"
#include "hinfer/conv.hpp"
#include "hinfer/linalg.hpp"
#include "hinfer/serialize.hpp"

namespace hinfer::bench {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

struct Party {
  ContextPtr ctx;
  KeyGenerator kg;
  SecretKey sk;
  Encryptor enc;
  Evaluator ev;
  Prg prg;

  explicit Party(u64 seed)
      : ctx(Context::create(RingParams::standard())), kg(ctx), sk(make_key(kg, seed)), enc(sk), ev(ctx), prg(seed, 41) {}

  static SecretKey make_key(const KeyGenerator& kg, u64 seed) {
    Prg p(seed, 40);
    return kg.secret_key(p);
  }
};

struct NoiseCheck {
  double estimate = 0;
  double measured = 0;
};

NoiseCheck check_noise(const Party& P, const std::vector<Ciphertext>& cts, const std::string& what) {
  NoiseCheck nc;
  const double line = NoiseModel::line(P.ctx->params());
  for (const auto& c : cts) {
    const double m = P.enc.measured_noise(c);
    if (m > c.noise) throw OracleFailure(what + ": measured noise exceeds the estimate");
    if (!(c.noise < line)) throw OracleFailure(what + ": noise estimate above the correctness line");
    nc.estimate = std::max(nc.estimate, c.noise);
    nc.measured = std::max(nc.measured, m);
  }
  return nc;
}

void add_noise_values(BenchReport& r, const NoiseCheck& nc) {
  r.values.emplace_back("noise_bits", std::log2(std::max(1.0, nc.measured)));
  r.values.emplace_back("estimate_bits", std::log2(std::max(1.0, nc.estimate)));
}

const char* short_name(MatvecAlgorithm a) {
  switch (a) {
    case MatvecAlgorithm::naive: return "N";
    case MatvecAlgorithm::diagonal: return "D";
    case MatvecAlgorithm::hybrid: return "H";
    default: return "?";
  }
}

}  // namespace

std::vector<BenchReport> bench_matvec(const BenchOptions& opt) {
  if (opt.trials == 0) return {};
  Party P(opt.seed);
  const ModulusP& p = P.ctx->p();
  const std::size_t ct_bytes = ciphertext_wire_size(*P.ctx);
  const std::pair<std::size_t, std::size_t> shapes[] = {{2048, 1}, {1024, 128}, {1024, 16}, {128, 16}};
  std::vector<BenchReport> out;
  for (const auto& [n_i, n_o] : shapes) {
    const auto W = WeightMatrix::random(n_o, n_i, p.value(), P.prg);
    std::vector<u64> v(n_i);
    for (auto& x : v) x = P.prg.uniform(p.value());
    const auto expected = W.apply(v, p);
    for (auto a : {MatvecAlgorithm::naive, MatvecAlgorithm::diagonal, MatvecAlgorithm::hybrid}) {
      const std::string what = std::string("matvec ") + short_name(a) + " " + std::to_string(n_i) + "x" + std::to_string(n_o);
      auto t0 = Clock::now();
      const auto enc = encode_matrix(W, a, default_options(a), P.ev);
      const double setup_ms = ms_since(t0);
      KeyRing keys;
      const auto ids = required_perms(enc);
      ensure_keys(keys, P.kg, P.sk, ids, enc.opt.w_relin, P.prg);
      const auto input = P.enc.encrypt_windowed(pack_input(enc, v), enc.opt.w_pt, P.prg);
      MatvecResult res;
      OpCounters raw;
      const Timing t = time_trials(opt.trials, opt.warmup, [&] {
        P.ev.counters().reset();
        res = matvec(enc, input, keys, P.ev, P.prg);
        raw = P.ev.counters();
      });
      std::vector<PlaintextVector> slots;
      for (const auto& c : res.cts) slots.push_back(P.enc.decrypt(c));
      if (unpack_output(enc, slots) != expected) throw OracleFailure(what + ": wrong product");
      const OpCount want = count_ops(a, P.ctx->n(), n_i, n_o);
      if (!(res.ops == want)) throw OracleFailure(what + ": operation counts differ from the closed form");
      const u64 parts = input.parts.size();
      const u64 decomp = want.perm + (want.perm_hoisted > 0 ? parts : 0);
      if (raw.scmult != want.scmult || raw.perm_decomp != decomp || raw.perm_auto != want.perm + want.perm_hoisted * parts)
        throw OracleFailure(what + ": instrumented counters differ from the closed form");
      const NoiseCheck nc = check_noise(P, res.cts, what);

      BenchReport r;
      r.bench = "matvec";
      r.op = short_name(a);
      r.shape = std::to_string(n_i) + "x" + std::to_string(n_o);
      r.trials = t.trials;
      r.median_us = t.median_us;
      r.mean_us = t.mean_us;
      r.counts = {{"in_rot", res.ops.perm_hoisted}, {"out_rot", res.ops.perm}, {"mac", res.ops.scmult},
                  {"keys", ids.size()},         {"w_pt", static_cast<u64>(enc.opt.w_pt)},
                  {"w_relin", static_cast<u64>(enc.opt.w_relin)},
                  {"online_bytes", (parts + res.cts.size()) * ct_bytes}};
      r.values.emplace_back("setup_ms", setup_ms);
      add_noise_values(r, nc);
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<BenchReport> bench_conv(const BenchOptions& opt) {
  if (opt.trials == 0) return {};
  Party P(opt.seed);
  const ModulusP& p = P.ctx->p();
  const std::size_t ct_bytes = ciphertext_wire_size(*P.ctx);
  auto spec = [](std::size_t wh, std::size_t c_i, std::size_t f, std::size_t c_o, std::size_t s) {
    return ConvSpec{wh, wh, c_i, f, f, c_o, s, s, Padding::same};
  };
  const ConvSpec shapes[] = {spec(28, 1, 5, 5, 2), spec(16, 128, 1, 128, 1), spec(32, 32, 3, 32, 1), spec(16, 128, 3, 128, 1)};
  std::vector<BenchReport> out;
  for (const auto& s : shapes) {
    const auto f = ConvFilter::random(s, p.value(), P.prg);
    const auto img = Tensor3::random(s.c_i, s.h_i, s.w_i, p.value(), P.prg);
    const auto expected = conv_reference(f, img, p);
    const std::string shape = std::to_string(s.w_i) + "x" + std::to_string(s.h_i) + "x" + std::to_string(s.c_i) + " " +
                              std::to_string(s.f_w) + "x" + std::to_string(s.f_h) + "x" + std::to_string(s.c_o) +
                              (s.s_w > 1 ? " s" + std::to_string(s.s_w) : "");
    for (auto v : {ConvVariant::input_rotation, ConvVariant::output_rotation}) {
      const std::string what = "conv " + to_string(v) + " " + shape;
      const ConvOptions copt;
      auto t0 = Clock::now();
      const auto enc = encode_filter(f, v, copt, P.ev);
      const double setup_ms = ms_since(t0);
      KeyRing keys;
      const auto ids = required_perms(enc);
      ensure_keys(keys, P.kg, P.sk, ids, copt.w_relin, P.prg);
      std::vector<WindowedCiphertext> in;
      for (const auto& slots : pack_conv_input(enc.geo, img, p.value())) in.push_back(P.enc.encrypt_windowed(slots, copt.w_pt, P.prg));
      ConvResult res;
      const Timing t = time_trials(opt.trials, opt.warmup, [&] { res = conv(enc, in, keys, P.ev, P.prg); });
      std::vector<PlaintextVector> slots;
      for (const auto& c : res.cts) slots.push_back(P.enc.decrypt(c));
      if (unpack_conv_output(enc.geo, slots, s.c_o) != expected) throw OracleFailure(what + ": wrong convolution");
      const ConvCount want = conv_counts(s, v, P.ctx->n(), copt.c_n);
      if (res.ops.perm_decomp != want.perm_decomp || res.ops.perm != want.perm || enc.geo.in_cts != want.in_cts ||
          res.ops.out_cts != want.out_cts)
        throw OracleFailure(what + ": operation counts differ from the closed form");
      const NoiseCheck nc = check_noise(P, res.cts, what);

      BenchReport r;
      r.bench = "conv";
      r.op = v == ConvVariant::input_rotation ? "I" : "O";
      r.shape = shape;
      r.trials = t.trials;
      r.median_us = t.median_us;
      r.mean_us = t.mean_us;
      const u64 parts = in.empty() ? 0 : in[0].parts.size();
      r.counts = {{"perm_decomp", res.ops.perm_decomp},
                  {"perm", res.ops.perm},
                  {"scmult", res.ops.scmult},
                  {"in_cts", enc.geo.in_cts},
                  {"out_cts", res.ops.out_cts},
                  {"c_n", enc.geo.c_n},
                  {"online_bytes", (enc.geo.in_cts * parts + res.ops.out_cts) * ct_bytes}};
      r.values.emplace_back("setup_ms", setup_ms);
      add_noise_values(r, nc);
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace hinfer::bench
