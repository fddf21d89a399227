#include <cmath>

#include "hinfer/bench.hpp"
#include "hinfer/pahe.hpp"
#include "hinfer/serialize.hpp"

namespace hinfer::bench {

namespace {

constexpr double kMinTrialUs = 5000;
constexpr int kWRelin = 20;

void expect(bool ok, const std::string& what) {
  if (!ok) throw OracleFailure("primitives: wrong result from " + what);
}

std::vector<u64> random_vec(std::size_t n, u64 bound, Prg& prg) {
  std::vector<u64> v(n);
  for (auto& x : v) x = prg.uniform(bound);
  return v;
}

BenchReport row(const std::string& op, const std::string& shape, const Timing& t) {
  BenchReport r;
  r.bench = "primitives";
  r.op = op;
  r.shape = shape;
  r.trials = t.trials;
  r.median_us = t.median_us;
  r.mean_us = t.mean_us;
  return r;
}

void push_pair(std::vector<BenchReport>& out, const std::string& op, const PairTiming& pt) {
  auto f = row(op, "fast", pt.a);
  f.values.emplace_back("speedup", pt.ratio);
  out.push_back(std::move(f));
  out.push_back(row(op, "naive", pt.b));
}

SecretKey make_key(const KeyGenerator& kg, u64 seed) {
  Prg kp(seed, 32);
  return kg.secret_key(kp);
}

// Keys, operands and scratch results for one arithmetic backend.
struct Side {
  KeyGenerator kg;
  SecretKey sk;
  Encryptor enc;
  Evaluator ev;
  Ciphertext c1, c2, tmp;
  PlaintextWindows w;
  PermutationKey key, key2;
  HoistedCiphertext hoisted, h2;
  RerandKey rk;
  PlaintextVector dec;

  Side(const ContextPtr& ctx, Backend b, u64 seed, const std::vector<u64>& m1, const std::vector<u64>& m2, const PermId& id,
       Prg& prg)
      : kg(ctx, b), sk(make_key(kg, seed)), enc(sk, b), ev(ctx, b) {
    c1 = enc.encrypt(m1, prg);
    c2 = enc.encrypt(m2, prg);
    w = ev.encode_windows(m2, 20);
    key = kg.perm_key(sk, id, kWRelin, prg);
    hoisted = ev.perm_decomp(c1, kWRelin);
  }
  Side(const Side&) = delete;
  Side& operator=(const Side&) = delete;
};

}  // namespace

std::vector<BenchReport> bench_primitives(const BenchOptions& opt) {
  if (opt.trials == 0) return {};
  const RingParams rp = RingParams::standard();
  const ContextPtr ctx = Context::create(rp);
  const ModulusP& p = ctx->p();
  const std::size_t n = ctx->n();
  Prg prg(opt.seed, 31);
  std::vector<BenchReport> out;
  auto pair = [&](const std::function<void()>& a, const std::function<void()>& b) {
    return time_pair(opt.trials, opt.warmup, a, b, kMinTrialUs);
  };

  auto ntt = [&](const std::string& label, const NttTables& tab, const auto& fast, const auto& naive) {
    const auto x = random_vec(tab.size(), tab.modulus(), prg);
    auto fx = x, nx = x;
    ntt_forward(std::span<u64>(fx), tab, fast);
    ntt_forward(std::span<u64>(nx), tab, naive);
    expect(fx == nx, "forward NTT (" + label + ")");
    std::vector<u64> a, b;
    push_pair(out, "ntt_" + label,
              pair([&] { a = x, ntt_forward(std::span<u64>(a), tab, fast); }, [&] { b = x, ntt_forward(std::span<u64>(b), tab, naive); }));
    expect(a == fx && b == fx, "forward NTT (" + label + ")");
    push_pair(out, "intt_" + label, pair([&] { a = fx, ntt_inverse(std::span<u64>(a), tab, fast); },
                                         [&] { b = fx, ntt_inverse(std::span<u64>(b), tab, naive); }));
    expect(a == x && b == x, "inverse NTT (" + label + ")");
  };
  ntt("q", ctx->ntt_q(), ctx->q(), ctx->q_naive());
  ntt("p", ctx->ntt_p(), ctx->p(), ctx->p_naive());

  const PermId perm_id{1, false};
  const auto m1 = random_vec(n, p.value(), prg);
  const auto m2 = random_vec(n, p.value(), prg);
  std::vector<u64> sum(n), prod(n);
  for (std::size_t i = 0; i < n; ++i) {
    sum[i] = p.add(m1[i], m2[i]);
    prod[i] = p.mul(m1[i], m2[i]);
  }
  const auto permuted = ctx->permute_slots<u64>(m1, perm_id);
  const std::vector<u64> zero(n, 0);

  Side F(ctx, Backend::fast, opt.seed, m1, m2, perm_id, prg);
  Side N(ctx, Backend::naive, opt.seed, m1, m2, perm_id, prg);
  auto both = [&](const std::string& op, const std::function<void(Side&)>& body, const std::function<bool(Side&)>& check) {
    push_pair(out, op, pair([&] { body(F); }, [&] { body(N); }));
    expect(check(F) && check(N), op);
  };

  both("keygen", [&](Side& s) { s.rk = s.kg.rerand_key(s.sk, prg); },
       [&](Side& s) { return s.enc.decrypt(Ciphertext{s.rk.b, s.rk.a, NoiseModel::fresh(rp)}) == zero; });
  both("encrypt", [&](Side& s) { s.tmp = s.enc.encrypt(m1, prg); }, [&](Side& s) { return s.enc.decrypt(s.tmp) == m1; });
  both("decrypt", [&](Side& s) { s.dec = s.enc.decrypt(s.c1); }, [&](Side& s) { return s.dec == m1; });
  both("simd_add", [&](Side& s) { s.tmp = s.ev.add(s.c1, s.c2); }, [&](Side& s) { return s.enc.decrypt(s.tmp) == sum; });
  both("simd_scmult", [&](Side& s) { s.tmp = s.ev.scmult(s.c1, s.w); }, [&](Side& s) { return s.enc.decrypt(s.tmp) == prod; });
  both("perm_keygen", [&](Side& s) { s.key2 = s.kg.perm_key(s.sk, perm_id, kWRelin, prg); },
       [&](Side& s) { return s.enc.decrypt(s.ev.perm(s.c1, s.key2)) == permuted; });
  both("perm", [&](Side& s) { s.tmp = s.ev.perm(s.c1, s.key); }, [&](Side& s) { return s.enc.decrypt(s.tmp) == permuted; });
  both("perm_decomp", [&](Side& s) { s.h2 = s.ev.perm_decomp(s.c1, kWRelin); },
       [&](Side& s) { return s.enc.decrypt(s.ev.perm_auto(s.h2, s.key)) == permuted; });
  both("perm_auto", [&](Side& s) { s.tmp = s.ev.perm_auto(s.hoisted, s.key); },
       [&](Side& s) { return s.enc.decrypt(s.tmp) == permuted; });

  // A full permutation against the automorphism step on an already decomposed
  // ciphertext, same key and operand.
  Ciphertext full, fast;
  const PairTiming hp = pair([&] { fast = F.ev.perm_auto(F.hoisted, F.key); }, [&] { full = F.ev.perm(F.c1, F.key); });
  expect(F.enc.decrypt(full) == permuted && F.enc.decrypt(fast) == permuted, "perm");
  auto h = row("perm_vs_auto", "fast", hp.a);
  h.values.emplace_back("perm_us", hp.b.median_us);
  h.values.emplace_back("perm_over_auto", hp.ratio);
  out.push_back(std::move(h));

  // Permutation keys at 3, 6 and 12 relinearization windows.
  for (int wr : {20, 10, 5}) {
    PermutationKey key;
    const Timing tk = time_trials(opt.trials, opt.warmup, [&] { key = F.kg.perm_key(F.sk, perm_id, wr, prg); }, kMinTrialUs);
    const HoistedCiphertext hc = F.ev.perm_decomp(F.c1, wr);
    Ciphertext r;
    const Timing ta = time_trials(opt.trials, opt.warmup, [&] { r = F.ev.perm_auto(hc, key); }, kMinTrialUs);
    expect(F.enc.decrypt(r) == permuted, "perm_auto");
    const double measured = F.enc.measured_noise(r, permuted);
    expect(measured <= r.noise, "perm_auto noise estimate");
    auto rep = row("perm_windows", "w_relin=" + std::to_string(wr), ta);
    rep.counts.emplace_back("windows", static_cast<u64>(digit_count(wr)));
    rep.counts.emplace_back("key_bytes", serialize(*ctx, key).size());
    rep.values.emplace_back("keygen_us", tk.median_us);
    rep.values.emplace_back("noise_bits", std::log2(std::max(1.0, measured)));
    rep.values.emplace_back("estimate_bits", r.noise_bits());
    out.push_back(std::move(rep));
  }
  return out;
}

}  // namespace hinfer::bench
