#include <algorithm>
#include <cmath>

#include "hinfer/bench.hpp"
#include "hinfer/protocol.hpp"
#include "hinfer/serialize.hpp"

namespace hinfer::bench {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

struct SessionStats {
  std::size_t trials = 0;
  double setup_ms = 0, offline_ms = 0, online_ms = 0, online_mean_ms = 0;
  InferenceReport last;
};

// Runs full sessions and checks each against the reference and the linter.
SessionStats run_sessions(const NetworkDescriptor& net, const std::vector<u64>& input, const BenchOptions& opt,
                          const std::string& what) {
  const RingParams rp = RingParams::standard();
  const std::size_t ct_bytes = ciphertext_wire_size(*Context::create(rp));
  const auto expected = reference_eval(net, input);
  std::size_t trials = opt.trials % 2 == 0 ? opt.trials + 1 : opt.trials;
  std::vector<double> setup, offline, online;
  SessionStats st;
  for (std::size_t t = 0; t < trials; ++t) {
    ServerOptions so;
    so.params = rp;
    so.seed = opt.seed + 2 * t;
    auto rep = run_inference(net, input, so, ClientOptions{opt.seed + 2 * t + 1});
    if (rep.client.output != expected) throw OracleFailure(what + ": secure output differs from the reference");
    const auto issues = lint_transcript(rep.plan, rep.transcript, ct_bytes);
    if (!issues.empty()) throw OracleFailure(what + ": transcript: " + issues.front());
    for (std::size_t i = 0; i < rep.noise.size(); ++i) {
      if (rep.client.measured_bits[i] > rep.noise[i].estimate_bits || !(rep.noise[i].estimate_bits < rep.noise[i].line_bits))
        throw OracleFailure(what + ": noise check failed at " + rep.noise[i].label);
    }
    setup.push_back(rep.client.times.setup_ms);
    offline.push_back(rep.client.times.offline_ms);
    online.push_back(rep.client.times.online_ms);
    st.last = std::move(rep);
  }
  st.trials = trials;
  st.setup_ms = median(setup);
  st.offline_ms = median(offline);
  st.online_ms = median(online);
  st.online_mean_ms = mean(online);
  return st;
}

BenchReport session_report(const std::string& bench, const std::string& op, const std::string& shape, const SessionStats& st) {
  BenchReport r;
  r.bench = bench;
  r.op = op;
  r.shape = shape;
  r.trials = st.trials;
  r.median_us = st.online_ms * 1000;
  r.mean_us = st.online_mean_ms * 1000;
  const Transcript& t = st.last.transcript;
  r.counts = {{"setup_bytes", t.bytes(Phase::setup)}, {"offline_bytes", t.bytes(Phase::offline)}, {"online_bytes", t.bytes(Phase::online)}};
  r.values = {{"setup_ms", st.setup_ms}, {"offline_ms", st.offline_ms}, {"online_ms", st.online_ms}};
  double worst = 0;
  for (const auto& n : st.last.noise) worst = std::max(worst, n.estimate_bits);
  if (!st.last.noise.empty()) r.values.emplace_back("max_estimate_bits", worst);
  return r;
}

u64 body_bytes(const Transcript& t, MsgType type) {
  u64 b = 0;
  for (const auto& e : t.entries)
    if (e.type == type) b += e.body_bytes;
  return b;
}

}  // namespace

std::vector<BenchReport> bench_activations(const BenchOptions& opt) {
  if (opt.trials == 0) return {};
  const RingParams rp = RingParams::standard();
  const ContextPtr ctx = Context::create(rp);
  const u64 p = rp.p.value();
  const u64 ct = ciphertext_wire_size(*ctx);
  const u64 hdr = kFrameHeaderSize;
  const u64 width = gc::value_width(p);
  Prg prg(opt.seed, 51);
  std::vector<std::size_t> sizes = opt.sizes.empty() ? std::vector<std::size_t>{1000} : opt.sizes;
  std::vector<BenchReport> out;

  auto square_sizes = sizes;
  if (std::find(square_sizes.begin(), square_sizes.end(), 2048) == square_sizes.end()) square_sizes.insert(square_sizes.begin(), 2048);
  for (std::size_t N : square_sizes) {
    NetworkDescriptor net;
    net.name = "square";
    net.p = p;
    net.input = Shape{1, 1, N};
    net.layers = {activation(LayerKind::square)};
    const auto input = random_image(net.input, 16, p, prg);
    const auto st = run_sessions(net, input, opt, "square " + std::to_string(N));
    const auto& s = st.last.plan.steps.at(0);
    const u64 w = static_cast<u64>(window_count(rp.p, s.w_pt));
    const u64 cts = (N + rp.n - 1) / rp.n;
    const u64 want = (hdr + 8 + cts * w * ct) + (hdr + 4 + cts * ct) + (hdr + 4 * N);
    if (st.last.transcript.bytes(Phase::online) != want) throw OracleFailure("square: online bytes differ from the accounting");
    auto r = session_report("act", "square", std::to_string(N), st);
    r.counts.emplace_back("ciphertexts", cts * (w + 1));
    out.push_back(std::move(r));
  }

  for (bool pool : {false, true}) {
    for (std::size_t N : sizes) {
      NetworkDescriptor net;
      net.name = pool ? "maxpool" : "relu";
      net.p = p;
      net.input = pool ? Shape{1, 2, 2 * N} : Shape{1, 1, N};
      net.layers = {activation(pool ? LayerKind::maxpool : LayerKind::relu)};
      const auto input = random_image(net.input, 16, p, prg);
      const std::string what = net.name + " " + std::to_string(N);
      const auto st = run_sessions(net, input, opt, what);
      const auto& t = st.last.transcript;
      const auto& s = st.last.plan.steps.at(0);
      const auto circuit = build_step_circuit(s, p);
      const u64 cw = s.gather.size() * width;
      const u64 sw = (s.gather.size() + N) * width;
      const u64 gc_bytes = gc::GarbledCircuit::kHeaderBytes + circuit.circuit.and_count() * 2 * sizeof(Block) + (N * width + 7) / 8;
      const u64 want_offline = (hdr + gc_bytes) + (hdr + 32) + (hdr + 32 * cw);
      const u64 want_online = (hdr + (cw + 7) / 8) + (hdr + 16 * sw + 32 * cw) + (hdr + 4 * N);
      if (body_bytes(t, MsgType::gc_tables) != gc_bytes || t.bytes(Phase::offline) != want_offline ||
          t.bytes(Phase::online) != want_online)
        throw OracleFailure(what + ": bandwidth differs from the accounting");
      auto r = session_report("act", net.name, std::to_string(N), st);
      r.counts.emplace_back("and_gates", circuit.circuit.and_count());
      r.counts.emplace_back("ot", cw);
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<BenchReport> bench_networks(const BenchOptions& opt) {
  if (opt.trials == 0) return {};
  const u64 p = RingParams::standard().p.value();
  std::vector<BenchReport> out;
  for (char which : {'A', 'D'}) {
    Prg prg(opt.seed, 61);
    const auto net = which == 'A' ? network_a(p, prg) : network_d(p, prg);
    const auto input = random_image(net.input, 3, p, prg);
    const auto st = run_sessions(net, input, opt, std::string("network ") + which);
    auto r = session_report("net", std::string(1, which), net.name, st);
    r.values.emplace_back("server_encode_ms", st.last.encode_ms);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace hinfer::bench
