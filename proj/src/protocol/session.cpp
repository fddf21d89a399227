#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "hinfer/bytes.hpp"
#include "hinfer/protocol.hpp"
#include "hinfer/serialize.hpp"

namespace hinfer {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

Prg make_prg(u64 seed, bool entropy, u64 stream) { return entropy ? Prg::from_entropy() : Prg(seed, stream); }

u64 pow2_mod(unsigned e, const ModulusP& p) {
  u64 v = 1;
  for (unsigned i = 0; i < e; ++i) v = p.add(v, v);
  return v;
}

std::vector<u64> gather_slots(const std::vector<i64>& map, std::span<const u64> values) {
  std::vector<u64> out(map.size(), 0);
  for (std::size_t j = 0; j < map.size(); ++j)
    if (map[j] >= 0) out[j] = values[static_cast<std::size_t>(map[j])];
  return out;
}

void put_cts(ByteWriter& w, const Context& ctx, const std::vector<Ciphertext>& cts) {
  for (const auto& ct : cts) w.put_bytes(serialize(ctx, ct));
}

std::vector<Ciphertext> get_cts(ByteReader& r, const Context& ctx, std::size_t count) {
  const std::size_t sz = ciphertext_wire_size(ctx);
  std::vector<Ciphertext> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(deserialize_ciphertext(ctx, r.get_bytes(sz)));
  return out;
}

std::vector<u8> pack_bits(const std::vector<bool>& bits) {
  std::vector<u8> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / 8] |= static_cast<u8>(1u << (i % 8));
  return out;
}

std::vector<bool> unpack_bits(std::span<const u8> bytes, std::size_t count) {
  if (bytes.size() != (count + 7) / 8) throw Error("bit vector has the wrong length");
  std::vector<bool> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = (bytes[i / 8] >> (i % 8)) & 1;
  return out;
}

std::vector<u8> values_to_bytes(std::span<const u64> v) {
  ByteWriter w;
  for (u64 x : v) w.put(static_cast<u32>(x));
  return w.take();
}

std::vector<u64> values_from_bytes(std::span<const u8> b, std::size_t count, u64 p) {
  ByteReader r(b);
  std::vector<u64> out(count);
  for (auto& x : out) {
    x = r.get<u32>();
    if (x >= p) throw Error("share value outside [0, p)");
  }
  r.expect_end();
  return out;
}

}  // namespace

struct Server::Impl {
  struct Linear {
    bool conv = false;
    EncodedMatrix mat;
    EncodedFilter filt;
    std::vector<std::vector<u64>> bias;  // per output ciphertext, empty when zero
  };

  NetworkDescriptor net;
  ServerOptions opt;
  ContextPtr ctx;
  Evaluator ev;
  Prg prg;
  PublicPlan plan;
  std::vector<Linear> linear;
  std::vector<std::optional<gc::ActCircuit>> circuits;
  std::vector<gc::Garbling> garblings;
  std::vector<std::vector<std::array<Block, 2>>> pads;
  KeyRing keys;
  RerandKey rk;
  std::vector<NoiseRecord> noise;
  PhaseTimes times;
  double encode_ms = 0;

  Impl(NetworkDescriptor n, ServerOptions o)
      : net(std::move(n)), opt(std::move(o)), ctx(Context::create(opt.params)), ev(ctx), prg(make_prg(opt.seed, opt.entropy, 101)) {
    net.validate();
    if (net.p != ctx->p().value()) throw Error("network modulus differs from the parameter set");
    const auto t0 = Clock::now();
    build_plan();
    encode_ms = ms_since(t0);
  }

  void add_linear(const Layer& l, std::size_t li, const Shape& in_shape, bool last) {
    const std::size_t n = ctx->n();
    const u64 p = ctx->p().value();
    PlanStep s;
    s.kind = StepKind::linear;
    s.label = std::to_string(li) + ":" + to_string(l.kind);
    s.in_size = in_shape.size();
    s.last = last;
    Linear lin;
    std::vector<std::vector<u64>> probe;
    std::vector<PermId> perms;
    int w_relin = 0;
    if (l.kind == LayerKind::fc) {
      const std::size_t ni = std::bit_ceil(l.n_i), no = std::bit_ceil(l.n_o);
      if (ni > n || no > n) throw Error("fc layer " + s.label + " exceeds the slot count");
      WeightMatrix w = WeightMatrix::zeros(no, ni);
      for (std::size_t r = 0; r < l.n_o; ++r)
        for (std::size_t c = 0; c < l.n_i; ++c) w.at(r, c) = l.weights[r * l.n_i + c];
      const MatvecAlgorithm a = !l.method.empty() ? matvec_algorithm_from_string(l.method)
                                : no <= ni             ? MatvecAlgorithm::hybrid
                                                       : MatvecAlgorithm::diagonal;
      lin.mat = encode_matrix(w, a, default_options(a), ev);
      std::vector<u64> idx(ni, 0);
      for (std::size_t i = 0; i < l.n_i; ++i) idx[i] = i + 1;
      probe.push_back(pack_input(lin.mat, idx));
      s.out_size = l.n_o;
      for (std::size_t j = 0; j < l.n_o; ++j) s.out_map.push_back(output_position(lin.mat, j));
      s.w_pt = lin.mat.opt.w_pt;
      perms = required_perms(lin.mat);
      w_relin = lin.mat.opt.w_relin;
    } else {
      lin.conv = true;
      const ConvVariant v = l.method.empty() || l.method == "auto" ? choose_variant(l.conv, n) : conv_variant_from_string(l.method);
      lin.filt = encode_filter(ConvFilter{l.conv, l.weights}, v, ConvOptions{}, ev);
      Tensor3 t = Tensor3::zeros(in_shape.c, in_shape.h, in_shape.w);
      for (std::size_t i = 0; i < t.v.size(); ++i) t.v[i] = i + 1;
      probe = pack_conv_input(lin.filt.geo, t, p);
      s.out_size = l.conv.c_o * l.conv.h_o() * l.conv.w_o();
      for (std::size_t o = 0; o < l.conv.c_o; ++o)
        for (std::size_t y = 0; y < l.conv.h_o(); ++y)
          for (std::size_t x = 0; x < l.conv.w_o(); ++x) s.out_map.push_back(lin.filt.geo.output_slot(o, y, x));
      s.w_pt = lin.filt.opt.w_pt;
      perms = required_perms(lin.filt);
      w_relin = lin.filt.opt.w_relin;
    }
    s.in_cts = probe.size();
    for (const auto& ct : probe) {
      std::vector<i64> m(n, -1);
      for (std::size_t j = 0; j < n; ++j)
        if (ct[j] != 0) m[j] = static_cast<i64>(ct[j]) - 1;
      s.in_map.push_back(std::move(m));
    }
    s.out_cts = 0;
    for (const auto& [ct, slot] : s.out_map) s.out_cts = std::max(s.out_cts, ct + 1);
    if (!l.bias.empty()) {
      lin.bias.assign(s.out_cts, {});
      const std::size_t per = s.out_size / (l.kind == LayerKind::fc ? l.n_o : l.conv.c_o);
      for (std::size_t j = 0; j < s.out_size; ++j) {
        const u64 b = l.bias[j / per];
        if (b == 0) continue;
        auto& v = lin.bias[s.out_map[j].first];
        if (v.empty()) v.assign(n, 0);
        v[s.out_map[j].second] = b;
      }
    }
    for (const auto& id : perms) {
      const KeyRequest k{id, w_relin};
      if (!id.is_identity() && std::find(plan.keys.begin(), plan.keys.end(), k) == plan.keys.end()) plan.keys.push_back(k);
    }
    plan.steps.push_back(std::move(s));
    linear.push_back(std::move(lin));
    circuits.emplace_back();
  }

  void build_plan() {
    const auto shapes = net.shapes();
    const RingParams& rp = ctx->params();
    plan.m = rp.m;
    plan.p = rp.p.value();
    plan.q = rp.q.value();
    plan.input_size = net.input.size();
    plan.output_size = shapes.back().size();
    const std::size_t width = gc::value_width(plan.p);
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
      const Layer& l = net.layers[li];
      const Shape& in = shapes[li];
      if (l.linear()) {
        add_linear(l, li, in, li + 1 == net.layers.size());
        continue;
      }
      PlanStep s;
      s.label = std::to_string(li) + ":" + to_string(l.kind);
      s.in_size = in.size();
      if (l.kind == LayerKind::square) {
        s.kind = StepKind::square;
        s.out_size = in.size();
        s.w_pt = 10;
      } else {
        bool fused = false;
        unsigned shift = l.shift;
        if (l.kind == LayerKind::relu && li + 1 < net.layers.size() && net.layers[li + 1].kind == LayerKind::maxpool &&
            l.shift + net.layers[li + 1].shift < width) {
          fused = true;
          shift += net.layers[li + 1].shift;
          s.label += "+maxpool";
        }
        s.shift = shift;
        if (l.kind == LayerKind::relu && !fused) {
          s.kind = StepKind::relu;
          s.out_size = in.size();
          for (std::size_t i = 0; i < in.size(); ++i) s.gather.push_back(i);
        } else {
          s.kind = fused ? StepKind::relu_maxpool : StepKind::maxpool;
          const std::size_t ho = in.h / 2, wo = in.w / 2;
          s.out_size = in.c * ho * wo;
          for (std::size_t ch = 0; ch < in.c; ++ch)
            for (std::size_t oy = 0; oy < ho; ++oy)
              for (std::size_t ox = 0; ox < wo; ++ox)
                for (std::size_t dy = 0; dy < 2; ++dy)
                  for (std::size_t dx = 0; dx < 2; ++dx) s.gather.push_back((ch * in.h + 2 * oy + dy) * in.w + 2 * ox + dx);
        }
        if (fused) ++li;
      }
      if (s.garbled()) circuits.emplace_back(build_step_circuit(s, plan.p));
      else circuits.emplace_back();
      plan.steps.push_back(std::move(s));
      linear.emplace_back();
    }
  }

  void record(const std::string& label, const Masked& m) {
    const double line = std::log2(NoiseModel::line(ctx->params()));
    noise.push_back(NoiseRecord{label, m.ct.noise_bits(), m.noise_before <= 1 ? 0.0 : std::log2(m.noise_before), m.flood_bits, line});
  }

  void setup(Messenger& msg) {
    msg.set_phase(Phase::setup);
    msg.set_label("");
    keys = KeyRing{};
    noise.clear();
    (void)msg.receive(MsgType::hello);
    msg.send(MsgType::plan, plan.serialize());
    const auto body = msg.receive(MsgType::keys);
    ByteReader r(body);
    rk = deserialize_rerand_key(*ctx, r.get_blob());
    const u32 count = r.get<u32>();
    for (u32 i = 0; i < count; ++i) keys.insert(deserialize_perm_key(*ctx, r.get_blob()));
    r.expect_end();
    for (const auto& k : plan.keys)
      if (!keys.contains(k.id, k.w_relin)) throw Error("client did not supply a requested permutation key");
  }

  void offline(Messenger& msg) {
    msg.set_phase(Phase::offline);
    garblings.assign(plan.steps.size(), {});
    pads.assign(plan.steps.size(), {});
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
      const auto& s = plan.steps[i];
      if (!s.garbled()) continue;
      msg.set_label(s.label);
      garblings[i] = gc::garble(circuits[i]->circuit, prg);
      msg.send(MsgType::gc_tables, garblings[i].gc.serialize());
      gc::OtSender ot(prg);
      msg.send(MsgType::ot_setup, ot.setup_message());
      const auto req = msg.receive(MsgType::ot_request);
      const std::size_t wires = circuits[i]->circuit.client_inputs.size();
      if (req.size() != wires * sizeof(gc::Point)) throw Error("ot request has the wrong length");
      std::vector<gc::Point> points(wires);
      for (std::size_t k = 0; k < wires; ++k) std::memcpy(points[k].data(), req.data() + k * sizeof(gc::Point), sizeof(gc::Point));
      pads[i] = ot.random_pads(points);
    }
  }

  std::vector<u64> linear_step(Messenger& msg, std::size_t i, const std::vector<u64>& s_in) {
    const PlanStep& s = plan.steps[i];
    const Linear& lin = linear[i];
    const ModulusP& p = ctx->p();
    const std::size_t n = ctx->n();
    const std::size_t parts = static_cast<std::size_t>(window_count(p, s.w_pt));
    const auto body = msg.receive(MsgType::input_cts);
    ByteReader r(body);
    if (r.get<u32>() != s.in_cts || r.get<u32>() != parts) throw Error("input ciphertexts do not match the plan");
    std::vector<WindowedCiphertext> in(s.in_cts);
    for (auto& w : in) {
      w.w_pt = s.w_pt;
      w.parts = get_cts(r, *ctx, parts);
    }
    r.expect_end();
    const bool have_share = std::any_of(s_in.begin(), s_in.end(), [](u64 v) { return v != 0; });
    if (have_share) {
      for (std::size_t c = 0; c < s.in_cts; ++c) {
        const auto packed = gather_slots(s.in_map[c], s_in);
        for (std::size_t k = 0; k < parts; ++k) {
          const u64 f = pow2_mod(static_cast<unsigned>(s.w_pt * k), p);
          std::vector<u64> neg(n);
          for (std::size_t j = 0; j < n; ++j) neg[j] = p.neg(p.mul(packed[j], f));
          in[c].parts[k] = ev.add_plain(in[c].parts[k], neg);
        }
      }
    }
    std::vector<Ciphertext> out = lin.conv ? conv(lin.filt, in, keys, ev, prg).cts : matvec(lin.mat, in[0], keys, ev, prg).cts;
    out.resize(s.out_cts);
    for (std::size_t c = 0; c < lin.bias.size(); ++c)
      if (!lin.bias[c].empty()) out[c] = ev.add_plain(out[c], lin.bias[c]);
    ByteWriter w;
    w.put(static_cast<u32>(out.size()));
    std::vector<std::vector<u64>> masks;
    for (const auto& ct : out) {
      Masked m = mask_and_flood(ev, ct, rk, prg, !s.last);
      record(s.label, m);
      w.put_bytes(serialize(*ctx, m.ct));
      masks.push_back(std::move(m.r));
    }
    msg.send(s.last ? MsgType::output_cts : MsgType::masked_cts, w.bytes());
    std::vector<u64> s_out(s.out_size);
    for (std::size_t j = 0; j < s.out_size; ++j) s_out[j] = masks[s.out_map[j].first][s.out_map[j].second];
    return s_out;
  }

  std::vector<u64> square_step(Messenger& msg, std::size_t i, const std::vector<u64>& s_in) {
    const PlanStep& s = plan.steps[i];
    const std::size_t n = ctx->n();
    const std::size_t parts = static_cast<std::size_t>(window_count(ctx->p(), s.w_pt));
    const std::size_t cts = (s.in_size + n - 1) / n;
    const auto body = msg.receive(MsgType::square_cts);
    ByteReader r(body);
    if (r.get<u32>() != cts || r.get<u32>() != parts) throw Error("square ciphertexts do not match the plan");
    std::vector<WindowedCiphertext> in(cts);
    for (auto& w : in) {
      w.w_pt = s.w_pt;
      w.parts = get_cts(r, *ctx, parts);
    }
    r.expect_end();
    SquareReply reply = square_server(ev, in, s_in, rk, prg);
    ByteWriter w;
    w.put(static_cast<u32>(reply.cts.size()));
    for (std::size_t k = 0; k < reply.cts.size(); ++k) {
      record(s.label, Masked{reply.cts[k], {}, reply.noise_before[k], reply.flood_bits[k]});
      w.put_bytes(serialize(*ctx, reply.cts[k]));
    }
    msg.send(MsgType::square_resp, w.bytes());
    return reply.m;
  }

  std::vector<u64> garbled_step(Messenger& msg, std::size_t i, const std::vector<u64>& s_in) {
    const PlanStep& s = plan.steps[i];
    const gc::ActCircuit& ac = *circuits[i];
    const gc::Garbling& g = garblings[i];
    const ModulusP& p = ctx->p();
    std::vector<u64> sx(s.gather.size());
    for (std::size_t k = 0; k < sx.size(); ++k) sx[k] = p.neg(s_in[s.gather[k]]);
    std::vector<u64> m(s.out_size);
    for (auto& v : m) v = prg.uniform(p.value());
    const auto labels = g.server_labels(ac.server_bits(sx, m));
    const auto corr = msg.receive(MsgType::ot_correction);
    const std::size_t wires = g.client_zero.size();
    const auto d = unpack_bits(corr, wires);
    ByteWriter w;
    for (const auto& b : labels) w.put_block(b);
    for (std::size_t k = 0; k < wires; ++k) {
      const Block x0 = g.client_zero[k], x1 = x0 ^ g.delta;
      w.put_block(x0 ^ pads[i][k][d[k] ? 1 : 0]);
      w.put_block(x1 ^ pads[i][k][d[k] ? 0 : 1]);
    }
    msg.send(MsgType::gc_labels, w.bytes());
    return m;
  }

  void online(Messenger& msg) {
    msg.set_phase(Phase::online);
    std::vector<u64> share(plan.input_size, 0);
    bool shares_at_end = true;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
      const auto& s = plan.steps[i];
      msg.set_label(s.label);
      switch (s.kind) {
        case StepKind::linear:
          share = linear_step(msg, i, share);
          shares_at_end = !s.last;
          break;
        case StepKind::square:
          share = square_step(msg, i, share);
          shares_at_end = true;
          break;
        default:
          share = garbled_step(msg, i, share);
          shares_at_end = true;
          break;
      }
    }
    msg.set_label("");
    if (shares_at_end) msg.send(MsgType::output_share, values_to_bytes(share));
  }

  void run(Messenger& msg) {
    try {
      auto t0 = Clock::now();
      setup(msg);
      times.setup_ms = ms_since(t0);
      t0 = Clock::now();
      offline(msg);
      times.offline_ms = ms_since(t0);
      t0 = Clock::now();
      online(msg);
      times.online_ms = ms_since(t0);
    } catch (const std::exception& e) {
      msg.send_error(e.what());
      throw;
    }
  }
};

Server::Server(NetworkDescriptor net, ServerOptions opt) : impl_(std::make_unique<Impl>(std::move(net), std::move(opt))) {}
Server::~Server() = default;
Server::Server(Server&&) noexcept = default;
const PublicPlan& Server::plan() const { return impl_->plan; }
double Server::encode_ms() const { return impl_->encode_ms; }
void Server::run(Messenger& msg) { impl_->run(msg); }
const std::vector<NoiseRecord>& Server::noise_log() const { return impl_->noise; }
const OpCounters& Server::counters() const { return impl_->ev.counters(); }
const PhaseTimes& Server::times() const { return impl_->times; }

Client::Client(ClientOptions opt) : opt_(opt) {}

ClientResult Client::run(Messenger& msg, std::span<const u64> input) {
  return run_with(msg, [&](u64) { return std::vector<u64>(input.begin(), input.end()); });
}

ClientResult Client::run(Messenger& msg, std::span<const i64> input) {
  return run_with(msg, [&](u64 p) {
    std::vector<u64> out;
    for (i64 v : input) {
      if (v > static_cast<i64>(p / 2) || v < -static_cast<i64>(p / 2)) throw Error("input value outside the signed range of p");
      out.push_back(FixedPointCodec::from_signed(v, p));
    }
    return out;
  });
}

ClientResult Client::run_with(Messenger& msg, const std::function<std::vector<u64>(u64)>& make_input) {
  ClientResult res;
  try {
    Prg prg = make_prg(opt_.seed, opt_.entropy, 202);
    auto t0 = Clock::now();
    msg.set_phase(Phase::setup);
    msg.set_label("");
    const std::string hello = "hinfer-client";
    msg.send(MsgType::hello, std::span<const u8>(reinterpret_cast<const u8*>(hello.data()), hello.size()));
    plan_ = PublicPlan::deserialize(msg.receive(MsgType::plan));
    const std::vector<u64> input = make_input(plan_.p);
    if (input.size() != plan_.input_size) throw Error("input size does not match the server's network");
    const ContextPtr ctx = Context::create(RingParams::create(plan_.m, plan_.p, plan_.q));
    const ModulusP& p = ctx->p();
    for (u64 v : input)
      if (v >= p.value()) throw Error("input value outside [0, p)");
    const std::size_t n = ctx->n();
    const KeyGenerator kg(ctx);
    const Encryptor enc(kg.secret_key(prg));
    {
      ByteWriter w;
      w.put_blob(serialize(*ctx, kg.rerand_key(enc.secret_key(), prg)));
      w.put(static_cast<u32>(plan_.keys.size()));
      for (const auto& k : plan_.keys) w.put_blob(serialize(*ctx, kg.perm_key(enc.secret_key(), k.id, k.w_relin, prg)));
      msg.send(MsgType::keys, w.bytes());
    }
    res.times.setup_ms = ms_since(t0);

    t0 = Clock::now();
    msg.set_phase(Phase::offline);
    const std::size_t steps = plan_.steps.size();
    std::vector<std::optional<gc::ActCircuit>> circuits(steps);
    std::vector<gc::GarbledCircuit> gcs(steps);
    std::vector<std::vector<bool>> choice(steps);
    std::vector<std::vector<Block>> pads(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      const auto& s = plan_.steps[i];
      if (!s.garbled()) continue;
      msg.set_label(s.label);
      circuits[i] = build_step_circuit(s, p.value());
      gcs[i] = gc::GarbledCircuit::deserialize(msg.receive(MsgType::gc_tables));
      const auto& c = circuits[i]->circuit;
      if (gcs[i].tables.size() != 2 * c.and_count() || gcs[i].decode.size() != c.outputs.size())
        throw Error("garbled circuit does not match the plan");
      const auto setup = msg.receive(MsgType::ot_setup);
      if (setup.size() != sizeof(gc::Point)) throw Error("ot setup has the wrong length");
      gc::Point a;
      std::memcpy(a.data(), setup.data(), a.size());
      choice[i].resize(c.client_inputs.size());
      for (std::size_t k = 0; k < choice[i].size(); ++k) choice[i][k] = prg.next_bit();
      gc::OtReceiver ot(choice[i], prg);
      const auto req = ot.request(a);
      std::vector<u8> body;
      for (const auto& pt : req) body.insert(body.end(), pt.begin(), pt.end());
      msg.send(MsgType::ot_request, body);
      pads[i] = ot.random_pads();
    }
    res.times.offline_ms = ms_since(t0);

    t0 = Clock::now();
    msg.set_phase(Phase::online);
    std::vector<u64> share(input.begin(), input.end());
    bool shares_at_end = true;
    auto decrypt_all = [&](ByteReader& r, std::size_t count) {
      std::vector<PlaintextVector> out;
      for (const auto& ct : get_cts(r, *ctx, count)) {
        const double noise = enc.measured_noise(ct);
        res.measured_bits.push_back(noise <= 1 ? 0.0 : std::log2(noise));
        out.push_back(enc.decrypt(ct));
      }
      r.expect_end();
      return out;
    };
    for (std::size_t i = 0; i < steps; ++i) {
      const auto& s = plan_.steps[i];
      msg.set_label(s.label);
      if (s.kind == StepKind::linear) {
        const std::size_t parts = static_cast<std::size_t>(window_count(p, s.w_pt));
        ByteWriter w;
        w.put(static_cast<u32>(s.in_cts));
        w.put(static_cast<u32>(parts));
        for (std::size_t c = 0; c < s.in_cts; ++c) put_cts(w, *ctx, enc.encrypt_windowed(gather_slots(s.in_map[c], share), s.w_pt, prg).parts);
        msg.send(MsgType::input_cts, w.bytes());
        const auto body = msg.receive(s.last ? MsgType::output_cts : MsgType::masked_cts);
        ByteReader r(body);
        if (r.get<u32>() != s.out_cts) throw Error("result ciphertext count does not match the plan");
        const auto dec = decrypt_all(r, s.out_cts);
        share.assign(s.out_size, 0);
        for (std::size_t j = 0; j < s.out_size; ++j) share[j] = dec[s.out_map[j].first][s.out_map[j].second];
        shares_at_end = !s.last;
      } else if (s.kind == StepKind::square) {
        const std::size_t parts = static_cast<std::size_t>(window_count(p, s.w_pt));
        const std::size_t cts = (s.in_size + n - 1) / n;
        ByteWriter w;
        w.put(static_cast<u32>(cts));
        w.put(static_cast<u32>(parts));
        for (std::size_t c = 0; c < cts; ++c) {
          std::vector<u64> slots(n, 0);
          for (std::size_t j = 0; j < n && c * n + j < share.size(); ++j) slots[j] = share[c * n + j];
          put_cts(w, *ctx, enc.encrypt_windowed(slots, s.w_pt, prg).parts);
        }
        msg.send(MsgType::square_cts, w.bytes());
        const auto body = msg.receive(MsgType::square_resp);
        ByteReader r(body);
        if (r.get<u32>() != cts) throw Error("square reply does not match the plan");
        std::vector<Ciphertext> reply = get_cts(r, *ctx, cts);
        r.expect_end();
        for (const auto& ct : reply) {
          const double noise = enc.measured_noise(ct);
          res.measured_bits.push_back(noise <= 1 ? 0.0 : std::log2(noise));
        }
        share = square_client(enc, share, reply);
        shares_at_end = true;
      } else {
        const gc::ActCircuit& ac = *circuits[i];
        std::vector<u64> cx(s.gather.size());
        for (std::size_t k = 0; k < cx.size(); ++k) cx[k] = share[s.gather[k]];
        const auto bits = ac.client_bits(cx);
        std::vector<bool> d(bits.size());
        for (std::size_t k = 0; k < bits.size(); ++k) d[k] = bits[k] != choice[i][k];
        msg.send(MsgType::ot_correction, pack_bits(d));
        const auto body = msg.receive(MsgType::gc_labels);
        const std::size_t sw = ac.circuit.server_inputs.size(), cw = ac.circuit.client_inputs.size();
        if (body.size() != 16 * sw + 32 * cw) throw Error("garbled labels have the wrong length");
        ByteReader r(body);
        std::vector<Block> server_labels(sw), client_labels(cw);
        for (auto& b : server_labels) b = r.get_block();
        for (std::size_t k = 0; k < cw; ++k) {
          const Block y0 = r.get_block(), y1 = r.get_block();
          client_labels[k] = (bits[k] ? y1 : y0) ^ pads[i][k];
        }
        const auto out = gc::evaluate(ac.circuit, gcs[i], server_labels, client_labels);
        share = ac.decode(gc::decode_outputs(gcs[i], out));
        for (u64 v : share)
          if (v >= p.value()) throw Error("garbled circuit output outside [0, p)");
        shares_at_end = true;
      }
    }
    msg.set_label("");
    if (shares_at_end) {
      const auto s = values_from_bytes(msg.receive(MsgType::output_share), plan_.output_size, p.value());
      for (std::size_t j = 0; j < share.size(); ++j) share[j] = p.sub(share[j], s[j]);
    }
    res.output = std::move(share);
    res.times.online_ms = ms_since(t0);
  } catch (const std::exception& e) {
    msg.send_error(e.what());
    throw;
  }
  return res;
}

InferenceReport run_inference(const NetworkDescriptor& net, std::span<const u64> input, const ServerOptions& sopt,
                              const ClientOptions& copt) {
  Server server(net, sopt);
  auto [cs, ss] = make_pipe();
  Messenger cm(*cs, Role::client), sm(*ss, Role::server);
  std::exception_ptr server_error;
  std::thread t([&] {
    try {
      server.run(sm);
    } catch (...) {
      server_error = std::current_exception();
      ss->close();
    }
  });
  InferenceReport rep;
  std::exception_ptr client_error;
  bool peer_reported = false;
  try {
    rep.client = Client(copt).run(cm, input);
  } catch (const std::exception& e) {
    client_error = std::current_exception();
    peer_reported = std::string(e.what()).starts_with("peer reported");
    cs->close();
  }
  t.join();
  if (server_error && (!client_error || peer_reported)) std::rethrow_exception(server_error);
  if (client_error) std::rethrow_exception(client_error);
  rep.noise = server.noise_log();
  rep.transcript = cm.transcript();
  rep.server_transcript = sm.transcript();
  rep.plan = server.plan();
  rep.server_times = server.times();
  rep.encode_ms = server.encode_ms();
  return rep;
}

}  // namespace hinfer
