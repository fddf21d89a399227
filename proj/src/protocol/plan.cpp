#include "hinfer/protocol.hpp"
#include "hinfer/serialize.hpp"
#include "json.hpp"

namespace hinfer {

using nlohmann::json;

std::string to_string(StepKind k) {
  switch (k) {
    case StepKind::linear: return "linear";
    case StepKind::square: return "square";
    case StepKind::relu: return "relu";
    case StepKind::maxpool: return "maxpool";
    case StepKind::relu_maxpool: return "relu_maxpool";
  }
  return "?";
}

namespace {

StepKind step_kind_from(const std::string& s) {
  for (StepKind k : {StepKind::linear, StepKind::square, StepKind::relu, StepKind::maxpool, StepKind::relu_maxpool})
    if (to_string(k) == s) return k;
  throw Error("plan: unknown step kind " + s);
}

}  // namespace

std::vector<u8> PublicPlan::serialize() const {
  json j;
  j["m"] = m;
  j["p"] = p;
  j["q"] = q;
  j["input_size"] = input_size;
  j["output_size"] = output_size;
  json ks = json::array();
  for (const auto& k : keys) ks.push_back({k.id.rot, k.id.swap, k.w_relin});
  j["keys"] = ks;
  json ss = json::array();
  for (const auto& s : steps) {
    json o;
    o["kind"] = to_string(s.kind);
    o["label"] = s.label;
    o["in_size"] = s.in_size;
    o["out_size"] = s.out_size;
    if (s.kind == StepKind::linear) {
      o["in_cts"] = s.in_cts;
      o["out_cts"] = s.out_cts;
      o["in_map"] = s.in_map;
      json om = json::array();
      for (const auto& [ct, slot] : s.out_map) om.push_back({ct, slot});
      o["out_map"] = om;
      o["last"] = s.last;
    }
    if (s.kind == StepKind::linear || s.kind == StepKind::square) o["w_pt"] = s.w_pt;
    if (s.garbled()) {
      o["gather"] = s.gather;
      o["shift"] = s.shift;
    }
    ss.push_back(o);
  }
  j["steps"] = ss;
  const std::string text = j.dump();
  return std::vector<u8>(text.begin(), text.end());
}

PublicPlan PublicPlan::deserialize(std::span<const u8> bytes) {
  PublicPlan plan;
  try {
    const json j = json::parse(bytes.begin(), bytes.end());
    plan.m = j.at("m").get<u64>();
    plan.p = j.at("p").get<u64>();
    plan.q = j.at("q").get<u64>();
    plan.input_size = j.at("input_size").get<std::size_t>();
    plan.output_size = j.at("output_size").get<std::size_t>();
    for (const auto& k : j.at("keys")) plan.keys.push_back(KeyRequest{PermId{k.at(0).get<u32>(), k.at(1).get<bool>()}, k.at(2).get<int>()});
    for (const auto& o : j.at("steps")) {
      PlanStep s;
      s.kind = step_kind_from(o.at("kind").get<std::string>());
      s.label = o.at("label").get<std::string>();
      s.in_size = o.at("in_size").get<std::size_t>();
      s.out_size = o.at("out_size").get<std::size_t>();
      if (s.kind == StepKind::linear) {
        s.in_cts = o.at("in_cts").get<std::size_t>();
        s.out_cts = o.at("out_cts").get<std::size_t>();
        s.in_map = o.at("in_map").get<std::vector<std::vector<i64>>>();
        for (const auto& e : o.at("out_map")) s.out_map.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
        s.last = o.at("last").get<bool>();
      }
      if (s.kind == StepKind::linear || s.kind == StepKind::square) s.w_pt = o.at("w_pt").get<int>();
      if (s.garbled()) {
        s.gather = o.at("gather").get<std::vector<std::size_t>>();
        s.shift = o.at("shift").get<unsigned>();
      }
      plan.steps.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("plan: malformed message: ") + e.what());
  }
  const std::size_t n = plan.m / 2;
  for (const auto& s : plan.steps) {
    if (s.kind != StepKind::linear) continue;
    if (s.in_map.size() != s.in_cts || s.out_map.size() != s.out_size) throw Error("plan: inconsistent linear step");
    for (const auto& ct : s.in_map)
      for (i64 v : ct)
        if (ct.size() != n || v < -1 || v >= static_cast<i64>(s.in_size)) throw Error("plan: bad input map");
    for (const auto& [ct, slot] : s.out_map)
      if (ct >= s.out_cts || slot >= n) throw Error("plan: bad output map");
  }
  for (const auto& s : plan.steps)
    for (std::size_t g : s.gather)
      if (g >= s.in_size) throw Error("plan: bad gather index");
  return plan;
}

gc::ActCircuit build_step_circuit(const PlanStep& s, u64 p) {
  switch (s.kind) {
    case StepKind::relu: return gc::build_relu_block(p, s.out_size, s.shift);
    case StepKind::maxpool: return gc::build_maxpool_block(p, s.out_size, false, s.shift);
    case StepKind::relu_maxpool: return gc::build_maxpool_block(p, s.out_size, true, s.shift);
    default: throw std::invalid_argument("build_step_circuit: not a garbled step");
  }
}

std::vector<std::string> lint_transcript(const PublicPlan& plan, const Transcript& t, std::size_t ct_bytes) {
  struct Expect {
    Phase phase;
    Role sender;
    MsgType type;
    std::string label;
    std::optional<u64> body;
  };
  std::vector<Expect> want;
  want.push_back({Phase::setup, Role::client, MsgType::hello, "", std::nullopt});
  want.push_back({Phase::setup, Role::server, MsgType::plan, "", std::nullopt});
  want.push_back({Phase::setup, Role::client, MsgType::keys, "", std::nullopt});
  const ModulusP mp(plan.p);
  const std::size_t n = plan.m / 2;
  for (const auto& s : plan.steps) {
    if (!s.garbled()) continue;
    const std::size_t wires = s.gather.size() * gc::value_width(plan.p);
    want.push_back({Phase::offline, Role::server, MsgType::gc_tables, s.label, std::nullopt});
    want.push_back({Phase::offline, Role::server, MsgType::ot_setup, s.label, 32});
    want.push_back({Phase::offline, Role::client, MsgType::ot_request, s.label, 32 * wires});
  }
  bool shares_at_end = true;
  for (const auto& s : plan.steps) {
    switch (s.kind) {
      case StepKind::linear: {
        const u64 w = static_cast<u64>(window_count(mp, s.w_pt));
        want.push_back({Phase::online, Role::client, MsgType::input_cts, s.label, 8 + s.in_cts * w * ct_bytes});
        want.push_back({Phase::online, Role::server, s.last ? MsgType::output_cts : MsgType::masked_cts, s.label,
                        4 + s.out_cts * ct_bytes});
        shares_at_end = !s.last;
        break;
      }
      case StepKind::square: {
        const u64 w = static_cast<u64>(window_count(mp, s.w_pt));
        const u64 cts = (s.in_size + n - 1) / n;
        want.push_back({Phase::online, Role::client, MsgType::square_cts, s.label, 8 + cts * w * ct_bytes});
        want.push_back({Phase::online, Role::server, MsgType::square_resp, s.label, 4 + cts * ct_bytes});
        shares_at_end = true;
        break;
      }
      default: {
        const std::size_t width = gc::value_width(plan.p);
        const u64 client_wires = s.gather.size() * width;
        const u64 server_wires = (s.gather.size() + s.out_size) * width;
        want.push_back({Phase::online, Role::client, MsgType::ot_correction, s.label, (client_wires + 7) / 8});
        want.push_back({Phase::online, Role::server, MsgType::gc_labels, s.label, 16 * server_wires + 32 * client_wires});
        shares_at_end = true;
        break;
      }
    }
  }
  if (shares_at_end) want.push_back({Phase::online, Role::server, MsgType::output_share, "", 4 * plan.output_size});

  std::vector<std::string> issues;
  if (t.entries.size() != want.size())
    issues.push_back("expected " + std::to_string(want.size()) + " messages, transcript has " + std::to_string(t.entries.size()));
  const std::size_t k = std::min(t.entries.size(), want.size());
  for (std::size_t i = 0; i < k; ++i) {
    const auto& e = t.entries[i];
    const auto& w = want[i];
    const std::string at = "message " + std::to_string(i) + " (" + to_string(e.type) + "): ";
    if (e.type != w.type) issues.push_back(at + "expected " + to_string(w.type));
    if (e.sender != w.sender) issues.push_back(at + "wrong sender");
    if (e.phase != w.phase) issues.push_back(at + "sent in the " + to_string(e.phase) + " phase");
    if (!w.label.empty() && e.label != w.label) issues.push_back(at + "belongs to step " + e.label + ", expected " + w.label);
    if (w.body && e.body_bytes != *w.body)
      issues.push_back(at + "body has " + std::to_string(e.body_bytes) + " bytes, expected " + std::to_string(*w.body));
  }
  return issues;
}

}  // namespace hinfer
