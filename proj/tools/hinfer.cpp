#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "hinfer/bench.hpp"
#include "hinfer/protocol.hpp"
#include "json.hpp"

using namespace hinfer;

namespace {

RingParams params_by_name(const std::string& name) {
  if (name == "standard") return RingParams::standard();
  if (name == "toy64") return RingParams::toy64();
  throw Error("unknown parameter set " + name + " (standard, toy64)");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

int params_find(const std::vector<int>& log_ps, u64 m, int r_bound, bool as_json) {
  for (int lp : log_ps) {
    const PrimePair pp = find_prime_pair(lp, m, r_bound);
    const u64 delta = pp.q.delta();
    if (as_json) {
      nlohmann::ordered_json j;
      j["log_p"] = lp;
      j["m"] = m;
      j["p"] = pp.p.value();
      j["q"] = pp.q.value();
      j["delta"] = delta;
      j["r"] = pp.r;
      std::cout << j.dump() << '\n';
    } else {
      std::cout << "log_p " << lp << "  p " << pp.p.value() << "  q " << pp.q.value() << " = 2^60 - " << delta;
      if ((delta + 1) % m == 0) std::cout << " = 2^60 - " << m << "*" << (delta + 1) / m << " + 1";
      std::cout << "  r " << pp.r << '\n';
    }
  }
  return 0;
}

void print_values(const std::vector<u64>& out, u64 p, int scale_bits) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const i64 v = FixedPointCodec::to_signed(out[i], p);
    if (v > FixedPointCodec::to_signed(out[best], p)) best = i;
    std::cout << i << ' ' << v;
    if (scale_bits > 0) std::cout << ' ' << std::ldexp(static_cast<double>(v), -scale_bits);
    std::cout << '\n';
  }
  if (!out.empty()) std::cout << "argmax " << best << '\n';
}

int run_bench(const std::string& which, const bench::BenchOptions& opt, bool as_json) {
  using Fn = std::vector<bench::BenchReport> (*)(const bench::BenchOptions&);
  const std::vector<std::pair<std::string, Fn>> all{{"primitives", bench::bench_primitives},
                                                   {"matvec", bench::bench_matvec},
                                                   {"conv", bench::bench_conv},
                                                   {"act", bench::bench_activations},
                                                   {"net", bench::bench_networks}};
  if (as_json) {
    nlohmann::ordered_json h;
    h["hardware"] = bench::hardware_summary();
    h["trials"] = opt.trials;
    h["seed"] = opt.seed;
    std::cout << h.dump() << '\n';
  } else {
    std::cout << "# " << bench::hardware_summary() << '\n' << "# trials " << opt.trials << ", seed " << opt.seed << "\n";
  }
  for (const auto& [name, fn] : all) {
    if (which != "all" && which != name) continue;
    const auto reports = fn(opt);
    if (as_json)
      bench::print_json(std::cout, reports);
    else
      bench::print_table(std::cout, reports);
    std::cout.flush();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Private inference over packed lattice encryption and garbled circuits"};
  app.require_subcommand(1);

  auto* params = app.add_subcommand("params", "Parameter tools");
  auto* find = params->add_subcommand("find", "Search plaintext and pseudo-Mersenne ciphertext primes");
  params->require_subcommand(1);
  std::vector<int> log_ps{18, 22, 26, 30};
  u64 m = 4096;
  int r_bound = 2;
  bool json_out = false;
  find->add_option("--log-p", log_ps, "Target floor(log2 p), repeatable")->expected(1, -1);
  find->add_option("--m", m, "Cyclotomic order (power of two)");
  find->add_option("--r-bound", r_bound, "Largest |q mod p| tried");
  find->add_flag("--json", json_out, "One JSON object per row");

  auto* network = app.add_subcommand("network", "Network descriptors");
  network->require_subcommand(1);
  auto* gen = network->add_subcommand("generate", "Write a network with random quantized weights");
  std::string kind = "a", out_path, net_path, params_name = "standard";
  u64 seed = 1;
  std::size_t hidden = 0, channels = 5, size = 16;
  gen->add_option("--kind", kind, "a, d or identity")->check(CLI::IsMember({"a", "d", "identity"}));
  gen->add_option("--out", out_path, "Output file")->required();
  gen->add_option("--seed", seed, "Weight seed");
  gen->add_option("--hidden", hidden, "Hidden width (a: 128, d: 32)");
  gen->add_option("--channels", channels, "Convolution channels (d)");
  gen->add_option("--size", size, "Vector length (identity)");
  gen->add_option("--params", params_name, "Parameter set whose p is used: standard or toy64");
  auto* show = network->add_subcommand("show", "Print layers and shapes");
  show->add_option("file", net_path, "Network file")->required();

  auto* input = app.add_subcommand("input", "Input files");
  input->require_subcommand(1);
  auto* rnd = input->add_subcommand("random", "Write a random image for a network");
  int scale_bits = 3;
  rnd->add_option("--network", net_path, "Network file")->required();
  rnd->add_option("--out", out_path, "Output file")->required();
  rnd->add_option("--seed", seed, "Pixel seed");
  rnd->add_option("--scale-bits", scale_bits, "Pixels lie in [0, 2^bits]");

  auto* eval = app.add_subcommand("eval", "Plaintext fixed-point reference evaluation");
  std::string input_path;
  eval->add_option("--network", net_path, "Network file")->required();
  eval->add_option("--input", input_path, "Input file")->required();

  auto* serve = app.add_subcommand("serve", "Hold a network and answer classification requests");
  std::string listen = "127.0.0.1:7000", transcript_path;
  std::size_t connections = 0;
  serve->add_option("--network", net_path, "Network file")->required();
  serve->add_option("--listen", listen, "host:port, port 0 picks a free one");
  auto* serve_seed = serve->add_option("--seed", seed, "Deterministic randomness (testing only)");
  serve->add_option("--dump-transcript", transcript_path, "Write the message transcript of the last session");
  serve->add_option("--connections", connections, "Exit after this many sessions (0: run forever)");
  serve->add_option("--params", params_name, "Parameter set: standard or toy64");

  auto* classify = app.add_subcommand("classify", "Classify an input with a remote network");
  std::string connect = "127.0.0.1:7000";
  classify->add_option("--input", input_path, "Input file")->required();
  classify->add_option("--connect", connect, "Server host:port");
  auto* classify_seed = classify->add_option("--seed", seed, "Deterministic randomness (testing only)");
  classify->add_option("--dump-transcript", transcript_path, "Write the message transcript");
  int output_scale = 0;
  classify->add_option("--scale-bits", output_scale, "Scale for real-valued inputs and printed outputs");

  auto* bench_cmd = app.add_subcommand("bench", "Microbenchmarks with correctness oracles");
  std::string which;
  bench::BenchOptions bopt;
  bench_cmd->add_option("which", which, "primitives, matvec, conv, act, net or all")
      ->required()
      ->check(CLI::IsMember({"primitives", "matvec", "conv", "act", "net", "all"}));
  bench_cmd->add_flag("--json", json_out, "One JSON object per line");
  bench_cmd->add_option("--trials", bopt.trials, "Timed trials (even counts are bumped to odd)");
  bench_cmd->add_option("--seed", bopt.seed, "Seed for inputs and keys");
  bench_cmd->add_option("--warmup", bopt.warmup, "Untimed runs before timing");
  bench_cmd->add_option("--sizes", bopt.sizes, "Activation output counts (act)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (find->parsed()) return params_find(log_ps, m, r_bound, json_out);

    if (gen->parsed()) {
      const u64 p = params_by_name(params_name).p.value();
      Prg prg(seed, 71);
      NetworkDescriptor net;
      if (kind == "a") net = network_a(p, prg, hidden ? hidden : 128);
      else if (kind == "d") net = network_d(p, prg, channels, hidden ? hidden : 32);
      else net = identity_fc(p, size);
      net.save(out_path);
      std::cout << "wrote " << net.name << " with " << net.layers.size() << " layers to " << out_path << '\n';
      return 0;
    }

    if (show->parsed()) {
      const auto net = NetworkDescriptor::load(net_path);
      const auto shapes = net.shapes();
      std::cout << net.name << "  p " << net.p << "  input scale " << net.input_scale_bits << "  input " << net.input.c << "x"
                << net.input.h << "x" << net.input.w << '\n';
      for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto& l = net.layers[i];
        const auto& s = shapes[i + 1];
        std::cout << std::setw(3) << i << "  " << std::left << std::setw(8) << to_string(l.kind) << std::right << " -> " << s.c << "x"
                  << s.h << "x" << s.w;
        if (l.shift) std::cout << "  shift " << l.shift;
        if (!l.method.empty()) std::cout << "  method " << l.method;
        std::cout << '\n';
      }
      return 0;
    }

    if (rnd->parsed()) {
      const auto net = NetworkDescriptor::load(net_path);
      Prg prg(seed, 72);
      save_input(out_path, random_image(net.input, scale_bits, net.p, prg), net.p);
      return 0;
    }

    if (eval->parsed()) {
      const auto net = NetworkDescriptor::load(net_path);
      print_values(reference_eval(net, load_input(input_path, net)), net.p, 0);
      return 0;
    }

    if (serve->parsed()) {
      ServerOptions so;
      so.params = params_by_name(params_name);
      so.seed = seed;
      so.entropy = serve_seed->count() == 0;
      Server server(NetworkDescriptor::load(net_path), so);
      TcpListener listener(listen);
      std::cerr << "listening on port " << listener.port() << ", " << server.plan().steps.size() << " steps, encoded in "
                << server.encode_ms() << " ms" << std::endl;
      for (std::size_t served = 0; connections == 0 || served < connections; ++served) {
        auto ch = listener.accept();
        Messenger msg(*ch, Role::server);
        try {
          server.run(msg);
          const auto& t = server.times();
          std::cerr << "session " << served << ": setup " << t.setup_ms << " ms, offline " << t.offline_ms << " ms, online "
                    << t.online_ms << " ms, " << msg.transcript().total_bytes() << " bytes" << std::endl;
        } catch (const std::exception& e) {
          std::cerr << "session " << served << " failed: " << e.what() << std::endl;
        }
        if (!transcript_path.empty()) write_text(transcript_path, msg.transcript().dump());
      }
      return 0;
    }

    if (classify->parsed()) {
      const auto values = load_signed_input(input_path, output_scale);
      auto ch = tcp_connect(connect);
      Messenger msg(*ch, Role::client);
      ClientOptions co;
      co.seed = seed;
      co.entropy = classify_seed->count() == 0;
      Client client(co);
      ClientResult res;
      try {
        res = client.run(msg, std::span<const i64>(values));
      } catch (...) {
        if (!transcript_path.empty()) write_text(transcript_path, msg.transcript().dump());
        throw;
      }
      if (!transcript_path.empty()) write_text(transcript_path, msg.transcript().dump());
      print_values(res.output, client.plan().p, output_scale);
      std::cerr << "setup " << res.times.setup_ms << " ms, offline " << res.times.offline_ms << " ms, online " << res.times.online_ms
                << " ms; sent and received " << msg.transcript().total_bytes() << " bytes" << std::endl;
      return 0;
    }

    if (bench_cmd->parsed()) return run_bench(which, bopt, json_out);
  } catch (const bench::OracleFailure& e) {
    std::cerr << "oracle failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
