#include <cmath>
#include <cstdio>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "hinfer/protocol.hpp"
#include "hinfer/serialize.hpp"
#include "support.hpp"

using namespace hinfer;

namespace {

// 1x4x4 image, 3x3 same conv to two channels, fused ReLU and pooling, FC,
// square, FC.
NetworkDescriptor toy_net(u64 p, Prg& prg) {
  NetworkDescriptor net;
  net.name = "toy";
  net.p = p;
  net.input = Shape{1, 4, 4};
  net.layers = {random_conv(ConvSpec{4, 4, 1, 3, 3, 2, 1, 1, Padding::same}, p, 3, prg),
                activation(LayerKind::relu),
                activation(LayerKind::maxpool, 1),
                random_fc(8, 4, p, 3, prg),
                activation(LayerKind::square),
                random_fc(4, 3, p, 3, prg)};
  net.validate();
  return net;
}

ServerOptions server_opts(const RingParams& rp, u64 seed) {
  ServerOptions o;
  o.params = rp;
  o.seed = seed;
  return o;
}

void check_noise(const InferenceReport& rep) {
  REQUIRE(rep.noise.size() == rep.client.measured_bits.size());
  for (std::size_t i = 0; i < rep.noise.size(); ++i) {
    INFO(rep.noise[i].label);
    CHECK(rep.client.measured_bits[i] <= rep.noise[i].estimate_bits);
    CHECK(rep.noise[i].estimate_bits < rep.noise[i].line_bits);
  }
}

void check_lint(const InferenceReport& rep, const RingParams& rp) {
  const auto issues = lint_transcript(rep.plan, rep.transcript, ciphertext_wire_size(*Context::create(rp)));
  for (const auto& s : issues) MESSAGE(s);
  CHECK(issues.empty());
}

struct Keys {
  testing::Party party;
  RerandKey rk;
  explicit Keys(const RingParams& rp, u64 seed = 3) : party(rp, seed) { rk = party.kg.rerand_key(party.sk, party.prg); }
};

std::string temp_path(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

}  // namespace

TEST_CASE("fixed-point codec round trip and range") {
  const FixedPointCodec c{307201, 6};
  for (double x : {0.0, 1.0, -1.0, 2.5, -3.015625, 100.0, -2399.984375}) CHECK(c.decode(c.encode(x)) == x);
  CHECK(c.encode(-1.0) == 307201 - 64);
  CHECK(c.encode(0.0078125) == 1);
  CHECK(FixedPointCodec::to_signed(153600, 307201) == 153600);
  CHECK(FixedPointCodec::to_signed(153601, 307201) == -153600);
  CHECK(FixedPointCodec::from_signed(-153600, 307201) == 153601);
  CHECK_THROWS_AS(c.encode(1e6), Error);
  CHECK_THROWS_AS(c.encode(std::nan("")), Error);
}

TEST_CASE("reference evaluator on hand-computed layers") {
  const u64 p = 307201;
  auto s = [&](i64 v) { return FixedPointCodec::from_signed(v, p); };
  NetworkDescriptor net;
  net.p = p;
  net.input = Shape{1, 2, 4};
  Layer fc;
  fc.kind = LayerKind::fc;
  fc.n_i = 8;
  fc.n_o = 8;
  fc.weights.assign(64, 0);
  for (std::size_t i = 0; i < 8; ++i) fc.weights[i * 8 + i] = s(i % 2 ? -2 : 3);
  fc.bias = {s(1), 0, 0, 0, 0, 0, 0, s(-1)};
  net.layers = {fc};
  const std::vector<u64> x{s(1), s(2), s(-3), s(4), s(0), s(-1), s(7), s(5)};
  CHECK(reference_eval(net, x) == std::vector<u64>{s(4), s(-4), s(-9), s(-8), s(0), s(2), s(21), s(-11)});

  net.layers = {activation(LayerKind::relu, 1)};
  CHECK(reference_eval(net, x) == std::vector<u64>{0, 1, 0, 2, 0, 0, 3, 2});
  net.layers = {activation(LayerKind::square)};
  CHECK(reference_eval(net, x) == std::vector<u64>{1, 4, 9, 16, 0, 1, 49, 25});
  // Windows (1, 2, 0, -1) and (-3, 4, 7, 5).
  net.layers = {activation(LayerKind::maxpool)};
  CHECK(reference_eval(net, x) == std::vector<u64>{s(2), s(7)});
  net.layers = {activation(LayerKind::relu), activation(LayerKind::maxpool, 1)};
  CHECK(reference_eval(net, x) == std::vector<u64>{s(1), s(3)});
  const std::vector<u64> neg{s(-5), s(-3), s(-4), s(-6)};
  net.input = Shape{1, 2, 2};
  net.layers = {activation(LayerKind::maxpool, 1)};
  CHECK(reference_eval(net, neg) == std::vector<u64>{s(-2)});
  net.layers = {activation(LayerKind::maxpool, 2)};
  CHECK(reference_eval(net, neg) == std::vector<u64>{s(-1)});
}

TEST_CASE("network shapes and validation") {
  Prg prg(1);
  const auto d = network_d(307201, prg);
  const auto sh = d.shapes();
  CHECK(sh[1] == Shape{5, 24, 24});
  CHECK(sh[3] == Shape{5, 12, 12});
  CHECK(sh[6] == Shape{5, 4, 4});
  CHECK(sh.back() == Shape{1, 1, 10});
  auto bad = d;
  bad.layers[6].n_i = 81;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = d;
  bad.layers[0].weights[0] = 307201;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = d;
  bad.layers[1].shift = 20;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = d;
  bad.layers.insert(bad.layers.begin() + 1, activation(LayerKind::square));
  bad.layers[1].shift = 1;
  CHECK_THROWS_AS(bad.validate(), Error);
  NetworkDescriptor odd;
  odd.p = 307201;
  odd.input = Shape{1, 3, 4};
  odd.layers = {activation(LayerKind::maxpool)};
  CHECK_THROWS_AS(odd.validate(), Error);
}

TEST_CASE("network descriptor JSON round trip") {
  Prg prg(2);
  const auto a = network_a(307201, prg, 32);
  CHECK(NetworkDescriptor::from_json(a.to_json()) == a);
  auto d = network_d(307201, prg);
  d.layers[0].method = "one_per_ct";
  d.layers[6].method = "diagonal";
  const auto path = temp_path("hinfer_net_d.json");
  d.save(path);
  CHECK(NetworkDescriptor::load(path) == d);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(NetworkDescriptor::from_json("{"), Error);
  CHECK_THROWS_AS(NetworkDescriptor::from_json(R"({"format":"other"})"), Error);
  auto text = identity_fc(307201, 2).to_json();
  const auto pos = text.find("\"weights\"");
  REQUIRE(pos != std::string::npos);
  CHECK_THROWS_AS(NetworkDescriptor::from_json(text.substr(0, pos) + "\"weights\": \"AAAA\"}]}"), Error);
  CHECK_THROWS_AS(NetworkDescriptor::from_json(text.substr(0, pos) + "\"weights\": \"!!\"}]}"), Error);
}

TEST_CASE("input files") {
  Prg prg(3);
  const auto net = identity_fc(307201, 4);
  const auto path = temp_path("hinfer_input.json");
  const std::vector<u64> v{1, 307200, 5, 0};
  save_input(path, v, net.p);
  CHECK(load_input(path, net) == v);
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs(R"({"real": [0.5, -0.25, 1, 0]})", f);
    std::fclose(f);
  }
  auto scaled = net;
  scaled.input_scale_bits = 2;
  CHECK(load_input(path, scaled) == std::vector<u64>{2, 307200, 4, 0});
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs(R"({"fixed": [1, 2]})", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_input(path, net), Error);
  std::filesystem::remove(path);
}

TEST_CASE("frame header encoding") {
  const auto h = encode_header(FrameHeader{kWireMagic, kWireVersion, static_cast<u16>(MsgType::input_cts), 0x01020304ULL});
  const std::array<u8, 16> golden{'H', 'I', 'N', 'F', 1, 0, 16, 0, 4, 3, 2, 1, 0, 0, 0, 0};
  CHECK(h == golden);
  const auto back = decode_header(h);
  CHECK(back.type == 16);
  CHECK(back.body_len == 0x01020304ULL);
  auto bad = h;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_header(bad), Error);
  bad = h;
  bad[4] = 2;
  CHECK_THROWS_WITH_AS(decode_header(bad), doctest::Contains("version mismatch"), Error);
  bad = h;
  bad[15] = 1;
  CHECK_THROWS_AS(decode_header(bad), Error);
}

TEST_CASE("pipe and TCP channels carry framed messages") {
  auto exchange = [](Channel& a, Channel& b) {
    Messenger ma(a, Role::client), mb(b, Role::server);
    std::vector<u8> big(300000);
    for (std::size_t i = 0; i < big.size(); ++i) big[i] = static_cast<u8>(i * 7);
    std::thread t([&] {
      const auto got = mb.receive(MsgType::hello);
      mb.send(MsgType::plan, got);
    });
    ma.send(MsgType::hello, big);
    CHECK(ma.receive(MsgType::plan) == big);
    t.join();
    CHECK(ma.transcript().dump() == mb.transcript().dump());
    CHECK(ma.transcript().total_bytes() == 2 * (16 + big.size()));
  };
  {
    auto [a, b] = make_pipe();
    exchange(*a, *b);
  }
  {
    TcpListener l("127.0.0.1:0");
    REQUIRE(l.port() != 0);
    std::unique_ptr<Channel> server;
    std::thread t([&] { server = l.accept(); });
    auto client = tcp_connect("127.0.0.1:" + std::to_string(l.port()));
    t.join();
    exchange(*client, *server);
  }
}

TEST_CASE("messenger rejects unexpected and error frames") {
  auto [a, b] = make_pipe();
  Messenger ma(*a, Role::client), mb(*b, Role::server);
  ma.send(MsgType::hello, {});
  CHECK_THROWS_WITH_AS(mb.receive(MsgType::keys), doctest::Contains("unexpected message hello"), Error);
  ma.send_error("boom");
  CHECK_THROWS_WITH_AS(mb.receive(MsgType::keys), doctest::Contains("peer reported: boom"), Error);
  a->close();
  CHECK_THROWS_AS(mb.receive(MsgType::keys), Error);
}

TEST_CASE("ciphertext to shares") {
  Keys k(RingParams::standard());
  auto& P = k.party;
  Prg sp(11);
  SUBCASE("zero vector gives equal shares") {
    const std::vector<u64> zero(P.n(), 0);
    const auto [s, c] = ct_to_shares(P.ev, P.enc, P.enc.encrypt(zero, P.prg), k.rk, sp);
    CHECK(s.values == c.values);
  }
  SUBCASE("reconstruction over 100 trials") {
    for (int t = 0; t < 100; ++t) {
      const auto x = P.random_vec(P.n());
      const auto [s, c] = ct_to_shares(P.ev, P.enc, P.enc.encrypt(x, P.prg), k.rk, sp);
      REQUIRE(reconstruct(s, c, P.p()) == x);
    }
  }
  SUBCASE("masked slots look uniform") {
    // 10^4 slots of a fixed plaintext, 16 equal-width bins; the 0.999
    // quantile of chi-squared with 15 degrees of freedom is 37.7.
    const std::vector<u64> x(P.n(), 12345);
    std::vector<double> bins(16, 0);
    std::size_t total = 0;
    while (total < 10000) {
      const auto [s, c] = ct_to_shares(P.ev, P.enc, P.enc.encrypt(x, P.prg), k.rk, sp);
      for (u64 v : c.values) {
        if (total == 10000) break;
        bins[v * 16 / P.p()] += 1;
        ++total;
      }
    }
    double chi2 = 0;
    for (double b : bins) chi2 += (b - 625.0) * (b - 625.0) / 625.0;
    CHECK(chi2 < 37.7);
  }
  SUBCASE("no budget left") {
    Ciphertext ct = P.enc.encrypt(P.random_vec(P.n()), P.prg);
    ct.noise = NoiseModel::line(P.ctx->params());
    CHECK_THROWS_WITH_AS(ct_to_shares(P.ev, P.enc, ct, k.rk, sp), doctest::Contains("noise budget"), Error);
    ct.noise = NoiseModel::line(P.ctx->params()) * 0.95;
    CHECK_THROWS_AS(ct_to_shares(P.ev, P.enc, ct, k.rk, sp), Error);
  }
}

TEST_CASE("flooding width") {
  const RingParams rp = RingParams::standard();
  CHECK(flood_bits_for(rp, 1000) == default_flood_bits(rp));
  const double line = NoiseModel::line(rp);
  const double b = flood_bits_for(rp, line * 0.8);
  CHECK(b < default_flood_bits(rp));
  CHECK(line * 0.8 + std::exp2(b) < line);
}

TEST_CASE("shares to ciphertext") {
  Keys k(RingParams::standard());
  auto& P = k.party;
  Prg cp(12), sp(13);
  SUBCASE("zero shares encrypt zero") {
    const std::vector<u64> zero(P.n(), 0);
    const auto ct = shares_to_ct(P.ev, P.enc, ShareVector{Role::client, zero}, ShareVector{Role::server, zero}, cp);
    CHECK(P.enc.decrypt(ct) == zero);
  }
  SUBCASE("random split round trip") {
    for (int t = 0; t < 20; ++t) {
      const auto y = P.random_vec(P.n());
      const auto s = P.random_vec(P.n());
      std::vector<u64> c(P.n());
      for (std::size_t i = 0; i < c.size(); ++i) c[i] = P.ctx->p().add(y[i], s[i]);
      const auto ct = shares_to_ct(P.ev, P.enc, ShareVector{Role::client, c}, ShareVector{Role::server, s}, cp);
      REQUIRE(P.enc.decrypt(ct) == y);
    }
  }
  SUBCASE("the round trip refreshes noise after a deep linear layer") {
    const auto w = WeightMatrix::random(128, 1024, P.p(), P.prg);
    const auto enc = encode_matrix(w, MatvecAlgorithm::hybrid, default_options(MatvecAlgorithm::hybrid), P.ev);
    P.ensure(required_perms(enc), enc.opt.w_relin);
    const auto v = P.random_vec(1024);
    const auto res = matvec(enc, P.enc.encrypt_windowed(pack_input(enc, v), enc.opt.w_pt, P.prg), P.keys, P.ev, P.prg);
    const auto expected = w.apply(v, P.ctx->p());
    const double before = P.enc.measured_noise(res.cts[0]);
    const auto [s, c] = ct_to_shares(P.ev, P.enc, res.cts[0], k.rk, sp);
    const auto fresh = shares_to_ct(P.ev, P.enc, c, s, cp);
    CHECK(unpack_output(enc, {P.enc.decrypt(fresh)}) == expected);
    const double after = P.enc.measured_noise(fresh);
    MESSAGE("noise before " << std::log2(before) << " bits, after " << std::log2(after) << " bits");
    CHECK(after < before);
    CHECK(fresh.noise < res.cts[0].noise);
  }
}

TEST_CASE("square activation") {
  Keys k(RingParams::standard());
  auto& P = k.party;
  const ModulusP& p = P.ctx->p();
  Prg sp(21), cp(22);
  auto split = [&](const std::vector<u64>& x) {
    ShareVector s{Role::server, P.random_vec(x.size())}, c{Role::client, std::vector<u64>(x.size())};
    for (std::size_t i = 0; i < x.size(); ++i) c.values[i] = p.add(x[i], s.values[i]);
    return std::pair{s, c};
  };
  SUBCASE("zero") {
    const auto [s, c] = split(std::vector<u64>(100, 0));
    const auto [ys, yc] = square_activation(P.ev, P.enc, s, c, k.rk, sp, cp);
    CHECK(reconstruct(ys, yc, P.p()) == std::vector<u64>(100, 0));
  }
  SUBCASE("negative fixed-point value") {
    const FixedPointCodec codec{P.p(), 4};
    const auto [s, c] = split(std::vector<u64>(10, codec.encode(-3.0)));
    const auto [ys, yc] = square_activation(P.ev, P.enc, s, c, k.rk, sp, cp);
    CHECK(reconstruct(ys, yc, P.p()) == std::vector<u64>(10, 9 * 16 * 16));
  }
  SUBCASE("random vectors across several ciphertexts") {
    for (std::size_t len : {std::size_t{1}, std::size_t{2048}, std::size_t{5000}}) {
      const auto x = P.random_vec(len);
      const auto [s, c] = split(x);
      const auto [ys, yc] = square_activation(P.ev, P.enc, s, c, k.rk, sp, cp);
      std::vector<u64> want(len);
      for (std::size_t i = 0; i < len; ++i) want[i] = p.mul(x[i], x[i]);
      CHECK(reconstruct(ys, yc, P.p()) == want);
    }
  }
  SUBCASE("client share alone") {
    const auto x = P.random_vec(64);
    const auto [s, c] = split(x);
    const auto [ys, yc] = square_activation(P.ev, P.enc, ShareVector{Role::server, std::vector<u64>(64, 0)},
                                            ShareVector{Role::client, x}, k.rk, sp, cp);
    std::vector<u64> want(64);
    for (std::size_t i = 0; i < 64; ++i) want[i] = p.mul(x[i], x[i]);
    CHECK(reconstruct(ys, yc, P.p()) == want);
  }
}

TEST_CASE("public plan round trip") {
  Prg prg(4);
  const auto net = network_d(307201, prg);
  const Server server(net, server_opts(RingParams::standard(), 1));
  const auto& plan = server.plan();
  const auto back = PublicPlan::deserialize(plan.serialize());
  CHECK(back.serialize() == plan.serialize());
  REQUIRE(plan.steps.size() == 7);
  CHECK(plan.steps[1].kind == StepKind::relu_maxpool);
  CHECK(plan.steps[1].shift == 3);
  CHECK(plan.steps[1].gather.size() == 4 * 5 * 12 * 12);
  CHECK(plan.steps[5].kind == StepKind::relu);
  CHECK(plan.steps[6].last);
  CHECK(!plan.steps[4].last);
  auto bytes = plan.serialize();
  bytes.resize(bytes.size() / 2);
  CHECK_THROWS_AS(PublicPlan::deserialize(bytes), Error);
}

TEST_CASE("toy network end to end at n = 64") {
  const RingParams rp = RingParams::toy64();
  Prg prg(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto net = toy_net(rp.p.value(), prg);
    const auto input = random_image(net.input, 3, net.p, prg);
    const auto rep = run_inference(net, input, server_opts(rp, 1 + trial), ClientOptions{2 + static_cast<u64>(trial)});
    CHECK(rep.client.output == reference_eval(net, input));
    check_noise(rep);
    check_lint(rep, rp);
    CHECK(rep.transcript.dump() == rep.server_transcript.dump());
  }
}

TEST_CASE("standalone activation layers and a trailing activation") {
  const RingParams rp = RingParams::toy64();
  Prg prg(6);
  NetworkDescriptor net;
  net.p = rp.p.value();
  net.input = Shape{2, 4, 4};
  net.layers = {activation(LayerKind::maxpool, 2), activation(LayerKind::square), activation(LayerKind::relu, 3)};
  const auto input = random_image(net.input, 16, net.p, prg);
  const auto rep = run_inference(net, input, server_opts(rp, 3), ClientOptions{4});
  CHECK(rep.client.output == reference_eval(net, input));
  check_lint(rep, rp);
  CHECK(rep.transcript.entries.back().type == MsgType::output_share);
}

TEST_CASE("single identity FC layer returns the input") {
  const RingParams rp = RingParams::standard();
  Prg prg(7);
  const auto net = identity_fc(rp.p.value(), 64);
  std::vector<u64> x(64);
  for (auto& v : x) v = prg.uniform(rp.p.value());
  const auto rep = run_inference(net, x, server_opts(rp, 5), ClientOptions{6});
  CHECK(rep.client.output == x);
  check_noise(rep);
}

TEST_CASE("FC online bandwidth is (w + 1) ciphertexts") {
  const RingParams rp = RingParams::standard();
  const auto ctx = Context::create(rp);
  const std::size_t ct = ciphertext_wire_size(*ctx);
  REQUIRE(ct - kPaheHeaderSize == 32768);
  Prg prg(8);
  NetworkDescriptor net;
  net.p = rp.p.value();
  net.input = Shape{1, 1, 1024};
  net.layers = {random_fc(1024, 128, net.p, 3, prg)};
  const auto x = random_image(net.input, 8, net.p, prg);
  const auto rep = run_inference(net, x, server_opts(rp, 1), ClientOptions{2});
  CHECK(rep.client.output == reference_eval(net, x));
  const u64 w = static_cast<u64>(window_count(ctx->p(), rep.plan.steps[0].w_pt));
  CHECK(w == 2);
  const u64 online = rep.transcript.bytes(Phase::online);
  // Two frame headers, the count words, and one pahe header per ciphertext.
  const u64 overhead = 2 * kFrameHeaderSize + 8 + 4 + (w + 1) * kPaheHeaderSize;
  CHECK(online == (w + 1) * 32768 + overhead);
  CHECK(rep.transcript.bytes(Phase::online, Role::client) == w * ct + 8 + kFrameHeaderSize);
  CHECK(rep.transcript.bytes(Phase::online, Role::server) == ct + 4 + kFrameHeaderSize);
}

TEST_CASE("network A end to end") {
  const RingParams rp = RingParams::standard();
  Prg prg(9);
  const auto net = network_a(rp.p.value(), prg);
  const auto input = random_image(net.input, 3, net.p, prg);
  const auto rep = run_inference(net, input, server_opts(rp, 1), ClientOptions{2});
  CHECK(rep.client.output == reference_eval(net, input));
  check_noise(rep);
  check_lint(rep, rp);
  CHECK(rep.transcript.bytes(Phase::offline) == 0);
  MESSAGE("online " << rep.transcript.bytes(Phase::online) << " bytes, " << rep.client.times.online_ms << " ms");
}

TEST_CASE("network D end to end") {
  const RingParams rp = RingParams::standard();
  Prg prg(10);
  const auto net = network_d(rp.p.value(), prg);
  const auto input = random_image(net.input, 3, net.p, prg);
  const auto rep = run_inference(net, input, server_opts(rp, 1), ClientOptions{2});
  CHECK(rep.client.output == reference_eval(net, input));
  check_noise(rep);
  check_lint(rep, rp);
  MESSAGE("offline " << rep.transcript.bytes(Phase::offline) << " bytes, online " << rep.transcript.bytes(Phase::online)
                     << " bytes");
}

TEST_CASE("transcripts are reproducible under fixed seeds") {
  const RingParams rp = RingParams::toy64();
  Prg prg(12);
  const auto net = toy_net(rp.p.value(), prg);
  const auto input = random_image(net.input, 3, net.p, prg);
  const auto a = run_inference(net, input, server_opts(rp, 9), ClientOptions{10});
  const auto b = run_inference(net, input, server_opts(rp, 9), ClientOptions{10});
  CHECK(a.transcript.dump() == b.transcript.dump());
  CHECK(a.client.output == b.client.output);
  const std::string golden =
      "setup client hello 13 -\n"
      "setup server plan ";
  CHECK(a.transcript.dump().starts_with(golden));
}

TEST_CASE("transcript linter flags deviations") {
  const RingParams rp = RingParams::toy64();
  Prg prg(13);
  const auto net = toy_net(rp.p.value(), prg);
  const auto input = random_image(net.input, 3, net.p, prg);
  const auto rep = run_inference(net, input, server_opts(rp, 1), ClientOptions{2});
  const std::size_t ct = ciphertext_wire_size(*Context::create(rp));
  CHECK(lint_transcript(rep.plan, rep.transcript, ct).empty());
  auto t = rep.transcript;
  t.entries.pop_back();
  CHECK(!lint_transcript(rep.plan, t, ct).empty());
  t = rep.transcript;
  std::swap(t.entries[3], t.entries[4]);
  CHECK(!lint_transcript(rep.plan, t, ct).empty());
  t = rep.transcript;
  for (auto& e : t.entries)
    if (e.type == MsgType::masked_cts) e.body_bytes += ct;
  CHECK(!lint_transcript(rep.plan, t, ct).empty());
  t = rep.transcript;
  for (auto& e : t.entries)
    if (e.type == MsgType::gc_labels) e.phase = Phase::offline;
  CHECK(!lint_transcript(rep.plan, t, ct).empty());
}

TEST_CASE("session errors") {
  const RingParams rp = RingParams::toy64();
  Prg prg(14);
  const auto net = toy_net(rp.p.value(), prg);
  SUBCASE("input size mismatch") {
    const std::vector<u64> short_input(3, 0);
    CHECK_THROWS_WITH_AS(run_inference(net, short_input, server_opts(rp, 1), ClientOptions{2}), doctest::Contains("input size"),
                         Error);
  }
  SUBCASE("modulus mismatch") {
    auto other = net;
    other.p = 307201;
    for (auto& l : other.layers) {
      l.weights.clear();
      l.bias.clear();
    }
    CHECK_THROWS(Server(other, server_opts(rp, 1)));
  }
  SUBCASE("peer speaks another version") {
    auto [a, b] = make_pipe();
    Messenger ms(*b, Role::server);
    Server server(net, server_opts(rp, 1));
    std::thread t([&] {
      const auto h = encode_header(FrameHeader{kWireMagic, 7, static_cast<u16>(MsgType::hello), 0});
      a->write_all(h);
    });
    CHECK_THROWS_WITH_AS(server.run(ms), doctest::Contains("version mismatch"), Error);
    t.join();
  }
  SUBCASE("server closes early") {
    auto [a, b] = make_pipe();
    Messenger mc(*a, Role::client);
    b->close();
    const auto input = random_image(net.input, 3, net.p, prg);
    CHECK_THROWS_AS(Client(ClientOptions{1}).run(mc, input), Error);
  }
}

TEST_CASE("TCP session") {
  const RingParams rp = RingParams::toy64();
  Prg prg(15);
  const auto net = toy_net(rp.p.value(), prg);
  const auto input = random_image(net.input, 3, net.p, prg);
  TcpListener l("127.0.0.1:0");
  Server server(net, server_opts(rp, 1));
  std::thread t([&] {
    auto ch = l.accept();
    Messenger m(*ch, Role::server);
    server.run(m);
  });
  auto ch = tcp_connect("127.0.0.1:" + std::to_string(l.port()));
  Messenger m(*ch, Role::client);
  const auto res = Client(ClientOptions{2}).run(m, input);
  t.join();
  CHECK(res.output == reference_eval(net, input));
}
