#include <cmath>

#include "hinfer/protocol.hpp"

namespace hinfer {

std::vector<u64> reconstruct(const ShareVector& server, const ShareVector& client, u64 p) {
  if (server.values.size() != client.values.size()) throw std::invalid_argument("reconstruct: share lengths differ");
  std::vector<u64> x(server.values.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (client.values[i] + p - server.values[i] % p) % p;
  return x;
}

double flood_bits_for(const RingParams& rp, double noise) {
  const double line = NoiseModel::line(rp);
  const double zero_noise = NoiseModel::fresh(rp) * std::sqrt(2.0 * static_cast<double>(rp.n) * 2.0 / 3.0);
  const double room = line * (15.0 / 16.0) - noise - zero_noise - static_cast<double>(std::abs(rp.r));
  if (room < 2) throw Error("noise budget exceeded: no room left for flooding");
  return std::min(default_flood_bits(rp), std::floor(std::log2(room) * 16) / 16);
}

Masked mask_and_flood(const Evaluator& ev, const Ciphertext& ct, const RerandKey& rk, Prg& prg, bool mask) {
  const Context& ctx = ev.context();
  const RingParams& rp = ctx.params();
  const double line = NoiseModel::line(rp);
  if (!(ct.noise < line)) throw Error("noise budget exceeded before masking");
  Masked out;
  out.r.assign(ctx.n(), 0);
  Ciphertext c = ct;
  if (mask) {
    for (auto& x : out.r) x = prg.uniform(ctx.p().value());
    c = ev.add_plain(c, out.r);
  }
  out.noise_before = c.noise;
  out.flood_bits = flood_bits_for(rp, c.noise);
  out.ct = ev.flood(c, rk, out.flood_bits, prg);
  if (!(out.ct.noise < line)) throw Error("noise budget exceeded after flooding");
  return out;
}

std::pair<ShareVector, ShareVector> ct_to_shares(const Evaluator& ev, const Encryptor& client, const Ciphertext& ct, const RerandKey& rk,
                                                 Prg& server_prg) {
  Masked m = mask_and_flood(ev, ct, rk, server_prg);
  return {ShareVector{Role::server, std::move(m.r)}, ShareVector{Role::client, client.decrypt(m.ct)}};
}

Ciphertext shares_to_ct(const Evaluator& ev, const Encryptor& client, const ShareVector& c_y, const ShareVector& s_y, Prg& client_prg) {
  const ModulusP& p = ev.context().p();
  const Ciphertext ct = client.encrypt(c_y.values, client_prg);
  std::vector<u64> neg(s_y.values.size());
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = p.neg(p.reduce(s_y.values[i]));
  return ev.add_plain(ct, neg);
}

SquareReply square_server(const Evaluator& ev, const std::vector<WindowedCiphertext>& c, std::span<const u64> s, const RerandKey& rk,
                          Prg& prg) {
  const Context& ctx = ev.context();
  const ModulusP& p = ctx.p();
  const std::size_t n = ctx.n();
  if (s.size() > c.size() * n) throw std::invalid_argument("square: more shares than slots");
  SquareReply out;
  out.m.assign(s.size(), 0);
  for (std::size_t k = 0; k < c.size(); ++k) {
    std::vector<u64> minus2s(n, 0), s2(n, 0);
    for (std::size_t j = 0; j < n && k * n + j < s.size(); ++j) {
      const u64 v = p.reduce(s[k * n + j]);
      minus2s[j] = p.neg(p.add(v, v));
      s2[j] = p.mul(v, v);
    }
    const PlaintextWindows w = ev.encode_windows(minus2s, c[k].w_pt);
    const Ciphertext prod = w.zero ? ev.zero() : ev.scmult(c[k], w);
    Masked m = mask_and_flood(ev, ev.add_plain(prod, s2), rk, prg);
    for (std::size_t j = 0; j < n && k * n + j < s.size(); ++j) out.m[k * n + j] = m.r[j];
    out.noise_before.push_back(m.noise_before);
    out.flood_bits.push_back(m.flood_bits);
    out.cts.push_back(std::move(m.ct));
  }
  return out;
}

std::vector<u64> square_client(const Encryptor& enc, std::span<const u64> c, const std::vector<Ciphertext>& reply) {
  const Context& ctx = *enc.secret_key().ctx;
  const ModulusP& p = ctx.p();
  const std::size_t n = ctx.n();
  if (c.size() > reply.size() * n) throw std::invalid_argument("square: reply has too few ciphertexts");
  std::vector<u64> out(c.size());
  for (std::size_t k = 0; k < reply.size(); ++k) {
    const auto d = enc.decrypt(reply[k]);
    for (std::size_t j = 0; j < n && k * n + j < c.size(); ++j) {
      const u64 v = p.reduce(c[k * n + j]);
      out[k * n + j] = p.add(p.mul(v, v), d[j]);
    }
  }
  return out;
}

std::pair<ShareVector, ShareVector> square_activation(const Evaluator& ev, const Encryptor& client, const ShareVector& server,
                                                      const ShareVector& client_share, const RerandKey& rk, Prg& server_prg,
                                                      Prg& client_prg, int w_pt) {
  const std::size_t n = ev.context().n();
  const auto& c = client_share.values;
  if (server.values.size() != c.size()) throw std::invalid_argument("square: share lengths differ");
  std::vector<WindowedCiphertext> cts;
  for (std::size_t k = 0; k * n < c.size() || (c.empty() && k == 0); ++k) {
    std::vector<u64> slots(n, 0);
    for (std::size_t j = 0; j < n && k * n + j < c.size(); ++j) slots[j] = c[k * n + j];
    cts.push_back(client.encrypt_windowed(slots, w_pt, client_prg));
  }
  const SquareReply reply = square_server(ev, cts, server.values, rk, server_prg);
  return {ShareVector{Role::server, reply.m}, ShareVector{Role::client, square_client(client, c, reply.cts)}};
}

}  // namespace hinfer
