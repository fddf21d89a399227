#include <sodium.h>

#include <stdexcept>

#include "hinfer/gc.hpp"

namespace hinfer::gc {

namespace {

void init_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw Error("libsodium initialisation failed");
}

std::array<u8, 32> random_scalar(Prg& prg) {
  std::array<u8, crypto_core_ristretto255_NONREDUCEDSCALARBYTES> wide;
  prg.fill(wide);
  std::array<u8, 32> s;
  crypto_core_ristretto255_scalar_reduce(s.data(), wide.data());
  return s;
}

Point base_mult(const std::array<u8, 32>& s) {
  Point p;
  if (crypto_scalarmult_ristretto255_base(p.data(), s.data()) != 0) throw Error("ot: degenerate scalar");
  return p;
}

Point mult(const std::array<u8, 32>& s, const Point& q) {
  Point p;
  if (crypto_scalarmult_ristretto255(p.data(), s.data(), q.data()) != 0) throw Error("ot: degenerate point");
  return p;
}

void check_point(const Point& p) {
  if (crypto_core_ristretto255_is_valid_point(p.data()) != 1) throw Error("ot: invalid group element");
}

Block derive_key(std::size_t index, const Point& setup, const Point& request, const Point& shared) {
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, sizeof(Block));
  const u64 i = index;
  crypto_generichash_update(&st, reinterpret_cast<const u8*>(&i), sizeof(i));
  crypto_generichash_update(&st, setup.data(), setup.size());
  crypto_generichash_update(&st, request.data(), request.size());
  crypto_generichash_update(&st, shared.data(), shared.size());
  Block out;
  crypto_generichash_final(&st, reinterpret_cast<u8*>(&out), sizeof(out));
  return out;
}

}  // namespace

OtSender::OtSender(Prg& prg) {
  init_sodium();
  a_ = random_scalar(prg);
  a_point_ = base_mult(a_);
}

std::vector<std::array<Block, 2>> OtSender::random_pads(std::span<const Point> requests) const {
  // a*B - a*A gives the key for choice one.
  const Point aa = mult(a_, a_point_);
  std::vector<std::array<Block, 2>> out(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    check_point(requests[i]);
    const Point ab = mult(a_, requests[i]);
    Point ab1;
    crypto_core_ristretto255_sub(ab1.data(), ab.data(), aa.data());
    out[i][0] = derive_key(i, a_point_, requests[i], ab);
    out[i][1] = derive_key(i, a_point_, requests[i], ab1);
  }
  return out;
}

std::vector<std::array<Block, 2>> OtSender::respond(std::span<const Point> requests,
                                                    std::span<const std::array<Block, 2>> messages) const {
  if (requests.size() != messages.size()) throw std::invalid_argument("ot: request count does not match the messages");
  auto out = random_pads(requests);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i][0] ^= messages[i][0];
    out[i][1] ^= messages[i][1];
  }
  return out;
}

OtReceiver::OtReceiver(std::vector<bool> choices, Prg& prg) : choices_(std::move(choices)), prg_(prg) { init_sodium(); }

std::vector<Point> OtReceiver::request(const Point& setup) {
  check_point(setup);
  setup_ = setup;
  b_.clear();
  requests_.clear();
  for (bool c : choices_) {
    b_.push_back(random_scalar(prg_));
    Point q = base_mult(b_.back());
    if (c) crypto_core_ristretto255_add(q.data(), q.data(), setup.data());
    requests_.push_back(q);
  }
  return requests_;
}

std::vector<Block> OtReceiver::random_pads() const {
  if (requests_.size() != choices_.size()) throw std::logic_error("ot: request() has not been called");
  std::vector<Block> out(choices_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = derive_key(i, setup_, requests_[i], mult(b_[i], setup_));
  return out;
}

std::vector<Block> OtReceiver::finish(std::span<const std::array<Block, 2>> replies) const {
  if (replies.size() != choices_.size() || requests_.size() != choices_.size())
    throw std::invalid_argument("ot: reply count does not match the choices");
  auto out = random_pads();
  for (std::size_t i = 0; i < replies.size(); ++i) out[i] ^= replies[i][choices_[i] ? 1 : 0];
  return out;
}

std::vector<Block> ot_transfer(std::span<const std::array<Block, 2>> messages, const std::vector<bool>& choices, Prg& sender_prg,
                               Prg& receiver_prg) {
  OtSender s(sender_prg);
  OtReceiver r(choices, receiver_prg);
  const auto req = r.request(s.setup_message());
  return r.finish(s.respond(req, messages));
}

}  // namespace hinfer::gc
