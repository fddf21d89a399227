#include <bit>
#include <stdexcept>

#include "hinfer/gc.hpp"

namespace hinfer::gc {

std::size_t BooleanCircuit::and_count() const {
  std::size_t k = 0;
  for (const auto& g : gates) k += g.type == GateType::And;
  return k;
}

std::size_t BooleanCircuit::xor_count() const {
  std::size_t k = 0;
  for (const auto& g : gates) k += g.type == GateType::Xor;
  return k;
}

void BooleanCircuit::validate() const {
  std::vector<bool> defined(wires, false);
  auto define = [&](Wire w) {
    if (w >= wires) throw std::logic_error("circuit: wire out of range");
    if (defined[w]) throw std::logic_error("circuit: wire assigned twice");
    defined[w] = true;
  };
  auto use = [&](Wire w) {
    if (w >= wires || !defined[w]) throw std::logic_error("circuit: gate reads an undefined wire");
  };
  for (Wire w : server_inputs) define(w);
  for (Wire w : client_inputs) define(w);
  for (const auto& g : gates) {
    use(g.a);
    if (g.type != GateType::Not) use(g.b);
    define(g.out);
  }
  for (Wire w : outputs) use(w);
}

std::vector<bool> BooleanCircuit::evaluate(const std::vector<bool>& server, const std::vector<bool>& client) const {
  if (server.size() != server_inputs.size() || client.size() != client_inputs.size())
    throw std::invalid_argument("circuit: wrong number of input bits");
  std::vector<u8> v(wires, 0);
  for (std::size_t i = 0; i < server.size(); ++i) v[server_inputs[i]] = server[i];
  for (std::size_t i = 0; i < client.size(); ++i) v[client_inputs[i]] = client[i];
  for (const auto& g : gates) {
    switch (g.type) {
      case GateType::Xor: v[g.out] = v[g.a] ^ v[g.b]; break;
      case GateType::And: v[g.out] = v[g.a] & v[g.b]; break;
      case GateType::Not: v[g.out] = v[g.a] ^ 1; break;
    }
  }
  std::vector<bool> out(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) out[i] = v[outputs[i]];
  return out;
}

Wire CircuitBuilder::fresh() {
  constant_.push_back(-1);
  return c_.wires++;
}

bool CircuitBuilder::is_const(Wire w, bool& v) const {
  if (constant_[w] < 0) return false;
  v = constant_[w] == 1;
  return true;
}

Wire CircuitBuilder::emit(GateType t, Wire a, Wire b) {
  const Wire out = fresh();
  c_.gates.push_back(Gate{t, a, b, out});
  return out;
}

Word CircuitBuilder::server_input(std::size_t bits) {
  Word w(bits);
  for (auto& x : w) {
    x = fresh();
    c_.server_inputs.push_back(x);
  }
  return w;
}

Word CircuitBuilder::client_input(std::size_t bits) {
  Word w(bits);
  for (auto& x : w) {
    x = fresh();
    c_.client_inputs.push_back(x);
  }
  return w;
}

void CircuitBuilder::output(const Word& w) { c_.outputs.insert(c_.outputs.end(), w.begin(), w.end()); }

Wire CircuitBuilder::zero() {
  if (!have_zero_) {
    if (c_.wires == 0) throw std::logic_error("circuit: constants need an input wire");
    zero_ = emit(GateType::Xor, 0, 0);
    constant_[zero_] = 0;
    have_zero_ = true;
  }
  return zero_;
}

Wire CircuitBuilder::one() {
  if (!have_one_) {
    one_ = emit(GateType::Not, zero(), 0);
    constant_[one_] = 1;
    have_one_ = true;
  }
  return one_;
}

Wire CircuitBuilder::xor_(Wire a, Wire b) {
  bool va = false, vb = false;
  const bool ca = is_const(a, va), cb = is_const(b, vb);
  if (ca && cb) return va != vb ? one() : zero();
  if (ca) return va ? not_(b) : b;
  if (cb) return vb ? not_(a) : a;
  if (a == b) return zero();
  return emit(GateType::Xor, a, b);
}

Wire CircuitBuilder::and_(Wire a, Wire b) {
  bool va = false, vb = false;
  const bool ca = is_const(a, va), cb = is_const(b, vb);
  if (ca && cb) return va && vb ? one() : zero();
  if (ca) return va ? b : zero();
  if (cb) return vb ? a : zero();
  if (a == b) return a;
  return emit(GateType::And, a, b);
}

Wire CircuitBuilder::not_(Wire a) {
  bool va = false;
  if (is_const(a, va)) return va ? zero() : one();
  return emit(GateType::Not, a, 0);
}

Word CircuitBuilder::constant(u64 v, std::size_t bits) {
  Word w(bits);
  for (std::size_t i = 0; i < bits; ++i) w[i] = (v >> i) & 1 ? one() : zero();
  return w;
}

Word CircuitBuilder::add(const Word& a, const Word& b, bool carry_in) {
  if (a.size() != b.size()) throw std::logic_error("circuit: width mismatch");
  Word s(a.size());
  Wire c = carry_in ? one() : zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Wire ac = xor_(a[i], c);
    s[i] = xor_(ac, b[i]);
    if (i + 1 < a.size()) c = xor_(c, and_(ac, xor_(b[i], c)));
  }
  return s;
}

Word CircuitBuilder::sub(const Word& a, const Word& b) {
  Word nb(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) nb[i] = not_(b[i]);
  return add(a, nb, true);
}

Word CircuitBuilder::sub_const(const Word& a, u64 c) { return sub(a, constant(c, a.size())); }
Word CircuitBuilder::add_const(const Word& a, u64 c) { return add(a, constant(c, a.size())); }

Word CircuitBuilder::mux(Wire s, const Word& a, const Word& b) {
  Word r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = xor_(b[i], and_(s, xor_(a[i], b[i])));
  return r;
}

Word CircuitBuilder::and_all(const Word& a, Wire s) {
  Word r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = and_(a[i], s);
  return r;
}

Word CircuitBuilder::add_mod(const Word& a, const Word& b, u64 m) {
  const Word t = add(a, b);
  const Word d = sub_const(t, m);
  return mux(d.back(), t, d);
}

BooleanCircuit CircuitBuilder::finish() {
  c_.validate();
  BooleanCircuit out = std::move(c_);
  c_ = BooleanCircuit{};
  constant_.clear();
  have_zero_ = have_one_ = false;
  return out;
}

std::size_t value_width(u64 p) {
  if (p < 3 || p >= (u64{1} << 31)) throw std::invalid_argument("gc: modulus out of range");
  return static_cast<std::size_t>(std::bit_width(p - 1)) + 1;
}

std::vector<bool> to_bits(std::span<const u64> values, std::size_t width) {
  std::vector<bool> out;
  out.reserve(values.size() * width);
  for (u64 v : values) {
    if (width < 64 && (v >> width) != 0) throw std::invalid_argument("gc: value does not fit the bit width");
    for (std::size_t i = 0; i < width; ++i) out.push_back((v >> i) & 1);
  }
  return out;
}

std::vector<u64> from_bits(const std::vector<bool>& bits, std::size_t width) {
  if (bits.size() % width != 0) throw std::invalid_argument("gc: bit count is not a multiple of the width");
  std::vector<u64> out(bits.size() / width, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / width] |= u64{1} << (i % width);
  return out;
}

namespace {

// Unsigned recombination: (s + c) mod p.
Word recombine(CircuitBuilder& b, const Word& s, const Word& c, u64 p) { return b.add_mod(s, c, p); }

// Two's-complement representative of x in [0, p): x - p when x > p/2.
Word to_signed(CircuitBuilder& b, const Word& x, u64 p, Wire& negative) {
  negative = b.not_(b.sub_const(x, p / 2 + 1).back());
  return b.mux(negative, b.sub_const(x, p), x);
}

// Arithmetic right shift.
Word shift_signed(const Word& x, unsigned k) {
  Word r(x.size(), x.back());
  for (std::size_t i = 0; i + k < x.size(); ++i) r[i] = x[i + k];
  return r;
}

Word from_signed(CircuitBuilder& b, const Word& x, u64 p) { return b.mux(x.back(), b.add_const(x, p), x); }

void check_shift(unsigned shift, std::size_t width) {
  if (shift >= width) throw std::invalid_argument("gc: shift exceeds the value width");
}

}  // namespace

ActCircuit build_relu_block(u64 p, std::size_t count, unsigned shift) {
  ActCircuit ac;
  ac.kind = ActKind::Relu;
  ac.p = p;
  ac.count = count;
  ac.fan_in = 1;
  ac.shift = shift;
  ac.width = value_width(p);
  check_shift(shift, ac.width);
  const std::size_t L = ac.width;
  CircuitBuilder b;
  std::vector<Word> sx(count), sy(count), cx(count);
  for (auto& w : sx) w = b.server_input(L);
  for (auto& w : sy) w = b.server_input(L);
  for (auto& w : cx) w = b.client_input(L);
  for (std::size_t i = 0; i < count; ++i) {
    const Word x = recombine(b, sx[i], cx[i], p);
    const Wire positive = b.sub_const(x, p / 2 + 1).back();
    Word y = b.and_all(x, positive);
    Word shifted(L, b.zero());
    for (std::size_t j = 0; j + shift < L; ++j) shifted[j] = y[j + shift];
    b.output(b.add_mod(shifted, sy[i], p));
  }
  ac.circuit = b.finish();
  return ac;
}

ActCircuit build_maxpool_block(u64 p, std::size_t count, bool relu, unsigned shift) {
  ActCircuit ac;
  ac.kind = relu ? ActKind::ReluMaxPool : ActKind::MaxPool;
  ac.p = p;
  ac.count = count;
  ac.fan_in = 4;
  ac.shift = shift;
  ac.width = value_width(p);
  check_shift(shift, ac.width);
  const std::size_t L = ac.width;
  CircuitBuilder b;
  std::vector<Word> sx(4 * count), sy(count), cx(4 * count);
  for (auto& w : sx) w = b.server_input(L);
  for (auto& w : sy) w = b.server_input(L);
  for (auto& w : cx) w = b.client_input(L);
  for (std::size_t i = 0; i < count; ++i) {
    Word m;
    for (std::size_t j = 0; j < 4; ++j) {
      Wire neg = 0;
      const Word v = to_signed(b, recombine(b, sx[4 * i + j], cx[4 * i + j], p), p, neg);
      if (j == 0) {
        m = v;
      } else {
        const Wire less = b.sub(m, v).back();
        m = b.mux(less, v, m);
      }
    }
    if (relu) m = b.and_all(m, b.not_(m.back()));
    const Word y = from_signed(b, shift_signed(m, shift), p);
    b.output(b.add_mod(y, sy[i], p));
  }
  ac.circuit = b.finish();
  return ac;
}

namespace {

void check_range(std::span<const u64> v, u64 p) {
  for (u64 x : v)
    if (x >= p) throw std::invalid_argument("gc: share outside [0, p)");
}

}  // namespace

std::vector<bool> ActCircuit::server_bits(std::span<const u64> s_x, std::span<const u64> s_y) const {
  if (s_x.size() != fan_in * count || s_y.size() != count) throw std::invalid_argument("gc: wrong number of server shares");
  check_range(s_x, p);
  check_range(s_y, p);
  auto bits = to_bits(s_x, width);
  const auto y = to_bits(s_y, width);
  bits.insert(bits.end(), y.begin(), y.end());
  return bits;
}

std::vector<bool> ActCircuit::client_bits(std::span<const u64> c_x) const {
  if (c_x.size() != fan_in * count) throw std::invalid_argument("gc: wrong number of client shares");
  check_range(c_x, p);
  return to_bits(c_x, width);
}

std::vector<u64> ActCircuit::decode(const std::vector<bool>& out) const { return from_bits(out, width); }

}  // namespace hinfer::gc
