#include <stdexcept>

#include "hinfer/bytes.hpp"
#include "hinfer/gc.hpp"

namespace hinfer::gc {

namespace {

constexpr u32 kMagic = 0x31544347;  // "GCT1"

// Tweakable hash H(x, j) = pi(sigma(x) ^ j) ^ sigma(x) with a fixed-key AES
// permutation pi.
class Hash {
 public:
  Hash() : aes_(Block{0x6a09e667f3bcc908ULL, 0xbb67ae8584caa73bULL}) {}

  template <std::size_t N>
  void operator()(std::array<Block, N>& x, const std::array<u64, N>& tweak) const {
    std::array<Block, N> s;
    for (std::size_t i = 0; i < N; ++i) {
      s[i] = x[i].sigma();
      x[i] = s[i] ^ Block{tweak[i], 0};
    }
    aes_.encrypt_blocks(x);
    for (std::size_t i = 0; i < N; ++i) x[i] ^= s[i];
  }

 private:
  Aes128 aes_;
};

const Hash& hash() {
  static const Hash h;
  return h;
}

}  // namespace

std::vector<u8> GarbledCircuit::serialize() const {
  ByteWriter w;
  w.put(kMagic);
  w.put(static_cast<u32>(tables.size() / 2));
  w.put(static_cast<u64>(decode.size()));
  for (const auto& b : tables) w.put_block(b);
  std::vector<u8> packed((decode.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < decode.size(); ++i)
    if (decode[i]) packed[i / 8] |= static_cast<u8>(1u << (i % 8));
  w.put_bytes(packed);
  return w.take();
}

GarbledCircuit GarbledCircuit::deserialize(std::span<const u8> bytes) {
  ByteReader r(bytes);
  if (r.get<u32>() != kMagic) throw Error("garbled circuit: bad magic");
  const u32 ands = r.get<u32>();
  const u64 outs = r.get<u64>();
  if (r.remaining() != std::size_t{ands} * 2 * sizeof(Block) + (outs + 7) / 8) throw Error("garbled circuit: size mismatch");
  GarbledCircuit gc;
  gc.tables.resize(std::size_t{ands} * 2);
  for (auto& b : gc.tables) b = r.get_block();
  const auto packed = r.get_bytes((outs + 7) / 8);
  gc.decode.resize(outs);
  for (std::size_t i = 0; i < outs; ++i) gc.decode[i] = (packed[i / 8] >> (i % 8)) & 1;
  r.expect_end();
  return gc;
}

std::vector<Block> Garbling::server_labels(const std::vector<bool>& bits) const {
  if (bits.size() != server_zero.size()) throw std::invalid_argument("garbling: wrong number of server bits");
  std::vector<Block> out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) out[i] = server_zero[i] ^ (delta & select_mask(bits[i]));
  return out;
}

std::vector<std::array<Block, 2>> Garbling::client_pairs() const {
  std::vector<std::array<Block, 2>> out(client_zero.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {client_zero[i], client_zero[i] ^ delta};
  return out;
}

Garbling garble(const BooleanCircuit& c, Prg& prg) {
  Garbling g;
  g.delta = prg.next_block();
  g.delta.lo |= 1;
  std::vector<Block> zero(c.wires);
  for (Wire w : c.server_inputs) {
    zero[w] = prg.next_block();
    g.server_zero.push_back(zero[w]);
  }
  for (Wire w : c.client_inputs) {
    zero[w] = prg.next_block();
    g.client_zero.push_back(zero[w]);
  }
  const Block& R = g.delta;
  u64 and_index = 0;
  g.gc.tables.reserve(2 * c.and_count());
  for (const auto& gate : c.gates) {
    switch (gate.type) {
      case GateType::Xor:
        zero[gate.out] = zero[gate.a] ^ zero[gate.b];
        break;
      case GateType::Not:
        zero[gate.out] = zero[gate.a] ^ R;
        break;
      case GateType::And: {
        const Block a0 = zero[gate.a], b0 = zero[gate.b];
        const bool pa = a0.lsb(), pb = b0.lsb();
        const u64 j = 2 * and_index, k = 2 * and_index + 1;
        std::array<Block, 4> h{a0, a0 ^ R, b0, b0 ^ R};
        hash()(h, {j, j, k, k});
        const Block tg = h[0] ^ h[1] ^ (R & select_mask(pb));
        const Block wg = h[0] ^ (tg & select_mask(pa));
        const Block te = h[2] ^ h[3] ^ a0;
        const Block we = h[2] ^ ((te ^ a0) & select_mask(pb));
        zero[gate.out] = wg ^ we;
        g.gc.tables.push_back(tg);
        g.gc.tables.push_back(te);
        ++and_index;
        break;
      }
    }
  }
  for (Wire w : c.outputs) g.gc.decode.push_back(zero[w].lsb());
  return g;
}

std::vector<Block> evaluate(const BooleanCircuit& c, const GarbledCircuit& gc, std::span<const Block> server_labels,
                            std::span<const Block> client_labels, EvalStats* stats) {
  if (server_labels.size() != c.server_inputs.size() || client_labels.size() != c.client_inputs.size())
    throw std::invalid_argument("evaluate: wrong number of input labels");
  if (gc.tables.size() != 2 * c.and_count() || gc.decode.size() != c.outputs.size())
    throw std::invalid_argument("evaluate: garbled tables do not match the circuit");
  std::vector<Block> v(c.wires);
  for (std::size_t i = 0; i < server_labels.size(); ++i) v[c.server_inputs[i]] = server_labels[i];
  for (std::size_t i = 0; i < client_labels.size(); ++i) v[c.client_inputs[i]] = client_labels[i];
  u64 and_index = 0;
  std::size_t reads = 0;
  for (const auto& gate : c.gates) {
    switch (gate.type) {
      case GateType::Xor:
        v[gate.out] = v[gate.a] ^ v[gate.b];
        break;
      case GateType::Not:
        v[gate.out] = v[gate.a];
        break;
      case GateType::And: {
        const Block a = v[gate.a], b = v[gate.b];
        const Block tg = gc.tables[2 * and_index], te = gc.tables[2 * and_index + 1];
        reads += 2;
        std::array<Block, 2> h{a, b};
        hash()(h, {2 * and_index, 2 * and_index + 1});
        const Block wg = h[0] ^ (tg & select_mask(a.lsb()));
        const Block we = h[1] ^ ((te ^ a) & select_mask(b.lsb()));
        v[gate.out] = wg ^ we;
        ++and_index;
        break;
      }
    }
  }
  if (stats) stats->table_rows_read += reads;
  std::vector<Block> out(c.outputs.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[c.outputs[i]];
  return out;
}

std::vector<bool> decode_outputs(const GarbledCircuit& gc, std::span<const Block> labels) {
  if (labels.size() != gc.decode.size()) throw std::invalid_argument("decode: wrong number of output labels");
  std::vector<bool> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i].lsb() != (gc.decode[i] != 0);
  return out;
}

}  // namespace hinfer::gc
