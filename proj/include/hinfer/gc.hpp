#pragma once

#include <array>
#include <span>
#include <vector>

#include "hinfer/common.hpp"
#include "hinfer/prg.hpp"

namespace hinfer::gc {

using Wire = u32;
// Little-endian bit vector of wires.
using Word = std::vector<Wire>;

enum class GateType : u8 { Xor, And, Not };

struct Gate {
  GateType type = GateType::Xor;
  Wire a = 0;
  Wire b = 0;  // unused for Not
  Wire out = 0;
};

struct BooleanCircuit {
  u32 wires = 0;
  std::vector<Gate> gates;           // topological order
  std::vector<Wire> server_inputs;   // garbler
  std::vector<Wire> client_inputs;   // evaluator, delivered by OT
  std::vector<Wire> outputs;         // revealed to the evaluator

  std::size_t and_count() const;
  std::size_t xor_count() const;
  // Throws std::logic_error unless every gate reads defined wires, every
  // wire is assigned once and every output is defined.
  void validate() const;
  std::vector<bool> evaluate(const std::vector<bool>& server, const std::vector<bool>& client) const;
};

class CircuitBuilder {
 public:
  Word server_input(std::size_t bits);
  Word client_input(std::size_t bits);
  void output(const Word& w);

  Wire zero();
  Wire one();
  Wire xor_(Wire a, Wire b);
  Wire and_(Wire a, Wire b);
  Wire not_(Wire a);

  Word constant(u64 v, std::size_t bits);
  // a + b + carry_in mod 2^bits.
  Word add(const Word& a, const Word& b, bool carry_in = false);
  Word sub(const Word& a, const Word& b);
  Word sub_const(const Word& a, u64 c);
  Word add_const(const Word& a, u64 c);
  // s ? a : b
  Word mux(Wire s, const Word& a, const Word& b);
  Word and_all(const Word& a, Wire s);
  // (a + b) mod m for a, b in [0, m).
  Word add_mod(const Word& a, const Word& b, u64 m);

  BooleanCircuit finish();

 private:
  Wire fresh();
  bool is_const(Wire w, bool& v) const;
  Wire emit(GateType t, Wire a, Wire b);

  BooleanCircuit c_;
  std::vector<int> constant_;  // -1, 0 or 1 per wire
  Wire zero_ = 0, one_ = 0;
  bool have_zero_ = false, have_one_ = false;
};

enum class ActKind { Relu, MaxPool, ReluMaxPool };

// Share-recombination circuit for `count` parallel activations over Zp.
// Server inputs: fan_in*count additive shares s_x, then count output masks
// s_y. Client inputs: fan_in*count shares c_x. Outputs: count values
// c_y = f(s_x + c_x) + s_y mod p, where f applies the activation to the
// signed representative and then an arithmetic right shift by `shift`.
struct ActCircuit {
  ActKind kind = ActKind::Relu;
  u64 p = 0;
  std::size_t count = 0;
  std::size_t fan_in = 1;
  unsigned shift = 0;
  std::size_t width = 0;  // ceil(log2 p) + 1
  BooleanCircuit circuit;

  std::vector<bool> server_bits(std::span<const u64> s_x, std::span<const u64> s_y) const;
  std::vector<bool> client_bits(std::span<const u64> c_x) const;
  std::vector<u64> decode(const std::vector<bool>& out) const;
};

std::size_t value_width(u64 p);
ActCircuit build_relu_block(u64 p, std::size_t count, unsigned shift = 0);
// 2x2 windows: four values per instance.
ActCircuit build_maxpool_block(u64 p, std::size_t count, bool relu = false, unsigned shift = 0);

std::vector<bool> to_bits(std::span<const u64> values, std::size_t width);
std::vector<u64> from_bits(const std::vector<bool>& bits, std::size_t width);

struct GarbledCircuit {
  std::vector<Block> tables;   // two rows per AND gate, in gate order
  std::vector<u8> decode;      // permute bit of each output's zero label

  static constexpr std::size_t kHeaderBytes = 16;
  // Header, tables, then the decode bits packed eight per byte.
  std::vector<u8> serialize() const;
  static GarbledCircuit deserialize(std::span<const u8> bytes);
  std::size_t size_bytes() const { return kHeaderBytes + tables.size() * sizeof(Block) + (decode.size() + 7) / 8; }
  bool operator==(const GarbledCircuit&) const = default;
};

struct Garbling {
  GarbledCircuit gc;
  Block delta;
  std::vector<Block> server_zero;  // zero labels of the server inputs
  std::vector<Block> client_zero;

  std::vector<Block> server_labels(const std::vector<bool>& bits) const;
  // (zero, one) label pairs for the client's OTs.
  std::vector<std::array<Block, 2>> client_pairs() const;
};

Garbling garble(const BooleanCircuit& c, Prg& prg);

struct EvalStats {
  std::size_t table_rows_read = 0;
};

std::vector<Block> evaluate(const BooleanCircuit& c, const GarbledCircuit& gc, std::span<const Block> server_labels,
                            std::span<const Block> client_labels, EvalStats* stats = nullptr);
std::vector<bool> decode_outputs(const GarbledCircuit& gc, std::span<const Block> labels);

// 1-out-of-2 oblivious transfer of 128-bit strings over ristretto255
// (Chou-Orlandi), one instance per wire.
using Point = std::array<u8, 32>;

class OtSender {
 public:
  explicit OtSender(Prg& prg);
  const Point& setup_message() const { return a_point_; }
  std::vector<std::array<Block, 2>> respond(std::span<const Point> requests, std::span<const std::array<Block, 2>> messages) const;
  // Random OT: the key pair of every instance, nothing is sent back.
  std::vector<std::array<Block, 2>> random_pads(std::span<const Point> requests) const;

 private:
  std::array<u8, 32> a_{};
  Point a_point_{};
};

class OtReceiver {
 public:
  OtReceiver(std::vector<bool> choices, Prg& prg);
  std::vector<Point> request(const Point& setup);
  std::vector<Block> finish(std::span<const std::array<Block, 2>> replies) const;
  // Random OT: the key of the chosen side per instance.
  std::vector<Block> random_pads() const;
  const std::vector<bool>& choices() const { return choices_; }

 private:
  std::vector<bool> choices_;
  std::vector<std::array<u8, 32>> b_;
  std::vector<Point> requests_;
  Point setup_{};
  Prg& prg_;
};

// Runs both OT roles in process.
std::vector<Block> ot_transfer(std::span<const std::array<Block, 2>> messages, const std::vector<bool>& choices, Prg& sender_prg,
                               Prg& receiver_prg);

}  // namespace hinfer::gc
