#pragma once

#include <map>
#include <string>
#include <vector>

#include "hinfer/pahe.hpp"

namespace hinfer {

enum class MatvecAlgorithm { naive, output_packed, input_packed, diagonal, hybrid };

std::string to_string(MatvecAlgorithm a);
MatvecAlgorithm matvec_algorithm_from_string(const std::string& s);

// Row-major n_o x n_i matrix over Zp.
struct WeightMatrix {
  std::size_t n_o = 0;
  std::size_t n_i = 0;
  std::vector<u64> w;
  std::vector<u64> bias;  // empty or n_o entries

  u64 at(std::size_t r, std::size_t c) const { return w[r * n_i + c]; }
  u64& at(std::size_t r, std::size_t c) { return w[r * n_i + c]; }
  static WeightMatrix zeros(std::size_t n_o, std::size_t n_i);
  static WeightMatrix random(std::size_t n_o, std::size_t n_i, u64 p, Prg& prg);
  std::vector<u64> apply(std::span<const u64> v, const ModulusP& p) const;
};

struct OpCount {
  u64 perm_hoisted = 0;
  u64 perm = 0;
  u64 scmult = 0;
  u64 add = 0;
  u64 output_cts = 0;
  bool operator==(const OpCount&) const = default;
};

// Closed-form counts per algorithm.
OpCount count_ops(MatvecAlgorithm a, std::size_t n, std::size_t n_i, std::size_t n_o);

struct MatvecOptions {
  int w_pt = 10;
  int w_relin = 8;
};

// Windows per algorithm: 20-bit plaintext windows for the naive family with
// 7-bit relinearization, 10-bit plaintext windows for diagonal and hybrid with
// 5-bit relinearization. Output packing multiplies twice in series and gets
// 2-bit windows on both.
MatvecOptions default_options(MatvecAlgorithm a);

struct EncodedMatrix {
  MatvecAlgorithm algorithm = MatvecAlgorithm::hybrid;
  std::size_t n = 0;
  std::size_t n_i = 0;
  std::size_t n_o = 0;
  MatvecOptions opt;
  // Hybrid only: period of the input layout and the multiply count.
  std::size_t n_eff = 0;
  std::size_t k = 0;

  std::vector<std::vector<u64>> slots;    // plaintext slot vectors, pre-encoding
  std::vector<PlaintextWindows> plains;   // same vectors, windowed
  std::vector<PermId> input_perms;        // diagonal / hybrid: one per plaintext
  std::vector<PermId> output_perms;       // rotate-and-sum schedule
  std::vector<PermId> placement_perms;    // output-packed: slot 0 -> slot i
  std::vector<PlaintextWindows> masks;    // output-packed: slot-0 selector
  std::vector<int> input_layout;          // slot -> input index, -1 when unused
};

EncodedMatrix encode_matrix(const WeightMatrix& w, MatvecAlgorithm a, const MatvecOptions& opt, const Evaluator& ev);
// Rebuilds the matrix from the slot vectors of an encoding.
WeightMatrix decode_matrix(const EncodedMatrix& enc, const Context& ctx);

// For each plaintext and slot, the flat index r*n_i + c of the weight used
// there, or -1.
std::vector<std::vector<int>> matrix_entries(const EncodedMatrix& enc, const Context& ctx);

// Input packing expected by each algorithm.
std::vector<u64> pack_input(const EncodedMatrix& enc, std::span<const u64> v);
// Where output i lands: (ciphertext index, slot).
std::pair<std::size_t, std::size_t> output_position(const EncodedMatrix& enc, std::size_t i);
std::vector<u64> unpack_output(const EncodedMatrix& enc, const std::vector<PlaintextVector>& cts);

// Permutations a matvec needs keys for.
std::vector<PermId> required_perms(const EncodedMatrix& enc);

class KeyRing {
 public:
  void insert(PermutationKey key);
  const PermutationKey& get(const PermId& id, int w_relin) const;
  bool contains(const PermId& id, int w_relin) const;
  std::size_t size() const { return keys_.size(); }
  std::vector<const PermutationKey*> all() const;

 private:
  std::map<std::tuple<u32, bool, int>, PermutationKey> keys_;
};

// Generates every key in `ids` not already present.
void ensure_keys(KeyRing& ring, const KeyGenerator& kg, const SecretKey& sk, std::span<const PermId> ids, int w_relin, Prg& prg);

struct MatvecResult {
  std::vector<Ciphertext> cts;
  OpCount ops;
};

MatvecResult matvec(const EncodedMatrix& enc, const WindowedCiphertext& input, const KeyRing& keys, const Evaluator& ev, Prg& prg);

}  // namespace hinfer
