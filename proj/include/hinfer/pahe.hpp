#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "hinfer/modarith.hpp"
#include "hinfer/ntt.hpp"
#include "hinfer/prg.hpp"

namespace hinfer {

using Poly = std::vector<u64>;
// Length-n vector over Zp in slot order.
using PlaintextVector = std::vector<u64>;

enum class Backend { fast, naive };

// Element of the half-rotation group C_{n/2} x C_2: rotate both halves left
// by `rot`, then exchange the halves if `swap` is set.
struct PermId {
  u32 rot = 0;
  bool swap = false;
  bool operator==(const PermId&) const = default;
  bool is_identity() const { return rot == 0 && !swap; }
};

class Context {
 public:
  static std::shared_ptr<const Context> create(const RingParams& params);

  const RingParams& params() const { return params_; }
  std::size_t n() const { return params_.n; }
  const ModulusQ& q() const { return params_.q; }
  const ModulusP& p() const { return params_.p; }
  const NaiveModulus& q_naive() const { return q_naive_; }
  const NaiveModulus& p_naive() const { return p_naive_; }
  const NttTables& ntt_q() const { return ntt_q_; }
  const NttTables& ntt_p() const { return ntt_p_; }
  u64 scale() const { return scale_; }

  // Exponent e (odd, mod 2n) whose evaluation carries plaintext slot j.
  u64 slot_exponent(std::size_t j) const { return slot_exp_[j]; }
  // Galois element 3^rot * (swap ? -1 : 1) mod 2n.
  u64 galois_element(const PermId& id) const;
  // Applies the group action to a plain slot vector: out[j] = in[image(j)].
  template <class T>
  std::vector<T> permute_slots(std::span<const T> in, const PermId& id) const {
    std::vector<T> out(in.size());
    for (std::size_t j = 0; j < in.size(); ++j) out[j] = in[slot_source(j, id)];
    return out;
  }
  // Slot whose value lands in slot j after applying id.
  std::size_t slot_source(std::size_t j, const PermId& id) const;
  // Composition: applying a then b equals applying compose(a, b).
  PermId compose(const PermId& a, const PermId& b) const;
  PermId inverse(const PermId& a) const;
  // Index table of the automorphism in the q-evaluation domain.
  std::vector<u32> automorphism_index(u64 galois) const;

  // Slot vector -> centered plaintext polynomial coefficients (as i64).
  std::vector<i64> slots_to_coeffs(std::span<const u64> slots) const;
  PlaintextVector coeffs_to_slots(std::span<const i64> coeffs) const;

 private:
  explicit Context(const RingParams& params);

  RingParams params_;
  NaiveModulus q_naive_;
  NaiveModulus p_naive_;
  NttTables ntt_q_;
  NttTables ntt_p_;
  u64 scale_;
  std::vector<u64> slot_exp_;
  std::vector<u32> slot_to_pidx_;
};

using ContextPtr = std::shared_ptr<const Context>;

struct SecretKey {
  ContextPtr ctx;
  std::vector<i64> coeffs;  // ternary
  Poly ntt;                 // s in the q-evaluation domain
};

// Zero-encryption key (b, a) = (-a*s + e, a) held by the evaluator, used only
// to rerandomize outgoing ciphertexts when flooding.
struct RerandKey {
  Poly b;
  Poly a;
};

struct Ciphertext {
  Poly c0;
  Poly c1;
  double noise = 0;  // estimated bound on |noise|

  double noise_bits() const { return noise <= 1 ? 0.0 : std::log2(noise); }
};

// Encryptions of 2^(w*k) * u for k = 0..W-1; parts[0] encrypts u itself.
struct WindowedCiphertext {
  std::vector<Ciphertext> parts;
  int w_pt = 0;
};

struct PlaintextWindows {
  int w_pt = 0;
  std::vector<Poly> chunks;   // q-evaluation domain
  std::vector<u64> norms;     // max |coefficient| per chunk
  std::vector<double> l2;     // coefficient 2-norm per chunk
  std::vector<double> l1;     // coefficient 1-norm per chunk
  bool zero = false;
};

struct PermutationKey {
  PermId id;
  u64 galois = 0;
  int w_relin = 0;
  std::vector<Poly> k0;
  std::vector<Poly> k1;
  std::vector<u32> index;  // evaluation-domain automorphism
};

struct HoistedCiphertext {
  Poly c0;
  std::vector<Poly> digits;  // evaluation domain
  int w_relin = 0;
  double noise = 0;
};

struct OpCounters {
  u64 add = 0;
  u64 add_plain = 0;
  u64 scmult = 0;
  u64 perm_decomp = 0;
  u64 perm_auto = 0;
  u64 ntt = 0;
  void reset() { *this = OpCounters{}; }
};

int digit_count(int w_relin);
int window_count(const ModulusP& p, int w_pt);

// Noise estimator; every value bounds max |noise coefficient|. Fresh, key-switch
// and single-product terms use kTail standard deviations of their
// central-limit distribution; sums of terms compose worst case.
struct NoiseModel {
  static constexpr double kTail = 6.0;
  static double fresh(const RingParams& rp) { return kTail * rp.sigma; }
  static double add(const RingParams& rp, double a, double b) { return a + b + static_cast<double>(std::abs(rp.r)); }
  static double add_plain(const RingParams& rp, double a) { return a + static_cast<double>(std::abs(rp.r)); }
  // Growth of noise multiplied by a plaintext chunk with coefficient 2-norm
  // `l2`; never more than |v|_inf * sqrt(n).
  static double mult_factor(double l2) { return l2; }
  // |r| times the carry of the integer product, from the chunk 1-norms.
  static double scmult_carry(const RingParams& rp, double l1_total) {
    return static_cast<double>(std::abs(rp.r)) * (l1_total / 2 + 1);
  }
  static double rot(const RingParams& rp, int w_relin) {
    const double digit_sd = std::ldexp(1.0, w_relin - 1) / std::sqrt(3.0);
    return kTail * rp.sigma * digit_sd * std::sqrt(static_cast<double>(rp.n) * digit_count(w_relin));
  }
  static double line(const RingParams& rp) { return static_cast<double>(rp.q.value()) / (2.0 * static_cast<double>(rp.p.value())); }
};

class KeyGenerator {
 public:
  explicit KeyGenerator(ContextPtr ctx, Backend backend = Backend::fast) : ctx_(std::move(ctx)), backend_(backend) {}
  SecretKey secret_key(Prg& prg) const;
  RerandKey rerand_key(const SecretKey& sk, Prg& prg) const;
  PermutationKey perm_key(const SecretKey& sk, const PermId& id, int w_relin, Prg& prg) const;

 private:
  ContextPtr ctx_;
  Backend backend_;
};

class Encryptor {
 public:
  explicit Encryptor(SecretKey sk, Backend backend = Backend::fast) : sk_(std::move(sk)), backend_(backend) {}
  Ciphertext encrypt(std::span<const u64> slots, Prg& prg) const;
  Ciphertext encrypt_zero(Prg& prg) const;
  WindowedCiphertext encrypt_windowed(std::span<const u64> slots, int w_pt, Prg& prg) const;
  PlaintextVector decrypt(const Ciphertext& ct) const;
  // max |x - scale * m| over coefficients, m being the decrypted message.
  double measured_noise(const Ciphertext& ct) const;
  // Same, against a known plaintext; exceeds the line when decryption fails.
  double measured_noise(const Ciphertext& ct, std::span<const u64> expected) const;
  const SecretKey& secret_key() const { return sk_; }

 private:
  SecretKey sk_;
  Backend backend_;
};

class Evaluator {
 public:
  explicit Evaluator(ContextPtr ctx, Backend backend = Backend::fast) : ctx_(std::move(ctx)), backend_(backend) {}

  const Context& context() const { return *ctx_; }
  const ContextPtr& context_ptr() const { return ctx_; }

  PlaintextWindows encode_windows(std::span<const u64> slots, int w_pt) const;

  Ciphertext add(const Ciphertext& a, const Ciphertext& b) const;
  void add_inplace(Ciphertext& a, const Ciphertext& b) const;
  Ciphertext sub(const Ciphertext& a, const Ciphertext& b) const;
  Ciphertext add_plain(const Ciphertext& a, std::span<const u64> slots) const;
  Ciphertext negate(const Ciphertext& a) const;
  Ciphertext scmult(const WindowedCiphertext& ct, const PlaintextWindows& w) const;
  // Single-window convenience for ciphertexts without window copies.
  Ciphertext scmult(const Ciphertext& ct, const PlaintextWindows& w) const;
  HoistedCiphertext perm_decomp(const Ciphertext& ct, int w_relin) const;
  Ciphertext perm_auto(const HoistedCiphertext& h, const PermutationKey& key) const;
  Ciphertext perm(const Ciphertext& ct, const PermutationKey& key) const;
  // Adds a fresh zero encryption whose noise is uniform in [-2^bits, 2^bits].
  Ciphertext flood(const Ciphertext& ct, const RerandKey& rk, double bits, Prg& prg) const;
  Ciphertext zero() const;

  OpCounters& counters() const { return counters_; }

 private:
  ContextPtr ctx_;
  Backend backend_;
  mutable OpCounters counters_;
};

// Default flooding width: two bits under the correctness line.
double default_flood_bits(const RingParams& rp);

}  // namespace hinfer
