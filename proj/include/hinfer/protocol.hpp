#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hinfer/conv.hpp"
#include "hinfer/gc.hpp"
#include "hinfer/linalg.hpp"
#include "hinfer/network.hpp"
#include "hinfer/pahe.hpp"
#include "hinfer/wire.hpp"

namespace hinfer {

// Additive sharing with x = client - server (mod p), slot for slot.
struct ShareVector {
  Role party = Role::server;
  std::vector<u64> values;
};

std::vector<u64> reconstruct(const ShareVector& server, const ShareVector& client, u64 p);

// Flooding width that keeps the estimate of a ciphertext with noise `noise`
// under the correctness line: at most default_flood_bits, less when the
// budget is tighter. Throws Error when no headroom is left.
double flood_bits_for(const RingParams& rp, double noise);

struct Masked {
  Ciphertext ct;
  std::vector<u64> r;         // mask added to every slot
  double noise_before = 0;    // estimate before flooding
  double flood_bits = 0;
};

// Server half of ciphertext-to-shares: adds a uniform mask to all slots and
// floods. A zero mask is used when `mask` is false.
Masked mask_and_flood(const Evaluator& ev, const Ciphertext& ct, const RerandKey& rk, Prg& prg, bool mask = true);

// Both halves in process: the server keeps r, the client decrypts x + r.
std::pair<ShareVector, ShareVector> ct_to_shares(const Evaluator& ev, const Encryptor& client, const Ciphertext& ct, const RerandKey& rk,
                                                 Prg& server_prg);

// Client encrypts c_y; the server subtracts its share, yielding [c_y - s_y].
Ciphertext shares_to_ct(const Evaluator& ev, const Encryptor& client, const ShareVector& c_y, const ShareVector& s_y, Prg& client_prg);

// Square gadget. The client sends windowed [c]; the server returns
// [s^2 - 2cs + m] flooded and keeps m; the client adds c^2.
struct SquareReply {
  std::vector<Ciphertext> cts;
  std::vector<u64> m;
  std::vector<double> noise_before;  // per ciphertext, before flooding
  std::vector<double> flood_bits;
};
SquareReply square_server(const Evaluator& ev, const std::vector<WindowedCiphertext>& c, std::span<const u64> s, const RerandKey& rk,
                          Prg& prg);
std::vector<u64> square_client(const Encryptor& enc, std::span<const u64> c, const std::vector<Ciphertext>& reply);
std::pair<ShareVector, ShareVector> square_activation(const Evaluator& ev, const Encryptor& client, const ShareVector& server,
                                                      const ShareVector& client_share, const RerandKey& rk, Prg& server_prg,
                                                      Prg& client_prg, int w_pt = 10);

// Public description of one protocol step, known to both parties.
enum class StepKind { linear, square, relu, maxpool, relu_maxpool };

std::string to_string(StepKind k);

struct PlanStep {
  StepKind kind = StepKind::linear;
  std::string label;
  std::size_t in_size = 0, out_size = 0;
  // linear
  int w_pt = 0;
  std::size_t in_cts = 0, out_cts = 0;
  std::vector<std::vector<i64>> in_map;                    // per ct and slot: logical input index or -1
  std::vector<std::pair<std::size_t, std::size_t>> out_map;  // logical output -> (ct, slot)
  bool last = false;
  // garbled steps: circuit input order over the logical inputs
  std::vector<std::size_t> gather;
  unsigned shift = 0;

  bool garbled() const { return kind == StepKind::relu || kind == StepKind::maxpool || kind == StepKind::relu_maxpool; }
};

struct KeyRequest {
  PermId id;
  int w_relin = 0;
  bool operator==(const KeyRequest&) const = default;
};

struct PublicPlan {
  u64 m = 0, p = 0, q = 0;
  std::size_t input_size = 0, output_size = 0;
  std::vector<PlanStep> steps;
  std::vector<KeyRequest> keys;

  std::vector<u8> serialize() const;
  static PublicPlan deserialize(std::span<const u8> bytes);
};

gc::ActCircuit build_step_circuit(const PlanStep& s, u64 p);

// Checks the message sequence, phases and ciphertext message sizes against
// the plan. Returns one line per violation.
std::vector<std::string> lint_transcript(const PublicPlan& plan, const Transcript& t, std::size_t ct_bytes);

struct NoiseRecord {
  std::string label;
  double estimate_bits = 0;  // after flooding, at decryption
  double before_flood_bits = 0;
  double flood_bits = 0;
  double line_bits = 0;
};

struct ServerOptions {
  RingParams params = RingParams::standard();
  u64 seed = 0;
  bool entropy = false;
};

struct ClientOptions {
  u64 seed = 0;
  bool entropy = false;
};

struct PhaseTimes {
  double setup_ms = 0, offline_ms = 0, online_ms = 0;
};

class Server {
 public:
  Server(NetworkDescriptor net, ServerOptions opt);
  ~Server();
  Server(Server&&) noexcept;

  const PublicPlan& plan() const;
  // Encoding time of matrices and filters, independent of any client.
  double encode_ms() const;
  void run(Messenger& msg);

  const std::vector<NoiseRecord>& noise_log() const;
  const OpCounters& counters() const;
  const PhaseTimes& times() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ClientResult {
  std::vector<u64> output;
  std::vector<double> measured_bits;  // per decrypted ciphertext, in order
  PhaseTimes times;
};

class Client {
 public:
  explicit Client(ClientOptions opt);
  ClientResult run(Messenger& msg, std::span<const u64> input);
  // Signed fixed-point input, embedded in Zp once the plan names p.
  ClientResult run(Messenger& msg, std::span<const i64> input);
  const PublicPlan& plan() const { return plan_; }

 private:
  ClientResult run_with(Messenger& msg, const std::function<std::vector<u64>(u64)>& make_input);

  ClientOptions opt_;
  PublicPlan plan_;
};

struct InferenceReport {
  ClientResult client;
  std::vector<NoiseRecord> noise;
  Transcript transcript;  // as seen by the client
  Transcript server_transcript;
  PublicPlan plan;
  PhaseTimes server_times;
  double encode_ms = 0;
};

// Runs both parties in process over a pipe, the server on its own thread.
InferenceReport run_inference(const NetworkDescriptor& net, std::span<const u64> input, const ServerOptions& sopt,
                              const ClientOptions& copt);

}  // namespace hinfer
