#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hinfer/common.hpp"

namespace hinfer {

inline constexpr u32 kWireMagic = 0x464e4948;  // "HINF"
inline constexpr u16 kWireVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 16;
inline constexpr u64 kMaxBodyBytes = u64{1} << 31;

enum class MsgType : u16 {
  hello = 1,
  plan = 2,
  keys = 3,
  gc_tables = 4,
  ot_setup = 5,
  ot_request = 6,
  input_cts = 16,
  masked_cts = 17,
  output_cts = 18,
  square_cts = 19,
  square_resp = 20,
  ot_correction = 21,
  gc_labels = 22,
  output_share = 23,
  error = 255,
};

std::string to_string(MsgType t);

enum class Role : u8 { client, server };
enum class Phase : u8 { setup, offline, online };

std::string to_string(Role r);
std::string to_string(Phase p);

struct FrameHeader {
  u32 magic = kWireMagic;
  u16 version = kWireVersion;
  u16 type = 0;
  u64 body_len = 0;
};

std::array<u8, kFrameHeaderSize> encode_header(const FrameHeader& h);
// Checks magic, version and the body limit; throws Error otherwise.
FrameHeader decode_header(std::span<const u8> bytes);

// Reliable duplex byte stream.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void write_all(std::span<const u8> data) = 0;
  // Throws Error when the peer closes before `out` is filled.
  virtual void read_exact(std::span<u8> out) = 0;
  virtual void close() = 0;
};

// Two connected in-process endpoints.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_pipe();

// "host:port"; an empty host means all interfaces when listening.
std::unique_ptr<Channel> tcp_connect(const std::string& address);

class TcpListener {
 public:
  explicit TcpListener(const std::string& address);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  u16 port() const { return port_; }
  std::unique_ptr<Channel> accept();

 private:
  int fd_ = -1;
  u16 port_ = 0;
};

struct TranscriptEntry {
  Phase phase = Phase::setup;
  Role sender = Role::client;
  MsgType type = MsgType::hello;
  u64 body_bytes = 0;
  std::string label;  // step the message belongs to
  bool operator==(const TranscriptEntry&) const = default;
};

struct Transcript {
  std::vector<TranscriptEntry> entries;

  // Header plus body bytes.
  u64 bytes(Phase phase) const;
  u64 bytes(Phase phase, Role sender) const;
  u64 total_bytes() const;
  // One line per message: phase, sender, type, body bytes, step.
  std::string dump() const;
};

// Framed messaging over a channel, recording every message in both
// directions.
class Messenger {
 public:
  Messenger(Channel& ch, Role self) : ch_(ch), self_(self) {}

  void set_phase(Phase p) { phase_ = p; }
  void set_label(std::string label) { label_ = std::move(label); }
  Phase phase() const { return phase_; }
  Role role() const { return self_; }

  void send(MsgType type, std::span<const u8> body);
  // Throws Error on a type mismatch; an error frame from the peer is
  // rethrown with its text.
  std::vector<u8> receive(MsgType expected);
  void send_error(const std::string& what);

  const Transcript& transcript() const { return transcript_; }

 private:
  void record(Role sender, MsgType type, u64 len);

  Channel& ch_;
  Role self_;
  Phase phase_ = Phase::setup;
  std::string label_;
  Transcript transcript_;
};

}  // namespace hinfer
