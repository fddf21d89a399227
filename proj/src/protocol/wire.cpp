#include <cstring>
#include <sstream>

#include "hinfer/wire.hpp"

namespace hinfer {

std::string to_string(MsgType t) {
  switch (t) {
    case MsgType::hello: return "hello";
    case MsgType::plan: return "plan";
    case MsgType::keys: return "keys";
    case MsgType::gc_tables: return "gc_tables";
    case MsgType::ot_setup: return "ot_setup";
    case MsgType::ot_request: return "ot_request";
    case MsgType::input_cts: return "input_cts";
    case MsgType::masked_cts: return "masked_cts";
    case MsgType::output_cts: return "output_cts";
    case MsgType::square_cts: return "square_cts";
    case MsgType::square_resp: return "square_resp";
    case MsgType::ot_correction: return "ot_correction";
    case MsgType::gc_labels: return "gc_labels";
    case MsgType::output_share: return "output_share";
    case MsgType::error: return "error";
  }
  return "type" + std::to_string(static_cast<unsigned>(t));
}

std::string to_string(Role r) { return r == Role::client ? "client" : "server"; }

std::string to_string(Phase p) {
  switch (p) {
    case Phase::setup: return "setup";
    case Phase::offline: return "offline";
    case Phase::online: return "online";
  }
  return "?";
}

std::array<u8, kFrameHeaderSize> encode_header(const FrameHeader& h) {
  std::array<u8, kFrameHeaderSize> out{};
  std::memcpy(out.data(), &h.magic, 4);
  std::memcpy(out.data() + 4, &h.version, 2);
  std::memcpy(out.data() + 6, &h.type, 2);
  std::memcpy(out.data() + 8, &h.body_len, 8);
  return out;
}

FrameHeader decode_header(std::span<const u8> bytes) {
  if (bytes.size() != kFrameHeaderSize) throw Error("frame: short header");
  FrameHeader h;
  std::memcpy(&h.magic, bytes.data(), 4);
  std::memcpy(&h.version, bytes.data() + 4, 2);
  std::memcpy(&h.type, bytes.data() + 6, 2);
  std::memcpy(&h.body_len, bytes.data() + 8, 8);
  if (h.magic != kWireMagic) throw Error("frame: bad magic");
  if (h.version != kWireVersion)
    throw Error("frame: version mismatch (peer " + std::to_string(h.version) + ", local " + std::to_string(kWireVersion) + ")");
  if (h.body_len > kMaxBodyBytes) throw Error("frame: body too large");
  return h;
}

u64 Transcript::bytes(Phase phase) const {
  u64 s = 0;
  for (const auto& e : entries)
    if (e.phase == phase) s += kFrameHeaderSize + e.body_bytes;
  return s;
}

u64 Transcript::bytes(Phase phase, Role sender) const {
  u64 s = 0;
  for (const auto& e : entries)
    if (e.phase == phase && e.sender == sender) s += kFrameHeaderSize + e.body_bytes;
  return s;
}

u64 Transcript::total_bytes() const {
  u64 s = 0;
  for (const auto& e : entries) s += kFrameHeaderSize + e.body_bytes;
  return s;
}

std::string Transcript::dump() const {
  std::ostringstream os;
  for (const auto& e : entries)
    os << to_string(e.phase) << ' ' << to_string(e.sender) << ' ' << to_string(e.type) << ' ' << e.body_bytes << ' '
       << (e.label.empty() ? "-" : e.label) << '\n';
  return os.str();
}

void Messenger::record(Role sender, MsgType type, u64 len) {
  transcript_.entries.push_back(TranscriptEntry{phase_, sender, type, len, label_});
}

void Messenger::send(MsgType type, std::span<const u8> body) {
  const auto h = encode_header(FrameHeader{kWireMagic, kWireVersion, static_cast<u16>(type), body.size()});
  ch_.write_all(h);
  ch_.write_all(body);
  record(self_, type, body.size());
}

std::vector<u8> Messenger::receive(MsgType expected) {
  std::array<u8, kFrameHeaderSize> hb;
  ch_.read_exact(hb);
  const FrameHeader h = decode_header(hb);
  std::vector<u8> body(h.body_len);
  ch_.read_exact(body);
  const auto type = static_cast<MsgType>(h.type);
  const Role peer = self_ == Role::client ? Role::server : Role::client;
  if (type == MsgType::error) throw Error("peer reported: " + std::string(body.begin(), body.end()));
  record(peer, type, body.size());
  if (type != expected) throw Error("unexpected message " + to_string(type) + ", expected " + to_string(expected));
  return body;
}

void Messenger::send_error(const std::string& what) {
  try {
    const auto h = encode_header(FrameHeader{kWireMagic, kWireVersion, static_cast<u16>(MsgType::error), what.size()});
    ch_.write_all(h);
    ch_.write_all(std::span<const u8>(reinterpret_cast<const u8*>(what.data()), what.size()));
  } catch (const std::exception&) {
  }
}

}  // namespace hinfer
