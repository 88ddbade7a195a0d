#pragma once

// Binary datagram format shared by server, client and proxy-transited
// traffic. All integers are big-endian.
//
//   header   version u8 (0x01) | msg_type u8 | seq u32 | timestamp_ms u64
//   INIT         entity_count u16, {entity_id u32, role_len u8, role, state_len u16, state}*
//   STATE_UPDATE group_id u8, entity_count u16, {entity_id u32, tick u32, state_len u16, state}*
//   INPUT        input_code u8, MOVE adds dx f32, dy f32
//   PROBE        round_id u32, probe_index u8
//   PROBE_ACK    round_id u32, probe_index u8

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lodsync/core_model.hpp"

namespace lodsync::wire {

inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kMaxDatagram = 1400;
inline constexpr std::size_t kHeaderSize = 14;

enum class MsgType : std::uint8_t {
  kInit = 0x01,
  kStateUpdate = 0x02,
  kInput = 0x03,
  kProbe = 0x04,
  kProbeAck = 0x05,
};

enum class InputCode : std::uint8_t {
  kMove = 0x01,
  kShoot = 0x02,
};

struct Header {
  std::uint32_t seq = 0;
  std::uint64_t timestamp_ms = 0;

  friend bool operator==(const Header&, const Header&) = default;
};

struct InitEntity {
  EntityId id = 0;
  std::string role;
  std::vector<std::uint8_t> state;

  friend bool operator==(const InitEntity&, const InitEntity&) = default;
};

struct Init {
  std::vector<InitEntity> entities;

  friend bool operator==(const Init&, const Init&) = default;
};

struct EntityUpdate {
  EntityId id = 0;
  std::uint32_t tick = 0;
  std::vector<std::uint8_t> state;

  friend bool operator==(const EntityUpdate&, const EntityUpdate&) = default;
};

struct StateUpdate {
  GroupId group = 0;
  std::vector<EntityUpdate> entities;

  friend bool operator==(const StateUpdate&, const StateUpdate&) = default;
};

// Codes other than MOVE and SHOOT are carried without parameters so the
// receiver can count and drop them.
struct Input {
  std::uint8_t code = static_cast<std::uint8_t>(InputCode::kShoot);
  float dx = 0.0f;
  float dy = 0.0f;

  static Input move(float dx, float dy) {
    return {static_cast<std::uint8_t>(InputCode::kMove), dx, dy};
  }
  static Input shoot() { return {static_cast<std::uint8_t>(InputCode::kShoot), 0.0f, 0.0f}; }

  bool is_move() const noexcept { return code == static_cast<std::uint8_t>(InputCode::kMove); }

  // Bitwise float comparison so NaN payloads still round-trip as equal.
  friend bool operator==(const Input& a, const Input& b) {
    if (a.code != b.code) return false;
    if (!a.is_move()) return true;
    return std::bit_cast<std::uint32_t>(a.dx) == std::bit_cast<std::uint32_t>(b.dx) &&
           std::bit_cast<std::uint32_t>(a.dy) == std::bit_cast<std::uint32_t>(b.dy);
  }
};

struct Probe {
  std::uint32_t round_id = 0;
  std::uint8_t probe_index = 0;

  friend bool operator==(const Probe&, const Probe&) = default;
};

struct ProbeAck {
  std::uint32_t round_id = 0;
  std::uint8_t probe_index = 0;

  friend bool operator==(const ProbeAck&, const ProbeAck&) = default;
};

using Payload = std::variant<Init, StateUpdate, Input, Probe, ProbeAck>;

struct Message {
  Header header;
  Payload payload;

  MsgType type() const noexcept {
    return static_cast<MsgType>(static_cast<std::uint8_t>(payload.index()) + 1);
  }

  friend bool operator==(const Message&, const Message&) = default;
};

class EncodeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

enum class DecodeError {
  kTruncated,
  kBadVersion,
  kUnknownType,
  kTrailingBytes,
  kOversize,
};

inline std::string_view to_string(DecodeError e) {
  switch (e) {
    case DecodeError::kTruncated: return "truncated";
    case DecodeError::kBadVersion: return "unsupported version";
    case DecodeError::kUnknownType: return "unknown message type";
    case DecodeError::kTrailingBytes: return "trailing bytes";
    case DecodeError::kOversize: return "datagram exceeds 1400 bytes";
  }
  return "unknown";
}

using DecodeResult = std::variant<Message, DecodeError>;

namespace detail {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) out_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  bool ok() const noexcept { return ok_; }
  bool at_end() const noexcept { return pos_ == in_.size(); }

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(take(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  std::uint64_t u64() { return take(8); }
  float f32() { return std::bit_cast<float>(u32()); }

  std::span<const std::uint8_t> bytes(std::size_t n) {
    if (!ok_ || in_.size() - pos_ < n) {
      ok_ = false;
      return {};
    }
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::uint64_t take(std::size_t n) {
    if (!ok_ || in_.size() - pos_ < n) {
      ok_ = false;
      return 0;
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v = (v << 8) | in_[pos_ + i];
    pos_ += n;
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  bool ok_ = true;
};

inline void check_count(std::size_t n, std::size_t limit, const char* what) {
  if (n > limit) throw EncodeError(std::string("encode: ") + what + " out of range");
}

struct PayloadWriter {
  Writer& w;

  void operator()(const Init& m) const {
    check_count(m.entities.size(), 0xFFFF, "entity_count");
    w.u16(static_cast<std::uint16_t>(m.entities.size()));
    for (const auto& e : m.entities) {
      check_count(e.role.size(), 0xFF, "role_name_len");
      check_count(e.state.size(), 0xFFFF, "state_len");
      w.u32(e.id);
      w.u8(static_cast<std::uint8_t>(e.role.size()));
      w.bytes(e.role);
      w.u16(static_cast<std::uint16_t>(e.state.size()));
      w.bytes(e.state);
    }
  }
  void operator()(const StateUpdate& m) const {
    check_count(m.entities.size(), 0xFFFF, "entity_count");
    w.u8(m.group);
    w.u16(static_cast<std::uint16_t>(m.entities.size()));
    for (const auto& e : m.entities) {
      check_count(e.state.size(), 0xFFFF, "state_len");
      w.u32(e.id);
      w.u32(e.tick);
      w.u16(static_cast<std::uint16_t>(e.state.size()));
      w.bytes(e.state);
    }
  }
  void operator()(const Input& m) const {
    w.u8(m.code);
    if (m.is_move()) {
      w.f32(m.dx);
      w.f32(m.dy);
    }
  }
  void operator()(const Probe& m) const {
    w.u32(m.round_id);
    w.u8(m.probe_index);
  }
  void operator()(const ProbeAck& m) const {
    w.u32(m.round_id);
    w.u8(m.probe_index);
  }
};

inline std::vector<std::uint8_t> to_vector(std::span<const std::uint8_t> s) {
  return {s.begin(), s.end()};
}

}  // namespace detail

/// Serializes `m`. Throws EncodeError if a field does not fit its wire
/// width or the datagram would exceed kMaxDatagram; callers split batches.
inline std::vector<std::uint8_t> encode(const Message& m) {
  std::vector<std::uint8_t> out;
  out.reserve(64);
  detail::Writer w(out);
  w.u8(kVersion);
  w.u8(static_cast<std::uint8_t>(m.type()));
  w.u32(m.header.seq);
  w.u64(m.header.timestamp_ms);
  std::visit(detail::PayloadWriter{w}, m.payload);
  if (out.size() > kMaxDatagram) {
    throw EncodeError("encode: datagram of " + std::to_string(out.size()) +
                      " bytes exceeds 1400");
  }
  return out;
}

/// Parses one datagram. Never throws; malformed input yields a DecodeError.
inline DecodeResult decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() > kMaxDatagram) return DecodeError::kOversize;
  detail::Reader r(bytes);
  const std::uint8_t version = r.u8();
  if (!r.ok()) return DecodeError::kTruncated;
  if (version != kVersion) return DecodeError::kBadVersion;
  const std::uint8_t type = r.u8();
  if (!r.ok()) return DecodeError::kTruncated;
  if (type < 0x01 || type > 0x05) return DecodeError::kUnknownType;

  Message m;
  m.header.seq = r.u32();
  m.header.timestamp_ms = r.u64();

  switch (static_cast<MsgType>(type)) {
    case MsgType::kInit: {
      Init init;
      const std::uint16_t n = r.u16();
      for (std::uint32_t i = 0; i < n && r.ok(); ++i) {
        InitEntity e;
        e.id = r.u32();
        const std::uint8_t role_len = r.u8();
        auto role = r.bytes(role_len);
        e.role.assign(role.begin(), role.end());
        const std::uint16_t state_len = r.u16();
        e.state = detail::to_vector(r.bytes(state_len));
        init.entities.push_back(std::move(e));
      }
      m.payload = std::move(init);
      break;
    }
    case MsgType::kStateUpdate: {
      StateUpdate su;
      su.group = r.u8();
      const std::uint16_t n = r.u16();
      for (std::uint32_t i = 0; i < n && r.ok(); ++i) {
        EntityUpdate e;
        e.id = r.u32();
        e.tick = r.u32();
        const std::uint16_t state_len = r.u16();
        e.state = detail::to_vector(r.bytes(state_len));
        su.entities.push_back(std::move(e));
      }
      m.payload = std::move(su);
      break;
    }
    case MsgType::kInput: {
      Input in;
      in.code = r.u8();
      if (in.is_move()) {
        in.dx = r.f32();
        in.dy = r.f32();
      }
      m.payload = in;
      break;
    }
    case MsgType::kProbe: {
      Probe p;
      p.round_id = r.u32();
      p.probe_index = r.u8();
      m.payload = p;
      break;
    }
    case MsgType::kProbeAck: {
      ProbeAck p;
      p.round_id = r.u32();
      p.probe_index = r.u8();
      m.payload = p;
      break;
    }
  }
  if (!r.ok()) return DecodeError::kTruncated;
  if (!r.at_end()) return DecodeError::kTrailingBytes;
  return m;
}

/// Wire size of one entity inside a STATE_UPDATE payload.
inline std::size_t update_entry_size(const EntityUpdate& e) { return 10 + e.state.size(); }

inline constexpr std::size_t kStateUpdateFixed = kHeaderSize + 3;

/// Splits one group's updates into STATE_UPDATE payloads that each fit a
/// datagram and carry at most `max_entities` entries (0 means no cap).
/// An empty input produces no payloads.
inline std::vector<StateUpdate> split_state_update(GroupId group,
                                                   std::vector<EntityUpdate> updates,
                                                   std::size_t max_entities = 0) {
  std::vector<StateUpdate> out;
  StateUpdate cur{group, {}};
  std::size_t size = kStateUpdateFixed;
  for (auto& u : updates) {
    const std::size_t entry = update_entry_size(u);
    if (kStateUpdateFixed + entry > kMaxDatagram) {
      throw EncodeError("entity " + std::to_string(u.id) + " state does not fit a datagram");
    }
    const bool full = (max_entities != 0 && cur.entities.size() >= max_entities) ||
                      size + entry > kMaxDatagram;
    if (full && !cur.entities.empty()) {
      out.push_back(std::move(cur));
      cur = StateUpdate{group, {}};
      size = kStateUpdateFixed;
    }
    size += entry;
    cur.entities.push_back(std::move(u));
  }
  if (!cur.entities.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::kInit: return "INIT";
    case MsgType::kStateUpdate: return "STATE_UPDATE";
    case MsgType::kInput: return "INPUT";
    case MsgType::kProbe: return "PROBE";
    case MsgType::kProbeAck: return "PROBE_ACK";
  }
  return "?";
}

}  // namespace lodsync::wire
