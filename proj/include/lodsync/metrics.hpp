#pragma once

// Event rows shared by the server, client and harness reports:
//   time_ms,kind,entity_id,group_id,value
// entity_id and group_id are empty where they do not apply.

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "lodsync/core_model.hpp"
#include "lodsync/line_config.hpp"

namespace lodsync {

enum class EventKind : std::uint8_t {
  kUpdateApplied,    // per entity per second: updates applied by the client
  kStalenessSample,  // per entity per second: mean staleness over 1 ms samples
  kReassignment,     // entity moved to group_id; value = congestion percent
  kLossPercent,      // probe round closed; value = loss percent
  kPktsOut,          // per second: datagrams the server emitted
  kPktsIn,           // per second: server datagrams the client received
};

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::kUpdateApplied: return "update_applied";
    case EventKind::kStalenessSample: return "staleness_sample";
    case EventKind::kReassignment: return "reassignment";
    case EventKind::kLossPercent: return "loss_percent";
    case EventKind::kPktsOut: return "pkts_out";
    case EventKind::kPktsIn: return "pkts_in";
  }
  return "?";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (auto k : {EventKind::kUpdateApplied, EventKind::kStalenessSample, EventKind::kReassignment,
                 EventKind::kLossPercent, EventKind::kPktsOut, EventKind::kPktsIn}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct MetricEvent {
  std::int64_t time_ms = 0;
  EventKind kind = EventKind::kPktsOut;
  std::optional<EntityId> entity;
  std::optional<GroupId> group;
  double value = 0.0;

  friend bool operator==(const MetricEvent&, const MetricEvent&) = default;
};

/// Shortest round-trip representation; keeps reports byte-stable.
inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline constexpr std::string_view kEventHeader = "time_ms,kind,entity_id,group_id,value";

inline void write_event(std::ostream& os, const MetricEvent& e) {
  os << e.time_ms << ',' << to_string(e.kind) << ',';
  if (e.entity) os << *e.entity;
  os << ',';
  if (e.group) os << static_cast<unsigned>(*e.group);
  os << ',' << format_number(e.value) << '\n';
}

/// Parses one CSV event row; nullopt on malformed input.
inline std::optional<MetricEvent> parse_event(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t pos = 0;
  while (true) {
    auto comma = line.find(',', pos);
    f.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (f.size() != 5) return std::nullopt;
  MetricEvent e;
  auto t = parse_int<std::int64_t>(f[0]);
  auto k = parse_event_kind(f[1]);
  auto v = parse_real(f[4]);
  if (!t || !k || !v) return std::nullopt;
  e.time_ms = *t;
  e.kind = *k;
  e.value = *v;
  if (!f[2].empty()) {
    auto id = parse_int<EntityId>(f[2]);
    if (!id) return std::nullopt;
    e.entity = *id;
  }
  if (!f[3].empty()) {
    auto g = parse_int<unsigned>(f[3]);
    if (!g || *g > 255) return std::nullopt;
    e.group = static_cast<GroupId>(*g);
  }
  return e;
}

class MetricsLog {
 public:
  void add(MetricEvent e) { events_.push_back(std::move(e)); }
  void add(std::int64_t t, EventKind k, std::optional<EntityId> entity, std::optional<GroupId> group,
           double value) {
    events_.push_back({t, k, entity, group, value});
  }

  const std::vector<MetricEvent>& events() const noexcept { return events_; }
  std::vector<MetricEvent>& events() noexcept { return events_; }

  void write_csv(std::ostream& os, bool header = true) const {
    if (header) os << kEventHeader << '\n';
    for (const auto& e : events_) write_event(os, e);
  }

 private:
  std::vector<MetricEvent> events_;
};

/// Accumulates counts per (second, entity, group) and emits them as rows.
class PerSecondCounter {
 public:
  explicit PerSecondCounter(EventKind kind) : kind_(kind) {}

  void count(std::int64_t time_ms, std::optional<EntityId> entity, std::optional<GroupId> group,
             double amount = 1.0) {
    counts_[{time_ms / 1000, key(entity), key(group)}] += amount;
  }

  /// Rows for every second strictly before `up_to_second`, then forgets them.
  void flush(MetricsLog& log, std::int64_t up_to_second) {
    auto end = counts_.lower_bound({up_to_second, -1, -1});
    for (auto it = counts_.begin(); it != end; ++it) {
      const auto& [sec, ent, grp] = it->first;
      log.add(sec * 1000, kind_, unkey<EntityId>(ent), unkey<GroupId>(grp), it->second);
    }
    counts_.erase(counts_.begin(), end);
  }

  void flush_all(MetricsLog& log) { flush(log, INT64_MAX); }

 private:
  template <typename T>
  static std::int64_t key(const std::optional<T>& v) {
    return v ? static_cast<std::int64_t>(*v) : -1;
  }
  template <typename T>
  static std::optional<T> unkey(std::int64_t v) {
    if (v < 0) return std::nullopt;
    return static_cast<T>(v);
  }

  EventKind kind_;
  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, double> counts_;
};

}  // namespace lodsync
