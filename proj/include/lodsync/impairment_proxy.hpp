#pragma once

// Capacity-thresholded packet dropping. Time is cut into fixed one-second
// windows aligned to proxy start; in each window and each direction the
// first `capacity` packets are forwarded and the rest are dropped. The
// capacity follows a step schedule (offset seconds -> packets per second),
// holding the last entry forever.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lodsync/congestion_monitor.hpp"
#include "lodsync/line_config.hpp"
#include "lodsync/wire_protocol.hpp"

namespace lodsync::proxy {

struct ScheduleEntry {
  std::uint32_t start_offset_s = 0;
  std::uint32_t pkts_per_s = 0;

  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

class CapacitySchedule {
 public:
  explicit CapacitySchedule(std::vector<ScheduleEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw std::invalid_argument("capacity schedule is empty");
    if (entries_.front().start_offset_s != 0) {
      throw std::invalid_argument("capacity schedule must start at offset 0");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].pkts_per_s == 0) throw std::invalid_argument("capacity must be at least 1");
      if (i > 0 && entries_[i].start_offset_s <= entries_[i - 1].start_offset_s) {
        throw std::invalid_argument("schedule offsets must be strictly increasing");
      }
    }
  }

  static CapacitySchedule constant(std::uint32_t pkts_per_s) {
    return CapacitySchedule({{0, pkts_per_s}});
  }

  const std::vector<ScheduleEntry>& entries() const noexcept { return entries_; }

  /// Capacity in effect `elapsed_ms` after proxy start.
  std::uint32_t capacity_at(TimeMs elapsed_ms) const noexcept {
    std::uint32_t cap = entries_.front().pkts_per_s;
    for (const auto& e : entries_) {
      if (static_cast<TimeMs>(e.start_offset_s) * 1000 <= elapsed_ms) cap = e.pkts_per_s;
    }
    return cap;
  }

  friend bool operator==(const CapacitySchedule&, const CapacitySchedule&) = default;

 private:
  std::vector<ScheduleEntry> entries_;
};

/// `<start_offset_s> <pkts_per_s>` per line, '#' comments.
inline CapacitySchedule parse_schedule(std::string_view text, const std::string& source = "schedule") {
  std::vector<ScheduleEntry> entries;
  for (const auto& line : tokenize_config(text)) {
    if (line.tokens.size() != 2) {
      throw ConfigError(source, line.number, "expected '<start_offset_s> <pkts_per_s>'");
    }
    auto off = parse_int<std::uint32_t>(line.tokens[0]);
    auto cap = parse_int<std::uint32_t>(line.tokens[1]);
    if (!off) throw ConfigError(source, line.number, "offset must be a non-negative integer");
    if (!cap) throw ConfigError(source, line.number, "capacity must be a positive integer");
    if (*cap == 0) throw ConfigError(source, line.number, "zero capacity");
    if (entries.empty() && *off != 0) throw ConfigError(source, line.number, "first entry must be at offset 0");
    if (!entries.empty()) {
      if (*off == entries.back().start_offset_s) {
        throw ConfigError(source, line.number, "duplicate offset " + line.tokens[0]);
      }
      if (*off < entries.back().start_offset_s) {
        throw ConfigError(source, line.number, "offsets not increasing");
      }
    }
    entries.push_back({*off, *cap});
  }
  if (entries.empty()) throw ConfigError(source, 0, "empty schedule");
  return CapacitySchedule(std::move(entries));
}

inline CapacitySchedule load_schedule(const std::string& path) {
  return parse_schedule(read_text_file(path), path);
}

/// The 210 s testbed capacity profile, 30 s per step.
inline CapacitySchedule testbed_schedule() {
  return CapacitySchedule({{0, 6000}, {30, 3000}, {60, 5000}, {90, 2900},
                           {120, 7000}, {150, 2500}, {180, 3500}, {210, 3100}});
}

enum class Direction : std::uint8_t { kClientToServer = 0, kServerToClient = 1 };

inline std::string_view to_string(Direction d) {
  return d == Direction::kClientToServer ? "c2s" : "s2c";
}

enum class Verdict { kForward, kDrop };

struct ImpairmentOptions {
  // Independent random loss applied before the capacity budget.
  double drop_probability_c2s = 0.0;
  double drop_probability_s2c = 0.0;
  // Drops probe indices below this value in every round (server to client).
  std::uint32_t probe_drop_count = 0;
  std::uint64_t seed = 1;
};

struct WindowStats {
  TimeMs window_start_ms = 0;
  Direction direction = Direction::kClientToServer;
  std::uint32_t capacity = 0;
  std::uint64_t received = 0;
  std::uint64_t forwarded = 0;
  std::uint64_t dropped = 0;

  friend bool operator==(const WindowStats&, const WindowStats&) = default;
};

/// Admission logic of the proxy, independent of sockets. Each direction has
/// its own budget; `now` is measured on the caller's clock and windows are
/// aligned to `start_ms`.
class ImpairmentProxy {
 public:
  explicit ImpairmentProxy(CapacitySchedule schedule, TimeMs start_ms = 0, ImpairmentOptions opts = {})
      : schedule_(std::move(schedule)), start_ms_(start_ms), opts_(opts), rng_(opts.seed) {
    for (double p : {opts_.drop_probability_c2s, opts_.drop_probability_s2c}) {
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("drop probability outside [0,1]");
    }
  }

  const CapacitySchedule& schedule() const noexcept { return schedule_; }
  const ImpairmentOptions& options() const noexcept { return opts_; }
  TimeMs start_ms() const noexcept { return start_ms_; }

  Verdict admit(std::span<const std::uint8_t> packet, Direction dir, TimeMs now) {
    const TimeMs elapsed = now < start_ms_ ? 0 : now - start_ms_;
    const TimeMs window = elapsed / 1000;
    auto& st = state_[static_cast<int>(dir)];
    if (window > latest_window_) latest_window_ = window;
    auto& w = st[window];
    if (w.capacity == 0) w.capacity = schedule_.capacity_at(window * 1000);
    ++w.received;

    bool drop = false;
    const double p = dir == Direction::kClientToServer ? opts_.drop_probability_c2s
                                                       : opts_.drop_probability_s2c;
    if (p > 0.0) {
      // Always draw so decisions depend only on the packet sequence.
      const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
      drop = u < p;
    }
    if (!drop && opts_.probe_drop_count > 0 && dir == Direction::kServerToClient &&
        packet.size() == wire::kHeaderSize + 5 && packet[1] == static_cast<std::uint8_t>(wire::MsgType::kProbe) &&
        packet.back() < opts_.probe_drop_count) {
      drop = true;
    }
    if (!drop && w.forwarded >= w.capacity) drop = true;

    if (drop) {
      ++w.dropped;
      return Verdict::kDrop;
    }
    ++w.forwarded;
    return Verdict::kForward;
  }

  /// Per-window history for both directions from the first window through
  /// the latest one seen (or the one containing `now`), zero rows included.
  std::vector<WindowStats> stats(std::optional<TimeMs> now = std::nullopt) const {
    TimeMs last = latest_window_;
    if (now) last = std::max(last, (*now < start_ms_ ? 0 : *now - start_ms_) / 1000);
    std::vector<WindowStats> out;
    if (last < 0) return out;
    for (TimeMs win = 0; win <= last; ++win) {
      for (Direction d : {Direction::kClientToServer, Direction::kServerToClient}) {
        const auto& st = state_[static_cast<int>(d)];
        WindowStats row{win * 1000, d, schedule_.capacity_at(win * 1000), 0, 0, 0};
        if (auto it = st.find(win); it != st.end()) {
          row.received = it->second.received;
          row.forwarded = it->second.forwarded;
          row.dropped = it->second.dropped;
        }
        out.push_back(row);
      }
    }
    return out;
  }

 private:
  struct Counters {
    std::uint32_t capacity = 0;
    std::uint64_t received = 0;
    std::uint64_t forwarded = 0;
    std::uint64_t dropped = 0;
  };

  CapacitySchedule schedule_;
  TimeMs start_ms_;
  ImpairmentOptions opts_;
  std::mt19937_64 rng_;
  std::map<TimeMs, Counters> state_[2];
  TimeMs latest_window_ = -1;
};

inline constexpr std::string_view kStatsHeader =
    "window_start_ms,direction,capacity,received,forwarded,dropped";

inline void write_stats_csv(std::ostream& os, const std::vector<WindowStats>& rows) {
  os << kStatsHeader << '\n';
  for (const auto& r : rows) {
    os << r.window_start_ms << ',' << to_string(r.direction) << ',' << r.capacity << ','
       << r.received << ',' << r.forwarded << ',' << r.dropped << '\n';
  }
}

inline std::vector<WindowStats> parse_stats_csv(std::string_view text) {
  std::vector<WindowStats> rows;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line == kStatsHeader) continue;
    }
    std::vector<std::string_view> f;
    std::size_t p = 0;
    while (true) {
      auto c = line.find(',', p);
      f.push_back(line.substr(p, c == std::string_view::npos ? std::string_view::npos : c - p));
      if (c == std::string_view::npos) break;
      p = c + 1;
    }
    if (f.size() != 6) throw ConfigError("stats", 0, "malformed stats row");
    WindowStats r;
    auto t = parse_int<TimeMs>(f[0]);
    auto cap = parse_int<std::uint32_t>(f[2]);
    auto rx = parse_int<std::uint64_t>(f[3]);
    auto fw = parse_int<std::uint64_t>(f[4]);
    auto dr = parse_int<std::uint64_t>(f[5]);
    if (!t || !cap || !rx || !fw || !dr || (f[1] != "c2s" && f[1] != "s2c")) {
      throw ConfigError("stats", 0, "malformed stats row");
    }
    r.window_start_ms = *t;
    r.direction = f[1] == "c2s" ? Direction::kClientToServer : Direction::kServerToClient;
    r.capacity = *cap;
    r.received = *rx;
    r.forwarded = *fw;
    r.dropped = *dr;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace lodsync::proxy
