#pragma once

// Loss-based congestion measurement. The server emits rounds of 100 probes,
// one every 50 ms; the client echoes each one. Every probe without an echo
// by the round deadline counts as lost, and the latest completed round's
// loss percentage is the congestion figure fed to group assignment.

#include <algorithm>
#include <bitset>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lodsync/wire_protocol.hpp"

namespace lodsync {

using TimeMs = std::int64_t;

inline constexpr std::uint32_t kProbesPerRound = 100;
inline constexpr TimeMs kProbeSpacingMs = 50;
inline constexpr TimeMs kDefaultAckTimeoutMs = 500;

enum class AckOutcome { kAccepted, kDuplicate, kLate, kSpurious, kUnknownRound };

class ProbeRound {
 public:
  ProbeRound(std::uint32_t id, TimeMs start, TimeMs ack_timeout)
      : id_(id), start_(start), ack_timeout_(ack_timeout) {}

  std::uint32_t id() const noexcept { return id_; }
  TimeMs start() const noexcept { return start_; }
  TimeMs send_time(std::uint32_t index) const noexcept {
    return start_ + static_cast<TimeMs>(index) * kProbeSpacingMs;
  }
  TimeMs last_send_time() const noexcept { return send_time(kProbesPerRound - 1); }
  /// Acks are accepted up to and including the deadline.
  TimeMs deadline() const noexcept { return last_send_time() + ack_timeout_; }

  std::uint32_t sent_count() const noexcept { return static_cast<std::uint32_t>(sent_.count()); }
  std::uint32_t acked_count() const noexcept { return static_cast<std::uint32_t>(acked_.count()); }
  bool was_sent(std::uint32_t index) const noexcept { return index < kProbesPerRound && sent_[index]; }
  bool was_acked(std::uint32_t index) const noexcept { return index < kProbesPerRound && acked_[index]; }
  bool all_sent() const noexcept { return sent_.all(); }
  bool expired(TimeMs now) const noexcept { return now > deadline(); }

  /// Indices due at or before `now` that have not gone out yet. Marks them
  /// sent.
  std::vector<std::uint8_t> take_due(TimeMs now) {
    std::vector<std::uint8_t> due;
    while (next_unsent_ < kProbesPerRound && send_time(next_unsent_) <= now) {
      sent_.set(next_unsent_);
      due.push_back(static_cast<std::uint8_t>(next_unsent_));
      ++next_unsent_;
    }
    return due;
  }

  std::optional<TimeMs> next_send_time() const noexcept {
    if (next_unsent_ >= kProbesPerRound) return std::nullopt;
    return send_time(next_unsent_);
  }

  AckOutcome record_ack(std::uint32_t index, TimeMs now) {
    if (!was_sent(index)) return AckOutcome::kSpurious;
    if (now > deadline()) return AckOutcome::kLate;
    if (acked_[index]) return AckOutcome::kDuplicate;
    acked_.set(index);
    return AckOutcome::kAccepted;
  }

  /// Unacknowledged share of the round, in percent.
  double loss_percent(TimeMs now) const {
    if (!expired(now)) throw std::logic_error("round_loss: round deadline has not passed");
    return static_cast<double>(kProbesPerRound - acked_count()) * 100.0 /
           static_cast<double>(kProbesPerRound);
  }

 private:
  std::uint32_t id_;
  TimeMs start_;
  TimeMs ack_timeout_;
  std::bitset<kProbesPerRound> sent_;
  std::bitset<kProbesPerRound> acked_;
  std::uint32_t next_unsent_ = 0;
};

struct CompletedRound {
  std::uint32_t round_id = 0;
  TimeMs closed_at = 0;
  double loss_percent = 0.0;
};

struct MonitorCounters {
  std::uint64_t rounds_completed = 0;
  std::uint64_t spurious_acks = 0;
  std::uint64_t duplicate_acks = 0;
  std::uint64_t late_acks = 0;
  std::uint64_t probes_sent = 0;
  double last_loss_percent = 0.0;
};

/// Owns the probe rounds. At most one round is sending at a time; a round
/// whose probes are all out keeps collecting echoes until its deadline
/// while the next round may already be sending.
class CongestionMonitor {
 public:
  explicit CongestionMonitor(TimeMs ack_timeout = kDefaultAckTimeoutMs)
      : ack_timeout_(ack_timeout) {
    if (ack_timeout < 0) throw std::invalid_argument("ack timeout must be non-negative");
  }

  TimeMs ack_timeout() const noexcept { return ack_timeout_; }

  /// Throws std::logic_error if the previous round is still sending.
  const ProbeRound& start_round(TimeMs now) {
    if (sending_round() != nullptr) {
      throw std::logic_error("start_round: a probe round is still open");
    }
    open_.emplace_back(next_round_id_++, now, ack_timeout_);
    return open_.back();
  }

  const ProbeRound* sending_round() const noexcept {
    if (!open_.empty() && !open_.back().all_sent()) return &open_.back();
    return nullptr;
  }

  const std::deque<ProbeRound>& open_rounds() const noexcept { return open_; }

  /// Probes whose send time has arrived.
  std::vector<wire::Probe> take_due_probes(TimeMs now) {
    std::vector<wire::Probe> out;
    if (open_.empty()) return out;
    auto& r = open_.back();
    for (auto idx : r.take_due(now)) out.push_back({r.id(), idx});
    counters_.probes_sent += out.size();
    return out;
  }

  std::optional<TimeMs> next_probe_time() const noexcept {
    if (open_.empty()) return std::nullopt;
    return open_.back().next_send_time();
  }

  AckOutcome record_ack(std::uint32_t round_id, std::uint8_t probe_index, TimeMs now) {
    auto it = std::find_if(open_.begin(), open_.end(),
                           [&](const ProbeRound& r) { return r.id() == round_id; });
    AckOutcome outcome = AckOutcome::kUnknownRound;
    if (it != open_.end()) outcome = it->record_ack(probe_index, now);
    switch (outcome) {
      case AckOutcome::kSpurious: ++counters_.spurious_acks; break;
      case AckOutcome::kDuplicate: ++counters_.duplicate_acks; break;
      case AckOutcome::kLate:
      case AckOutcome::kUnknownRound: ++counters_.late_acks; break;
      case AckOutcome::kAccepted: break;
    }
    return outcome;
  }

  /// Closes every round whose deadline has passed and returns them in
  /// completion order.
  std::vector<CompletedRound> close_expired(TimeMs now) {
    std::vector<CompletedRound> closed;
    while (!open_.empty() && open_.front().all_sent() && open_.front().expired(now)) {
      const auto& r = open_.front();
      CompletedRound c{r.id(), now, r.loss_percent(now)};
      counters_.rounds_completed++;
      counters_.last_loss_percent = c.loss_percent;
      last_ = c;
      closed.push_back(c);
      open_.pop_front();
    }
    return closed;
  }

  /// Most recent completed round's loss; 0 before any round completes.
  double current_congestion() const noexcept { return last_ ? last_->loss_percent : 0.0; }

  const std::optional<CompletedRound>& last_completed() const noexcept { return last_; }
  const MonitorCounters& counters() const noexcept { return counters_; }

 private:
  TimeMs ack_timeout_;
  std::uint32_t next_round_id_ = 1;
  std::deque<ProbeRound> open_;
  std::optional<CompletedRound> last_;
  MonitorCounters counters_;
};

}  // namespace lodsync
