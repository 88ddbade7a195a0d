#pragma once

// State synchronization loop. The server owns the authoritative game model
// and the organization; each entity is re-sent (absolute state) every
// period of its current group, inputs from the client are applied in
// arrival order, and every 5 s the congestion figure is checked against
// the entity of reference to decide on a full reassignment. The client
// replica applies newer ticks only and echoes probes.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lodsync/congestion_monitor.hpp"
#include "lodsync/core_model.hpp"
#include "lodsync/metrics.hpp"
#include "lodsync/wire_protocol.hpp"

namespace lodsync {

/// A game model the server engine can drive.
template <typename M>
concept GameModel = requires(M m, const M cm, const wire::Input& in, TimeMs t, EntityId id) {
  { m.advance(t) } -> std::same_as<void>;
  { m.apply_input(in, t) } -> std::same_as<bool>;
  { cm.state_of(id) } -> std::same_as<std::vector<std::uint8_t>>;
};

inline constexpr TimeMs kMaintenancePeriodMs = 5000;

struct EngineOptions {
  bool adaptive = true;                 // false pins every entity to group 0
  std::size_t max_batch_entities = 0;   // per STATE_UPDATE datagram; 0 fills to 1400 bytes
  TimeMs maintenance_period_ms = kMaintenancePeriodMs;
  TimeMs ack_timeout_ms = kDefaultAckTimeoutMs;
  bool probing = true;
};

struct Datagram {
  std::vector<std::uint8_t> bytes;
  wire::MsgType type = wire::MsgType::kStateUpdate;
  std::optional<GroupId> group;  // STATE_UPDATE only
};

struct ReassignmentRecord {
  TimeMs time_ms = 0;
  double congestion = 0.0;
  AssignmentDelta delta;
};

struct EngineCounters {
  std::uint64_t inputs_applied = 0;
  std::uint64_t malformed_inputs = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t unexpected_messages = 0;
  std::uint64_t datagrams_out = 0;
  std::uint64_t datagrams_in = 0;
  std::uint64_t joins = 0;
  std::uint64_t maintenance_cycles = 0;
  std::uint64_t er_triggers = 0;
};

template <GameModel Model>
class ServerEngine {
 public:
  ServerEngine(Organization org, Model model, EngineOptions opts = {})
      : org_(std::move(org)),
        model_(std::move(model)),
        opts_(opts),
        monitor_(opts.ack_timeout_ms) {
    if (opts_.maintenance_period_ms <= 0) throw std::invalid_argument("maintenance period must be positive");
    if (!opts_.adaptive) org_.pin_all(0);
    for (const auto& [id, e] : org_.entities()) next_due_[id] = 0;
  }

  const Organization& organization() const noexcept { return org_; }
  Model& model() noexcept { return model_; }
  const Model& model() const noexcept { return model_; }
  const CongestionMonitor& monitor() const noexcept { return monitor_; }
  const EngineCounters& counters() const noexcept { return counters_; }
  const EngineOptions& options() const noexcept { return opts_; }
  const std::vector<ReassignmentRecord>& reassignments() const noexcept { return reassignments_; }
  const std::vector<CompletedRound>& completed_rounds() const noexcept { return rounds_; }
  TimeMs maintenance_due() const noexcept { return maintenance_due_; }
  MetricsLog& metrics() noexcept { return metrics_; }

  /// Earliest pending update for group `g`, if it has members.
  std::optional<TimeMs> next_due(GroupId g) const {
    std::optional<TimeMs> best;
    for (const auto& [id, e] : org_.entities()) {
      if (e.current_group != g) continue;
      const TimeMs t = next_due_.at(id);
      if (!best || t < *best) best = t;
    }
    return best;
  }

  /// Next instant at which tick() has work to do.
  TimeMs next_wakeup() const {
    TimeMs t = maintenance_due_;
    for (const auto& [id, due] : next_due_) t = std::min(t, due);
    if (auto p = monitor_.next_probe_time()) t = std::min(t, *p);
    for (const auto& r : monitor_.open_rounds()) {
      if (r.all_sent()) t = std::min(t, r.deadline() + 1);
    }
    return t;
  }

  /// Advances the model to `now`, runs maintenance if due, and returns the
  /// datagrams due at `now`: one STATE_UPDATE per group batch (split to fit)
  /// followed by due probes. Never emits an entity ahead of its schedule.
  std::vector<Datagram> tick(TimeMs now) {
    model_.advance(now);
    close_rounds(now);
    while (now >= maintenance_due_) maintenance(now);

    std::vector<Datagram> out;
    const auto& groups = org_.groups();
    std::vector<std::vector<wire::EntityUpdate>> batches(groups.size());
    for (auto& [id, rec] : org_.mutable_entities()) {
      TimeMs& due = next_due_[id];
      if (due > now) continue;
      const auto period = static_cast<TimeMs>(groups[rec.current_group].period_ms);
      due += period;
      if (due <= now) due = now + period;  // fell behind real time
      rec.state = model_.state_of(id);
      batches[rec.current_group].push_back({id, ++rec.last_update_tick, rec.state});
    }
    for (std::size_t g = 0; g < batches.size(); ++g) {
      if (batches[g].empty()) continue;
      for (auto& su : wire::split_state_update(static_cast<GroupId>(g), std::move(batches[g]),
                                               opts_.max_batch_entities)) {
        out.push_back(make(now, wire::Payload{std::move(su)}, static_cast<GroupId>(g)));
      }
    }
    if (opts_.probing) {
      for (const auto& p : monitor_.take_due_probes(now)) {
        out.push_back(make(now, wire::Payload{p}));
      }
    }
    for (const auto& d : out) {
      pkts_out_.count(now, std::nullopt, std::nullopt);
      if (d.group) pkts_out_.count(now, std::nullopt, d.group);
    }
    counters_.datagrams_out += out.size();
    return out;
  }

  /// Closes expired probe rounds, reads congestion, and reassigns every
  /// entity if the entity of reference no longer sits in its expected
  /// group. Starts the next probe round and schedules the next cycle.
  void maintenance(TimeMs now) {
    close_rounds(now);
    ++counters_.maintenance_cycles;
    const double congestion = monitor_.current_congestion();
    if (opts_.adaptive && er_trigger_check(org_, congestion)) {
      ++counters_.er_triggers;
      ReassignmentRecord rec{now, congestion, reassign_all(org_, congestion)};
      for (const auto& mv : rec.delta) {
        next_due_[mv.entity] = now;  // due immediately in the new group
        metrics_.add(now, EventKind::kReassignment, mv.entity, mv.to, congestion);
      }
      reassignments_.push_back(std::move(rec));
    }
    if (opts_.probing && monitor_.sending_round() == nullptr) monitor_.start_round(now);
    maintenance_due_ += opts_.maintenance_period_ms;
  }

  /// Handles one inbound datagram; returns any immediate replies.
  std::vector<Datagram> on_datagram(std::span<const std::uint8_t> bytes, TimeMs now) {
    ++counters_.datagrams_in;
    auto res = wire::decode(bytes);
    if (std::holds_alternative<wire::DecodeError>(res)) {
      ++counters_.decode_errors;
      return {};
    }
    auto& msg = std::get<wire::Message>(res);
    std::vector<Datagram> out;
    if (auto* in = std::get_if<wire::Input>(&msg.payload)) {
      on_input(*in, now);
    } else if (auto* ack = std::get_if<wire::ProbeAck>(&msg.payload)) {
      monitor_.record_ack(ack->round_id, ack->probe_index, now);
    } else if (std::holds_alternative<wire::Init>(msg.payload)) {
      // A client join request; answer with the full scene.
      ++counters_.joins;
      out.push_back(make_init(now));
      pkts_out_.count(now, std::nullopt, std::nullopt);
    } else {
      ++counters_.unexpected_messages;
    }
    counters_.datagrams_out += out.size();
    return out;
  }

  void on_input(const wire::Input& in, TimeMs now) {
    if (in.code != static_cast<std::uint8_t>(wire::InputCode::kMove) &&
        in.code != static_cast<std::uint8_t>(wire::InputCode::kShoot)) {
      ++counters_.malformed_inputs;
      return;
    }
    if (model_.apply_input(in, now)) {
      ++counters_.inputs_applied;
    } else {
      ++counters_.malformed_inputs;
    }
  }

  /// INIT carrying every entity with its role and current state. Scenes
  /// too large for one datagram are not supported by the join handshake.
  Datagram make_init(TimeMs now) {
    wire::Init init;
    for (auto& [id, rec] : org_.mutable_entities()) {
      rec.state = model_.state_of(id);
      init.entities.push_back({id, rec.role, rec.state});
    }
    return make(now, wire::Payload{std::move(init)});
  }

  /// Emits per-second packet counters accumulated so far.
  void flush_metrics(std::optional<TimeMs> up_to = std::nullopt) {
    if (up_to) {
      pkts_out_.flush(metrics_, *up_to / 1000);
    } else {
      pkts_out_.flush_all(metrics_);
    }
  }

 private:
  void close_rounds(TimeMs now) {
    for (const auto& c : monitor_.close_expired(now)) {
      rounds_.push_back(c);
      metrics_.add(now, EventKind::kLossPercent, std::nullopt, std::nullopt, c.loss_percent);
    }
  }

  Datagram make(TimeMs now, wire::Payload payload, std::optional<GroupId> group = std::nullopt) {
    wire::Message m{{seq_++, static_cast<std::uint64_t>(now)}, std::move(payload)};
    return {wire::encode(m), m.type(), group};
  }

  Organization org_;
  Model model_;
  EngineOptions opts_;
  CongestionMonitor monitor_;
  std::map<EntityId, TimeMs> next_due_;
  TimeMs maintenance_due_ = 0;
  std::uint32_t seq_ = 0;
  EngineCounters counters_;
  std::vector<ReassignmentRecord> reassignments_;
  std::vector<CompletedRound> rounds_;
  MetricsLog metrics_;
  PerSecondCounter pkts_out_{EventKind::kPktsOut};
};

// ---------------------------------------------------------------------------
// Client replica
// ---------------------------------------------------------------------------

struct ClientEntity {
  EntityId id = 0;
  std::string role;
  std::vector<std::uint8_t> state;
  std::uint32_t last_tick = 0;
  TimeMs last_receive_ms = 0;
  std::optional<GroupId> last_group;
};

struct ClientCounters {
  std::uint64_t updates_applied = 0;
  std::uint64_t stale_rejected = 0;
  std::uint64_t buffered = 0;
  std::uint64_t dropped_unknown = 0;
  std::uint64_t probes_echoed = 0;
  std::uint64_t decode_errors = 0;
};

struct ApplyResult {
  std::size_t applied = 0;
  std::size_t stale = 0;
  std::size_t buffered = 0;
  std::size_t dropped = 0;
};

inline constexpr std::size_t kClientBufferLimit = 100;

class ClientModel {
 public:
  bool initialized() const noexcept { return initialized_; }
  const std::map<EntityId, ClientEntity>& entities() const noexcept { return entities_; }
  const ClientCounters& counters() const noexcept { return counters_; }
  std::size_t pending() const noexcept { return pending_.size(); }

  /// Installs the scene carried by INIT (later INITs for known entities are
  /// ignored) and replays buffered updates.
  void on_init(const wire::Init& init, TimeMs now) {
    for (const auto& e : init.entities) {
      if (entities_.count(e.id)) continue;
      entities_[e.id] = ClientEntity{e.id, e.role, e.state, 0, now, std::nullopt};
    }
    initialized_ = true;
    auto pending = std::move(pending_);
    pending_.clear();
    for (const auto& p : pending) {
      if (auto it = entities_.find(p.update.id); it != entities_.end()) {
        apply_one(it->second, p.update, p.group, p.received, nullptr);
      }
    }
  }

  /// Applies each carried entity whose tick is newer than the last applied
  /// one. Updates for entities not yet known are buffered (up to 100).
  ApplyResult apply_update(const wire::StateUpdate& su, TimeMs now) {
    ApplyResult r;
    for (const auto& u : su.entities) {
      auto it = entities_.find(u.id);
      if (it == entities_.end()) {
        if (pending_.size() < kClientBufferLimit) {
          pending_.push_back({u, su.group, now});
          ++r.buffered;
          ++counters_.buffered;
        } else {
          ++r.dropped;
          ++counters_.dropped_unknown;
        }
        continue;
      }
      apply_one(it->second, u, su.group, now, &r);
    }
    return r;
  }

  wire::ProbeAck on_probe(const wire::Probe& p) {
    ++counters_.probes_echoed;
    return {p.round_id, p.probe_index};
  }

  /// Time since `id` last received authoritative state.
  TimeMs staleness(EntityId id, TimeMs now) const {
    auto it = entities_.find(id);
    if (it == entities_.end()) throw std::out_of_range("staleness: entity not initialized");
    return now - it->second.last_receive_ms;
  }

  void count_decode_error() noexcept { ++counters_.decode_errors; }

  // Hook for per-entity apply logging.
  template <typename F>
  void set_apply_listener(F&& f) {
    listener_ = std::forward<F>(f);
  }

 private:
  struct Pending {
    wire::EntityUpdate update;
    GroupId group;
    TimeMs received;
  };

  void apply_one(ClientEntity& e, const wire::EntityUpdate& u, GroupId group, TimeMs now,
                 ApplyResult* r) {
    if (u.tick <= e.last_tick) {
      ++counters_.stale_rejected;
      if (r) ++r->stale;
      return;
    }
    e.last_tick = u.tick;
    e.state = u.state;
    e.last_receive_ms = now;
    e.last_group = group;
    ++counters_.updates_applied;
    if (r) ++r->applied;
    if (listener_) listener_(e, now);
  }

  bool initialized_ = false;
  std::map<EntityId, ClientEntity> entities_;
  std::vector<Pending> pending_;
  ClientCounters counters_;
  std::function<void(const ClientEntity&, TimeMs)> listener_;
};

}  // namespace lodsync
