#pragma once

// Glue between the generic sync engine and the Duck Hunt workload, plus the
// client-side session (replica, bot, staleness sampling) shared by the
// simulator and the real-socket client.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lodsync/core_model.hpp"
#include "lodsync/metrics.hpp"
#include "lodsync/sync_engine.hpp"
#include "lodsync/wire_protocol.hpp"
#include "lodsync/workload_duckhunt.hpp"

namespace lodsync {

/// Adapts a duckhunt::Scene to the GameModel concept.
class DuckHuntModel {
 public:
  explicit DuckHuntModel(duckhunt::Scene scene) : scene_(std::move(scene)) {
    for (const auto& e : scene_.entities()) index_[e.id] = 0;
    reindex();
  }

  void advance(TimeMs now) {
    if (now > last_) {
      scene_.step(now - last_);
      last_ = now;
    }
    if (scene_.advance_wave(now)) reindex();
  }

  bool apply_input(const wire::Input& in, TimeMs now) {
    return scene_.apply_input(in, now) == duckhunt::InputResult::kApplied;
  }

  std::vector<std::uint8_t> state_of(EntityId id) const {
    return duckhunt::encode_blob(scene_.entities().at(index_.at(id)));
  }

  const duckhunt::Scene& scene() const noexcept { return scene_; }
  duckhunt::Scene& scene() noexcept { return scene_; }

 private:
  void reindex() {
    const auto& es = scene_.entities();
    for (std::size_t i = 0; i < es.size(); ++i) index_[es[i].id] = i;
  }

  duckhunt::Scene scene_;
  std::map<EntityId, std::size_t> index_;
  TimeMs last_ = 0;
};

static_assert(GameModel<DuckHuntModel>);

/// Organization holding one entity per scene entity, keyed by role name.
inline Organization build_organization(const RolesFile& roles, std::vector<GroupConfig> groups,
                                       const duckhunt::Scene& scene) {
  Organization org(roles.roles, std::move(groups), roles.er_role);
  for (const auto& e : scene.entities()) {
    org.add_entity(e.id, std::string(duckhunt::role_name(e.kind)), duckhunt::encode_blob(e));
  }
  return org;
}

using DuckHuntServer = ServerEngine<DuckHuntModel>;

inline DuckHuntServer make_duckhunt_server(const RolesFile& roles, std::vector<GroupConfig> groups,
                                           const duckhunt::SceneConfig& scene_cfg,
                                           EngineOptions opts = {}) {
  duckhunt::Scene scene(scene_cfg);
  Organization org = build_organization(roles, std::move(groups), scene);
  return DuckHuntServer(std::move(org), DuckHuntModel(std::move(scene)), opts);
}

/// Decodes the client's replica into the bot's view.
inline std::vector<duckhunt::ViewEntity> client_view(const ClientModel& model) {
  std::vector<duckhunt::ViewEntity> view;
  view.reserve(model.entities().size());
  for (const auto& [id, e] : model.entities()) {
    auto kind = duckhunt::parse_kind(e.role);
    auto blob = duckhunt::decode_blob(e.state);
    if (!kind || !blob) continue;
    view.push_back({id, *kind, blob->x, blob->y, blob->status == duckhunt::Status::kAlive});
  }
  return view;
}

/// Observed update spacing per (entity, group), counted only between two
/// consecutive updates received in the same group.
using IntervalHistogram = std::map<std::pair<EntityId, GroupId>, std::map<TimeMs, std::uint64_t>>;

inline constexpr TimeMs kJoinRetryMs = 500;

/// Client side of a game session: replica, optional bot, probe echo,
/// staleness sampling and receive counters.
class ClientSession {
 public:
  explicit ClientSession(bool bot_enabled = true, duckhunt::BotConfig bot_cfg = {})
      : bot_enabled_(bot_enabled), bot_(bot_cfg) {
    model_.set_apply_listener([this](const ClientEntity& e, TimeMs now) { on_applied(e, now); });
  }

  const ClientModel& model() const noexcept { return model_; }
  const IntervalHistogram& intervals() const noexcept { return intervals_; }
  MetricsLog& metrics() noexcept { return metrics_; }
  const duckhunt::Bot& bot() const noexcept { return bot_; }
  std::uint64_t datagrams_received() const noexcept { return received_; }

  /// Handles a datagram from the server and returns replies.
  std::vector<std::vector<std::uint8_t>> on_datagram(std::span<const std::uint8_t> bytes, TimeMs now) {
    std::vector<std::vector<std::uint8_t>> replies;
    ++received_;
    pkts_in_.count(now, std::nullopt, std::nullopt);
    auto res = wire::decode(bytes);
    if (std::holds_alternative<wire::DecodeError>(res)) {
      model_.count_decode_error();
      return replies;
    }
    auto& msg = std::get<wire::Message>(res);
    if (auto* su = std::get_if<wire::StateUpdate>(&msg.payload)) {
      pkts_in_.count(now, std::nullopt, su->group);
      model_.apply_update(*su, now);
    } else if (auto* p = std::get_if<wire::Probe>(&msg.payload)) {
      replies.push_back(make(now, wire::Payload{model_.on_probe(*p)}));
    } else if (auto* init = std::get_if<wire::Init>(&msg.payload)) {
      if (!model_.initialized()) init_time_ = now;
      model_.on_init(*init, now);
    }
    return replies;
  }

  /// One staleness sample per initialized entity at instant `now`.
  void sample(TimeMs now) {
    if (!model_.initialized()) return;
    const TimeMs second = now / 1000;
    if (second != sample_second_) flush_staleness();
    sample_second_ = second;
    for (const auto& [id, e] : model_.entities()) {
      auto& acc = staleness_acc_[id];
      acc.first += static_cast<double>(now - e.last_receive_ms);
      acc.second += 1;
    }
  }

  /// Join requests until INIT arrives, then bot inputs.
  std::vector<std::vector<std::uint8_t>> act(TimeMs now) {
    std::vector<std::vector<std::uint8_t>> out;
    if (!model_.initialized()) {
      if (!next_join_ || now >= *next_join_) {
        out.push_back(make(now, wire::Payload{wire::Init{}}));
        next_join_ = now + kJoinRetryMs;
      }
      return out;
    }
    if (!bot_enabled_) return out;
    const auto view = client_view(model_);
    for (const auto& in : bot_.act(view, now)) out.push_back(make(now, wire::Payload{in}));
    return out;
  }

  void flush_metrics() {
    flush_staleness();
    applied_.flush_all(metrics_);
    pkts_in_.flush_all(metrics_);
  }

  std::optional<TimeMs> init_time() const noexcept { return init_time_; }

 private:
  void on_applied(const ClientEntity& e, TimeMs now) {
    applied_.count(now, e.id, e.last_group);
    auto it = last_apply_.find(e.id);
    if (it != last_apply_.end() && e.last_group && it->second.second == *e.last_group) {
      ++intervals_[{e.id, *e.last_group}][now - it->second.first];
    }
    last_apply_[e.id] = {now, e.last_group.value_or(0)};
  }

  void flush_staleness() {
    if (sample_second_ < 0) return;
    for (const auto& [id, acc] : staleness_acc_) {
      if (acc.second == 0) continue;
      const auto g = model_.entities().at(id).last_group;
      metrics_.add(sample_second_ * 1000, EventKind::kStalenessSample, id, g, acc.first / acc.second);
    }
    staleness_acc_.clear();
  }

  std::vector<std::uint8_t> make(TimeMs now, wire::Payload p) {
    return wire::encode(wire::Message{{seq_++, static_cast<std::uint64_t>(now)}, std::move(p)});
  }

  bool bot_enabled_;
  duckhunt::Bot bot_;
  ClientModel model_;
  MetricsLog metrics_;
  PerSecondCounter applied_{EventKind::kUpdateApplied};
  PerSecondCounter pkts_in_{EventKind::kPktsIn};
  std::map<EntityId, std::pair<double, std::uint64_t>> staleness_acc_;
  std::map<EntityId, std::pair<TimeMs, GroupId>> last_apply_;
  IntervalHistogram intervals_;
  TimeMs sample_second_ = -1;
  std::optional<TimeMs> next_join_;
  std::optional<TimeMs> init_time_;
  std::uint32_t seq_ = 0;
  std::uint64_t received_ = 0;
};

}  // namespace lodsync
