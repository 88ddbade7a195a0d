#include <gtest/gtest.h>

#include <map>

#include "lodsync/sync_engine.hpp"
#include "oracles.hpp"

using namespace lodsync;

namespace {

struct StubModel {
  std::map<EntityId, float> x;
  TimeMs advanced_to = -1;

  void advance(TimeMs t) { advanced_to = t; }
  bool apply_input(const wire::Input& in, TimeMs) {
    if (!in.is_move()) return false;
    x[1] += in.dx;
    return true;
  }
  std::vector<std::uint8_t> state_of(EntityId id) const {
    return {static_cast<std::uint8_t>(id)};
  }
};
static_assert(GameModel<StubModel>);

std::vector<RoleSpec> tiered_roles() { return {{"a", 0.5}, {"b", 1.0}, {"c", 1.5}, {"d", 10.0}}; }

/// One entity per testbed group: a->Optimal, b->Enhanced, c->Medium, d->Degraded
/// at 10% congestion. The entity of reference sits where zero congestion
/// wants it, so maintenance leaves the spread alone.
ServerEngine<StubModel> spread_engine(EngineOptions opts = {}) {
  Organization org(tiered_roles(), oracle::testbed_groups(), "a");
  org.add_entity(1, "a");
  org.add_entity(2, "b");
  org.add_entity(3, "c");
  org.add_entity(4, "d");
  reassign_all(org, 10.0);
  return ServerEngine<StubModel>(std::move(org), StubModel{}, opts);
}

wire::Message decoded(const Datagram& d) { return std::get<wire::Message>(wire::decode(d.bytes)); }

/// Drives an engine for `end_ms`, acknowledging every probe whose index is
/// not below `k`. Returns per-entity send times.
template <typename Engine>
std::map<EntityId, std::vector<TimeMs>> drive(Engine& e, TimeMs end_ms, std::uint8_t k) {
  std::map<EntityId, std::vector<TimeMs>> sends;
  for (TimeMs now = 0; now < end_ms; ++now) {
    for (const auto& d : e.tick(now)) {
      auto m = decoded(d);
      if (auto* p = std::get_if<wire::Probe>(&m.payload)) {
        if (p->probe_index >= k) {
          e.on_datagram(wire::encode({{0, 0}, wire::ProbeAck{p->round_id, p->probe_index}}), now);
        }
      } else if (auto* su = std::get_if<wire::StateUpdate>(&m.payload)) {
        for (const auto& u : su->entities) sends[u.id].push_back(now);
      }
    }
  }
  return sends;
}

}  // namespace

TEST(ServerTick, AllGroupsDueAtZero) {
  EngineOptions opts;
  opts.probing = false;
  auto e = spread_engine(opts);
  const auto out = e.tick(0);
  ASSERT_EQ(out.size(), 4u);
  for (GroupId g = 0; g < 4; ++g) {
    EXPECT_EQ(out[g].type, wire::MsgType::kStateUpdate);
    EXPECT_EQ(out[g].group, g);
    EXPECT_EQ(std::get<wire::StateUpdate>(decoded(out[g]).payload).group, g);
  }
}

TEST(ServerTick, UpdateCountsOverOneSecond) {
  EngineOptions opts;
  opts.probing = false;
  auto e = spread_engine(opts);
  const auto sends = drive(e, 1000, 0);
  EXPECT_EQ(sends.at(1).size(), 200u);  // Optimal, 5 ms
  EXPECT_EQ(sends.at(2).size(), 29u);   // Enhanced, 35 ms: 0..980
  EXPECT_EQ(sends.at(3).size(), 25u);   // Medium, 40 ms
  EXPECT_EQ(sends.at(4).size(), 14u);   // Degraded, 75 ms: 0..975
}

TEST(ServerTick, IntervalsEqualPeriodsAndNothingIsEarly) {
  auto e = spread_engine();
  const auto sends = drive(e, 20000, 0);
  const std::map<EntityId, TimeMs> period{{1, 5}, {2, 35}, {3, 40}, {4, 75}};
  for (const auto& [id, times] : sends) {
    ASSERT_EQ(times.front(), 0);
    for (std::size_t i = 1; i < times.size(); ++i) ASSERT_EQ(times[i] - times[i - 1], period.at(id)) << id;
  }
}

TEST(ServerTick, NextWakeupAndNextDue) {
  EngineOptions opts;
  opts.probing = false;
  auto e = spread_engine(opts);
  e.tick(0);
  EXPECT_EQ(e.next_due(0), 5);
  EXPECT_EQ(e.next_due(3), 75);
  EXPECT_EQ(e.next_wakeup(), 5);
  EXPECT_TRUE(e.tick(3).empty());  // nothing due, nothing sent early
}

TEST(ServerTick, BatchesShareDatagramsPerGroup) {
  Organization org(tiered_roles(), oracle::testbed_groups(), "a");
  for (EntityId id = 1; id <= 10; ++id) org.add_entity(id, "a");
  EngineOptions opts;
  opts.probing = false;
  ServerEngine<StubModel> batched(org, StubModel{}, opts);
  EXPECT_EQ(batched.tick(0).size(), 1u);
  opts.max_batch_entities = 3;
  ServerEngine<StubModel> capped(org, StubModel{}, opts);
  EXPECT_EQ(capped.tick(0).size(), 4u);
}

TEST(ServerMaintenance, SteadyZeroCongestionNeverReassigns) {
  Organization org(default_roles().roles, default_groups(), "duck");
  org.add_entity(1, "reticle");
  org.add_entity(2, "duck");
  org.add_entity(3, "cloud");
  ServerEngine<StubModel> e(std::move(org), StubModel{});
  drive(e, 30000, 0);
  EXPECT_TRUE(e.reassignments().empty());
  EXPECT_GE(e.completed_rounds().size(), 4u);
  for (const auto& [id, rec] : e.organization().entities()) EXPECT_EQ(rec.current_group, 0);
}

TEST(ServerMaintenance, StepToTenPercentGivesOneDeltaAtACycleBoundary) {
  Organization org(default_roles().roles, default_groups(), "duck");
  org.add_entity(1, "reticle");
  org.add_entity(2, "duck");
  org.add_entity(3, "cloud");
  ServerEngine<StubModel> e(std::move(org), StubModel{});
  const auto sends = drive(e, 40000, 10);
  ASSERT_EQ(e.reassignments().size(), 1u);
  const auto& r = e.reassignments().front();
  EXPECT_EQ(r.time_ms % 5000, 0);
  // The first round runs 0..5450, so its figure is first read at 10 s.
  EXPECT_EQ(r.time_ms, 10000);
  EXPECT_DOUBLE_EQ(r.congestion, 10.0);
  EXPECT_EQ(r.delta, (AssignmentDelta{{2, 0, 1}, {3, 0, 2}}));
  EXPECT_EQ(e.organization().entity(1).current_group, 0);
  // Movers are re-sent at the reassignment instant, then on the new period.
  const auto& duck = sends.at(2);
  auto it = std::find(duck.begin(), duck.end(), 10000);
  ASSERT_NE(it, duck.end());
  EXPECT_EQ(*(it + 1) - *it, 35);
  // Loss events are logged as rounds close.
  std::size_t loss_rows = 0;
  for (const auto& ev : e.metrics().events()) loss_rows += ev.kind == EventKind::kLossPercent;
  EXPECT_EQ(loss_rows, e.completed_rounds().size());
}

TEST(ServerMaintenance, FixedArmIgnoresCongestion) {
  Organization org(default_roles().roles, default_groups(), "duck");
  org.add_entity(1, "reticle");
  org.add_entity(2, "cloud");
  org.add_entity(3, "duck");
  EngineOptions opts;
  opts.adaptive = false;
  ServerEngine<StubModel> e(std::move(org), StubModel{}, opts);
  drive(e, 30000, 50);
  EXPECT_TRUE(e.reassignments().empty());
  EXPECT_DOUBLE_EQ(e.monitor().current_congestion(), 50.0);
  for (const auto& [id, rec] : e.organization().entities()) EXPECT_EQ(rec.current_group, 0);
}

TEST(ServerInput, AppliedInOrderAndBadCodesCounted) {
  auto e = spread_engine();
  e.on_datagram(wire::encode({{0, 0}, wire::Input::move(5.0f, 0.0f)}), 1);
  e.on_datagram(wire::encode({{1, 0}, wire::Input::move(-2.0f, 0.0f)}), 1);
  EXPECT_FLOAT_EQ(e.model().x[1], 3.0f);
  wire::Input unknown;
  unknown.code = 0x09;
  e.on_datagram(wire::encode({{2, 0}, unknown}), 2);
  e.on_datagram(std::vector<std::uint8_t>{0x07}, 2);
  EXPECT_EQ(e.counters().inputs_applied, 2u);
  EXPECT_EQ(e.counters().malformed_inputs, 1u);
  EXPECT_EQ(e.counters().decode_errors, 1u);
}

TEST(ServerJoin, InitCarriesEveryEntity) {
  auto e = spread_engine();
  const auto out = e.on_datagram(wire::encode({{0, 0}, wire::Init{}}), 0);
  ASSERT_EQ(out.size(), 1u);
  const auto init = std::get<wire::Init>(decoded(out[0]).payload);
  ASSERT_EQ(init.entities.size(), 4u);
  EXPECT_EQ(init.entities[2].role, "c");
  EXPECT_EQ(e.counters().joins, 1u);
}

TEST(ClientModel, StaleRejection) {
  ClientModel c;
  c.on_init(wire::Init{{{1, "duck", {0}}}}, 0);
  EXPECT_EQ(c.apply_update({0, {{1, 5, {5}}}}, 10).applied, 1u);
  EXPECT_EQ(c.apply_update({0, {{1, 4, {4}}}}, 11).stale, 1u);
  EXPECT_EQ(c.entities().at(1).state, std::vector<std::uint8_t>{5});
  EXPECT_EQ(c.apply_update({0, {{1, 6, {6}}}}, 12).applied, 1u);
  EXPECT_EQ(c.counters().updates_applied, 2u);
  EXPECT_EQ(c.counters().stale_rejected, 1u);
}

TEST(ClientModel, BuffersUnknownEntitiesUpToLimit) {
  ClientModel c;
  wire::StateUpdate su{1, {}};
  for (EntityId id = 1; id <= 101; ++id) su.entities.push_back({id, 1, {1}});
  const auto r = c.apply_update(su, 3);
  EXPECT_EQ(r.buffered, 100u);
  EXPECT_EQ(r.dropped, 1u);
  EXPECT_EQ(c.counters().dropped_unknown, 1u);
  c.on_init(wire::Init{{{1, "duck", {0}}, {2, "duck", {0}}}}, 5);
  EXPECT_EQ(c.pending(), 0u);
  EXPECT_EQ(c.counters().updates_applied, 2u);
  EXPECT_EQ(c.entities().at(1).last_receive_ms, 3);
  EXPECT_EQ(c.entities().at(1).last_group, 1);
}

TEST(ClientModel, Staleness) {
  ClientModel c;
  EXPECT_THROW(c.staleness(1, 0), std::out_of_range);
  c.on_init(wire::Init{{{1, "duck", {0}}}}, 0);
  c.apply_update({0, {{1, 1, {1}}}}, 100);
  EXPECT_EQ(c.staleness(1, 140), 40);
  EXPECT_EQ(c.staleness(1, 100), 0);
}

TEST(ClientModel, ProbeEcho) {
  ClientModel c;
  EXPECT_EQ(c.on_probe({3, 42}), (wire::ProbeAck{3, 42}));
  EXPECT_EQ(c.on_probe({3, 42}), (wire::ProbeAck{3, 42}));
  EXPECT_EQ(c.counters().probes_echoed, 2u);
}

TEST(ClientModel, LosslessOptimalStalenessNeverExceedsPeriod) {
  auto e = spread_engine();
  ClientModel c;
  c.on_init(std::get<wire::Init>(decoded(e.make_init(0)).payload), 0);
  TimeMs worst = 0;
  for (TimeMs now = 0; now < 5000; ++now) {
    for (const auto& d : e.tick(now)) {
      auto m = decoded(d);
      if (auto* su = std::get_if<wire::StateUpdate>(&m.payload)) c.apply_update(*su, now);
    }
    worst = std::max(worst, c.staleness(1, now));
  }
  EXPECT_EQ(worst, 4);  // sampled before the next update at +5
  EXPECT_EQ(c.staleness(1, 5000), 5);
}
