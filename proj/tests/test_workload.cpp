#include <gtest/gtest.h>

#include <numeric>

#include "lodsync/harness.hpp"
#include "lodsync/workload_duckhunt.hpp"

using namespace lodsync;
using namespace lodsync::duckhunt;

namespace {

SceneEntity make(EntityId id, Kind k, float x, float y, float vx = 0, float vy = 0) {
  return {id, k, x, y, vx, vy, Status::kAlive};
}

Scene scene_of(std::vector<SceneEntity> extra) {
  std::vector<SceneEntity> es{make(kReticleId, Kind::kReticle, 400, 300)};
  es.insert(es.end(), extra.begin(), extra.end());
  return Scene(SceneConfig{}, std::move(es));
}

}  // namespace

TEST(SpawnWave, CountsAndDeterminism) {
  SceneConfig cfg;
  const auto w1 = spawn_wave(cfg, 1);
  EXPECT_EQ(w1.size(), 20u);
  EXPECT_EQ(w1.front().kind, Kind::kReticle);
  EXPECT_EQ(w1, spawn_wave(cfg, 1));
  EXPECT_EQ(spawn_wave(cfg, 3), spawn_wave(cfg, 3));
  EXPECT_NE(spawn_wave(cfg, 1), spawn_wave(cfg, 2));
  std::map<Kind, int> counts;
  for (const auto& e : w1) ++counts[e.kind];
  EXPECT_EQ(counts[Kind::kDuck], 8);
  EXPECT_EQ(counts[Kind::kFlamingo], 3);
  EXPECT_EQ(counts[Kind::kGomba], 3);
  EXPECT_EQ(counts[Kind::kCloud], 5);
  for (std::size_t i = 0; i < w1.size(); ++i) EXPECT_EQ(w1[i].id, i + 1);
  SceneConfig other = cfg;
  other.seed = 43;
  EXPECT_NE(spawn_wave(other, 1), w1);
}

TEST(SpawnWave, RoundOutOfRange) {
  EXPECT_THROW(spawn_wave(SceneConfig{}, 0), std::out_of_range);
  EXPECT_THROW(spawn_wave(SceneConfig{}, 6), std::out_of_range);
}

TEST(Step, DuckKinematics) {
  auto s = scene_of({make(2, Kind::kDuck, 100, 100, 50, 0)});
  s.step(1000);
  EXPECT_FLOAT_EQ(s.entity(2).x, 150.0f);
  EXPECT_FLOAT_EQ(s.entity(2).y, 100.0f);
  EXPECT_THROW(s.step(0), std::invalid_argument);
}

TEST(Step, DuckBouncesOffTheEdge) {
  auto s = scene_of({make(2, Kind::kDuck, 790, 100, 100, 0)});
  s.step(200);
  EXPECT_FLOAT_EQ(s.entity(2).x, 790.0f);
  EXPECT_LT(s.entity(2).vx, 0.0f);
}

TEST(Step, CloudsDriftHorizontallyOnly) {
  auto s = scene_of({make(2, Kind::kCloud, 790, 77, 20, 0)});
  for (int i = 0; i < 100; ++i) {
    s.step(50);
    ASSERT_FLOAT_EQ(s.entity(2).y, 77.0f);
    ASSERT_GE(s.entity(2).x, 0.0f);
    ASSERT_LE(s.entity(2).x, 800.0f);
  }
}

TEST(Step, GombaReachingFlamingoKillsIt) {
  auto s = scene_of({make(2, Kind::kFlamingo, 300, 560), make(3, Kind::kGomba, 100, 560)});
  for (int i = 0; i < 1000 && s.entity(2).alive(); ++i) s.step(100);
  EXPECT_FALSE(s.entity(2).alive());
  EXPECT_NEAR(s.entity(3).x, 300.0f, 10.0f);
  const float x = s.entity(3).x;
  s.step(1000);  // nothing left to chase
  EXPECT_FLOAT_EQ(s.entity(3).x, x);
}

TEST(Step, DeadEntitiesStayPut) {
  auto s = scene_of({make(2, Kind::kDuck, 400, 300, 50, 50)});
  EXPECT_EQ(s.apply_shot(400, 300), 100);
  s.step(1000);
  EXPECT_FLOAT_EQ(s.entity(2).x, 400.0f);
  EXPECT_EQ(s.apply_shot(400, 300), 0);  // no longer hit-testable
}

TEST(Shot, PointValues) {
  auto s = scene_of({make(2, Kind::kDuck, 100, 100), make(3, Kind::kGomba, 300, 560),
                     make(4, Kind::kFlamingo, 600, 560), make(5, Kind::kCloud, 700, 100)});
  EXPECT_EQ(s.apply_shot(105, 100), 100);
  EXPECT_FALSE(s.entity(2).alive());
  EXPECT_EQ(s.apply_shot(300, 550), 50);
  EXPECT_LT(s.apply_shot(600, 560), 0);
  EXPECT_EQ(s.apply_shot(700, 100), 0);  // clouds are scenery
  EXPECT_EQ(s.apply_shot(50, 500), 0);
  EXPECT_EQ(s.score(), -50);
}

TEST(Shot, NearestInsideRadiusWins) {
  auto s = scene_of({make(2, Kind::kDuck, 110, 100), make(3, Kind::kDuck, 104, 100)});
  s.apply_shot(100, 100);
  EXPECT_TRUE(s.entity(2).alive());
  EXPECT_FALSE(s.entity(3).alive());
  auto t = scene_of({make(2, Kind::kDuck, 120, 100)});
  EXPECT_EQ(t.apply_shot(100, 100), 100);  // exactly on the radius
  auto u = scene_of({make(2, Kind::kDuck, 120.5f, 100)});
  EXPECT_EQ(u.apply_shot(100, 100), 0);
}

TEST(Input, MoveAndShoot) {
  auto s = scene_of({make(2, Kind::kDuck, 405, 300)});
  EXPECT_EQ(s.apply_input(wire::Input::move(5, 0)), InputResult::kApplied);
  EXPECT_FLOAT_EQ(s.reticle().x, 405.0f);
  EXPECT_EQ(s.apply_input(wire::Input::shoot()), InputResult::kApplied);
  EXPECT_EQ(s.score(), 100);
  EXPECT_EQ(s.apply_input(wire::Input::move(std::nanf(""), 0)), InputResult::kMalformed);
  wire::Input bad;
  bad.code = 9;
  EXPECT_EQ(s.apply_input(bad), InputResult::kMalformed);
  s.apply_input(wire::Input::move(-10000, 10000));
  EXPECT_FLOAT_EQ(s.reticle().x, 0.0f);
  EXPECT_FLOAT_EQ(s.reticle().y, 600.0f);
}

TEST(Scene, ScoreEqualsSumOfShotDeltas) {
  Scene s(SceneConfig{});
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    s.step(20);
    s.apply_shot(static_cast<float>(rng() % 800), static_cast<float>(rng() % 600));
  }
  int sum = 0;
  for (const auto& ev : s.shots()) sum += ev.delta;
  EXPECT_EQ(sum, s.score());
}

TEST(Scene, WavesLoopAndKeepIds) {
  SceneConfig cfg;
  cfg.wave_duration_s = 1.0;
  cfg.rounds = 2;
  Scene s(cfg);
  const auto ids = [&] {
    std::vector<EntityId> v;
    for (const auto& e : s.entities()) v.push_back(e.id);
    return v;
  };
  const auto before = ids();
  s.apply_input(wire::Input::move(10, 0));
  EXPECT_FALSE(s.advance_wave(999));
  EXPECT_TRUE(s.advance_wave(1000));
  EXPECT_EQ(s.wave(), 2);
  EXPECT_EQ(ids(), before);
  EXPECT_FLOAT_EQ(s.reticle().x, 410.0f);  // the reticle survives a new wave
  EXPECT_TRUE(s.advance_wave(2000));
  EXPECT_EQ(s.wave(), 1);
}

TEST(Blob, RoundTrip) {
  const auto e = make(3, Kind::kDuck, 12.5f, -3.25f);
  const auto blob = encode_blob(e);
  ASSERT_EQ(blob.size(), kBlobSize);
  const auto v = decode_blob(blob);
  ASSERT_TRUE(v);
  EXPECT_FLOAT_EQ(v->x, 12.5f);
  EXPECT_FLOAT_EQ(v->y, -3.25f);
  EXPECT_EQ(v->status, Status::kAlive);
  EXPECT_FALSE(decode_blob(std::vector<std::uint8_t>(8)));
}

TEST(Bot, ChasesThenShoots) {
  Bot bot;
  std::vector<ViewEntity> view{{1, Kind::kReticle, 0, 0, true}, {2, Kind::kDuck, 100, 0, true}};
  auto in = bot.act(view, 0);
  ASSERT_EQ(in.size(), 1u);
  EXPECT_TRUE(in[0].is_move());
  EXPECT_FLOAT_EQ(in[0].dx, 8.0f);  // 400 units/s over 20 ms
  EXPECT_TRUE(bot.act(view, 10).empty());
  view[0].x = 90;
  in = bot.act(view, 20);
  ASSERT_EQ(in.size(), 1u);
  EXPECT_FALSE(in[0].is_move());
  EXPECT_TRUE(bot.act(view, 40).empty());  // cooldown
  EXPECT_EQ(bot.shots_fired(), 1u);
}

TEST(Bot, NeverShootsFlamingos) {
  Bot bot;
  std::vector<ViewEntity> view{{1, Kind::kReticle, 100, 100, true}, {2, Kind::kFlamingo, 100, 100, true}};
  for (TimeMs t = 0; t < 2000; t += 20) EXPECT_TRUE(bot.act(view, t).empty());
}

TEST(Bot, GuardsThreatenedFlamingoFirst) {
  Bot bot;
  std::vector<ViewEntity> view{{1, Kind::kReticle, 100, 100, true},
                               {2, Kind::kDuck, 110, 100, true},
                               {3, Kind::kGomba, 500, 560, true},
                               {4, Kind::kFlamingo, 530, 560, true}};
  auto in = bot.act(view, 0);
  ASSERT_EQ(in.size(), 1u);
  EXPECT_TRUE(in[0].is_move());
  EXPECT_GT(in[0].dx, 0.0f);
  EXPECT_GT(in[0].dy, 0.0f);
}

TEST(BotProperty, ScoreDoesNotImproveUnderHeavyLoss) {
  double clean = 0, lossy = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    harness::ScenarioConfig c;
    c.duration_s = 30;
    c.seed = seed;
    clean += std::stod(harness::run_simulated(harness::resolve(c)).summary.at("bot_score"));
    c.drop_prob_s2c = c.drop_prob_c2s = 0.5;
    lossy += std::stod(harness::run_simulated(harness::resolve(c)).summary.at("bot_score"));
  }
  RecordProperty("mean_score_clean", std::to_string(clean / 20));
  RecordProperty("mean_score_lossy", std::to_string(lossy / 20));
  EXPECT_GE(clean, lossy);
}
