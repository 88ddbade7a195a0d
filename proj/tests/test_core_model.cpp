#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "lodsync/core_model.hpp"
#include "oracles.hpp"

using namespace lodsync;

namespace {

Organization testbed_org() {
  Organization org(default_roles().roles, default_groups(), "duck");
  org.add_entity(1, "reticle");
  org.add_entity(2, "duck");
  org.add_entity(3, "duck");
  org.add_entity(4, "cloud");
  org.add_entity(5, "flamingo");
  org.add_entity(6, "gomba");
  return org;
}

bool has(const std::vector<GroupViolation>& v, GroupViolation x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

TEST(ScoreCoefficient, IsWeightTimesCongestion) {
  EXPECT_DOUBLE_EQ(score_coefficient(0.5, 10.0), 5.0);
  EXPECT_DOUBLE_EQ(score_coefficient(1.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(score_coefficient(1.5, 10.0), 15.0);
  EXPECT_DOUBLE_EQ(score_coefficient(2.0, 100.0), 200.0);
}

TEST(ScoreCoefficient, RejectsOutOfRangeInputs) {
  EXPECT_THROW(score_coefficient(1.0, -0.1), std::domain_error);
  EXPECT_THROW(score_coefficient(1.0, 100.5), std::domain_error);
  EXPECT_THROW(score_coefficient(0.0, 10.0), std::domain_error);
  EXPECT_THROW(score_coefficient(-1.0, 10.0), std::domain_error);
  EXPECT_THROW(score_coefficient(1.0, std::nan("")), std::domain_error);
}

TEST(ExpectedGroup, TestbedExamples) {
  const auto groups = default_groups();
  EXPECT_EQ(expected_group(0.0, groups), 0);
  EXPECT_EQ(expected_group(10.0, groups), 1);
  EXPECT_EQ(expected_group(15.0, groups), 2);  // 15 is not strictly below 15
  EXPECT_EQ(expected_group(1000.0, groups), 3);
  EXPECT_EQ(expected_group(7.0, groups), 1);
  EXPECT_EQ(expected_group(6.999, groups), 0);
  EXPECT_EQ(expected_group(70.0, groups), 3);
}

TEST(ExpectedGroup, DefaultsMatchIndependentTestbedSpelling) {
  EXPECT_EQ(default_groups(), oracle::testbed_groups());
}

TEST(ExpectedGroup, MatchesBruteForceOracle) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10000; ++i) {
    const auto groups = oracle::random_groups(rng);
    ASSERT_TRUE(validate_group_config(groups).empty());
    const double score = oracle::random_score(rng, groups);
    ASSERT_EQ(expected_group(score, groups), oracle::brute_force_expected_group(score, groups))
        << "case " << i << " score " << score;
  }
}

TEST(ExpectedGroup, SingleCatchAllTakesEverything) {
  std::vector<GroupConfig> only{{0, "All", 10, std::nullopt}};
  EXPECT_EQ(expected_group(0.0, only), 0);
  EXPECT_EQ(expected_group(1e12, only), 0);
}

TEST(ExpectedGroupProperty, TotalityOverNonNegativeScores) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto groups = oracle::random_groups(rng);
    const double score = oracle::random_score(rng, groups);
    const GroupId g = expected_group(score, groups);
    ASSERT_LT(g, groups.size());
  }
}

TEST(ExpectedGroupProperty, PeriodMonotoneInScore) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 2000; ++i) {
    const auto groups = oracle::random_groups(rng);
    double a = oracle::random_score(rng, groups);
    double b = oracle::random_score(rng, groups);
    if (a > b) std::swap(a, b);
    ASSERT_LE(groups[expected_group(a, groups)].period_ms, groups[expected_group(b, groups)].period_ms);
  }
}

TEST(ExpectedGroupProperty, ScaleInvariantUnderWeightAndThresholdScaling) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> congestion(0.0, 100.0);
  for (double k : {0.1, 3.0, 100.0}) {
    for (int i = 0; i < 300; ++i) {
      auto groups = oracle::random_groups(rng);
      auto scaled = groups;
      for (auto& g : scaled) {
        if (g.threshold) *g.threshold *= k;
      }
      const double w = std::uniform_real_distribution<double>(0.05, 5.0)(rng);
      const double c = congestion(rng);
      ASSERT_EQ(expected_group(score_coefficient(w, c), groups),
                expected_group(score_coefficient(w * k, c), scaled));
    }
  }
}

TEST(ValidateGroupConfig, TestbedConfigIsValid) { EXPECT_TRUE(validate_group_config(default_groups()).empty()); }

TEST(ValidateGroupConfig, ReportsEachViolation) {
  EXPECT_TRUE(has(validate_group_config(std::vector<GroupConfig>{}), GroupViolation::kEmpty));

  std::vector<GroupConfig> two_catch_alls{{0, "A", 5, std::nullopt}, {1, "B", 10, std::nullopt}};
  EXPECT_TRUE(has(validate_group_config(two_catch_alls), GroupViolation::kMultipleCatchAlls));
  EXPECT_EQ(to_string(GroupViolation::kMultipleCatchAlls), "multiple catch-alls");

  std::vector<GroupConfig> swapped_periods{{0, "A", 35, 7.0}, {1, "B", 5, 15.0}, {2, "C", 75, std::nullopt}};
  EXPECT_TRUE(has(validate_group_config(swapped_periods), GroupViolation::kPeriodNotIncreasing));
  EXPECT_EQ(to_string(GroupViolation::kPeriodNotIncreasing), "period not increasing with threshold");

  std::vector<GroupConfig> no_catch_all{{0, "A", 5, 7.0}};
  EXPECT_TRUE(has(validate_group_config(no_catch_all), GroupViolation::kNoCatchAll));

  std::vector<GroupConfig> bad{{0, "A", 0, -1.0}, {1, "A", 10, -2.0}, {5, "C", 20, std::nullopt}};
  const auto v = validate_group_config(bad);
  EXPECT_TRUE(has(v, GroupViolation::kNegativeThreshold));
  EXPECT_TRUE(has(v, GroupViolation::kNonPositivePeriod));
  EXPECT_TRUE(has(v, GroupViolation::kDuplicateName));
  EXPECT_TRUE(has(v, GroupViolation::kIdMismatch));
  EXPECT_TRUE(has(v, GroupViolation::kThresholdsNotIncreasing));
}

TEST(ErTrigger, TestbedExamples) {
  auto org = testbed_org();
  EXPECT_FALSE(er_trigger_check(org, 0.0));
  EXPECT_TRUE(er_trigger_check(org, 10.0));
  reassign_all(org, 10.0);
  EXPECT_EQ(org.entity(2).current_group, 1);
  EXPECT_FALSE(er_trigger_check(org, 10.0));
}

TEST(ErTrigger, MissingReferenceEntityIsAConfigError) {
  Organization org(default_roles().roles, default_groups(), "duck");
  org.add_entity(1, "reticle");
  EXPECT_THROW(er_trigger_check(org, 10.0), ConfigError);
}

TEST(ReassignAll, TenPercentRedistribution) {
  auto org = testbed_org();
  const auto delta = reassign_all(org, 10.0);
  EXPECT_EQ(org.entity(1).current_group, 0);  // reticle: 5
  EXPECT_EQ(org.entity(2).current_group, 1);  // duck: 10
  EXPECT_EQ(org.entity(4).current_group, 2);  // cloud: 15
  EXPECT_EQ(org.entity(5).current_group, 1);
  EXPECT_EQ(org.entity(6).current_group, 1);
  // Reticle stayed; the two ducks, cloud, flamingo and gomba moved.
  ASSERT_EQ(delta.size(), 5u);
  EXPECT_EQ(delta.front(), (GroupMove{2, 0, 1}));
}

TEST(ReassignAll, FullLoss) {
  auto org = testbed_org();
  reassign_all(org, 100.0);
  EXPECT_EQ(org.entity(1).current_group, 2);  // 50
  EXPECT_EQ(org.entity(2).current_group, 3);  // 100
  EXPECT_EQ(org.entity(4).current_group, 3);  // 150
}

TEST(ReassignAll, ZeroCongestionPutsEveryoneInOptimal) {
  auto org = testbed_org();
  reassign_all(org, 50.0);
  reassign_all(org, 0.0);
  for (const auto& [id, e] : org.entities()) EXPECT_EQ(e.current_group, 0) << id;
}

TEST(ReassignAllProperty, IdempotentAndRoleCoherent) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> congestion(0.0, 100.0);
  for (int i = 0; i < 500; ++i) {
    const auto groups = oracle::random_groups(rng);
    const auto roles = oracle::random_roles(rng, 4);
    Organization org(roles, groups, roles[0].name);
    for (EntityId id = 1; id <= 20; ++id) org.add_entity(id, roles[id % roles.size()].name);
    const double c = congestion(rng);
    reassign_all(org, c);
    ASSERT_TRUE(reassign_all(org, c).empty());
    std::map<std::string, GroupId> by_role;
    for (const auto& [id, e] : org.entities()) {
      auto [it, fresh] = by_role.emplace(e.role, e.current_group);
      ASSERT_EQ(it->second, e.current_group);
      ASSERT_EQ(e.current_group,
                oracle::brute_force_expected_group(score_coefficient(org.role(e.role).weight, c), groups));
    }
  }
}

TEST(Organization, RejectsBadConfigurations) {
  EXPECT_THROW(Organization({{"a", 0.0}}, default_groups(), "a"), ConfigError);
  EXPECT_THROW(Organization({{"a", 1.0}, {"a", 2.0}}, default_groups(), "a"), ConfigError);
  EXPECT_THROW(Organization({{"a", 1.0}}, default_groups(), "b"), ConfigError);
  EXPECT_THROW(Organization({{"a", 1.0}}, std::vector<GroupConfig>{{0, "x", 5, 1.0}}, "a"), ConfigError);
}

TEST(Organization, EntityChecks) {
  auto org = testbed_org();
  EXPECT_THROW(org.add_entity(1, "duck"), std::invalid_argument);
  EXPECT_THROW(org.add_entity(99, "dragon"), std::out_of_range);
  EXPECT_THROW(org.set_state(1, std::vector<std::uint8_t>(65536)), std::length_error);
  org.set_state(1, std::vector<std::uint8_t>(65535));
  org.pin_all(0);
  EXPECT_THROW(org.pin_all(9), std::out_of_range);
}

TEST(ConfigFiles, ParseRolesAndGroups) {
  const auto roles = parse_roles(
      "# comment\nrole reticle weight=0.5\nrole duck weight=1.0 er\n\nrole cloud weight=1.5 # trailing\n");
  ASSERT_EQ(roles.roles.size(), 3u);
  EXPECT_EQ(roles.er_role, "duck");
  EXPECT_DOUBLE_EQ(roles.roles[2].weight, 1.5);

  const auto groups = parse_groups(
      "group Optimal period_ms=5 threshold=7\ngroup Enhanced period_ms=35 threshold=15\n"
      "group Medium period_ms=40 threshold=70\ngroup Degraded period_ms=75 threshold=none\n");
  EXPECT_EQ(groups, default_groups());
}

TEST(ConfigFiles, ErrorsCarryLineNumbers) {
  try {
    parse_roles("role a weight=1 er\nrole b weight=2 er\n", "r.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.source(), "r.cfg");
  }
  EXPECT_THROW(parse_roles("role a weight=-1 er\n"), ConfigError);
  EXPECT_THROW(parse_roles("role a weight=1\n"), ConfigError);
  EXPECT_THROW(parse_roles("actor a weight=1 er\n"), ConfigError);
  EXPECT_THROW(parse_groups("group A period_ms=5 threshold=none\ngroup B period_ms=9 threshold=none\n"),
               ConfigError);
  EXPECT_THROW(parse_groups("group A period_ms=0 threshold=none\n"), ConfigError);
  EXPECT_THROW(parse_groups("group A period_ms=5\n"), ConfigError);
}
