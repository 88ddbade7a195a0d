#pragma once

// Organization model for adaptive state synchronization: roles carry a
// significance weight, groups carry an update period and a score ceiling,
// entities are assigned to the group their score coefficient qualifies for.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lodsync/line_config.hpp"

namespace lodsync {

using EntityId = std::uint32_t;
using GroupId = std::uint8_t;

inline constexpr std::size_t kMaxStateBytes = 65535;

struct RoleSpec {
  std::string name;
  double weight = 1.0;  // lower is more important

  friend bool operator==(const RoleSpec&, const RoleSpec&) = default;
};

struct GroupConfig {
  GroupId id = 0;
  std::string name;
  std::uint32_t period_ms = 0;
  std::optional<double> threshold;  // nullopt marks the catch-all group

  bool is_catch_all() const noexcept { return !threshold.has_value(); }
  double ceiling() const noexcept {
    return threshold.value_or(std::numeric_limits<double>::infinity());
  }

  friend bool operator==(const GroupConfig&, const GroupConfig&) = default;
};

struct EntityRecord {
  EntityId id = 0;
  std::string role;
  GroupId current_group = 0;
  std::vector<std::uint8_t> state;
  std::uint32_t last_update_tick = 0;
};

struct GroupMove {
  EntityId entity = 0;
  GroupId from = 0;
  GroupId to = 0;

  friend bool operator==(const GroupMove&, const GroupMove&) = default;
};

using AssignmentDelta = std::vector<GroupMove>;

// ---------------------------------------------------------------------------
// Score coefficient and group selection
// ---------------------------------------------------------------------------

/// Significance times congestion, with congestion expressed as a loss
/// percentage. Out-of-range congestion means the monitor is broken, so it is
/// rejected rather than clamped.
inline double score_coefficient(double weight, double congestion_percent) {
  if (!(weight > 0.0) || !std::isfinite(weight)) {
    throw std::domain_error("score_coefficient: weight must be positive");
  }
  if (!(congestion_percent >= 0.0 && congestion_percent <= 100.0)) {
    throw std::domain_error("score_coefficient: congestion outside [0,100]");
  }
  return weight * congestion_percent;
}

/// Picks the group with the smallest ceiling that is strictly above `score`.
/// `groups` must be valid (see validate_group_config): ceilings are strictly
/// increasing in list order and the catch-all comes last, so the first
/// qualifying group is the answer.
inline GroupId expected_group(double score, std::span<const GroupConfig> groups) {
  auto it = std::upper_bound(
      groups.begin(), groups.end(), score,
      [](double s, const GroupConfig& g) { return s < g.ceiling(); });
  if (it == groups.end()) {
    // Only reachable for NaN scores or a config without a catch-all.
    auto catch_all = std::find_if(groups.begin(), groups.end(),
                                  [](const GroupConfig& g) { return g.is_catch_all(); });
    if (catch_all == groups.end()) {
      throw std::invalid_argument("expected_group: no catch-all group");
    }
    return catch_all->id;
  }
  return it->id;
}

// ---------------------------------------------------------------------------
// Group configuration validation
// ---------------------------------------------------------------------------

enum class GroupViolation {
  kEmpty,
  kTooManyGroups,
  kNoCatchAll,
  kMultipleCatchAlls,
  kNegativeThreshold,
  kNonPositivePeriod,
  kThresholdsNotIncreasing,
  kPeriodNotIncreasing,
  kDuplicateName,
  kIdMismatch,
};

inline std::string_view to_string(GroupViolation v) {
  switch (v) {
    case GroupViolation::kEmpty: return "empty group list";
    case GroupViolation::kTooManyGroups: return "more than 255 groups";
    case GroupViolation::kNoCatchAll: return "no catch-all";
    case GroupViolation::kMultipleCatchAlls: return "multiple catch-alls";
    case GroupViolation::kNegativeThreshold: return "negative threshold";
    case GroupViolation::kNonPositivePeriod: return "non-positive period";
    case GroupViolation::kThresholdsNotIncreasing: return "thresholds not strictly increasing";
    case GroupViolation::kPeriodNotIncreasing: return "period not increasing with threshold";
    case GroupViolation::kDuplicateName: return "duplicate group name";
    case GroupViolation::kIdMismatch: return "group id does not match list position";
  }
  return "unknown";
}

/// Reports every violated invariant; an empty result means the list is
/// usable. Never throws.
inline std::vector<GroupViolation> validate_group_config(
    std::span<const GroupConfig> groups) {
  std::vector<GroupViolation> out;
  auto report = [&out](GroupViolation v) {
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  };
  if (groups.empty()) {
    report(GroupViolation::kEmpty);
    return out;
  }
  if (groups.size() > 255) report(GroupViolation::kTooManyGroups);

  std::size_t catch_alls = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    if (g.id != i) report(GroupViolation::kIdMismatch);
    if (g.is_catch_all()) ++catch_alls;
    if (g.threshold && !(*g.threshold >= 0.0)) report(GroupViolation::kNegativeThreshold);
    if (g.period_ms == 0) report(GroupViolation::kNonPositivePeriod);
    for (std::size_t j = 0; j < i; ++j) {
      if (groups[j].name == g.name) report(GroupViolation::kDuplicateName);
    }
  }
  if (catch_alls == 0) report(GroupViolation::kNoCatchAll);
  if (catch_alls > 1) report(GroupViolation::kMultipleCatchAlls);

  // List order is importance order: ceilings must rise strictly along it.
  for (std::size_t i = 1; i < groups.size(); ++i) {
    if (!(groups[i - 1].ceiling() < groups[i].ceiling())) {
      report(GroupViolation::kThresholdsNotIncreasing);
    }
  }

  std::vector<const GroupConfig*> by_ceiling;
  for (const auto& g : groups) by_ceiling.push_back(&g);
  std::stable_sort(by_ceiling.begin(), by_ceiling.end(),
                   [](const GroupConfig* a, const GroupConfig* b) {
                     return a->ceiling() < b->ceiling();
                   });
  for (std::size_t i = 1; i < by_ceiling.size(); ++i) {
    if (!(by_ceiling[i - 1]->period_ms < by_ceiling[i]->period_ms)) {
      report(GroupViolation::kPeriodNotIncreasing);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Organization
// ---------------------------------------------------------------------------

class Organization {
 public:
  Organization(std::vector<RoleSpec> roles, std::vector<GroupConfig> groups,
               std::string er_role)
      : roles_(std::move(roles)), groups_(std::move(groups)), er_role_(std::move(er_role)) {
    for (std::size_t i = 0; i < roles_.size(); ++i) {
      if (!(roles_[i].weight > 0.0) || !std::isfinite(roles_[i].weight)) {
        throw ConfigError("roles", 0, "role '" + roles_[i].name + "' has non-positive weight");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (roles_[j].name == roles_[i].name) {
          throw ConfigError("roles", 0, "duplicate role '" + roles_[i].name + "'");
        }
      }
    }
    if (auto violations = validate_group_config(groups_); !violations.empty()) {
      throw ConfigError("groups", 0, std::string(to_string(violations.front())));
    }
    if (!find_role(er_role_)) {
      throw ConfigError("roles", 0, "entity-of-reference role '" + er_role_ + "' is not defined");
    }
  }

  const std::vector<RoleSpec>& roles() const noexcept { return roles_; }
  const std::vector<GroupConfig>& groups() const noexcept { return groups_; }
  const std::map<EntityId, EntityRecord>& entities() const noexcept { return entities_; }
  const std::string& er_role() const noexcept { return er_role_; }

  const RoleSpec* find_role(std::string_view name) const noexcept {
    for (const auto& r : roles_) {
      if (r.name == name) return &r;
    }
    return nullptr;
  }

  const RoleSpec& role(std::string_view name) const {
    if (const auto* r = find_role(name)) return *r;
    throw std::out_of_range("unknown role '" + std::string(name) + "'");
  }

  const GroupConfig& group(GroupId id) const { return groups_.at(id); }

  /// Adds an entity placed in the group its role qualifies for at zero
  /// congestion.
  EntityRecord& add_entity(EntityId id, const std::string& role_name,
                           std::vector<std::uint8_t> state = {}) {
    const auto& r = role(role_name);
    if (state.size() > kMaxStateBytes) throw std::length_error("entity state exceeds 65535 bytes");
    if (entities_.count(id)) throw std::invalid_argument("duplicate entity id");
    EntityRecord rec{id, r.name, expected_group(score_coefficient(r.weight, 0.0), groups_),
                     std::move(state), 0};
    return entities_.emplace(id, std::move(rec)).first->second;
  }

  EntityRecord& entity(EntityId id) { return entities_.at(id); }
  const EntityRecord& entity(EntityId id) const { return entities_.at(id); }

  void set_state(EntityId id, std::vector<std::uint8_t> state) {
    if (state.size() > kMaxStateBytes) throw std::length_error("entity state exceeds 65535 bytes");
    entities_.at(id).state = std::move(state);
  }

  /// Forces every entity into `group`; used by the fixed-frequency arm.
  void pin_all(GroupId group) {
    (void)groups_.at(group);
    for (auto& [id, e] : entities_) e.current_group = group;
  }

  const EntityRecord* find_er_entity() const noexcept {
    for (const auto& [id, e] : entities_) {
      if (e.role == er_role_) return &e;
    }
    return nullptr;
  }

  // Mutable access for reassignment.
  std::map<EntityId, EntityRecord>& mutable_entities() noexcept { return entities_; }

 private:
  std::vector<RoleSpec> roles_;
  std::vector<GroupConfig> groups_;
  std::map<EntityId, EntityRecord> entities_;
  std::string er_role_;
};

/// True when the entity of reference would land in a different group at
/// `congestion_percent` than the one it currently occupies.
inline bool er_trigger_check(const Organization& org, double congestion_percent) {
  const EntityRecord* er = org.find_er_entity();
  if (er == nullptr) {
    throw ConfigError("organization", 0,
                      "no entity carries the entity-of-reference role '" + org.er_role() + "'");
  }
  const double score = score_coefficient(org.role(er->role).weight, congestion_percent);
  return expected_group(score, org.groups()) != er->current_group;
}

/// Recomputes every entity's score and moves it to its expected group.
/// Returns only the entities that changed group, in entity id order.
inline AssignmentDelta reassign_all(Organization& org, double congestion_percent) {
  AssignmentDelta delta;
  for (auto& [id, e] : org.mutable_entities()) {
    const double score = score_coefficient(org.role(e.role).weight, congestion_percent);
    const GroupId target = expected_group(score, org.groups());
    if (target != e.current_group) {
      delta.push_back({id, e.current_group, target});
      e.current_group = target;
    }
  }
  return delta;
}

// ---------------------------------------------------------------------------
// Roles and groups files
// ---------------------------------------------------------------------------

struct RolesFile {
  std::vector<RoleSpec> roles;
  std::string er_role;
};

/// `role <name> weight=<decimal> [er]`, one per line.
inline RolesFile parse_roles(std::string_view text, const std::string& source = "roles") {
  RolesFile out;
  int er_line = 0;
  for (const auto& line : tokenize_config(text)) {
    const auto& t = line.tokens;
    if (t[0] != "role") throw ConfigError(source, line.number, "expected 'role', got '" + t[0] + "'");
    if (t.size() < 3) throw ConfigError(source, line.number, "expected 'role <name> weight=<w> [er]'");
    RoleSpec spec{t[1], 0.0};
    bool have_weight = false;
    bool is_er = false;
    for (std::size_t i = 2; i < t.size(); ++i) {
      if (t[i] == "er") {
        is_er = true;
        continue;
      }
      auto opt = split_option(t[i]);
      if (!opt || opt->first != "weight") {
        throw ConfigError(source, line.number, "unexpected token '" + t[i] + "'");
      }
      auto w = parse_real(opt->second);
      if (!w || !(*w > 0.0) || !std::isfinite(*w)) {
        throw ConfigError(source, line.number, "weight must be a positive decimal");
      }
      spec.weight = *w;
      have_weight = true;
    }
    if (!have_weight) throw ConfigError(source, line.number, "missing weight=");
    for (const auto& r : out.roles) {
      if (r.name == spec.name) throw ConfigError(source, line.number, "duplicate role '" + spec.name + "'");
    }
    if (is_er) {
      if (er_line != 0) {
        throw ConfigError(source, line.number,
                          "second 'er' flag (first on line " + std::to_string(er_line) + ")");
      }
      er_line = line.number;
      out.er_role = spec.name;
    }
    out.roles.push_back(std::move(spec));
  }
  if (out.roles.empty()) throw ConfigError(source, 0, "no roles defined");
  if (er_line == 0) throw ConfigError(source, 0, "no role carries the 'er' flag");
  return out;
}

/// `group <name> period_ms=<int> threshold=<decimal|none>`; file order is
/// importance order and assigns group ids from 0.
inline std::vector<GroupConfig> parse_groups(std::string_view text,
                                             const std::string& source = "groups") {
  std::vector<GroupConfig> groups;
  for (const auto& line : tokenize_config(text)) {
    const auto& t = line.tokens;
    if (t[0] != "group") throw ConfigError(source, line.number, "expected 'group', got '" + t[0] + "'");
    if (t.size() != 4) {
      throw ConfigError(source, line.number,
                        "expected 'group <name> period_ms=<n> threshold=<x|none>'");
    }
    GroupConfig g;
    g.id = static_cast<GroupId>(groups.size());
    g.name = t[1];
    bool have_period = false;
    bool have_threshold = false;
    for (std::size_t i = 2; i < t.size(); ++i) {
      auto opt = split_option(t[i]);
      if (!opt) throw ConfigError(source, line.number, "unexpected token '" + t[i] + "'");
      if (opt->first == "period_ms") {
        auto p = parse_int<std::uint32_t>(opt->second);
        if (!p || *p == 0) throw ConfigError(source, line.number, "period_ms must be a positive integer");
        g.period_ms = *p;
        have_period = true;
      } else if (opt->first == "threshold") {
        if (opt->second != "none") {
          auto th = parse_real(opt->second);
          if (!th || !(*th >= 0.0) || !std::isfinite(*th)) {
            throw ConfigError(source, line.number, "threshold must be a non-negative decimal or 'none'");
          }
          g.threshold = *th;
        }
        have_threshold = true;
      } else {
        throw ConfigError(source, line.number, "unknown option '" + opt->first + "'");
      }
    }
    if (!have_period || !have_threshold) {
      throw ConfigError(source, line.number, "both period_ms= and threshold= are required");
    }
    groups.push_back(std::move(g));
  }
  if (auto v = validate_group_config(groups); !v.empty()) {
    std::string msg = "invalid group configuration:";
    for (auto x : v) msg += " " + std::string(to_string(x)) + ";";
    throw ConfigError(source, 0, msg);
  }
  return groups;
}

// ---------------------------------------------------------------------------
// Shipped defaults
// ---------------------------------------------------------------------------

/// Four-group testbed configuration: Optimal, Enhanced, Medium, Degraded.
inline std::vector<GroupConfig> default_groups() {
  return {
      {0, "Optimal", 5, 7.0},
      {1, "Enhanced", 35, 15.0},
      {2, "Medium", 40, 70.0},
      {3, "Degraded", 75, std::nullopt},
  };
}

/// Duck Hunt roles; ducks are the entity of reference.
inline RolesFile default_roles() {
  return {{{"reticle", 0.5}, {"duck", 1.0}, {"flamingo", 1.0}, {"gomba", 1.0}, {"cloud", 1.5}},
          "duck"};
}

}  // namespace lodsync
