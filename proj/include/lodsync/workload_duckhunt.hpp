#pragma once

// Headless Duck Hunt: five entity kinds on an 800x600 scene, waves of
// spawns, shooting rules and a scripted bot that plays from the client's
// (possibly stale) replica. Every gameplay number here is a testbed
// calibration default, overridable from the scene file.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lodsync/congestion_monitor.hpp"
#include "lodsync/core_model.hpp"
#include "lodsync/line_config.hpp"
#include "lodsync/wire_protocol.hpp"

namespace lodsync::duckhunt {

enum class Kind : std::uint8_t { kCloud, kDuck, kFlamingo, kGomba, kReticle };

inline constexpr std::array<Kind, 5> kAllKinds = {Kind::kCloud, Kind::kDuck, Kind::kFlamingo,
                                                  Kind::kGomba, Kind::kReticle};

inline std::string_view role_name(Kind k) {
  switch (k) {
    case Kind::kCloud: return "cloud";
    case Kind::kDuck: return "duck";
    case Kind::kFlamingo: return "flamingo";
    case Kind::kGomba: return "gomba";
    case Kind::kReticle: return "reticle";
  }
  return "?";
}

inline std::optional<Kind> parse_kind(std::string_view name) {
  for (auto k : kAllKinds) {
    if (role_name(k) == name) return k;
  }
  return std::nullopt;
}

enum class Status : std::uint8_t { kDead = 0, kAlive = 1 };

struct SceneEntity {
  EntityId id = 0;
  Kind kind = Kind::kDuck;
  float x = 0, y = 0;
  float vx = 0, vy = 0;  // units per second
  Status status = Status::kAlive;

  bool alive() const noexcept { return status == Status::kAlive; }
  bool hit_testable() const noexcept {
    return alive() && (kind == Kind::kDuck || kind == Kind::kFlamingo || kind == Kind::kGomba);
  }

  friend bool operator==(const SceneEntity&, const SceneEntity&) = default;
};

// --- state blob: x f32 BE, y f32 BE, status u8 ---------------------------

inline constexpr std::size_t kBlobSize = 9;

inline std::vector<std::uint8_t> encode_blob(const SceneEntity& e) {
  std::vector<std::uint8_t> out;
  out.reserve(kBlobSize);
  wire::detail::Writer w(out);
  w.f32(e.x);
  w.f32(e.y);
  w.u8(static_cast<std::uint8_t>(e.status));
  return out;
}

struct BlobView {
  float x = 0, y = 0;
  Status status = Status::kAlive;
};

inline std::optional<BlobView> decode_blob(std::span<const std::uint8_t> blob) {
  if (blob.size() != kBlobSize) return std::nullopt;
  wire::detail::Reader r(blob);
  BlobView v;
  v.x = r.f32();
  v.y = r.f32();
  const auto s = r.u8();
  if (s > 1) return std::nullopt;
  v.status = static_cast<Status>(s);
  return v;
}

// --- scene configuration --------------------------------------------------

struct SceneConfig {
  std::uint64_t seed = 42;
  int rounds = 5;
  double wave_duration_s = 42.0;
  float width = 800.0f;
  float height = 600.0f;
  float hit_radius = 20.0f;
  float contact_radius = 10.0f;  // gomba reaching a flamingo
  float ground_y = 560.0f;
  std::map<Kind, int> counts{{Kind::kDuck, 8}, {Kind::kFlamingo, 3}, {Kind::kGomba, 3},
                             {Kind::kCloud, 5}};
  std::map<Kind, float> speeds{{Kind::kDuck, 120.0f}, {Kind::kFlamingo, 40.0f},
                               {Kind::kGomba, 30.0f},  {Kind::kCloud, 20.0f},
                               {Kind::kReticle, 400.0f}};
  std::map<Kind, int> points{{Kind::kDuck, 100}, {Kind::kGomba, 50}, {Kind::kFlamingo, -200}};

  int count(Kind k) const {
    auto it = counts.find(k);
    return it == counts.end() ? 0 : it->second;
  }
  float speed(Kind k) const {
    auto it = speeds.find(k);
    return it == speeds.end() ? 0.0f : it->second;
  }
  int point_value(Kind k) const {
    auto it = points.find(k);
    return it == points.end() ? 0 : it->second;
  }
};

/// Scene file: `spawn <kind> count=<n>`, `speed <kind> <units_per_s>`,
/// `points <kind> <delta>`, `seed <n>`, `rounds <n>`, `wave_s <seconds>`.
inline SceneConfig parse_scene(std::string_view text, const std::string& source = "scene") {
  SceneConfig cfg;
  auto kind_at = [&](const ConfigLine& line, std::size_t i) {
    if (line.tokens.size() <= i) throw ConfigError(source, line.number, "missing entity kind");
    auto k = parse_kind(line.tokens[i]);
    if (!k) throw ConfigError(source, line.number, "unknown entity kind '" + line.tokens[i] + "'");
    return *k;
  };
  auto expect_size = [&](const ConfigLine& line, std::size_t n) {
    if (line.tokens.size() != n) {
      throw ConfigError(source, line.number, "wrong number of fields for '" + line.tokens[0] + "'");
    }
  };
  for (const auto& line : tokenize_config(text)) {
    const auto& key = line.tokens[0];
    if (key == "spawn") {
      expect_size(line, 3);
      Kind k = kind_at(line, 1);
      if (k == Kind::kReticle) throw ConfigError(source, line.number, "the reticle is not spawned");
      auto opt = split_option(line.tokens[2]);
      std::optional<int> n;
      if (opt && opt->first == "count") n = parse_int<int>(opt->second);
      if (!n || *n < 0 || *n > 1000) throw ConfigError(source, line.number, "expected count=<n>");
      cfg.counts[k] = *n;
    } else if (key == "speed") {
      expect_size(line, 3);
      Kind k = kind_at(line, 1);
      auto v = parse_real(line.tokens[2]);
      if (!v || *v < 0.0) throw ConfigError(source, line.number, "speed must be non-negative");
      cfg.speeds[k] = static_cast<float>(*v);
    } else if (key == "points") {
      expect_size(line, 3);
      Kind k = kind_at(line, 1);
      auto v = parse_int<int>(line.tokens[2]);
      if (!v) throw ConfigError(source, line.number, "points must be an integer");
      cfg.points[k] = *v;
    } else if (key == "seed") {
      expect_size(line, 2);
      auto v = parse_int<std::uint64_t>(line.tokens[1]);
      if (!v) throw ConfigError(source, line.number, "seed must be an unsigned integer");
      cfg.seed = *v;
    } else if (key == "rounds") {
      expect_size(line, 2);
      auto v = parse_int<int>(line.tokens[1]);
      if (!v || *v < 1 || *v > 5) throw ConfigError(source, line.number, "rounds must be in [1,5]");
      cfg.rounds = *v;
    } else if (key == "wave_s") {
      expect_size(line, 2);
      auto v = parse_real(line.tokens[1]);
      if (!v || !(*v > 0.0)) throw ConfigError(source, line.number, "wave_s must be positive");
      cfg.wave_duration_s = *v;
    } else {
      throw ConfigError(source, line.number, "unknown directive '" + key + "'");
    }
  }
  return cfg;
}

// --- spawning -------------------------------------------------------------

namespace detail {

// Portable [0,1) from raw engine output; std distributions are not
// guaranteed identical across standard libraries.
inline float unit(std::mt19937_64& rng) {
  return static_cast<float>(static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline float uniform(std::mt19937_64& rng, float lo, float hi) { return lo + (hi - lo) * unit(rng); }

}  // namespace detail

inline constexpr EntityId kReticleId = 1;

/// Deterministic wave for `round_number` in [1,5]: the reticle (id 1, scene
/// centre) followed by ducks, flamingos, gombas and clouds with consecutive
/// ids.
inline std::vector<SceneEntity> spawn_wave(const SceneConfig& cfg, int round_number) {
  if (round_number < 1 || round_number > 5) {
    throw std::out_of_range("spawn_wave: round number must be in [1,5]");
  }
  std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(round_number));
  std::vector<SceneEntity> out;
  out.push_back({kReticleId, Kind::kReticle, cfg.width / 2, cfg.height / 2, 0, 0, Status::kAlive});
  EntityId next = kReticleId + 1;
  const float W = cfg.width;
  const float sky_top = 40.0f, sky_bottom = 400.0f;
  for (Kind k : {Kind::kDuck, Kind::kFlamingo, Kind::kGomba, Kind::kCloud}) {
    const float speed = cfg.speed(k);
    for (int i = 0; i < cfg.count(k); ++i) {
      SceneEntity e{next++, k, 0, 0, 0, 0, Status::kAlive};
      switch (k) {
        case Kind::kDuck: {
          e.x = detail::uniform(rng, 0, W);
          e.y = detail::uniform(rng, sky_top, sky_bottom);
          const float angle = detail::uniform(rng, 0.0f, 6.2831853f);
          e.vx = speed * std::cos(angle);
          e.vy = speed * std::sin(angle);
          break;
        }
        case Kind::kFlamingo:
          e.x = detail::uniform(rng, 0, W);
          e.y = cfg.ground_y;
          e.vx = detail::unit(rng) < 0.5f ? -speed : speed;
          break;
        case Kind::kGomba:
          e.x = detail::uniform(rng, 0, W);
          e.y = cfg.ground_y;
          break;
        case Kind::kCloud:
          e.x = detail::uniform(rng, 0, W);
          e.y = detail::uniform(rng, 20.0f, 150.0f);
          e.vx = speed;
          break;
        case Kind::kReticle:
          break;
      }
      out.push_back(e);
    }
  }
  return out;
}

// --- authoritative scene --------------------------------------------------

struct ShotEvent {
  TimeMs time_ms = 0;
  EntityId target = 0;  // 0 when nothing was hit
  int delta = 0;
};

enum class InputResult { kApplied, kMalformed };

class Scene {
 public:
  explicit Scene(SceneConfig cfg)
      : cfg_(std::move(cfg)), entities_(spawn_wave(cfg_, 1)), wave_(1) {}

  Scene(SceneConfig cfg, std::vector<SceneEntity> entities)
      : cfg_(std::move(cfg)), entities_(std::move(entities)), wave_(1) {
    int reticles = 0;
    for (const auto& e : entities_) reticles += e.kind == Kind::kReticle;
    if (reticles != 1) throw std::invalid_argument("scene must hold exactly one reticle");
  }

  const SceneConfig& config() const noexcept { return cfg_; }
  const std::vector<SceneEntity>& entities() const noexcept { return entities_; }
  int score() const noexcept { return score_; }
  int wave() const noexcept { return wave_; }
  const std::vector<ShotEvent>& shots() const noexcept { return shots_; }

  SceneEntity& entity(EntityId id) {
    for (auto& e : entities_) {
      if (e.id == id) return e;
    }
    throw std::out_of_range("unknown scene entity");
  }
  const SceneEntity& reticle() const {
    for (const auto& e : entities_) {
      if (e.kind == Kind::kReticle) return e;
    }
    throw std::logic_error("scene has no reticle");
  }

  /// Kinematic update over `dt_ms`.
  void step(TimeMs dt_ms) {
    if (dt_ms <= 0) throw std::invalid_argument("step: dt must be positive");
    const float dt = static_cast<float>(dt_ms) / 1000.0f;
    for (auto& e : entities_) {
      if (!e.alive()) continue;
      switch (e.kind) {
        case Kind::kDuck:
          e.x += e.vx * dt;
          e.y += e.vy * dt;
          bounce(e.x, e.vx, 0.0f, cfg_.width);
          bounce(e.y, e.vy, 40.0f, 400.0f);
          break;
        case Kind::kFlamingo:
          e.x += e.vx * dt;
          bounce(e.x, e.vx, 0.0f, cfg_.width);
          break;
        case Kind::kCloud:
          e.x += e.vx * dt;
          if (e.x > cfg_.width) e.x -= cfg_.width;
          if (e.x < 0.0f) e.x += cfg_.width;
          break;
        case Kind::kGomba:
          crawl(e, dt);
          break;
        case Kind::kReticle:
          break;
      }
    }
  }

  /// Loops waves 1..rounds every wave_duration_s; respawns reuse entity ids
  /// so the synchronized entity set stays fixed. Returns true on a new wave.
  bool advance_wave(TimeMs now) {
    const auto wave_ms = static_cast<TimeMs>(cfg_.wave_duration_s * 1000.0);
    const int wave = static_cast<int>((now / wave_ms) % cfg_.rounds) + 1;
    const auto cycle = now / wave_ms;
    if (cycle == wave_cycle_) return false;
    wave_cycle_ = cycle;
    wave_ = wave;
    const SceneEntity keep = reticle();
    entities_ = spawn_wave(cfg_, wave);
    for (auto& e : entities_) {
      if (e.kind == Kind::kReticle) e = keep;
    }
    return true;
  }

  /// Resolves a shot at (x, y); returns the score delta.
  int apply_shot(float x, float y, TimeMs now = 0) {
    SceneEntity* best = nullptr;
    float best_d2 = std::numeric_limits<float>::infinity();
    const float r2 = cfg_.hit_radius * cfg_.hit_radius;
    for (auto& e : entities_) {
      if (!e.hit_testable()) continue;
      const float dx = e.x - x, dy = e.y - y;
      const float d2 = dx * dx + dy * dy;
      if (d2 <= r2 && d2 < best_d2) {
        best = &e;
        best_d2 = d2;
      }
    }
    ShotEvent ev{now, 0, 0};
    if (best != nullptr) {
      best->status = Status::kDead;
      best->vx = best->vy = 0;
      ev.target = best->id;
      ev.delta = cfg_.point_value(best->kind);
    }
    score_ += ev.delta;
    shots_.push_back(ev);
    return ev.delta;
  }

  InputResult apply_input(const wire::Input& in, TimeMs now = 0) {
    auto& r = reticle_mut();
    if (r.status != Status::kAlive) return InputResult::kMalformed;
    if (in.is_move()) {
      if (!std::isfinite(in.dx) || !std::isfinite(in.dy)) return InputResult::kMalformed;
      r.x = std::clamp(r.x + in.dx, 0.0f, cfg_.width);
      r.y = std::clamp(r.y + in.dy, 0.0f, cfg_.height);
      return InputResult::kApplied;
    }
    if (in.code == static_cast<std::uint8_t>(wire::InputCode::kShoot)) {
      apply_shot(r.x, r.y, now);
      return InputResult::kApplied;
    }
    return InputResult::kMalformed;
  }

 private:
  static void bounce(float& pos, float& vel, float lo, float hi) {
    if (pos < lo) {
      pos = lo + (lo - pos);
      vel = -vel;
    } else if (pos > hi) {
      pos = hi - (pos - hi);
      vel = -vel;
    }
  }

  SceneEntity& reticle_mut() {
    for (auto& e : entities_) {
      if (e.kind == Kind::kReticle) return e;
    }
    throw std::logic_error("scene has no reticle");
  }

  void crawl(SceneEntity& g, float dt) {
    SceneEntity* target = nullptr;
    float best = std::numeric_limits<float>::infinity();
    for (auto& e : entities_) {
      if (e.kind != Kind::kFlamingo || !e.alive()) continue;
      const float d = std::abs(e.x - g.x);
      if (d < best) {
        best = d;
        target = &e;
      }
    }
    if (target == nullptr) {
      g.vx = 0;
      return;
    }
    const float speed = cfg_.speed(Kind::kGomba);
    const float gap = target->x - g.x;
    const float step = speed * dt;
    g.vx = gap >= 0 ? speed : -speed;
    g.x += std::abs(gap) <= step ? gap : (gap > 0 ? step : -step);
    if (std::abs(target->x - g.x) <= cfg_.contact_radius && std::abs(target->y - g.y) <= cfg_.contact_radius) {
      target->status = Status::kDead;
      target->vx = target->vy = 0;
    }
  }

  SceneConfig cfg_;
  std::vector<SceneEntity> entities_;
  int wave_;
  TimeMs wave_cycle_ = 0;
  int score_ = 0;
  std::vector<ShotEvent> shots_;
};

// --- bot --------------------------------------------------------------------

struct ViewEntity {
  EntityId id = 0;
  Kind kind = Kind::kDuck;
  float x = 0, y = 0;
  bool alive = true;
};

struct BotConfig {
  float speed = 400.0f;  // reticle units per second
  float hit_radius = 20.0f;
  float guard_radius = 50.0f;  // gomba this close to a flamingo takes priority
  TimeMs act_period_ms = 20;
  TimeMs shoot_cooldown_ms = 250;
};

/// Chases the nearest live duck in the client's view and fires once the
/// viewed reticle sits inside the hit radius. Never aims at flamingos; a
/// gomba threatening a flamingo is handled first.
class Bot {
 public:
  explicit Bot(BotConfig cfg = {}) : cfg_(cfg) {}

  const BotConfig& config() const noexcept { return cfg_; }
  std::uint64_t shots_fired() const noexcept { return shots_; }

  /// Inputs for this instant; empty between action slots.
  std::vector<wire::Input> act(std::span<const ViewEntity> view, TimeMs now) {
    std::vector<wire::Input> out;
    if (next_action_ && now < *next_action_) return out;
    next_action_ = now + cfg_.act_period_ms;

    const ViewEntity* reticle = nullptr;
    for (const auto& e : view) {
      if (e.kind == Kind::kReticle) reticle = &e;
    }
    if (reticle == nullptr || !reticle->alive) return out;

    const ViewEntity* target = pick_target(view, *reticle);
    if (target == nullptr) return out;

    const float dx = target->x - reticle->x;
    const float dy = target->y - reticle->y;
    const float dist = std::sqrt(dx * dx + dy * dy);
    if (dist <= cfg_.hit_radius) {
      if (now - last_shot_ >= cfg_.shoot_cooldown_ms) {
        out.push_back(wire::Input::shoot());
        last_shot_ = now;
        ++shots_;
      }
      return out;
    }
    const float max_step = cfg_.speed * static_cast<float>(cfg_.act_period_ms) / 1000.0f;
    const float scale = dist <= max_step ? 1.0f : max_step / dist;
    out.push_back(wire::Input::move(dx * scale, dy * scale));
    return out;
  }

 private:
  const ViewEntity* pick_target(std::span<const ViewEntity> view, const ViewEntity& reticle) const {
    auto nearest = [&](auto&& pred) {
      const ViewEntity* best = nullptr;
      float best_d2 = std::numeric_limits<float>::infinity();
      for (const auto& e : view) {
        if (!e.alive || !pred(e)) continue;
        const float dx = e.x - reticle.x, dy = e.y - reticle.y;
        const float d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {
          best = &e;
          best_d2 = d2;
        }
      }
      return best;
    };
    const float g2 = cfg_.guard_radius * cfg_.guard_radius;
    auto threatening = [&](const ViewEntity& g) {
      if (g.kind != Kind::kGomba) return false;
      for (const auto& f : view) {
        if (f.kind != Kind::kFlamingo || !f.alive) continue;
        const float dx = f.x - g.x, dy = f.y - g.y;
        if (dx * dx + dy * dy <= g2) return true;
      }
      return false;
    };
    if (const auto* g = nearest(threatening)) return g;
    return nearest([](const ViewEntity& e) { return e.kind == Kind::kDuck; });
  }

  BotConfig cfg_;
  std::optional<TimeMs> next_action_;
  TimeMs last_shot_ = std::numeric_limits<TimeMs>::min() / 2;  // never shot
  std::uint64_t shots_ = 0;
};

}  // namespace lodsync::duckhunt
