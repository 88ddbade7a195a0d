#pragma once

// Scenario configuration, the deterministic virtual-clock simulator, report
// serialization and arm-versus-arm comparison.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lodsync/core_model.hpp"
#include "lodsync/impairment_proxy.hpp"
#include "lodsync/line_config.hpp"
#include "lodsync/metrics.hpp"
#include "lodsync/session.hpp"
#include "lodsync/sync_engine.hpp"
#include "lodsync/workload_duckhunt.hpp"

namespace lodsync::harness {

enum class Mode { kSimulated, kRealSocket };
enum class Adaptation { kLod, kFixed };

inline std::string_view to_string(Mode m) { return m == Mode::kSimulated ? "simulated" : "realsocket"; }
inline std::string_view to_string(Adaptation a) { return a == Adaptation::kLod ? "lod" : "fixed"; }

inline constexpr std::uint32_t kUnlimitedCapacity = 1'000'000'000;

struct ScenarioConfig {
  Mode mode = Mode::kSimulated;
  Adaptation adaptation = Adaptation::kLod;
  std::optional<std::string> schedule_path;
  std::optional<std::string> roles_path;
  std::optional<std::string> groups_path;
  std::optional<std::string> scene_path;
  double duration_s = 60.0;
  std::optional<std::uint64_t> seed;  // overrides the scene seed
  std::size_t batch_entities = 1;     // entities per STATE_UPDATE datagram, 0 = fill
  std::uint32_t probe_drop_count = 0;
  double drop_prob_s2c = 0.0;
  double drop_prob_c2s = 0.0;
  TimeMs delay_ms = 0;
  TimeMs ack_timeout_ms = kDefaultAckTimeoutMs;
  bool bot = true;
  std::uint16_t base_port = 0;  // realsocket: proxy, proxy+1 server; 0 picks one
  std::string bin_dir;          // realsocket: directory holding the binaries
};

/// Line-oriented `key value` pairs; relative paths resolve against
/// `base_dir`.
inline ScenarioConfig parse_scenario(std::string_view text, const std::string& source = "scenario",
                                     const std::filesystem::path& base_dir = {}) {
  ScenarioConfig c;
  auto path_of = [&](const std::string& v) {
    std::filesystem::path p(v);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return p.string();
  };
  for (const auto& line : tokenize_config(text)) {
    if (line.tokens.size() != 2) throw ConfigError(source, line.number, "expected '<key> <value>'");
    const auto& k = line.tokens[0];
    const auto& v = line.tokens[1];
    auto bad = [&](const std::string& what) { return ConfigError(source, line.number, what); };
    if (k == "mode") {
      if (v == "simulated") c.mode = Mode::kSimulated;
      else if (v == "realsocket") c.mode = Mode::kRealSocket;
      else throw bad("mode must be simulated or realsocket");
    } else if (k == "adaptation") {
      if (v == "lod") c.adaptation = Adaptation::kLod;
      else if (v == "fixed") c.adaptation = Adaptation::kFixed;
      else throw bad("adaptation must be lod or fixed");
    } else if (k == "schedule") {
      c.schedule_path = path_of(v);
    } else if (k == "roles") {
      c.roles_path = path_of(v);
    } else if (k == "groups") {
      c.groups_path = path_of(v);
    } else if (k == "scene") {
      c.scene_path = path_of(v);
    } else if (k == "duration_s" || k == "duration") {
      auto d = parse_real(v);
      if (!d || !(*d > 0.0)) throw bad("duration must be positive");
      c.duration_s = *d;
    } else if (k == "seed") {
      auto s = parse_int<std::uint64_t>(v);
      if (!s) throw bad("seed must be an unsigned integer");
      c.seed = *s;
    } else if (k == "batch_entities") {
      auto b = parse_int<std::size_t>(v);
      if (!b) throw bad("batch_entities must be a non-negative integer");
      c.batch_entities = *b;
    } else if (k == "probe_drop_count") {
      auto n = parse_int<std::uint32_t>(v);
      if (!n || *n > kProbesPerRound) throw bad("probe_drop_count must be in [0,100]");
      c.probe_drop_count = *n;
    } else if (k == "drop_prob_s2c" || k == "drop_prob_c2s") {
      auto p = parse_real(v);
      if (!p || *p < 0.0 || *p > 1.0) throw bad("drop probability must be in [0,1]");
      (k == "drop_prob_s2c" ? c.drop_prob_s2c : c.drop_prob_c2s) = *p;
    } else if (k == "delay_ms") {
      auto d = parse_int<TimeMs>(v);
      if (!d || *d < 0) throw bad("delay_ms must be non-negative");
      c.delay_ms = *d;
    } else if (k == "ack_timeout_ms") {
      auto d = parse_int<TimeMs>(v);
      if (!d || *d < 0) throw bad("ack_timeout_ms must be non-negative");
      c.ack_timeout_ms = *d;
    } else if (k == "bot") {
      if (v == "on" || v == "chase") c.bot = true;
      else if (v == "off" || v == "idle") c.bot = false;
      else throw bad("bot must be on or off");
    } else if (k == "base_port") {
      auto p = parse_int<std::uint16_t>(v);
      if (!p) throw bad("base_port must be a port number");
      c.base_port = *p;
    } else if (k == "bin_dir") {
      c.bin_dir = path_of(v);
    } else {
      throw bad("unknown key '" + k + "'");
    }
  }
  return c;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  return parse_scenario(read_text_file(path), path, std::filesystem::path(path).parent_path());
}

/// Configuration with every referenced file loaded (or defaulted).
struct ResolvedScenario {
  ScenarioConfig config;
  RolesFile roles;
  std::vector<GroupConfig> groups;
  duckhunt::SceneConfig scene;
  proxy::CapacitySchedule schedule = proxy::CapacitySchedule::constant(kUnlimitedCapacity);

  TimeMs duration_ms() const { return static_cast<TimeMs>(config.duration_s * 1000.0); }
};

inline ResolvedScenario resolve(const ScenarioConfig& c) {
  if (!(c.duration_s > 0.0)) throw ConfigError("scenario", 0, "duration must be positive");
  ResolvedScenario r{c, default_roles(), default_groups(), {}};
  if (c.roles_path) r.roles = parse_roles(read_text_file(*c.roles_path), *c.roles_path);
  if (c.groups_path) r.groups = parse_groups(read_text_file(*c.groups_path), *c.groups_path);
  if (c.scene_path) r.scene = duckhunt::parse_scene(read_text_file(*c.scene_path), *c.scene_path);
  if (c.schedule_path) r.schedule = proxy::load_schedule(*c.schedule_path);
  if (c.seed) r.scene.seed = *c.seed;
  return r;
}

/// FNV-1a over a canonical rendering of the resolved configuration.
inline std::string config_hash(const ResolvedScenario& r) {
  std::ostringstream os;
  const auto& c = r.config;
  os << to_string(c.adaptation) << '|' << c.duration_s << '|' << c.batch_entities << '|'
     << c.probe_drop_count << '|' << c.drop_prob_s2c << '|' << c.drop_prob_c2s << '|' << c.delay_ms
     << '|' << c.ack_timeout_ms << '|' << c.bot << '|';
  for (const auto& role : r.roles.roles) os << role.name << '=' << role.weight << ';';
  os << r.roles.er_role << '|';
  for (const auto& g : r.groups) os << g.name << ':' << g.period_ms << ':' << g.ceiling() << ';';
  os << '|' << r.scene.seed << ':' << r.scene.rounds << ':' << r.scene.wave_duration_s;
  for (const auto& [k, n] : r.scene.counts) os << ',' << int(k) << '=' << n;
  for (const auto& [k, s] : r.scene.speeds) os << ',' << int(k) << '~' << s;
  for (const auto& [k, p] : r.scene.points) os << ',' << int(k) << '$' << p;
  os << '|';
  for (const auto& e : r.schedule.entries()) os << e.start_offset_s << ':' << e.pkts_per_s << ';';
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct MetricsReport {
  MetricsLog events;
  std::vector<proxy::WindowStats> proxy_stats;
  std::map<std::string, std::string> summary;

  // In-memory detail, not serialized.
  IntervalHistogram intervals;
  std::vector<ReassignmentRecord> reassignments;
  std::map<EntityId, std::string> entity_roles;
  std::map<EntityId, GroupId> initial_groups;
  std::map<EntityId, GroupId> final_groups;
  std::vector<CompletedRound> rounds;
  std::vector<duckhunt::ShotEvent> shots;

  bool ok() const {
    auto it = summary.find("status");
    return it != summary.end() && it->second == "ok";
  }
};

inline constexpr std::string_view kSummaryMarker = "# summary";

inline void write_report_csv(std::ostream& os, const MetricsLog& events,
                             const std::map<std::string, std::string>& summary) {
  events.write_csv(os);
  os << kSummaryMarker << '\n' << "key,value\n";
  for (const auto& [k, v] : summary) os << k << ',' << v << '\n';
}

inline void write_report(const MetricsReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.csv", std::ios::binary);
    write_report_csv(out, report.events, report.summary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "report.csv").string());
  }
  std::ofstream out(dir / "proxy_stats.csv", std::ios::binary);
  proxy::write_stats_csv(out, report.proxy_stats);
  if (!out) throw std::runtime_error("cannot write " + (dir / "proxy_stats.csv").string());
}

struct LoadedReport {
  std::vector<MetricEvent> events;
  std::map<std::string, std::string> summary;
  std::vector<proxy::WindowStats> proxy_stats;

  std::string get(const std::string& key, const std::string& fallback = "") const {
    auto it = summary.find(key);
    return it == summary.end() ? fallback : it->second;
  }
};

inline void parse_report_csv(std::string_view text, const std::string& source, LoadedReport& out) {
  bool in_summary = false;
  std::size_t pos = 0;
  int number = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++number;
    if (line.empty() || line == kEventHeader || line == "key,value") continue;
    if (line == kSummaryMarker) {
      in_summary = true;
      continue;
    }
    if (in_summary) {
      auto comma = line.find(',');
      if (comma == std::string_view::npos) throw ConfigError(source, number, "malformed summary line");
      out.summary[std::string(line.substr(0, comma))] = std::string(line.substr(comma + 1));
    } else {
      auto e = parse_event(line);
      if (!e) throw ConfigError(source, number, "malformed event row");
      out.events.push_back(*e);
    }
  }
}

inline LoadedReport read_report(const std::filesystem::path& dir) {
  LoadedReport r;
  parse_report_csv(read_text_file((dir / "report.csv").string()), (dir / "report.csv").string(), r);
  if (std::filesystem::exists(dir / "proxy_stats.csv")) {
    r.proxy_stats = proxy::parse_stats_csv(read_text_file((dir / "proxy_stats.csv").string()));
  }
  return r;
}

inline void stable_sort_events(MetricsLog& log) {
  std::stable_sort(log.events().begin(), log.events().end(),
                   [](const MetricEvent& a, const MetricEvent& b) { return a.time_ms < b.time_ms; });
}

/// Summary keys common to both modes.
inline void add_config_summary(const ResolvedScenario& r, std::map<std::string, std::string>& s) {
  const auto& c = r.config;
  s["mode"] = std::string(to_string(c.mode));
  s["adaptation"] = std::string(to_string(c.adaptation));
  s["seed"] = std::to_string(r.scene.seed);
  s["duration_s"] = format_number(c.duration_s);
  s["config_hash"] = config_hash(r);
  s["batch_entities"] = std::to_string(c.batch_entities);
  s["probe_drop_count"] = std::to_string(c.probe_drop_count);
  s["drop_prob_s2c"] = format_number(c.drop_prob_s2c);
  s["drop_prob_c2s"] = format_number(c.drop_prob_c2s);
  const auto& entries = r.schedule.entries();
  std::string sched;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) sched += ' ';
    sched += std::to_string(entries[i].start_offset_s) + ':' + std::to_string(entries[i].pkts_per_s);
  }
  s["schedule"] = sched;
  for (const auto& g : r.groups) {
    s["group." + std::to_string(g.id)] = g.name + ":" + std::to_string(g.period_ms);
  }
}

// ---------------------------------------------------------------------------
// Deterministic simulator
// ---------------------------------------------------------------------------

/// Runs server, proxy admission, client and bot on a 1 ms virtual clock.
/// Per instant: deliver client->server traffic, server tick, client
/// staleness sample, deliver server->client traffic, client actions.
inline MetricsReport run_simulated(const ResolvedScenario& r) {
  const auto& c = r.config;
  EngineOptions opts;
  opts.adaptive = c.adaptation == Adaptation::kLod;
  opts.max_batch_entities = c.batch_entities;
  opts.ack_timeout_ms = c.ack_timeout_ms;
  DuckHuntServer server = make_duckhunt_server(r.roles, r.groups, r.scene, opts);

  proxy::ImpairmentOptions popts;
  popts.drop_probability_c2s = c.drop_prob_c2s;
  popts.drop_probability_s2c = c.drop_prob_s2c;
  popts.probe_drop_count = c.probe_drop_count;
  popts.seed = r.scene.seed;
  proxy::ImpairmentProxy link(r.schedule, 0, popts);

  duckhunt::BotConfig bot_cfg;
  bot_cfg.hit_radius = r.scene.hit_radius;
  bot_cfg.speed = r.scene.speed(duckhunt::Kind::kReticle);
  ClientSession client(c.bot, bot_cfg);

  struct InFlight {
    TimeMs at;
    std::vector<std::uint8_t> bytes;
  };
  std::deque<InFlight> to_client, to_server;
  auto send = [&](std::vector<std::uint8_t> bytes, proxy::Direction dir, TimeMs now) {
    if (link.admit(bytes, dir, now) == proxy::Verdict::kDrop) return;
    auto& q = dir == proxy::Direction::kServerToClient ? to_client : to_server;
    q.push_back({now + c.delay_ms, std::move(bytes)});
  };

  MetricsReport report;
  for (const auto& [id, e] : server.organization().entities()) {
    report.entity_roles[id] = e.role;
    report.initial_groups[id] = e.current_group;
  }

  const TimeMs end = r.duration_ms();
  for (TimeMs now = 0; now < end; ++now) {
    while (!to_server.empty() && to_server.front().at <= now) {
      auto bytes = std::move(to_server.front().bytes);
      to_server.pop_front();
      for (auto& d : server.on_datagram(bytes, now)) send(std::move(d.bytes), proxy::Direction::kServerToClient, now);
    }
    for (auto& d : server.tick(now)) send(std::move(d.bytes), proxy::Direction::kServerToClient, now);
    client.sample(now);
    while (!to_client.empty() && to_client.front().at <= now) {
      auto bytes = std::move(to_client.front().bytes);
      to_client.pop_front();
      for (auto& reply : client.on_datagram(bytes, now)) {
        send(std::move(reply), proxy::Direction::kClientToServer, now);
      }
    }
    for (auto& out : client.act(now)) send(std::move(out), proxy::Direction::kClientToServer, now);
  }

  server.flush_metrics();
  client.flush_metrics();
  for (const auto& e : server.metrics().events()) report.events.add(e);
  for (const auto& e : client.metrics().events()) report.events.add(e);
  stable_sort_events(report.events);
  report.proxy_stats = link.stats(end - 1);
  report.intervals = client.intervals();
  report.reassignments = server.reassignments();
  report.rounds = server.completed_rounds();
  report.shots = server.model().scene().shots();
  for (const auto& [id, e] : server.organization().entities()) report.final_groups[id] = e.current_group;

  auto& s = report.summary;
  add_config_summary(r, s);
  for (const auto& [id, role] : report.entity_roles) {
    s["entity." + std::to_string(id) + ".role"] = role;
    s["initial_group." + std::to_string(id)] = std::to_string(report.initial_groups[id]);
    s["final_group." + std::to_string(id)] = std::to_string(report.final_groups[id]);
  }
  std::uint64_t hits = 0, flamingo_hits = 0;
  for (const auto& shot : report.shots) {
    hits += shot.target != 0;
    flamingo_hits += shot.delta < 0;
  }
  s["bot_score"] = std::to_string(server.model().scene().score());
  s["shots"] = std::to_string(report.shots.size());
  s["hits"] = std::to_string(hits);
  s["negative_hits"] = std::to_string(flamingo_hits);
  s["inputs_applied"] = std::to_string(server.counters().inputs_applied);
  s["malformed_inputs"] = std::to_string(server.counters().malformed_inputs);
  s["reassignment_events"] = std::to_string(report.reassignments.size());
  s["rounds_completed"] = std::to_string(server.monitor().counters().rounds_completed);
  s["spurious_acks"] = std::to_string(server.monitor().counters().spurious_acks);
  s["last_loss_percent"] = format_number(server.monitor().counters().last_loss_percent);
  s["datagrams_out"] = std::to_string(server.counters().datagrams_out);
  s["datagrams_received_by_client"] = std::to_string(client.datagrams_received());
  s["updates_applied"] = std::to_string(client.model().counters().updates_applied);
  s["stale_rejected"] = std::to_string(client.model().counters().stale_rejected);
  std::map<std::pair<std::string, GroupId>, std::pair<TimeMs, TimeMs>> by_role;
  for (const auto& [key, hist] : report.intervals) {
    if (hist.empty()) continue;
    auto& mm = by_role.try_emplace({report.entity_roles[key.first], key.second},
                                   std::pair{hist.begin()->first, hist.rbegin()->first})
                   .first->second;
    mm.first = std::min(mm.first, hist.begin()->first);
    mm.second = std::max(mm.second, hist.rbegin()->first);
  }
  for (const auto& [key, mm] : by_role) {
    const std::string base = "interval." + key.first + "." + std::to_string(key.second);
    s[base + ".min_ms"] = std::to_string(mm.first);
    s[base + ".max_ms"] = std::to_string(mm.second);
  }
  s["status"] = "ok";
  return report;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

struct ComparisonRow {
  std::string segment;  // index or "all"
  std::int64_t start_s = 0;
  std::int64_t end_s = 0;
  std::uint32_t capacity = 0;
  std::string metric;
  double a = 0.0;
  double b = 0.0;
  double delta() const { return a - b; }
};

struct ComparisonSummary {
  std::vector<ComparisonRow> rows;

  const ComparisonRow* find(std::size_t segment, std::string_view metric) const {
    const std::string seg = std::to_string(segment);
    for (const auto& r : rows) {
      if (r.segment == seg && r.metric == metric) return &r;
    }
    return nullptr;
  }
};

class CompareError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Segment {
  std::int64_t start_s = 0;
  std::int64_t end_s = 0;
  std::uint32_t capacity = 0;
};

/// Schedule segments clipped to the run duration.
inline std::vector<Segment> segments_of(const LoadedReport& r) {
  std::vector<Segment> out;
  auto dur = parse_real(r.get("duration_s"));
  if (!dur) throw CompareError("report lacks duration_s");
  const auto end = static_cast<std::int64_t>(*dur);
  std::istringstream is(r.get("schedule"));
  std::vector<std::pair<std::int64_t, std::uint32_t>> entries;
  for (std::string tok; is >> tok;) {
    auto colon = tok.find(':');
    auto off = parse_int<std::int64_t>(std::string_view(tok).substr(0, colon));
    auto cap = parse_int<std::uint32_t>(std::string_view(tok).substr(colon + 1));
    if (colon == std::string::npos || !off || !cap) throw CompareError("malformed schedule in report");
    entries.emplace_back(*off, *cap);
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto s = entries[i].first;
    const auto e = i + 1 < entries.size() ? entries[i + 1].first : end;
    if (s >= end) break;
    out.push_back({s, std::min(e, end), entries[i].second});
  }
  return out;
}

namespace detail {

inline std::map<std::string, double> segment_metrics(const LoadedReport& r, const Segment& seg) {
  std::map<EntityId, std::string> roles;
  for (const auto& [k, v] : r.summary) {
    if (k.rfind("entity.", 0) == 0 && k.size() > 12 && k.substr(k.size() - 5) == ".role") {
      if (auto id = parse_int<EntityId>(std::string_view(k).substr(7, k.size() - 12))) roles[*id] = v;
    }
  }
  const std::int64_t lo = seg.start_s * 1000, hi = seg.end_s * 1000;
  const double secs = static_cast<double>(seg.end_s - seg.start_s);
  double update_dgrams = 0, total_dgrams = 0, received = 0;
  std::map<std::string, std::pair<double, double>> stale;
  for (const auto& e : r.events) {
    if (e.time_ms < lo || e.time_ms >= hi) continue;
    switch (e.kind) {
      case EventKind::kPktsOut:
        (e.group ? update_dgrams : total_dgrams) += e.value;
        break;
      case EventKind::kPktsIn:
        if (!e.group) received += e.value;
        break;
      case EventKind::kStalenessSample:
        if (e.entity && roles.count(*e.entity)) {
          auto& acc = stale[roles[*e.entity]];
          acc.first += e.value;
          acc.second += 1;
        }
        break;
      default:
        break;
    }
  }
  std::map<std::string, double> m;
  m["update_datagrams_per_s"] = update_dgrams / secs;
  m["total_datagrams_per_s"] = total_dgrams / secs;
  m["received_datagrams_per_s"] = received / secs;
  for (const auto& [role, acc] : stale) {
    m["mean_staleness_ms." + role] = acc.second > 0 ? acc.first / acc.second : 0.0;
  }
  for (auto dir : {proxy::Direction::kServerToClient, proxy::Direction::kClientToServer}) {
    double rx = 0, dropped = 0;
    for (const auto& w : r.proxy_stats) {
      if (w.direction != dir || w.window_start_ms < lo || w.window_start_ms >= hi) continue;
      rx += static_cast<double>(w.received);
      dropped += static_cast<double>(w.dropped);
    }
    m[std::string("drop_rate.") + std::string(proxy::to_string(dir))] = rx > 0 ? dropped / rx : 0.0;
  }
  return m;
}

}  // namespace detail

/// Per-segment comparison of two runs over the same schedule, seed and
/// duration. Throws CompareError on mismatched runs.
inline ComparisonSummary compare(const LoadedReport& a, const LoadedReport& b) {
  for (const char* key : {"schedule", "seed", "duration_s"}) {
    if (a.get(key) != b.get(key)) {
      throw CompareError(std::string("reports differ in ") + key + ": '" + a.get(key) + "' vs '" +
                         b.get(key) + "'");
    }
  }
  ComparisonSummary out;
  const auto segs = segments_of(a);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto ma = detail::segment_metrics(a, segs[i]);
    const auto mb = detail::segment_metrics(b, segs[i]);
    std::map<std::string, std::pair<double, double>> merged;
    for (const auto& [k, v] : ma) merged[k].first = v;
    for (const auto& [k, v] : mb) merged[k].second = v;
    for (const auto& [k, v] : merged) {
      out.rows.push_back({std::to_string(i), segs[i].start_s, segs[i].end_s, segs[i].capacity, k, v.first,
                          v.second});
    }
  }
  const std::int64_t end = segs.empty() ? 0 : segs.back().end_s;
  for (const char* key : {"bot_score", "shots", "hits", "negative_hits", "reassignment_events",
                          "datagrams_out", "updates_applied"}) {
    auto va = parse_real(a.get(key, "0")), vb = parse_real(b.get(key, "0"));
    out.rows.push_back({"all", 0, end, 0, key, va.value_or(0), vb.value_or(0)});
  }
  return out;
}

inline void write_comparison(std::ostream& os, const ComparisonSummary& s) {
  os << "segment,start_s,end_s,capacity,metric,a,b,delta\n";
  for (const auto& r : s.rows) {
    os << r.segment << ',' << r.start_s << ',' << r.end_s << ',' << r.capacity << ',' << r.metric << ','
       << format_number(r.a) << ',' << format_number(r.b) << ',' << format_number(r.delta()) << '\n';
  }
}

}  // namespace lodsync::harness
