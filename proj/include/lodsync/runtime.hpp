#pragma once

// Wall-clock loops behind the three real-socket binaries. Each loop owns a
// single UDP socket, polls it with a 1 ms granularity and writes its
// metrics file on exit.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lodsync/harness.hpp"
#include "lodsync/impairment_proxy.hpp"
#include "lodsync/session.hpp"
#include "lodsync/udp.hpp"

namespace lodsync::runtime {

inline void write_metrics_file(const std::string& path, const MetricsLog& events,
                               const std::map<std::string, std::string>& summary) {
  if (auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary);
  harness::write_report_csv(out, events, summary);
  if (!out) throw std::runtime_error("cannot write " + path);
}

inline bool stop_requested(const std::atomic<bool>* stop) {
  return stop != nullptr && stop->load(std::memory_order_relaxed);
}

// ---------------------------------------------------------------------------
// Server
// ---------------------------------------------------------------------------

struct ServerOptions {
  net::Endpoint bind;
  RolesFile roles = default_roles();
  std::vector<GroupConfig> groups = default_groups();
  duckhunt::SceneConfig scene;
  EngineOptions engine;
  std::string metrics_path;
  double duration_s = 60.0;         // measured from the client's join
  double join_timeout_s = 30.0;
  const std::atomic<bool>* stop = nullptr;
};

struct ServerResult {
  bool joined = false;
  std::map<std::string, std::string> summary;
};

/// Serves one client. Engine time zero is the arrival of the first join
/// request; the run ends `duration_s` later.
inline ServerResult run_server(const ServerOptions& o) {
  net::UdpSocket sock;
  sock.bind(o.bind);
  DuckHuntServer server = make_duckhunt_server(o.roles, o.groups, o.scene, o.engine);
  net::MonoClock clock;
  std::optional<net::Endpoint> client;
  std::vector<std::uint8_t> buf;
  net::Endpoint from;
  const auto duration_ms = static_cast<TimeMs>(o.duration_s * 1000.0);
  const auto join_timeout_ms = static_cast<TimeMs>(o.join_timeout_s * 1000.0);
  std::uint64_t send_failures = 0;

  auto send_all = [&](std::vector<Datagram>& out) {
    for (auto& d : out) {
      if (!sock.send_to(d.bytes, *client)) ++send_failures;
    }
  };

  while (!stop_requested(o.stop)) {
    if (!client) {
      if (clock.now_ms() > join_timeout_ms) break;
      if (!sock.wait_readable(10)) continue;
      while (sock.recv_from(buf, from)) {
        auto res = wire::decode(buf);
        auto* msg = std::get_if<wire::Message>(&res);
        if (msg == nullptr || !std::holds_alternative<wire::Init>(msg->payload)) continue;
        client = from;
        clock.reset();
        auto replies = server.on_datagram(buf, 0);
        send_all(replies);
        break;
      }
      continue;
    }
    const TimeMs now = clock.now_ms();
    if (now >= duration_ms) break;
    while (sock.recv_from(buf, from)) {
      if (!(from == *client)) continue;
      auto replies = server.on_datagram(buf, now);
      send_all(replies);
    }
    if (now >= server.next_wakeup()) {
      auto out = server.tick(now);
      send_all(out);
    }
    const TimeMs wait = std::clamp<TimeMs>(server.next_wakeup() - clock.now_ms(), 0, 1);
    if (wait > 0) sock.wait_readable(static_cast<int>(wait));
  }

  server.flush_metrics();
  harness::stable_sort_events(server.metrics());
  ServerResult r;
  r.joined = client.has_value();
  auto& s = r.summary;
  const auto& scene = server.model().scene();
  std::uint64_t hits = 0, negative = 0;
  for (const auto& shot : scene.shots()) {
    hits += shot.target != 0;
    negative += shot.delta < 0;
  }
  s["bot_score"] = std::to_string(scene.score());
  s["shots"] = std::to_string(scene.shots().size());
  s["hits"] = std::to_string(hits);
  s["negative_hits"] = std::to_string(negative);
  s["inputs_applied"] = std::to_string(server.counters().inputs_applied);
  s["malformed_inputs"] = std::to_string(server.counters().malformed_inputs);
  s["reassignment_events"] = std::to_string(server.reassignments().size());
  s["rounds_completed"] = std::to_string(server.monitor().counters().rounds_completed);
  s["spurious_acks"] = std::to_string(server.monitor().counters().spurious_acks);
  s["last_loss_percent"] = format_number(server.monitor().counters().last_loss_percent);
  s["datagrams_out"] = std::to_string(server.counters().datagrams_out);
  s["send_failures"] = std::to_string(send_failures);
  s["joined"] = r.joined ? "1" : "0";
  for (const auto& [id, e] : server.organization().entities()) {
    s["entity." + std::to_string(id) + ".role"] = e.role;
    s["final_group." + std::to_string(id)] = std::to_string(e.current_group);
  }
  for (std::size_t i = 0; i < server.completed_rounds().size(); ++i) {
    s["round." + std::to_string(i) + ".loss_percent"] =
        format_number(server.completed_rounds()[i].loss_percent);
  }
  if (!o.metrics_path.empty()) write_metrics_file(o.metrics_path, server.metrics(), s);
  return r;
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

struct ClientOptions {
  net::Endpoint server;
  bool bot = true;
  duckhunt::BotConfig bot_config;
  std::string metrics_path;
  double duration_s = 60.0;  // measured from client start
  const std::atomic<bool>* stop = nullptr;
};

struct ClientResult {
  bool initialized = false;
  std::map<std::string, std::string> summary;
};

inline ClientResult run_client(const ClientOptions& o) {
  net::UdpSocket sock;
  ClientSession session(o.bot, o.bot_config);
  net::MonoClock clock;
  std::vector<std::uint8_t> buf;
  net::Endpoint from;
  const auto duration_ms = static_cast<TimeMs>(o.duration_s * 1000.0);
  TimeMs sampled = -1;
  std::uint64_t send_failures = 0;
  auto send_all = [&](std::vector<std::vector<std::uint8_t>>& out) {
    for (auto& bytes : out) {
      if (!sock.send_to(bytes, o.server)) ++send_failures;
    }
  };

  while (!stop_requested(o.stop)) {
    const TimeMs now = clock.now_ms();
    if (now >= duration_ms) break;
    // One staleness sample per elapsed millisecond, as in the simulator.
    for (TimeMs t = sampled + 1; t <= now; ++t) session.sample(t);
    sampled = now;
    while (sock.recv_from(buf, from)) {
      if (!(from == o.server)) continue;
      auto replies = session.on_datagram(buf, clock.now_ms());
      send_all(replies);
    }
    auto out = session.act(clock.now_ms());
    send_all(out);
    sock.wait_readable(1);
  }

  session.flush_metrics();
  harness::stable_sort_events(session.metrics());
  ClientResult r;
  r.initialized = session.model().initialized();
  auto& s = r.summary;
  const auto& c = session.model().counters();
  s["datagrams_received_by_client"] = std::to_string(session.datagrams_received());
  s["updates_applied"] = std::to_string(c.updates_applied);
  s["stale_rejected"] = std::to_string(c.stale_rejected);
  s["probes_echoed"] = std::to_string(c.probes_echoed);
  s["client_decode_errors"] = std::to_string(c.decode_errors);
  s["client_send_failures"] = std::to_string(send_failures);
  s["client_initialized"] = r.initialized ? "1" : "0";
  if (auto t = session.init_time()) s["client_init_ms"] = std::to_string(*t);
  if (!o.metrics_path.empty()) write_metrics_file(o.metrics_path, session.metrics(), s);
  return r;
}

// ---------------------------------------------------------------------------
// Proxy
// ---------------------------------------------------------------------------

struct ProxyOptions {
  net::Endpoint listen;
  net::Endpoint server;
  proxy::CapacitySchedule schedule = proxy::CapacitySchedule::constant(harness::kUnlimitedCapacity);
  proxy::ImpairmentOptions impairment;
  TimeMs delay_ms = 0;
  TimeMs jitter_ms = 0;
  std::string stats_path;
  double duration_s = 0.0;  // 0 runs until stopped
  const std::atomic<bool>* stop = nullptr;
};

struct ProxyResult {
  std::vector<proxy::WindowStats> stats;
  std::uint64_t send_failures = 0;
};

/// Forwards between the server and the first other peer that talks to it.
/// Datagrams from any further peer are ignored. Delay and jitter never
/// reorder packets within a direction.
inline ProxyResult run_proxy(const ProxyOptions& o) {
  net::UdpSocket sock;
  sock.bind(o.listen);
  net::MonoClock clock;
  proxy::ImpairmentProxy link(o.schedule, 0, o.impairment);
  std::mt19937_64 jitter_rng(o.impairment.seed ^ 0x9e3779b97f4a7c15ULL);
  std::optional<net::Endpoint> client;
  std::vector<std::uint8_t> buf;
  net::Endpoint from;
  const auto duration_ms = static_cast<TimeMs>(o.duration_s * 1000.0);

  struct Held {
    TimeMs release;
    std::vector<std::uint8_t> bytes;
  };
  std::deque<Held> queues[2];
  TimeMs last_release[2] = {0, 0};
  ProxyResult r;

  auto forward = [&](std::vector<std::uint8_t>& bytes, proxy::Direction dir) {
    const net::Endpoint& to = dir == proxy::Direction::kClientToServer ? o.server : *client;
    if (!sock.send_to(bytes, to)) ++r.send_failures;
  };

  while (!stop_requested(o.stop)) {
    const TimeMs now = clock.now_ms();
    if (duration_ms > 0 && now >= duration_ms) break;
    while (sock.recv_from(buf, from)) {
      const TimeMs t = clock.now_ms();
      proxy::Direction dir;
      if (from == o.server) {
        if (!client) continue;  // nobody to deliver to yet
        dir = proxy::Direction::kServerToClient;
      } else {
        if (!client) client = from;
        if (!(from == *client)) continue;
        dir = proxy::Direction::kClientToServer;
      }
      if (link.admit(buf, dir, t) == proxy::Verdict::kDrop) continue;
      if (o.delay_ms == 0 && o.jitter_ms == 0) {
        forward(buf, dir);
        continue;
      }
      TimeMs extra = o.delay_ms;
      if (o.jitter_ms > 0) {
        extra += static_cast<TimeMs>(jitter_rng() % static_cast<std::uint64_t>(o.jitter_ms + 1));
      }
      auto& last = last_release[static_cast<int>(dir)];
      last = std::max(last, t + extra);
      queues[static_cast<int>(dir)].push_back({last, buf});
    }
    TimeMs next = clock.now_ms() + 5;
    for (int d = 0; d < 2; ++d) {
      auto& q = queues[d];
      while (!q.empty() && q.front().release <= clock.now_ms()) {
        forward(q.front().bytes, static_cast<proxy::Direction>(d));
        q.pop_front();
      }
      if (!q.empty()) next = std::min(next, q.front().release);
    }
    const TimeMs wait = std::clamp<TimeMs>(next - clock.now_ms(), 0, 5);
    sock.wait_readable(static_cast<int>(wait));
  }

  const TimeMs end = clock.now_ms();
  r.stats = link.stats(duration_ms > 0 ? std::min(end, duration_ms - 1) : end);
  if (!o.stats_path.empty()) {
    if (auto parent = std::filesystem::path(o.stats_path).parent_path(); !parent.empty()) {
      std::filesystem::create_directories(parent);
    }
    std::ofstream out(o.stats_path, std::ios::binary);
    proxy::write_stats_csv(out, r.stats);
    if (!out) throw std::runtime_error("cannot write " + o.stats_path);
  }
  return r;
}

}  // namespace lodsync::runtime
