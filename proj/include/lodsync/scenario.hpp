#pragma once

// Scenario dispatch. Simulated runs go through the virtual-clock simulator;
// real-socket runs spawn the proxy, server and client binaries on loopback,
// supervise them and merge their output files into one report.

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lodsync/harness.hpp"
#include "lodsync/udp.hpp"

extern char** environ;

namespace lodsync::harness {

/// Exit status the binaries use when their port is already taken.
inline constexpr int kExitPortConflict = 3;

inline std::filesystem::path self_dir() {
  std::error_code ec;
  auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
  return ec ? std::filesystem::current_path() : p.parent_path();
}

/// Returns a currently free loopback UDP port.
inline std::uint16_t free_udp_port() {
  net::UdpSocket s;
  s.bind(net::Endpoint::parse("127.0.0.1:0"));
  return s.local().port();
}

class ChildProcess {
 public:
  ChildProcess(const std::string& exe, const std::vector<std::string>& args, const std::string& log_path) {
    std::vector<char*> argv;
    argv.push_back(const_cast<char*>(exe.c_str()));
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_addopen(&fa, STDOUT_FILENO, log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_adddup2(&fa, STDOUT_FILENO, STDERR_FILENO);
    const int rc = posix_spawn(&pid_, exe.c_str(), &fa, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&fa);
    if (rc != 0) {
      pid_ = -1;
      spawn_error_ = rc;
    }
  }
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;
  ~ChildProcess() {
    if (running()) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

  bool spawned() const noexcept { return pid_ > 0; }
  int spawn_error() const noexcept { return spawn_error_; }
  bool running() const noexcept { return pid_ > 0 && !status_; }

  /// Non-blocking reap; returns true once the child has exited.
  bool poll() {
    if (!running()) return true;
    int st = 0;
    if (::waitpid(pid_, &st, WNOHANG) == pid_) status_ = st;
    return !running();
  }

  void terminate() {
    if (running()) ::kill(pid_, SIGTERM);
  }
  void kill() {
    if (running()) ::kill(pid_, SIGKILL);
  }

  /// Exit code, or 128 + signal for a killed child; -1 if never started.
  int exit_code() const noexcept {
    if (!status_) return -1;
    if (WIFEXITED(*status_)) return WEXITSTATUS(*status_);
    if (WIFSIGNALED(*status_)) return 128 + WTERMSIG(*status_);
    return -1;
  }

 private:
  pid_t pid_ = -1;
  int spawn_error_ = 0;
  std::optional<int> status_;
};

inline std::string fmt_seconds(double s) { return format_number(s); }

/// Runs the three binaries over loopback UDP and aggregates their files
/// into `out_dir`. Component failures yield a partial report whose
/// `status` is `failed`.
inline MetricsReport run_realsocket(const ResolvedScenario& r, const std::filesystem::path& out_dir) {
  const auto& c = r.config;
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path bin = c.bin_dir.empty() ? self_dir() : std::filesystem::path(c.bin_dir);

  std::uint16_t proxy_port = c.base_port, server_port = c.base_port ? c.base_port + 1 : 0;
  if (!c.base_port) {
    proxy_port = free_udp_port();
    do server_port = free_udp_port();
    while (server_port == proxy_port);
  }
  const std::string proxy_addr = "127.0.0.1:" + std::to_string(proxy_port);
  const std::string server_addr = "127.0.0.1:" + std::to_string(server_port);
  const auto server_csv = (out_dir / "server.csv").string();
  const auto client_csv = (out_dir / "client.csv").string();
  const auto stats_csv = (out_dir / "proxy_stats.csv").string();
  const double d = c.duration_s;

  std::vector<std::string> proxy_args = {"--listen", proxy_addr, "--server", server_addr, "--stats", stats_csv,
                                         "--duration-s", fmt_seconds(d + 4.0), "--seed",
                                         std::to_string(r.scene.seed)};
  if (c.schedule_path) proxy_args.insert(proxy_args.end(), {"--schedule", *c.schedule_path});
  if (c.delay_ms) proxy_args.insert(proxy_args.end(), {"--delay-ms", std::to_string(c.delay_ms)});
  if (c.drop_prob_s2c > 0) proxy_args.insert(proxy_args.end(), {"--drop-prob-s2c", format_number(c.drop_prob_s2c)});
  if (c.drop_prob_c2s > 0) proxy_args.insert(proxy_args.end(), {"--drop-prob-c2s", format_number(c.drop_prob_c2s)});
  if (c.probe_drop_count) {
    proxy_args.insert(proxy_args.end(), {"--probe-drop-count", std::to_string(c.probe_drop_count)});
  }

  std::vector<std::string> server_args = {"--bind", server_addr, "--metrics", server_csv, "--duration-s",
                                          fmt_seconds(d), "--seed", std::to_string(r.scene.seed), "--batch",
                                          std::to_string(c.batch_entities), "--ack-timeout-ms",
                                          std::to_string(c.ack_timeout_ms)};
  if (c.roles_path) server_args.insert(server_args.end(), {"--roles", *c.roles_path});
  if (c.groups_path) server_args.insert(server_args.end(), {"--groups", *c.groups_path});
  if (c.scene_path) server_args.insert(server_args.end(), {"--scene", *c.scene_path});
  if (c.adaptation == Adaptation::kFixed) server_args.push_back("--fixed");

  std::vector<std::string> client_args = {"--server", proxy_addr, "--bot", c.bot ? "chase" : "idle",
                                          "--metrics", client_csv, "--duration-s", fmt_seconds(d + 2.0)};
  if (c.scene_path) client_args.insert(client_args.end(), {"--scene", *c.scene_path});

  struct Component {
    std::string name;
    std::unique_ptr<ChildProcess> proc;
  };
  std::vector<Component> comps;
  auto launch = [&](const std::string& name, const std::vector<std::string>& args) {
    const auto exe = (bin / ("lodsync-" + name)).string();
    comps.push_back({name, std::make_unique<ChildProcess>(exe, args, (out_dir / (name + ".log")).string())});
    std::this_thread::sleep_for(std::chrono::milliseconds(200));  // let it bind before the next one starts
  };
  launch("proxy", proxy_args);
  launch("server", server_args);
  launch("client", client_args);

  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(static_cast<long>((d + 30) * 1000));
  bool timed_out = false;
  while (true) {
    bool all_done = true;
    for (auto& comp : comps) all_done = comp.proc->poll() && all_done;
    if (all_done) break;
    if (std::chrono::steady_clock::now() > deadline) {
      timed_out = true;
      for (auto& comp : comps) comp.proc->kill();
      for (auto& comp : comps) {
        while (!comp.proc->poll()) std::this_thread::sleep_for(std::chrono::milliseconds(5));
      }
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }

  MetricsReport report;
  auto& s = report.summary;
  std::vector<std::string> failures;
  for (const auto& comp : comps) {
    const int code = comp.proc->exit_code();
    s["exit." + comp.name] = std::to_string(code);
    if (!comp.proc->spawned()) {
      failures.push_back(comp.name + ":spawn_failed");
    } else if (code == kExitPortConflict) {
      failures.push_back(comp.name + ":port_conflict");
    } else if (code != 0) {
      failures.push_back(comp.name + ":exit_" + std::to_string(code));
    }
  }
  if (timed_out) failures.push_back("timeout");

  LoadedReport merged;
  for (const auto& path : {server_csv, client_csv}) {
    if (!std::filesystem::exists(path)) {
      failures.push_back("missing:" + std::filesystem::path(path).filename().string());
      continue;
    }
    try {
      parse_report_csv(read_text_file(path), path, merged);
    } catch (const std::exception& e) {
      failures.push_back("unreadable:" + std::filesystem::path(path).filename().string());
    }
  }
  if (std::filesystem::exists(stats_csv)) {
    try {
      report.proxy_stats = proxy::parse_stats_csv(read_text_file(stats_csv));
    } catch (const std::exception&) {
      failures.push_back("unreadable:proxy_stats.csv");
    }
  } else {
    failures.push_back("missing:proxy_stats.csv");
  }
  for (const auto& e : merged.events) report.events.add(e);
  stable_sort_events(report.events);
  for (const auto& [k, v] : merged.summary) s[k] = v;
  if (merged.summary.count("joined") && merged.summary.at("joined") != "1") failures.push_back("server:no_join");
  add_config_summary(r, s);
  s["proxy_addr"] = proxy_addr;
  s["server_addr"] = server_addr;
  if (failures.empty()) {
    s["status"] = "ok";
  } else {
    s["status"] = "failed";
    std::string joined;
    for (const auto& f : failures) joined += (joined.empty() ? "" : " ") + f;
    s["failure"] = joined;
  }
  return report;
}

/// Runs `r` in its configured mode. Real-socket runs need `out_dir` for the
/// per-process files.
inline MetricsReport run_scenario(const ResolvedScenario& r, const std::filesystem::path& out_dir) {
  if (r.config.mode == Mode::kSimulated) return run_simulated(r);
  return run_realsocket(r, out_dir);
}

}  // namespace lodsync::harness
