// lodsync-proxy: capacity-thresholded UDP relay between one client and the
// server.

#include <CLI11.hpp>

#include "lodsync/runtime.hpp"
#include "tool_common.hpp"

int main(int argc, char** argv) {
  using namespace lodsync;
  CLI::App app{"UDP relay dropping packets beyond a per-second capacity schedule"};
  std::string listen, server, schedule, stats;
  TimeMs delay = 0, jitter = 0;
  double drop_s2c = 0.0, drop_c2s = 0.0, duration_s = 0.0;
  std::uint32_t probe_drops = 0;
  std::uint64_t seed = 1;
  app.add_option("--listen", listen, "client-facing address host:port")->required();
  app.add_option("--server", server, "server address host:port")->required();
  app.add_option("--schedule", schedule, "capacity schedule (unlimited if omitted)");
  app.add_option("--stats", stats, "per-window statistics CSV output")->required();
  app.add_option("--delay-ms", delay, "fixed extra delay")->check(CLI::NonNegativeNumber);
  app.add_option("--jitter-ms", jitter, "uniform extra delay in [0, N]")->check(CLI::NonNegativeNumber);
  app.add_option("--drop-prob-s2c", drop_s2c, "random loss, server to client")->check(CLI::Range(0.0, 1.0));
  app.add_option("--drop-prob-c2s", drop_c2s, "random loss, client to server")->check(CLI::Range(0.0, 1.0));
  app.add_option("--probe-drop-count", probe_drops, "drop probes with index below N in every round")
      ->check(CLI::Range(0, 100));
  app.add_option("--seed", seed, "random loss seed");
  app.add_option("--duration-s", duration_s, "stop after this long (0 runs until signalled)")
      ->check(CLI::NonNegativeNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return tools::fail("usage", e.what(), tools::kUsage);
  }
  tools::install_stop_handlers();
  try {
    runtime::ProxyOptions o;
    o.listen = net::Endpoint::parse(listen);
    o.server = net::Endpoint::parse(server);
    if (!schedule.empty()) o.schedule = proxy::load_schedule(schedule);
    o.impairment.drop_probability_s2c = drop_s2c;
    o.impairment.drop_probability_c2s = drop_c2s;
    o.impairment.probe_drop_count = probe_drops;
    o.impairment.seed = seed;
    o.delay_ms = delay;
    o.jitter_ms = jitter;
    o.stats_path = stats;
    o.duration_s = duration_s;
    o.stop = &tools::g_stop;
    runtime::run_proxy(o);
  } catch (...) {
    return tools::report_exception();
  }
  return tools::kOk;
}
