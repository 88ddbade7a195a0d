// lodsync-server: authoritative Duck Hunt server for one client.

#include <CLI11.hpp>

#include "lodsync/runtime.hpp"
#include "tool_common.hpp"

int main(int argc, char** argv) {
  using namespace lodsync;
  CLI::App app{"Authoritative game server with level-of-detail update scheduling"};
  std::string bind, roles, groups, scene, metrics;
  double duration_s = 60.0, join_timeout_s = 30.0;
  bool fixed = false;
  std::size_t batch = 1;
  TimeMs ack_timeout = kDefaultAckTimeoutMs;
  std::optional<std::uint64_t> seed;
  app.add_option("--bind", bind, "listen address host:port")->required();
  app.add_option("--roles", roles, "roles file (built-in defaults if omitted)");
  app.add_option("--groups", groups, "groups file (built-in defaults if omitted)");
  app.add_option("--scene", scene, "scene file (built-in defaults if omitted)");
  app.add_option("--metrics", metrics, "metrics CSV output")->required();
  app.add_option("--duration-s", duration_s, "run length after the client joins")->check(CLI::PositiveNumber);
  app.add_option("--join-timeout-s", join_timeout_s, "give up if nobody joins within this time");
  app.add_flag("--fixed", fixed, "pin every entity to the most important group");
  app.add_option("--batch", batch, "entities per STATE_UPDATE datagram, 0 fills the datagram");
  app.add_option("--ack-timeout-ms", ack_timeout, "probe acknowledgement timeout");
  app.add_option("--seed", seed, "override the scene seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return tools::fail("usage", e.what(), tools::kUsage);
  }
  tools::install_stop_handlers();
  try {
    runtime::ServerOptions o;
    o.bind = net::Endpoint::parse(bind);
    if (!roles.empty()) o.roles = parse_roles(read_text_file(roles), roles);
    if (!groups.empty()) o.groups = parse_groups(read_text_file(groups), groups);
    if (!scene.empty()) o.scene = duckhunt::parse_scene(read_text_file(scene), scene);
    if (seed) o.scene.seed = *seed;
    o.engine.adaptive = !fixed;
    o.engine.max_batch_entities = batch;
    o.engine.ack_timeout_ms = ack_timeout;
    o.metrics_path = metrics;
    o.duration_s = duration_s;
    o.join_timeout_s = join_timeout_s;
    o.stop = &tools::g_stop;
    auto r = runtime::run_server(o);
    if (!r.joined) return tools::fail("no_client", "no join request before the timeout", tools::kRuntimeError);
  } catch (...) {
    return tools::report_exception();
  }
  return tools::kOk;
}
