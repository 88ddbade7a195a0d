// lodsync-client: replica client driven by the scripted bot.

#include <CLI11.hpp>

#include "lodsync/runtime.hpp"
#include "tool_common.hpp"

int main(int argc, char** argv) {
  using namespace lodsync;
  CLI::App app{"Game client keeping a replica of the server scene"};
  std::string server, bot = "chase", metrics, scene;
  double duration_s = 60.0;
  app.add_option("--server", server, "server (or proxy) address host:port")->required();
  app.add_option("--bot", bot, "input policy")->check(CLI::IsMember({"chase", "idle"}));
  app.add_option("--metrics", metrics, "metrics CSV output")->required();
  app.add_option("--scene", scene, "scene file, used for the bot's speed and hit radius");
  app.add_option("--duration-s", duration_s, "run length")->check(CLI::PositiveNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return tools::fail("usage", e.what(), tools::kUsage);
  }
  tools::install_stop_handlers();
  try {
    runtime::ClientOptions o;
    o.server = net::Endpoint::parse(server);
    o.bot = bot == "chase";
    duckhunt::SceneConfig sc;
    if (!scene.empty()) sc = duckhunt::parse_scene(read_text_file(scene), scene);
    o.bot_config.hit_radius = sc.hit_radius;
    o.bot_config.speed = sc.speed(duckhunt::Kind::kReticle);
    o.metrics_path = metrics;
    o.duration_s = duration_s;
    o.stop = &tools::g_stop;
    auto r = runtime::run_client(o);
    if (!r.initialized) return tools::fail("no_server", "never received the initial scene", tools::kRuntimeError);
  } catch (...) {
    return tools::report_exception();
  }
  return tools::kOk;
}
