// lodsync-sim: runs scenarios and compares their reports.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "lodsync/scenario.hpp"
#include "tool_common.hpp"

int main(int argc, char** argv) {
  using namespace lodsync;
  CLI::App app{"Scenario runner and report comparison"};
  app.require_subcommand(1);
  std::string config, out_dir, a, b, out_file;
  auto* run = app.add_subcommand("run", "run one scenario and write its report directory");
  run->add_option("--config", config, "scenario file")->required();
  run->add_option("--out", out_dir, "report directory")->required();
  auto* cmp = app.add_subcommand("compare", "compare two report directories segment by segment");
  cmp->add_option("--a", a, "first report directory")->required();
  cmp->add_option("--b", b, "second report directory")->required();
  cmp->add_option("--out", out_file, "comparison CSV output")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return tools::fail("usage", e.what(), tools::kUsage);
  }
  try {
    if (*run) {
      auto resolved = harness::resolve(harness::load_scenario(config));
      auto report = harness::run_scenario(resolved, out_dir);
      harness::write_report(report, out_dir);
      if (!report.ok()) {
        return tools::fail("scenario_failed", report.summary["failure"], tools::kRuntimeError);
      }
      std::cout << "ok," << out_dir << '\n';
    } else {
      auto summary = harness::compare(harness::read_report(a), harness::read_report(b));
      std::ofstream out(out_file, std::ios::binary);
      harness::write_comparison(out, summary);
      if (!out) return tools::fail("io", "cannot write " + out_file, tools::kRuntimeError);
      std::cout << "ok," << out_file << '\n';
    }
  } catch (const harness::CompareError& e) {
    return tools::fail("mismatch", e.what(), tools::kConfigError);
  } catch (...) {
    return tools::report_exception();
  }
  return tools::kOk;
}
