#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uvmsim/checks.hpp"
#include "uvmsim/scenario.hpp"
#include "uvmsim/sim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitAcceptance = 3;

int run_command(const std::string& scenario_path, bool strict, bool dry_run,
                bool plot_data, int jobs, const std::string& out_dir) {
  uvmsim::ScenarioConfig scenario;
  try {
    scenario = uvmsim::load_scenario(scenario_path);
  } catch (const uvmsim::ValidationError& err) {
    std::cerr << "validation error: " << err.what() << "\n";
    return kExitValidation;
  }
  std::cout << "scenario ok: " << scenario_path << " (" << scenario.agents()
            << " agents, " << scenario.waypoints.size() << " waypoints)\n";
  if (dry_run) return kExitOk;

  uvmsim::RunResult result;
  try {
    uvmsim::RunOptions options;
    options.jobs = jobs;
    result = uvmsim::run_closed_loop(scenario, options);
  } catch (const uvmsim::Error& err) {
    std::cerr << "runtime error: " << err.what() << "\n";
    return kExitRuntime;
  }

  std::filesystem::create_directories(out_dir);
  uvmsim::write_csv(result.log, out_dir + "/trajectory.csv");
  uvmsim::write_summary(result.summary, out_dir + "/summary.txt");
  if (plot_data) {
    uvmsim::write_plot_data(result.log, out_dir + "/plots");
  }
  std::cout << result.summary.to_text();
  std::cout << "artifacts written to " << out_dir << "\n";

  if (strict) {
    const auto results = uvmsim::checks::evaluate_run(result.summary);
    bool ok = true;
    for (const auto& r : results) {
      std::cout << uvmsim::checks::format_result(r) << "\n";
      ok = ok && r.pass;
    }
    if (!ok || !result.summary.isolation_ok) return kExitAcceptance;
  }
  return kExitOk;
}

int check_command(const std::vector<std::string>& suites, const std::string& scenario_path) {
  auto available = uvmsim::checks::default_suites(scenario_path);
  bool ok = true;
  bool ran_any = false;
  for (const auto& [name, suite] : available) {
    if (!suites.empty() &&
        std::find(suites.begin(), suites.end(), name) == suites.end()) {
      continue;
    }
    ran_any = true;
    std::cout << "suite " << name << ":\n";
    try {
      for (const auto& result : suite()) {
        std::cout << "  " << uvmsim::checks::format_result(result) << "\n";
        ok = ok && result.pass;
      }
    } catch (const uvmsim::Error& err) {
      std::cout << "  [FAIL] " << name << " aborted: " << err.what() << "\n";
      ok = false;
    }
  }
  if (!ran_any) {
    std::cerr << "no matching suite; known suites:";
    for (const auto& [name, suite] : available) std::cerr << " " << name;
    std::cerr << "\n";
    return kExitValidation;
  }
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative underwater transport simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  bool strict = false, dry_run = false, plot_data = false;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Run a closed-loop scenario");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_flag("--strict", strict, "Nonzero exit on any run-property violation");
  run->add_flag("--dry-run", dry_run, "Validate the scenario without simulating");
  run->add_flag("--plot-data", plot_data, "Write downsampled plot-data files");
  run->add_option("--jobs", jobs, "Concurrent controller solves")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory");

  std::vector<std::string> suites;
  std::string check_scenario = uvmsim::bundled_scenario_dir() + "/default.json";
  auto* check = app.add_subcommand("check", "Run the property suites");
  check->add_option("--suite", suites, "Only the named suites");
  check->add_option("--scenario", check_scenario, "Scenario for the validation suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return run_command(scenario_path, strict, dry_run, plot_data, jobs, out_dir);
    }
    return check_command(suites, check_scenario);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntime;
  }
}
