#ifndef UVMSIM_CHECKS_HPP_
#define UVMSIM_CHECKS_HPP_

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "uvmsim/scenario.hpp"

namespace uvmsim::checks {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// Bundled default scenario, the fixture for every model-based suite.
ScenarioConfig default_scenario();

std::vector<CheckResult> spatial_suite(unsigned seed = 7001);
std::vector<CheckResult> jacobian_suite(unsigned seed = 7002);
std::vector<CheckResult> energy_suite();
std::vector<CheckResult> decomposition_suite(unsigned seed = 7003);
std::vector<CheckResult> navfun_suite(unsigned seed = 7004);
std::vector<CheckResult> lqr_suite(unsigned seed = 7005);
std::vector<CheckResult> validation_suite(const std::string& scenario_path);

/// Post-hoc evaluation of one closed-loop run against the hard-bound,
/// clearance, singularity, waypoint and grasp-residual requirements
/// (2% transient overshoot allowance, zero steady overshoot).
std::vector<CheckResult> evaluate_run(const RunSummary& summary);

/// Named suites in the order `check` runs them.
std::vector<std::pair<std::string, std::function<std::vector<CheckResult>()>>>
default_suites(const std::string& scenario_path);

bool all_pass(const std::vector<CheckResult>& results);

/// One aligned "name  measured  threshold  PASS/FAIL" line.
std::string format_result(const CheckResult& result);

}  // namespace uvmsim::checks

#endif  // UVMSIM_CHECKS_HPP_
