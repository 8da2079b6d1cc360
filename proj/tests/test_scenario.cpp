#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "uvmsim/checks.hpp"
#include "uvmsim/scenario.hpp"

using namespace uvmsim;

namespace {

nlohmann::json default_json() {
  std::ifstream in(bundled_scenario_dir() + "/default.json");
  REQUIRE(in.good());
  nlohmann::json j;
  in >> j;
  return j;
}

}  // namespace

TEST_CASE("bundled default scenario loads and validates") {
  const ScenarioConfig sc = checks::default_scenario();
  CHECK(sc.agents() == 2);
  CHECK(sc.waypoints.size() == 3);
  CHECK(sc.nmpc.horizon_steps() == 5);
  CHECK(sc.nmpc.sample_period == 0.12);
  CHECK(sc.load_sharing.coefficients.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sc.world.obstacles.size() == 3);
  CHECK(sc.uvms.dof() == 10);
}

TEST_CASE("load sharing must sum to one") {
  nlohmann::json j = default_json();
  j["load_sharing"] = {0.6, 0.5};
  try {
    parse_scenario(j.dump());
    FAIL("expected rejection");
  } catch (const ValidationError& err) {
    CHECK(std::string(err.what()).find("sum to 1") != std::string::npos);
    CHECK(err.field.find("load_sharing") != std::string::npos);
  }
}

TEST_CASE("unknown fields are hard errors") {
  nlohmann::json j = default_json();
  j["mystery_knob"] = 42;
  try {
    parse_scenario(j.dump());
    FAIL("expected rejection");
  } catch (const ValidationError& err) {
    CHECK(std::string(err.what()).find("mystery_knob") != std::string::npos);
    CHECK(std::string(err.what()).find("unknown field") != std::string::npos);
  }

  nlohmann::json nested = default_json();
  nested["nmpc"]["typo_weight"] = 1.0;
  CHECK_THROWS_AS(parse_scenario(nested.dump()), ValidationError);
}

TEST_CASE("missing required fields are reported with their path") {
  nlohmann::json j = default_json();
  j["nmpc"].erase("sample_period");
  try {
    parse_scenario(j.dump());
    FAIL("expected rejection");
  } catch (const ValidationError& err) {
    CHECK(std::string(err.what()).find("nmpc.sample_period") != std::string::npos);
  }
}

TEST_CASE("non-positive-definite weights are rejected by name") {
  nlohmann::json j = default_json();
  j["nmpc"]["pose_weight"] = {-1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  try {
    parse_scenario(j.dump());
    FAIL("expected rejection");
  } catch (const ValidationError& err) {
    CHECK(err.field.find("pose_weight") != std::string::npos);
  }
}

TEST_CASE("waypoints must sit in free space") {
  nlohmann::json j = default_json();
  j["navigation"]["waypoints"][0] = {4.0, -4.5, 0.75, 0.0, 0.0, 0.0};  // obstacle center
  CHECK_THROWS_AS(parse_scenario(j.dump()), ValidationError);
}

TEST_CASE("grasp separation against the agent ball is enforced") {
  nlohmann::json j = default_json();
  j["grasp"]["offsets"] = {{0.2, 0.0, 0.0}, {-0.2, 0.0, 0.0}};
  CHECK_THROWS_AS(parse_scenario(j.dump()), ValidationError);
}

TEST_CASE("malformed JSON is a validation error") {
  CHECK_THROWS_AS(parse_scenario("{ not json"), ValidationError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/path.json"), ValidationError);
}

TEST_CASE("initial object twist must be zero") {
  // The schema has no twist field; this guards the invariant directly.
  ScenarioConfig sc = checks::default_scenario();
  sc.initial_object.twist.linear.x() = 0.1;
  CHECK_THROWS_AS(sc.validate(), ValidationError);
}
