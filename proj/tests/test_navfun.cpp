#include <doctest.h>

#include <cstring>
#include <random>

#include "uvmsim/checks.hpp"
#include "uvmsim/navfun.hpp"

using namespace uvmsim;

namespace {

struct Fixture {
  SphereWorld world;
  NavFunConfig cfg;
  Eigen::Vector3d goal;
  Fixture() {
    const ScenarioConfig sc = checks::default_scenario();
    world = sc.world;
    cfg = sc.navigation;
    goal = sc.waypoints[1].position;
  }
};

}  // namespace

TEST_CASE("potential is zero at the goal and approaches one at obstacles") {
  Fixture f;
  CHECK(nf_value(f.goal, f.goal, f.world, f.cfg) == 0.0);

  const Eigen::Vector3d toward =
      (f.goal - f.world.obstacles[1].center).normalized();
  auto at_distance = [&](double eps) {
    const Eigen::Vector3d x =
        f.world.obstacles[1].center +
        (f.world.obstacles[1].radius + f.world.team_radius() + eps) * toward;
    return nf_value(x, f.goal, f.world, f.cfg);
  };
  // Monotone approach to 1 as beta -> 0.
  CHECK(at_distance(1e-3) < at_distance(1e-6));
  CHECK(at_distance(1e-6) < at_distance(1e-12));
  CHECK(at_distance(1e-12) > 0.999);
  CHECK(at_distance(1e-12) < 1.0);
}

TEST_CASE("potential matches an independent formula evaluation") {
  SphereWorld world;
  world.boundary_center.setZero();
  world.boundary_radius = 10.0;
  world.obstacles = {{{3.0, 0.0, 0.0}, 0.5}};
  world.agent_radius = 0.6;
  world.object_radius = 0.4;
  NavFunConfig cfg;
  cfg.k = 3.0;
  const Eigen::Vector3d goal(6.0, 1.0, 0.0);
  const Eigen::Vector3d x(1.0, -2.0, 0.5);

  // Test-local reimplementation of the spherical-world potential.
  const double r_team = 1.0;
  const double gamma = (x - goal).squaredNorm();
  const double beta0 = std::pow(world.boundary_radius - r_team, 2) - x.squaredNorm();
  const double beta1 =
      (x - world.obstacles[0].center).squaredNorm() - std::pow(0.5 + r_team, 2);
  const double expected =
      gamma / std::pow(std::pow(gamma, cfg.k) + beta0 * beta1, 1.0 / cfg.k);
  CHECK(nf_value(x, goal, world, cfg) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("analytic gradient matches finite differences") {
  Fixture f;
  std::mt19937 rng(61);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double delta = 1e-6;
  int tested = 0;
  while (tested < 40) {
    const Eigen::Vector3d x =
        f.world.boundary_center +
        f.world.boundary_radius * Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
    if (clearance(x, f.world) <= 0.05) continue;
    ++tested;
    const Eigen::Vector3d analytic = nf_gradient(x, f.goal, f.world, f.cfg);
    Eigen::Vector3d fd;
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d xp = x, xm = x;
      xp(k) += delta;
      xm(k) -= delta;
      fd(k) = (nf_value(xp, f.goal, f.world, f.cfg) -
               nf_value(xm, f.goal, f.world, f.cfg)) /
              (2.0 * delta);
    }
    CHECK((analytic - fd).norm() <= 1e-6 * std::max(1e-9, analytic.norm()) + 1e-14);
  }
  CHECK(nf_gradient(f.goal, f.goal, f.world, f.cfg).norm() == 0.0);
}

TEST_CASE("gradient climbs toward inflated surfaces") {
  Fixture f;
  // Sample points just off the inflated surface of each obstacle, with the
  // goal elsewhere: the potential must increase toward the obstacle.
  for (const auto& obs : f.world.obstacles) {
    const Eigen::Vector3d outward =
        (f.goal - obs.center).normalized();  // goal side
    const Eigen::Vector3d probe =
        obs.center + (obs.radius + f.world.team_radius() + 0.01) * outward;
    const Eigen::Vector3d grad = nf_gradient(probe, f.goal, f.world, f.cfg);
    CHECK(grad.dot(outward) < 0.0);
  }
}

TEST_CASE("out-of-free-space queries are refused") {
  Fixture f;
  CHECK_THROWS_AS(nf_value(f.world.obstacles[0].center, f.goal, f.world, f.cfg),
                  OutOfFreeSpace);
  CHECK_THROWS_AS(nf_gradient(f.world.obstacles[0].center, f.goal, f.world, f.cfg),
                  OutOfFreeSpace);
}

TEST_CASE("desired velocity") {
  Fixture f;
  Pose6 goal_pose;
  goal_pose.position = f.goal;

  SUBCASE("zero at the goal pose") {
    ObjectState at_goal;
    at_goal.pose = goal_pose;
    const Twist v = desired_velocity(at_goal, goal_pose, f.world, f.cfg);
    CHECK(v.linear.norm() == 0.0);
    CHECK(v.angular.norm() == 0.0);
  }

  SUBCASE("points toward the goal in a clean workspace") {
    SphereWorld open;
    open.boundary_center.setZero();
    open.boundary_radius = 50.0;
    open.agent_radius = 0.8;
    open.object_radius = 0.85;
    ObjectState state;
    state.pose.position = {3.0, 2.0, 0.0};
    Pose6 goal;
    goal.position = {1.0, 2.0, 0.0};
    const Twist v = desired_velocity(state, goal, open, f.cfg);
    const Eigen::Vector3d to_goal =
        (goal.position - state.pose.position).normalized();
    CHECK(v.linear.normalized().dot(to_goal) > 0.999);
  }

  SUBCASE("respects the speed clamp everywhere") {
    std::mt19937 rng(62);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    int tested = 0;
    while (tested < 100) {
      ObjectState state;
      state.pose.position =
          f.world.boundary_center +
          f.world.boundary_radius * Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
      if (clearance(state.pose.position, f.world) <= 0.01) continue;
      ++tested;
      const Twist v = desired_velocity(state, goal_pose, f.world, f.cfg);
      CHECK(v.linear.norm() <= f.cfg.max_ref_speed + 1e-12);
      CHECK(v.angular.norm() <= f.cfg.max_ref_angular_rate + 1e-12);
    }
  }
}

TEST_CASE("reference propagation") {
  Fixture f;
  Pose6 goal_pose;
  goal_pose.position = f.goal;

  ObjectState state;
  state.pose.position = {0.0, 0.0, 0.75};
  state.pose.euler = {0.02, -0.03, 0.1};

  SUBCASE("grid has horizon+1 samples") {
    const auto ref = propagate_reference(state, goal_pose, f.world, f.cfg, 5, 0.12);
    CHECK(ref.size() == 6);
    CHECK((ref.front().pose.position - state.pose.position).norm() == 0.0);
  }

  SUBCASE("constant at the goal") {
    ObjectState at_goal;
    at_goal.pose = goal_pose;
    const auto ref = propagate_reference(at_goal, goal_pose, f.world, f.cfg, 5, 0.12);
    for (const auto& point : ref) {
      CHECK((point.pose.position - goal_pose.position).norm() < 1e-12);
      CHECK(point.twist.linear.norm() < 1e-12);
    }
  }

  SUBCASE("bitwise deterministic") {
    const auto a = propagate_reference(state, goal_pose, f.world, f.cfg, 5, 0.12);
    const auto b = propagate_reference(state, goal_pose, f.world, f.cfg, 5, 0.12);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      const Vector6d pa = a[i].pose.vector(), pb = b[i].pose.vector();
      const Vector6d ta = a[i].twist.vector(), tb = b[i].twist.vector();
      CHECK(std::memcmp(pa.data(), pb.data(), sizeof(double) * 6) == 0);
      CHECK(std::memcmp(ta.data(), tb.data(), sizeof(double) * 6) == 0);
    }
  }
}
