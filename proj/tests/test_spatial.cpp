#include <doctest.h>

#include <random>

#include "uvmsim/spatial.hpp"

using namespace uvmsim;

TEST_CASE("euler_to_rotation identity and quarter turn") {
  CHECK(euler_to_rotation(Eigen::Vector3d::Zero())
            .isApprox(Eigen::Matrix3d::Identity(), 1e-15));
  const Eigen::Matrix3d r = euler_to_rotation({0.0, 0.0, M_PI / 2.0});
  CHECK((r * Eigen::Vector3d::UnitX() - Eigen::Vector3d::UnitY()).norm() < 1e-12);
}

TEST_CASE("euler_to_rotation orthonormality oracle") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Vector3d euler(angle(rng), angle(rng), angle(rng));
    const Eigen::Matrix3d r = euler_to_rotation(euler);
    CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("rotation_to_euler round trip") {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  std::uniform_real_distribution<double> pitch(-1.4, 1.4);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Vector3d euler(angle(rng), pitch(rng), angle(rng));
    const Eigen::Vector3d back = rotation_to_euler(euler_to_rotation(euler));
    CHECK((euler_to_rotation(back) - euler_to_rotation(euler)).norm() < 1e-10);
  }
}

TEST_CASE("euler_rate_jacobian identity at zero and inverse oracle") {
  CHECK(euler_rate_jacobian(Eigen::Vector3d::Zero())
            .isApprox(Matrix6d::Identity(), 1e-15));
  CHECK(euler_rate_jacobian(Eigen::Vector3d::Zero()).topLeftCorner<3, 3>()
            .isApprox(Eigen::Matrix3d::Identity(), 1e-15));

  std::mt19937 rng(13);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  std::uniform_real_distribution<double> pitch(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Vector3d euler(angle(rng), pitch(rng), angle(rng));
    const Matrix6d j = euler_rate_jacobian(euler);
    const Matrix6d j_inv = euler_rate_jacobian_inverse(euler);
    CHECK((j * j_inv - Matrix6d::Identity()).norm() < 1e-10);
  }
}

TEST_CASE("euler_rate_jacobian condition diverges toward the singularity") {
  auto condition = [](double pitch_value) {
    const Eigen::Matrix3d t = euler_rate_matrix({0.2, pitch_value, -0.4});
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(t);
    return svd.singularValues()(0) / svd.singularValues()(2);
  };
  CHECK(condition(1.45) > 3.0 * condition(1.0));
  CHECK(condition(1.5699) > 30.0 * condition(1.45));
}

TEST_CASE("euler_rate_jacobian refuses the singular domain") {
  CHECK_THROWS_AS(euler_rate_jacobian({0.0, M_PI / 2.0 - 0.01, 0.0}),
                  RepresentationSingularity);
  CHECK_THROWS_AS(euler_rate_jacobian_inverse({0.0, -M_PI / 2.0, 0.0}),
                  RepresentationSingularity);
}

TEST_CASE("skew matches the cross product") {
  CHECK((skew({1, 0, 0}) * Eigen::Vector3d(0, 1, 0) - Eigen::Vector3d(0, 0, 1)).norm() ==
        0.0);
  CHECK(skew(Eigen::Vector3d::Zero()).norm() == 0.0);

  std::mt19937 rng(14);
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Vector3d l(coord(rng), coord(rng), coord(rng));
    const Eigen::Vector3d x(coord(rng), coord(rng), coord(rng));
    CHECK((skew(l) * x - l.cross(x)).norm() < 1e-14);
    CHECK((skew(l) + skew(l).transpose()).norm() == 0.0);
  }
}

TEST_CASE("pose_error wraps and vanishes on equal poses") {
  Pose6 a{{1.0, 2.0, 3.0}, {0.5, -0.2, 3.1}};
  CHECK(pose_error(a, a).norm() == 0.0);

  Pose6 b = a;
  b.euler.z() = -3.1;
  const double yaw_error = pose_error(a, b)(5);
  CHECK(yaw_error == doctest::Approx(6.2 - 2.0 * M_PI).epsilon(1e-10));
  CHECK(std::abs(yaw_error) < 0.1);  // not the unwrapped 6.2
}

TEST_CASE("pose_error antisymmetric away from the wrap boundary") {
  std::mt19937 rng(15);
  std::uniform_real_distribution<double> coord(-4.0, 4.0);
  std::uniform_real_distribution<double> angle(-2.9, 2.9);
  for (int trial = 0; trial < 200; ++trial) {
    Pose6 a{{coord(rng), coord(rng), coord(rng)}, {angle(rng), angle(rng), angle(rng)}};
    Pose6 b{{coord(rng), coord(rng), coord(rng)}, {angle(rng), angle(rng), angle(rng)}};
    const Vector6d forward = pose_error(a, b);
    CHECK(forward.tail<3>().cwiseAbs().maxCoeff() <= M_PI);
    if ((wrap_angles(a.euler - b.euler).cwiseAbs().array() < M_PI - 1e-6).all()) {
      CHECK((forward + pose_error(b, a)).norm() < 1e-12);
    }
  }
}
