#include "clfd/so3/quaternion.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace clfd;
using namespace clfd::so3;

namespace {

constexpr double kPi = std::numbers::pi;

UnitQuaternion random_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return UnitQuaternion(n(rng), Eigen::Vector3d(n(rng), n(rng), n(rng)));
}

Eigen::Vector3d random_tangent(std::mt19937_64& rng, double max_norm) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, max_norm);
  Eigen::Vector3d dir(n(rng), n(rng), n(rng));
  return dir.normalized() * u(rng);
}

// Independent Hamilton product written out component-wise.
Eigen::Vector4d hamilton(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
  return {a(0) * b(0) - a(1) * b(1) - a(2) * b(2) - a(3) * b(3),
          a(0) * b(1) + a(1) * b(0) + a(2) * b(3) - a(3) * b(2),
          a(0) * b(2) - a(1) * b(3) + a(2) * b(0) + a(3) * b(1),
          a(0) * b(3) + a(1) * b(2) - a(2) * b(1) + a(3) * b(0)};
}

double quat_distance(const UnitQuaternion& a, const UnitQuaternion& b) {
  return std::min((a.coeffs() - b.coeffs()).norm(), (a.coeffs() + b.coeffs()).norm());
}

}  // namespace

TEST(So3, ProductMatchesComponentFormula) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_quaternion(rng);
    const auto b = random_quaternion(rng);
    EXPECT_LT(((a * b).coeffs() - hamilton(a.coeffs(), b.coeffs())).norm(), 1e-12);
  }
}

TEST(So3, ExpOfLogRoundtrip) {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    UnitQuaternion q = random_quaternion(rng);
    if (q.v() < -0.999) {
      q = -q;
    }
    worst = std::max(worst, (exp_map(log_map(q)).coeffs() - q.coeffs()).norm());
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(So3, LogOfExpRoundtrip) {
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d r = random_tangent(rng, kPi - 1e-3);
    worst = std::max(worst, (log_map(exp_map(r)) - r).norm());
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(So3, KnownValues) {
  EXPECT_EQ(log_map(UnitQuaternion()), Eigen::Vector3d::Zero());
  const UnitQuaternion q = exp_map(Eigen::Vector3d(0.0, 0.0, kPi / 4));
  EXPECT_NEAR(q.v(), std::cos(kPi / 4), 1e-15);
  EXPECT_NEAR(q.u().z(), std::sin(kPi / 4), 1e-15);
  EXPECT_THROW(log_map(UnitQuaternion(-1.0, Eigen::Vector3d::Zero())), DomainError);
  EXPECT_THROW(exp_map(Eigen::Vector3d(kPi, 0.0, 0.0)), DomainError);
  EXPECT_THROW(UnitQuaternion(0.0, Eigen::Vector3d::Zero()), std::invalid_argument);
}

TEST(So3, AxisAngleExamples) {
  const UnitQuaternion z90(std::cos(kPi / 4), Eigen::Vector3d(0.0, 0.0, std::sin(kPi / 4)));
  EXPECT_LT((log_map(z90) - Eigen::Vector3d(0.0, 0.0, kPi / 4)).norm(), 1e-15);
  const UnitQuaternion z180 = exp_map(Eigen::Vector3d(0.0, 0.0, kPi / 2));
  EXPECT_LT((z180.coeffs() - Eigen::Vector4d(0.0, 0.0, 0.0, 1.0)).norm(), 1e-15);
  EXPECT_NEAR(quat_error(z90, UnitQuaternion()).norm(), kPi / 2, 1e-15);
  EXPECT_EQ(quat_error(z90, z90), Eigen::Vector3d::Zero());
}

TEST(So3, ConstantOffsetErrorIsPiOverSix) {
  // Every step rotated 90 degrees about z: per-step L1 error pi/2, over 3 -> pi/6.
  const UnitQuaternion z90(std::cos(kPi / 4), Eigen::Vector3d(0.0, 0.0, std::sin(kPi / 4)));
  std::mt19937_64 rng(4);
  QuaternionTrajectory a, b;
  a.timestamps = b.timestamps = sample_times(7, std::nullopt);
  for (int t = 0; t < 7; ++t) {
    const UnitQuaternion q = exp_map(random_tangent(rng, 1.0));
    b.quats.push_back(q);
    a.quats.push_back(z90 * q);
  }
  EXPECT_NEAR(quat_traj_error(a, b), kPi / 6, 1e-12);
  EXPECT_EQ(quat_traj_error(a, a), 0.0);
}

TEST(So3, ErrorMagnitudeIsSymmetricAndLeftInvariant) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const UnitQuaternion a = exp_map(random_tangent(rng, 1.4));
    const UnitQuaternion b = exp_map(random_tangent(rng, 1.4));
    const UnitQuaternion g = random_quaternion(rng);
    const double e = quat_error(a, b).norm();
    EXPECT_NEAR(quat_error(b, a).norm(), e, 1e-9);
    EXPECT_NEAR(quat_error(g * a, g * b).norm(), e, 1e-9);
    EXPECT_GE(e, 0.0);
  }
}

TEST(So3, ZRotationSequenceMatchesHandComputation) {
  // q_t = rotation of theta_t about z; conj(q_t) * q_goal is a rotation of
  // (theta_goal - theta_t) about z, so r_t = [0, 0, (theta_goal - theta_t) / 2].
  const double thetas[3] = {0.3, 0.9, 1.2};
  QuaternionTrajectory qt;
  qt.timestamps = sample_times(3, std::nullopt);
  for (double th : thetas) {
    qt.quats.emplace_back(std::cos(th / 2), Eigen::Vector3d(0.0, 0.0, std::sin(th / 2)));
  }
  const Trajectory rt = to_tangent_trajectory(qt);
  for (int t = 0; t < 3; ++t) {
    EXPECT_NEAR(rt.points(t, 2), (thetas[2] - thetas[t]) / 2, 1e-14);
    EXPECT_NEAR(rt.points(t, 0), 0.0, 1e-15);
  }
  const QuaternionTrajectory zero = from_tangent_trajectory(
      Trajectory{Eigen::MatrixXd::Zero(3, 3), qt.timestamps}, qt.quats.back());
  for (const auto& q : zero.quats) {
    EXPECT_LT(quat_distance(q, qt.quats.back()), 1e-15);
  }
}

TEST(So3, TangentTrajectoryRoundtrip) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t T = 30;
    const UnitQuaternion goal = random_quaternion(rng);
    QuaternionTrajectory qt;
    qt.timestamps = sample_times(T, std::nullopt);
    const Eigen::Vector3d r0 = random_tangent(rng, 2.0);
    for (std::size_t t = 0; t < T; ++t) {
      const double u = 1.0 - static_cast<double>(t) / static_cast<double>(T - 1);
      qt.quats.push_back(goal * exp_map(u * r0).conjugate());
    }
    const Trajectory rt = to_tangent_trajectory(qt);
    EXPECT_EQ(rt.points.row(static_cast<Eigen::Index>(T - 1)), Eigen::RowVector3d::Zero());
    const QuaternionTrajectory back = from_tangent_trajectory(rt, qt.quats.back());
    ASSERT_EQ(back.length(), T);
    double worst = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      worst = std::max(worst, quat_error(back.quats[t], qt.quats[t]).norm());
      EXPECT_NEAR(back.quats[t].coeffs().norm(), 1.0, 1e-9);
    }
    EXPECT_LT(worst, 1e-9);
    EXPECT_LT(quat_traj_error(qt, back), 1e-9);
  }
}

TEST(So3, ForwardMapIsLogOfConjugateTimesGoal) {
  std::mt19937_64 rng(6);
  QuaternionTrajectory qt;
  qt.timestamps = sample_times(3, std::nullopt);
  for (int i = 0; i < 3; ++i) {
    qt.quats.push_back(exp_map(random_tangent(rng, 1.0)));
  }
  const Trajectory rt = to_tangent_trajectory(qt);
  const Eigen::Vector3d expected = log_map(qt.quats[0].conjugate() * qt.quats[2]);
  EXPECT_LT((rt.points.row(0).transpose() - expected).norm(), 1e-12);
}

TEST(So3, HemisphereCanonicalization) {
  std::mt19937_64 rng(7);
  Eigen::MatrixXd rows(20, 4);
  UnitQuaternion q = random_quaternion(rng);
  for (int t = 0; t < 20; ++t) {
    q = exp_map(random_tangent(rng, 0.1)) * q;
    rows.row(t) = (t % 3 == 0 ? -q : q).coeffs().transpose();
  }
  Eigen::MatrixXd fixed = rows;
  canonicalize_hemisphere(fixed);
  for (int t = 1; t < 20; ++t) {
    EXPECT_GE(fixed.row(t).dot(fixed.row(t - 1)), 0.0);
    EXPECT_LT(std::min((fixed.row(t) - rows.row(t)).norm(), (fixed.row(t) + rows.row(t)).norm()), 1e-15);
  }
}

TEST(So3, ProductKeepsUnitNorm) {
  std::mt19937_64 rng(8);
  UnitQuaternion q;
  for (int i = 0; i < 10000; ++i) {
    q = q * random_quaternion(rng);
  }
  EXPECT_NEAR(q.coeffs().norm(), 1.0, 1e-12);
  EXPECT_LT(quat_distance(q * q.conjugate(), UnitQuaternion()), 1e-12);
}
