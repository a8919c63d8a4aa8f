#include "clfd/so3/quaternion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace clfd::so3 {
namespace {

constexpr double kAntipodalTolerance = 1e-9;

}  // namespace

UnitQuaternion::UnitQuaternion(double v, const Eigen::Vector3d& u) {
  const double n = std::sqrt(v * v + u.squaredNorm());
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("UnitQuaternion: cannot normalize a zero or non-finite quaternion");
  }
  v_ = v / n;
  u_ = u / n;
}

UnitQuaternion UnitQuaternion::from_vector(const Eigen::Vector4d& q) {
  return UnitQuaternion(q[0], q.tail<3>());
}

Eigen::Vector4d UnitQuaternion::coeffs() const {
  Eigen::Vector4d c;
  c << v_, u_;
  return c;
}

UnitQuaternion UnitQuaternion::conjugate() const {
  return UnitQuaternion(Raw{}, v_, -u_);
}

double UnitQuaternion::dot(const UnitQuaternion& other) const {
  return v_ * other.v_ + u_.dot(other.u_);
}

UnitQuaternion UnitQuaternion::operator-() const {
  return UnitQuaternion(Raw{}, -v_, -u_);
}

UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b) {
  const double v = a.v_ * b.v_ - a.u_.dot(b.u_);
  const Eigen::Vector3d u = a.v_ * b.u_ + b.v_ * a.u_ + a.u_.cross(b.u_);
  // Renormalize to stop drift accumulating over long products.
  return UnitQuaternion(v, u);
}

RotationVector log_map(const UnitQuaternion& q) {
  if (std::abs(q.v() + 1.0) < kAntipodalTolerance && q.u().norm() < kAntipodalTolerance) {
    throw DomainError("log_map: quaternion is -identity, outside the restricted domain");
  }
  const double un = q.u().norm();
  if (un == 0.0) {
    return RotationVector::Zero();
  }
  // atan2 keeps full precision near the identity, where acos(v) does not.
  return std::atan2(un, q.v()) * q.u() / un;
}

UnitQuaternion exp_map(const RotationVector& r) {
  const double n = r.norm();
  if (!(n < std::numbers::pi)) {
    throw DomainError("exp_map: rotation vector norm " + std::to_string(n) + " is not below pi");
  }
  if (n == 0.0) {
    return UnitQuaternion();
  }
  return UnitQuaternion(std::cos(n), std::sin(n) * r / n);
}

void QuaternionTrajectory::validate() const {
  if (quats.size() < 2) {
    throw std::invalid_argument("QuaternionTrajectory: needs at least 2 samples");
  }
  if (static_cast<std::size_t>(timestamps.size()) != quats.size()) {
    throw std::invalid_argument("QuaternionTrajectory: timestamp count mismatch");
  }
  for (Eigen::Index i = 1; i < timestamps.size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw std::invalid_argument("QuaternionTrajectory: timestamps not strictly increasing");
    }
  }
}

void canonicalize_hemisphere(std::vector<UnitQuaternion>& quats) {
  for (std::size_t t = 1; t < quats.size(); ++t) {
    if (quats[t].dot(quats[t - 1]) < 0.0) {
      quats[t] = -quats[t];
    }
  }
}

void canonicalize_hemisphere(Eigen::MatrixXd& rows) {
  for (Eigen::Index t = 1; t < rows.rows(); ++t) {
    if (rows.row(t).dot(rows.row(t - 1)) < 0.0) {
      rows.row(t) = -rows.row(t);
    }
  }
}

QuaternionTrajectory from_rows(const Eigen::MatrixXd& rows, const Eigen::VectorXd& timestamps) {
  if (rows.cols() != 4) {
    throw std::invalid_argument("from_rows: quaternion rows must have 4 columns");
  }
  QuaternionTrajectory qt;
  qt.timestamps = timestamps;
  qt.quats.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index t = 0; t < rows.rows(); ++t) {
    qt.quats.push_back(UnitQuaternion::from_vector(rows.row(t).transpose()));
  }
  return qt;
}

Eigen::MatrixXd to_rows(const QuaternionTrajectory& qt) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(qt.quats.size()), 4);
  for (std::size_t t = 0; t < qt.quats.size(); ++t) {
    rows.row(static_cast<Eigen::Index>(t)) = qt.quats[t].coeffs().transpose();
  }
  return rows;
}

Trajectory to_tangent_trajectory(const QuaternionTrajectory& qt) {
  qt.validate();
  const UnitQuaternion& goal = qt.quats.back();
  Trajectory rt;
  rt.timestamps = qt.timestamps;
  rt.points.resize(static_cast<Eigen::Index>(qt.quats.size()), 3);
  for (std::size_t t = 0; t + 1 < qt.quats.size(); ++t) {
    rt.points.row(static_cast<Eigen::Index>(t)) =
        log_map(qt.quats[t].conjugate() * goal).transpose();
  }
  rt.points.row(rt.points.rows() - 1).setZero();
  return rt;
}

QuaternionTrajectory from_tangent_trajectory(const Trajectory& rt, const UnitQuaternion& goal) {
  if (rt.dim() != 3) {
    throw std::invalid_argument("from_tangent_trajectory: expects 3-D rotation vectors");
  }
  QuaternionTrajectory qt;
  qt.timestamps = rt.timestamps;
  qt.quats.reserve(rt.length());
  for (Eigen::Index t = 0; t < rt.points.rows(); ++t) {
    qt.quats.push_back(goal * exp_map(rt.points.row(t).transpose()).conjugate());
  }
  return qt;
}

Eigen::Vector3d quat_error(const UnitQuaternion& q1, const UnitQuaternion& q2) {
  return 2.0 * log_map(q1 * q2.conjugate());
}

double quat_traj_error(const QuaternionTrajectory& ground_truth,
                       const QuaternionTrajectory& prediction) {
  if (ground_truth.length() != prediction.length() || ground_truth.length() == 0) {
    throw std::invalid_argument("quat_traj_error: trajectories must have equal, non-zero length");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < ground_truth.length(); ++t) {
    total += quat_error(ground_truth.quats[t], prediction.quats[t]).lpNorm<1>();
  }
  return total / (3.0 * static_cast<double>(ground_truth.length()));
}

}  // namespace clfd::so3
