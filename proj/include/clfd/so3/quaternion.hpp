#pragma once

#include "clfd/node/trajectory.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace clfd::so3 {

/// Raised when an input lies outside the restricted domain of Log or Exp.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Unit quaternion in scalar-first convention q = [v, u].
class UnitQuaternion {
 public:
  /// Identity rotation.
  UnitQuaternion() : v_(1.0), u_(Eigen::Vector3d::Zero()) {}
  /// Normalizes its input; throws std::invalid_argument on a zero quaternion.
  UnitQuaternion(double v, const Eigen::Vector3d& u);
  static UnitQuaternion from_vector(const Eigen::Vector4d& q);

  double v() const { return v_; }
  const Eigen::Vector3d& u() const { return u_; }
  Eigen::Vector4d coeffs() const;

  UnitQuaternion conjugate() const;
  double dot(const UnitQuaternion& other) const;
  UnitQuaternion operator-() const;

  /// Hamilton product.
  friend UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b);

 private:
  struct Raw {};
  UnitQuaternion(Raw, double v, const Eigen::Vector3d& u) : v_(v), u_(u) {}

  double v_;
  Eigen::Vector3d u_;
};

/// Rotation vector in the tangent space, |r| < pi.
using RotationVector = Eigen::Vector3d;

/// arccos(v) * u / |u|, or zero when |u| is (numerically) zero. Throws
/// DomainError for q within 1e-9 of [-1, 0, 0, 0].
RotationVector log_map(const UnitQuaternion& q);

/// [cos|r|, sin|r| r / |r|], or identity for r = 0. Throws DomainError when
/// |r| >= pi.
UnitQuaternion exp_map(const RotationVector& r);

struct QuaternionTrajectory {
  std::vector<UnitQuaternion> quats;
  Eigen::VectorXd timestamps;

  std::size_t length() const { return quats.size(); }
  void validate() const;
};

/// Flips signs so that consecutive quaternions have non-negative dot product.
void canonicalize_hemisphere(std::vector<UnitQuaternion>& quats);
/// Same, on raw T x 4 scalar-first rows.
void canonicalize_hemisphere(Eigen::MatrixXd& rows);

QuaternionTrajectory from_rows(const Eigen::MatrixXd& rows, const Eigen::VectorXd& timestamps);
Eigen::MatrixXd to_rows(const QuaternionTrajectory& qt);

/// r_t = Log(conj(q_t) * q_{T-1}); the last point is exactly the origin.
Trajectory to_tangent_trajectory(const QuaternionTrajectory& qt);

/// Exact inverse of to_tangent_trajectory: q_t = goal * conj(Exp(r_t)).
QuaternionTrajectory from_tangent_trajectory(const Trajectory& rt, const UnitQuaternion& goal);

/// e_q = 2 Log(q1 * conj(q2)).
Eigen::Vector3d quat_error(const UnitQuaternion& q1, const UnitQuaternion& q2);

/// E_q = 1/(3T) sum_t ||e_q(q_t, q_hat_t)||_1.
double quat_traj_error(const QuaternionTrajectory& ground_truth,
                       const QuaternionTrajectory& prediction);

}  // namespace clfd::so3
