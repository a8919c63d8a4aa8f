#pragma once

#include <Eigen/Dense>

#include <vector>

namespace clfd::metrics {

/// Dynamic time warping with Euclidean point cost, no band, summed cost.
/// Inputs are T x d point matrices. Throws std::invalid_argument on empty
/// inputs or a dimension mismatch.
double dtw(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Discrete Frechet distance with Euclidean point cost.
double discrete_frechet(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Area between two equal-length 2-D or 3-D curves. Each quadrilateral
/// (a_t, a_t+1, b_t+1, b_t) is triangulated along both diagonals and the two
/// triangulated areas are averaged, so the result is symmetric in a and b.
double swept_area(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Area of the triangle (p, q, r) in 2-D or 3-D.
double triangle_area(const Eigen::VectorXd& p, const Eigen::VectorXd& q, const Eigen::VectorXd& r);

struct DemoErrors {
  double dtw = 0.0;
  double frechet = 0.0;
  double swept_area = 0.0;
};

struct ErrorReport {
  double dtw = 0.0;
  double frechet = 0.0;
  double swept_area = 0.0;
  std::vector<DemoErrors> per_demo;
};

DemoErrors trajectory_errors(const Eigen::MatrixXd& ground_truth, const Eigen::MatrixXd& prediction);

/// Per-demo errors and their means.
ErrorReport error_report(const std::vector<Eigen::MatrixXd>& ground_truth,
                         const std::vector<Eigen::MatrixXd>& predictions);

}  // namespace clfd::metrics
