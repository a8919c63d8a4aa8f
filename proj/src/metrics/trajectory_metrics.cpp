#include "clfd/metrics/trajectory_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace clfd::metrics {
namespace {

void check_pair(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* who) {
  if (a.rows() == 0 || b.rows() == 0) {
    throw std::invalid_argument(std::string(who) + ": empty trajectory");
  }
  if (a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(who) + ": dimension mismatch " +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.cols()));
  }
}

Eigen::MatrixXd pairwise_costs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd c(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      c(i, j) = (a.row(i) - b.row(j)).norm();
    }
  }
  return c;
}

}  // namespace

double dtw(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_pair(a, b, "dtw");
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.rows();
  const double inf = std::numeric_limits<double>::infinity();
  // Rolling two-row DP over the (n+1) x (m+1) table.
  Eigen::VectorXd prev = Eigen::VectorXd::Constant(m + 1, inf);
  Eigen::VectorXd cur(m + 1);
  prev[0] = 0.0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    cur[0] = inf;
    for (Eigen::Index j = 1; j <= m; ++j) {
      const double cost = (a.row(i - 1) - b.row(j - 1)).norm();
      cur[j] = cost + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double discrete_frechet(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_pair(a, b, "discrete_frechet");
  const Eigen::MatrixXd c = pairwise_costs(a, b);
  Eigen::MatrixXd ca(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      double reach;
      if (i == 0 && j == 0) {
        reach = 0.0;
      } else if (i == 0) {
        reach = ca(0, j - 1);
      } else if (j == 0) {
        reach = ca(i - 1, 0);
      } else {
        reach = std::min({ca(i - 1, j), ca(i - 1, j - 1), ca(i, j - 1)});
      }
      ca(i, j) = std::max(reach, c(i, j));
    }
  }
  return ca(a.rows() - 1, b.rows() - 1);
}

double triangle_area(const Eigen::VectorXd& p, const Eigen::VectorXd& q, const Eigen::VectorXd& r) {
  const Eigen::VectorXd u = q - p;
  const Eigen::VectorXd v = r - p;
  if (u.size() == 2) {
    return 0.5 * std::abs(u[0] * v[1] - u[1] * v[0]);
  }
  if (u.size() == 3) {
    return 0.5 * Eigen::Vector3d(u).cross(Eigen::Vector3d(v)).norm();
  }
  throw std::invalid_argument("triangle_area: points must be 2-D or 3-D");
}

double swept_area(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("swept_area: length mismatch " + std::to_string(a.rows()) +
                                " vs " + std::to_string(b.rows()));
  }
  if (a.cols() != b.cols() || (a.cols() != 2 && a.cols() != 3)) {
    throw std::invalid_argument("swept_area: both trajectories must be 2-D or 3-D");
  }
  double total = 0.0;
  for (Eigen::Index t = 0; t + 1 < a.rows(); ++t) {
    const Eigen::VectorXd p0 = a.row(t).transpose();
    const Eigen::VectorXd p1 = a.row(t + 1).transpose();
    const Eigen::VectorXd q0 = b.row(t).transpose();
    const Eigen::VectorXd q1 = b.row(t + 1).transpose();
    const double split_a = triangle_area(p0, p1, q1) + triangle_area(p0, q1, q0);
    const double split_b = triangle_area(q0, q1, p1) + triangle_area(q0, p1, p0);
    total += 0.5 * (split_a + split_b);
  }
  return total;
}

DemoErrors trajectory_errors(const Eigen::MatrixXd& ground_truth, const Eigen::MatrixXd& prediction) {
  DemoErrors e;
  e.dtw = dtw(ground_truth, prediction);
  e.frechet = discrete_frechet(ground_truth, prediction);
  e.swept_area = (ground_truth.cols() == 2 || ground_truth.cols() == 3) &&
                         ground_truth.rows() == prediction.rows()
                     ? swept_area(ground_truth, prediction)
                     : 0.0;
  return e;
}

ErrorReport error_report(const std::vector<Eigen::MatrixXd>& ground_truth,
                         const std::vector<Eigen::MatrixXd>& predictions) {
  if (ground_truth.size() != predictions.size() || ground_truth.empty()) {
    throw std::invalid_argument("error_report: need one prediction per demo");
  }
  ErrorReport r;
  for (std::size_t k = 0; k < ground_truth.size(); ++k) {
    r.per_demo.push_back(trajectory_errors(ground_truth[k], predictions[k]));
    r.dtw += r.per_demo.back().dtw;
    r.frechet += r.per_demo.back().frechet;
    r.swept_area += r.per_demo.back().swept_area;
  }
  const double n = static_cast<double>(ground_truth.size());
  r.dtw /= n;
  r.frechet /= n;
  r.swept_area /= n;
  return r;
}

}  // namespace clfd::metrics
