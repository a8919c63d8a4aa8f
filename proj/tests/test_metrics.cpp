#include "clfd/metrics/cl_metrics.hpp"
#include "clfd/metrics/trajectory_metrics.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

using namespace clfd::metrics;

using namespace clfd::oracles;

TEST(TrajectoryMetrics, DtwAndFrechetMatchBruteForce) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(1, 7), dim(1, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index d = dim(rng);
    const Eigen::MatrixXd a = random_curve(rng, len(rng), d);
    const Eigen::MatrixXd b = random_curve(rng, len(rng), d);
    const double dtw_oracle = brute_dtw(a, b);
    const double fr_oracle = brute_frechet(a, b);
    EXPECT_NEAR(dtw(a, b), dtw_oracle, 1e-12) << "trial " << trial;
    EXPECT_NEAR(discrete_frechet(a, b), fr_oracle, 1e-12) << "trial " << trial;
  }
}

TEST(TrajectoryMetrics, DistanceProperties) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd a = random_curve(rng, 9, 2);
    const Eigen::MatrixXd b = random_curve(rng, 6, 2);
    EXPECT_EQ(dtw(a, a), 0.0);
    EXPECT_EQ(discrete_frechet(a, a), 0.0);
    EXPECT_NEAR(dtw(a, b), dtw(b, a), 1e-12);
    EXPECT_NEAR(discrete_frechet(a, b), discrete_frechet(b, a), 1e-12);
    // Frechet is bounded by the largest matched cost, DTW by the sum.
    EXPECT_LE(discrete_frechet(a, b), dtw(a, b) + 1e-12);
  }
  EXPECT_THROW(dtw(Eigen::MatrixXd(0, 2), Eigen::MatrixXd::Zero(2, 2)), std::invalid_argument);
  EXPECT_THROW(dtw(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 2)), std::invalid_argument);
}

TEST(TrajectoryMetrics, DtwSmallExample) {
  Eigen::MatrixXd a(3, 1), b(2, 1);
  a << 0, 1, 2;
  b << 0, 2;
  // Best warping: (0,0) (1,0)|(1,1) (2,1): 0 + 1 + 0.
  EXPECT_DOUBLE_EQ(dtw(a, b), 1.0);
  EXPECT_DOUBLE_EQ(discrete_frechet(a, b), 1.0);
}

TEST(TrajectoryMetrics, SweptAreaMatchesShoelace) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> h(0.1, 2.0), step(0.1, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index T = 2 + trial % 12;
    Eigen::MatrixXd a(T, 2), b(T, 2);
    double x = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      x += step(rng);
      a.row(t) << x, 0.0;
      b.row(t) << x, h(rng);
    }
    // Polygon a forward, b backward.
    Eigen::MatrixXd poly(2 * T, 2);
    poly.topRows(T) = a;
    poly.bottomRows(T) = b.colwise().reverse();
    EXPECT_NEAR(swept_area(a, b), shoelace(poly), 1e-10);
    EXPECT_NEAR(swept_area(b, a), shoelace(poly), 1e-10);
  }
}

TEST(TrajectoryMetrics, SweptAreaSymmetricAndZeroOnSelf) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd a = random_curve(rng, 8, trial % 2 == 0 ? 2 : 3);
    const Eigen::MatrixXd b = random_curve(rng, 8, a.cols());
    EXPECT_NEAR(swept_area(a, b), swept_area(b, a), 1e-12);
    EXPECT_EQ(swept_area(a, a), 0.0);
    EXPECT_GE(swept_area(a, b), 0.0);
  }
  EXPECT_THROW(swept_area(Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(4, 2)), std::invalid_argument);
}

TEST(TrajectoryMetrics, TriangleArea) {
  EXPECT_DOUBLE_EQ(triangle_area(Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 0), Eigen::Vector2d(0, 3)), 3.0);
  EXPECT_DOUBLE_EQ(triangle_area(Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0, 2, 0), Eigen::Vector3d(0, 0, 2)), 2.0);
}

TEST(TrajectoryMetrics, ErrorReportAveragesDemos) {
  Eigen::MatrixXd gt(2, 2), p1(2, 2), p2(2, 2);
  gt << 0, 0, 1, 0;
  p1 = gt;
  p2 << 0, 1, 1, 1;
  const ErrorReport r = error_report({gt, gt}, {p1, p2});
  EXPECT_DOUBLE_EQ(r.dtw, 1.0);
  EXPECT_DOUBLE_EQ(r.frechet, 0.5);
  EXPECT_DOUBLE_EQ(r.swept_area, 0.5);
  ASSERT_EQ(r.per_demo.size(), 2u);
}

// Reference fixtures: SG grows by one equal-sized network
// per task, REP stores every finished task's data.
TEST(ClMetrics, ModelSizeEfficiencyFixtures) {
  auto sg = [](std::uint64_t M) {
    std::vector<std::uint64_t> sizes;
    for (std::uint64_t i = 1; i <= M; ++i) {
      sizes.push_back(i * 2008002);
    }
    return model_size_efficiency(sizes);
  };
  EXPECT_NEAR(std::round(sg(26) * 100) / 100, 0.15, 1e-9);
  EXPECT_NEAR(std::round(sg(7) * 100) / 100, 0.37, 1e-9);
  EXPECT_NEAR(std::round(sg(4) * 100) / 100, 0.52, 1e-9);
  EXPECT_NEAR(sg(26), 0.148, 5e-4);
}

TEST(ClMetrics, SampleStorageEfficiencyFixtures) {
  auto rep = [](std::uint64_t M) {
    std::vector<std::uint64_t> stored;
    for (std::uint64_t i = 1; i <= M; ++i) {
      stored.push_back(i * 7000);
    }
    return sample_storage_efficiency(stored, M * 7000);
  };
  EXPECT_NEAR(std::round(rep(26) * 100) / 100, 0.48, 1e-9);
  EXPECT_NEAR(std::round(rep(7) * 100) / 100, 0.43, 1e-9);
  EXPECT_NEAR(std::round(rep(4) * 100) / 100, 0.38, 1e-9);
  EXPECT_DOUBLE_EQ(sample_storage_efficiency({0, 0, 0}, 30), 1.0);
}

TEST(ClMetrics, AccuracyBwtRemOnHandMatrix) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Constant(3, 3, std::nan(""));
  A(0, 0) = 1.0;
  A(1, 0) = 0.5;
  A(1, 1) = 1.0;
  A(2, 0) = 0.0;
  A(2, 1) = 0.5;
  A(2, 2) = 1.0;
  EXPECT_DOUBLE_EQ(accuracy(A), 4.0 / 6.0);
  // ((0.5-1) + (0-1) + (0.5-1)) / 3
  EXPECT_DOUBLE_EQ(backward_transfer(A), -2.0 / 3.0);
  EXPECT_DOUBLE_EQ(remembering(A), 1.0 / 3.0);
  Eigen::MatrixXd P = A;
  P(2, 0) = 1.0;
  P(1, 0) = 1.0;
  P(2, 1) = 1.0;
  EXPECT_DOUBLE_EQ(remembering(P), 1.0);
}

TEST(ClMetrics, TimeEfficiency) {
  EXPECT_DOUBLE_EQ(time_efficiency({4.0, 4.0, 4.0, 4.0}), 1.0);
  // Constant times are an exact fixed point, whatever the value.
  for (double t : {3.7, 0.1, 12345.678, 1e-7}) {
    for (std::size_t m = 1; m < 40; ++m) {
      EXPECT_EQ(time_efficiency(std::vector<double>(m, t)), 1.0) << t << " x " << m;
    }
  }
  EXPECT_DOUBLE_EQ(time_efficiency({1.0, 2.0, 4.0}), (1.0 / 3.0) * (1.0 + 0.5 + 0.25));
  EXPECT_DOUBLE_EQ(time_efficiency({2.0, 1.0}), 1.0);
  EXPECT_THROW(time_efficiency({1.0, 0.0}), std::invalid_argument);
}

TEST(ClMetrics, FinalModelSize) {
  EXPECT_DOUBLE_EQ(final_model_size(25, 100), 0.75);
  EXPECT_DOUBLE_EQ(final_model_size(100, 100), 0.0);
  EXPECT_THROW(final_model_size(101, 100), std::invalid_argument);
}

TEST(ClMetrics, AccuracyMatrixUsesStrictThreshold) {
  EvaluationMatrix ev(2);
  ev.set(0, 0, {{1.0, 0, 0, {}}, {2.0, 0, 0, {}}});
  ev.set(1, 0, {{3.0, 0, 0, {}}, {0.5, 0, 0, {}}});
  ev.set(1, 1, {{2.0, 0, 0, {}}, {2.0, 0, 0, {}}});
  const Eigen::MatrixXd A = accuracy_matrix(ev, 2.0);
  EXPECT_DOUBLE_EQ(A(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(A(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(A(1, 1), 0.0);
  EXPECT_TRUE(std::isnan(A(0, 1)));
}

TEST(ClMetrics, AccuracyMatrixOnQuaternionError) {
  EvaluationMatrix ev(1);
  ev.set(0, 0, {{100.0, 0, 0, 0.1}, {0.0, 0, 0, 0.3}});
  EXPECT_DOUBLE_EQ(accuracy_matrix(ev, 0.2, AccuracyError::Quaternion)(0, 0), 0.5);
}

TEST(ClMetrics, DtwThresholdIsMultipleOfLargestInterDemoDtw) {
  Eigen::MatrixXd a(2, 1), b(2, 1), c(2, 1);
  a << 0, 0;
  b << 1, 1;
  c << 0, 3;
  EXPECT_DOUBLE_EQ(dtw_threshold({{a, b}, {a, c}}, 3.0), 3.0 * dtw(a, c));
  EXPECT_THROW(dtw_threshold({{a}}, 3.0), std::invalid_argument);
}

TEST(ClMetrics, ComputeMetricsAggregates) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Constant(2, 2, std::nan(""));
  A(0, 0) = 1.0;
  A(1, 0) = 1.0;
  A(1, 1) = 1.0;
  RunLedger l;
  l.train_times = {1.0, 1.0};
  l.train_work = {10, 10};
  l.param_sizes = {100, 200};
  l.stored_sample_sizes = {0, 0};
  l.total_dataset_size = 20;
  l.largest_model_size = 400;
  const MetricsRecord m = compute_metrics(A, l);
  EXPECT_DOUBLE_EQ(m.acc, 1.0);
  EXPECT_DOUBLE_EQ(m.rem, 1.0);
  EXPECT_DOUBLE_EQ(m.ms, 0.75);
  EXPECT_DOUBLE_EQ(m.te, 1.0);
  EXPECT_DOUBLE_EQ(m.fs, 0.5);
  EXPECT_DOUBLE_EQ(m.sss, 1.0);
  const double six[6] = {1.0, 1.0, 0.75, 1.0, 0.5, 1.0};
  double mean = 0.0;
  for (double v : six) mean += v / 6.0;
  double ss = 0.0;
  for (double v : six) ss += (v - mean) * (v - mean);
  EXPECT_NEAR(m.cl_score, mean, 1e-15);
  EXPECT_NEAR(m.cl_score_sum, 6.0 * mean, 1e-14);
  EXPECT_NEAR(m.cl_stability, 1.0 - std::sqrt(ss / 5.0), 1e-15);
}

TEST(ClMetrics, ScoreAndStabilityFromReferenceRows) {
  // Reference rows (ACC, REM, MS, TE, FS, SSS) -> (CL score, CL stability).
  struct Row {
    double six[6];
    double score;
    double stability;
  };
  const Row rows[] = {{{0.87, 1.00, 0.15, 0.85, 0.00, 1.00}, 0.64, 0.55},
                      {{0.86, 0.97, 1.00, 0.51, 0.92, 1.00}, 0.88, 0.81}};
  // Table entries are themselves rounded to two places, so the recomputed
  // aggregate can sit right on the half-unit boundary.
  for (const auto& r : rows) {
    MetricsRecord m;
    m.acc = r.six[0];
    m.rem = r.six[1];
    m.ms = r.six[2];
    m.te = r.six[3];
    m.fs = r.six[4];
    m.sss = r.six[5];
    aggregate_scores(m);
    EXPECT_NEAR(m.cl_score, r.score, 0.005 + 1e-9);
    EXPECT_NEAR(m.cl_stability, r.stability, 0.005 + 1e-9);
  }
}

TEST(ClMetrics, CsvRoundtripIsExact) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  EvaluationMatrix ev(3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      std::vector<DemoEvaluation> demos;
      for (int k = 0; k < 4; ++k) {
        demos.push_back({u(rng), u(rng), u(rng), k % 2 == 0 ? std::optional<double>(u(rng)) : std::nullopt});
      }
      ev.set(i, j, demos);
    }
  }
  const std::string text = evaluation_matrix_csv(ev);
  const EvaluationMatrix back = evaluation_matrix_from_csv(text);
  EXPECT_EQ(evaluation_matrix_csv(back), text);
  EXPECT_EQ(back.at(2, 1)[3].dtw, ev.at(2, 1)[3].dtw);
  EXPECT_EQ(text.substr(0, text.find('\n')), "after_task,eval_task,demo_idx,dtw,frechet,swept_area,quat_error");
}

TEST(ClMetrics, FormatNumberRoundtrips) {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -2.5}) {
    EXPECT_EQ(std::stod(format_number(x)), x);
  }
}

TEST(ClMetrics, LedgerJsonRoundtrip) {
  RunLedger l;
  l.train_times = {0.25, 0.5};
  l.train_work = {3, 4};
  l.param_sizes = {10, 20};
  l.stored_sample_sizes = {0, 5};
  l.total_dataset_size = 10;
  const RunLedger back = nlohmann::json(l).get<RunLedger>();
  EXPECT_EQ(back.train_times, l.train_times);
  EXPECT_EQ(back.param_sizes, l.param_sizes);
  EXPECT_FALSE(back.largest_model_size.has_value());
}
