#include "clfd/autodiff/mlp.hpp"
#include "clfd/node/node.hpp"
#include "clfd/strategies/hypernet.hpp"
#include "clfd/strategies/importance.hpp"
#include "clfd/strategies/strategy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace clfd;
using namespace clfd::strategies;

namespace {

StrategyConfig tiny_config(Method m) {
  StrategyConfig c;
  c.method = m;
  c.state_dim = 2;
  c.node.hidden = {8, 8};
  c.node.iterations = 15;
  c.node.learning_rate = 1e-2;
  c.embedding_dim = 4;
  c.hypernet.hidden = {8};
  c.hypernet.target_hidden = {6};
  c.hypernet.chunk_dim = 20;
  c.hypernet.chunk_embedding_dim = 3;
  c.seed = 1;
  return c;
}

StrategyConfig lasa_config(Method m) {
  StrategyConfig c;
  c.method = m;
  c.state_dim = 2;
  c.node.hidden = {1000, 1000, 1000};
  c.embedding_dim = 256;
  c.hypernet.hidden = {200, 200, 200};
  c.hypernet.target_hidden = {100, 100, 100};
  c.hypernet.chunked_target_hidden = {1000, 1000, 1000};
  c.hypernet.chunk_dim = 8192;
  c.hypernet.chunk_embedding_dim = 256;
  return c;
}

DemonstrationSet shape_task(int variant, std::size_t T = 12) {
  DemonstrationSet set;
  set.name = "task" + std::to_string(variant);
  const Eigen::VectorXd ts = sample_times(T, std::nullopt);
  for (int k = 0; k < 2; ++k) {
    Eigen::MatrixXd p(static_cast<Eigen::Index>(T), 2);
    for (Eigen::Index t = 0; t < p.rows(); ++t) {
      const double u = 1.0 - ts(t);
      p.row(t) << -u * (1.0 + 0.1 * k), (variant - 1) * 0.5 * std::sin(3.0 * u);
    }
    set.demos.push_back({p, ts});
  }
  return set;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("clfd_strategies_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(ParameterCounts, FullSizeLasaConfiguration) {
  const std::size_t sg_per_task = expected_parameter_count(lasa_config(Method::SG), 1);
  EXPECT_EQ(sg_per_task, 2008002u);
  EXPECT_NEAR(static_cast<double>(expected_parameter_count(lasa_config(Method::SG), 26)), 52.2e6, 0.01 * 52.2e6);
  EXPECT_NEAR(static_cast<double>(expected_parameter_count(lasa_config(Method::HN), 26)), 4.3e6, 0.01 * 4.3e6);
  EXPECT_NEAR(static_cast<double>(expected_parameter_count(lasa_config(Method::CHN), 26)), 1.9e6, 0.03 * 1.9e6);
}

TEST(ParameterCounts, GrowthIsOneEmbeddingPerTask) {
  for (Method m : {Method::FT, Method::REP, Method::SI, Method::MAS, Method::HN, Method::CHN}) {
    const auto c = lasa_config(m);
    for (std::size_t k = 1; k < 26; ++k) {
      EXPECT_EQ(expected_parameter_count(c, k + 1) - expected_parameter_count(c, k), 256u) << to_string(m);
    }
  }
  const auto sg = lasa_config(Method::SG);
  EXPECT_EQ(expected_parameter_count(sg, 3) - expected_parameter_count(sg, 2), 2008002u);
}

TEST(ParameterCounts, LiveStrategiesMatchTheAudit) {
  for (Method m : all_methods()) {
    auto s = make_strategy(tiny_config(m));
    EXPECT_EQ(s->parameter_count(), expected_parameter_count(tiny_config(m), 0)) << to_string(m);
    for (int t = 0; t < 3; ++t) {
      s->learn_task(shape_task(t));
      EXPECT_EQ(s->parameter_count(), expected_parameter_count(tiny_config(m), static_cast<std::size_t>(t + 1)))
          << to_string(m);
    }
  }
}

TEST(Hypernet, ChunkedSizes) {
  const auto c = lasa_config(Method::CHN).hypernet_config();
  EXPECT_EQ(c.target_count(), 2008002u);
  EXPECT_EQ(c.chunk_count(), 246u);
  EXPECT_EQ(c.hypernet_param_count(), (512u * 200 + 200) + 2 * (200u * 200 + 200) + (200u * 8192 + 8192));
  EXPECT_EQ(c.shared_param_count(), c.hypernet_param_count() + 246u * 256);
}

TEST(Hypernet, ChunkRawRoundtrip) {
  const auto c = tiny_config(Method::CHN).hypernet_config();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd theta(static_cast<Eigen::Index>(c.target_count()));
  for (auto& v : theta) v = n(rng);
  const Eigen::MatrixXd raw = target_to_raw(theta, c);
  EXPECT_EQ(raw.rows(), static_cast<Eigen::Index>(c.chunk_count()));
  EXPECT_EQ(raw.cols(), static_cast<Eigen::Index>(c.chunk_dim));
  EXPECT_EQ(raw_to_target(raw, c), theta);
}

TEST(Hypernet, TaskGradientMatchesFiniteDifferences) {
  for (Method m : {Method::HN, Method::CHN}) {
    StrategyConfig sc = tiny_config(m);
    const auto hc = sc.hypernet_config();
    const auto nc = sc.node_config();
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 0.3);
    Eigen::VectorXd w(static_cast<Eigen::Index>(hc.shared_param_count()));
    for (auto& v : w) v = n(rng);
    Eigen::RowVectorXd e(static_cast<Eigen::Index>(sc.embedding_dim));
    for (auto& v : e) v = n(rng);
    const DemonstrationSet demos = subsample(shape_task(2), 5);
    const auto g = hn_task_gradient(w, e, demos, hc, nc);
    auto loss = [&](const Eigen::VectorXd& ww, const Eigen::RowVectorXd& ee) {
      const Eigen::VectorXd theta = hn_generate(ww, ee, hc);
      return node::node_loss(node::integrate_mlp(theta, nc, demos.start_states(), demos.timestamps(),
                                                 Eigen::RowVectorXd()),
                             demos);
    };
    EXPECT_NEAR(g.loss, loss(w, e), 1e-10);
    const double h = 1e-6;
    Eigen::VectorXd num(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      Eigen::VectorXd a = w, b = w;
      a(i) += h;
      b(i) -= h;
      num(i) = (loss(a, e) - loss(b, e)) / (2 * h);
    }
    EXPECT_LT((num - g.w).norm() / num.norm(), 1e-4) << to_string(m);
    Eigen::RowVectorXd num_e(e.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      Eigen::RowVectorXd a = e, b = e;
      a(i) += h;
      b(i) -= h;
      num_e(i) = (loss(w, a) - loss(w, b)) / (2 * h);
    }
    EXPECT_LT((num_e - g.embedding).norm() / num_e.norm(), 1e-4) << to_string(m);
  }
}

TEST(Hypernet, RegularizerGradientMatchesFiniteDifferences) {
  for (Method m : {Method::HN, Method::CHN}) {
    const auto hc = tiny_config(m).hypernet_config();
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 0.3);
    auto rand_vec = [&](Eigen::Index k) {
      Eigen::VectorXd v(k);
      for (auto& x : v) x = n(rng);
      return v;
    };
    const Eigen::VectorXd w = rand_vec(static_cast<Eigen::Index>(hc.shared_param_count()));
    std::vector<Eigen::RowVectorXd> embs{rand_vec(4).transpose(), rand_vec(4).transpose()};
    std::vector<Eigen::VectorXd> targets{rand_vec(static_cast<Eigen::Index>(hc.target_count())),
                                         rand_vec(static_cast<Eigen::Index>(hc.target_count()))};
    const auto g = hn_regularizer_gradient(w, embs, targets, hc);
    auto value = [&](const Eigen::VectorXd& ww) {
      double v = 0.0;
      for (std::size_t l = 0; l < embs.size(); ++l) {
        v += (hn_generate(ww, embs[l], hc) - targets[l]).squaredNorm();
      }
      return hc.beta / static_cast<double>(embs.size()) * v;
    };
    EXPECT_NEAR(g.value, value(w), 1e-9 * value(w));
    const double h = 1e-6;
    Eigen::VectorXd num(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      Eigen::VectorXd a = w, b = w;
      a(i) += h;
      b(i) -= h;
      num(i) = (value(a) - value(b)) / (2 * h);
    }
    EXPECT_LT((num - g.w).norm() / num.norm(), 1e-5) << to_string(m);
  }
}

TEST(Importance, SiClosedForm) {
  ImportanceState s(Eigen::Vector2d(1.0, 1.0), 0.5, 0.1);
  si_accumulate(s, Eigen::Vector2d(-2.0, 1.0), Eigen::Vector2d(0.5, 0.5));
  si_accumulate(s, Eigen::Vector2d(-2.0, 1.0), Eigen::Vector2d(0.5, 0.5));
  const Eigen::Vector2d theta(2.0, 2.0);
  si_consolidate(s, theta);
  // omega = (2, -1) -> clamped (2, 0); Delta = 1 -> Omega = (2 / 1.1, 0).
  EXPECT_DOUBLE_EQ(s.Omega(0), 2.0 / 1.1);
  EXPECT_DOUBLE_EQ(s.Omega(1), 0.0);
  EXPECT_EQ(s.theta_snapshot, theta);
  const Eigen::Vector2d probe(3.0, 0.0);
  EXPECT_DOUBLE_EQ(importance_penalty(s, probe), 0.5 * (2.0 / 1.1) * 1.0);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
  add_importance_penalty_gradient(s, probe, g);
  EXPECT_DOUBLE_EQ(g(0), 2.0 * 0.5 * (2.0 / 1.1));
  EXPECT_DOUBLE_EQ(g(1), 0.0);
}

TEST(Importance, SiConsolidateWithoutStepsIsNoOp) {
  ImportanceState s(Eigen::Vector2d(1.0, 1.0), 0.5, 0.1);
  si_consolidate(s, Eigen::Vector2d(5.0, 5.0));
  EXPECT_EQ(s.Omega, Eigen::Vector2d::Zero());
  EXPECT_EQ(s.theta_snapshot, Eigen::Vector2d(1.0, 1.0));
}

TEST(Importance, MasMatchesHandGradientForLinearNet) {
  // Linear 1 -> 1 net f(x) = w x + b; d||f||^2/dw = 2 f x, d/db = 2 f.
  ad::Architecture arch{1, {}, 1, ad::Activation::ELU};
  const Eigen::Vector2d params(0.5, 0.25);
  ImportanceState s(params, 0.1, 0.1);
  Eigen::MatrixXd x(2, 1);
  x << 1.0, -2.0;
  mas_consolidate(s, params, arch, x);
  const double f1 = 0.75, f2 = -0.75;
  EXPECT_DOUBLE_EQ(s.Omega(0), 0.5 * (std::abs(2 * f1 * 1.0) + std::abs(2 * f2 * -2.0)));
  EXPECT_DOUBLE_EQ(s.Omega(1), 0.5 * (std::abs(2 * f1) + std::abs(2 * f2)));
}

TEST(TaskSelector, DrawsAreUniformWithinThreeSigma) {
  TaskSelector sel(123);
  const std::size_t n = 10000, m = 3;
  std::vector<std::size_t> counts(m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = sel.draw(m);
    ASSERT_LT(k, m);
    ++counts[k];
  }
  const double p = 1.0 / m;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (std::size_t c : counts) {
    EXPECT_LT(std::abs(static_cast<double>(c) - n * p), 3 * sigma);
  }
}

TEST(Strategies, SeparateNetworksNeverChangeOldTasks) {
  auto s = make_strategy(tiny_config(Method::SG));
  const auto t0 = shape_task(0);
  s->learn_task(t0);
  const auto before = s->predict(0, t0.start_states(), t0.timestamps());
  s->learn_task(shape_task(1));
  s->learn_task(shape_task(2));
  const auto after = s->predict(0, t0.start_states(), t0.timestamps());
  for (std::size_t k = 0; k < before.size(); ++k) {
    EXPECT_EQ(before[k].points, after[k].points);
  }
}

TEST(Strategies, ReplayStoresEveryTask) {
  auto s = make_strategy(tiny_config(Method::REP));
  std::size_t total = 0;
  for (int t = 0; t < 3; ++t) {
    const auto task = shape_task(t);
    s->learn_task(task);
    total += task.point_count();
    EXPECT_EQ(s->stored_sample_count(), total);
  }
  EXPECT_EQ(make_strategy(tiny_config(Method::FT))->stored_sample_count(), 0u);
}

TEST(Strategies, UnknownTaskIsRejected) {
  auto s = make_strategy(tiny_config(Method::HN));
  s->learn_task(shape_task(0));
  const auto t = shape_task(0);
  EXPECT_THROW(s->predict(1, t.start_states(), t.timestamps()), UnknownTask);
}

TEST(Strategies, SaveLoadReproducesPredictions) {
  for (Method m : all_methods()) {
    auto s = make_strategy(tiny_config(m));
    s->learn_task(shape_task(0));
    s->learn_task(shape_task(1));
    const auto dir = scratch(to_string(m));
    s->save(dir);
    auto loaded = Strategy::load(dir);
    EXPECT_EQ(loaded->method(), m);
    EXPECT_EQ(loaded->num_tasks(), 2u);
    EXPECT_EQ(loaded->parameter_count(), s->parameter_count());
    for (std::size_t task = 0; task < 2; ++task) {
      const auto t = shape_task(static_cast<int>(task));
      const auto a = s->predict(task, t.start_states(), t.timestamps());
      const auto b = loaded->predict(task, t.start_states(), t.timestamps());
      EXPECT_EQ(a[0].points, b[0].points) << to_string(m);
    }
    // Training continues identically after a reload.
    s->learn_task(shape_task(2));
    loaded->learn_task(shape_task(2));
    const auto t2 = shape_task(2);
    EXPECT_EQ(s->predict(2, t2.start_states(), t2.timestamps())[1].points,
              loaded->predict(2, t2.start_states(), t2.timestamps())[1].points)
        << to_string(m);
    std::filesystem::remove_all(dir);
  }
}

TEST(Strategies, SameSeedSameModel) {
  for (Method m : {Method::FT, Method::REP, Method::HN}) {
    auto a = make_strategy(tiny_config(m));
    auto b = make_strategy(tiny_config(m));
    for (int t = 0; t < 2; ++t) {
      a->learn_task(shape_task(t));
      b->learn_task(shape_task(t));
    }
    const auto t0 = shape_task(0);
    EXPECT_EQ(a->predict(0, t0.start_states(), t0.timestamps())[0].points,
              b->predict(0, t0.start_states(), t0.timestamps())[0].points);
  }
}

TEST(Strategies, ConfigValidation) {
  StrategyConfig c = tiny_config(Method::SI);
  c.si_c = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(method_from_string("EWC"), std::invalid_argument);
  StrategyConfig j = tiny_config(Method::CHN);
  nlohmann::json js = j;
  StrategyConfig back;
  from_json(js, back);
  EXPECT_EQ(expected_parameter_count(back, 3), expected_parameter_count(j, 3));
}
