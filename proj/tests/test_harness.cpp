#include "clfd/harness/dataset.hpp"
#include "clfd/harness/experiment.hpp"
#include "clfd/harness/synthetic.hpp"
#include "clfd/metrics/trajectory_metrics.hpp"
#include "clfd/so3/quaternion.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace clfd;
using namespace clfd::harness;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("clfd_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json minimal_dataset() {
  return json::parse(R"({
    "name": "tiny", "kind": "position", "dim": 2,
    "tasks": [{"task_name": "a", "demonstrations": [[[1.0, 0.0], [0.0, 0.0]], [[1.1, 0.1], [0.0, 0.0]]]}]
  })");
}

SyntheticSpec small_spec(std::vector<std::string> shapes) {
  SyntheticSpec s;
  s.demos = 3;
  s.length = 40;
  s.noise = 0.002;
  s.seed = 3;
  for (auto& sh : shapes) {
    s.tasks.push_back({sh, sh, 1.0});
  }
  return s;
}

ExperimentConfig tiny_experiment(const fs::path& out) {
  ExperimentConfig c = preset("desk");
  c.methods = {strategies::Method::SG};
  c.seeds = {0};
  c.strategy.node.hidden = {16, 16};
  c.strategy.node.iterations = 120;
  c.strategy.node.learning_rate = 1e-2;
  c.strategy.embedding_dim = 4;
  c.strategy.hypernet.hidden = {16};
  c.strategy.hypernet.target_hidden = {8};
  c.strategy.hypernet.chunked_target_hidden = {8};
  c.strategy.hypernet.chunk_dim = 64;
  c.strategy.hypernet.chunk_embedding_dim = 4;
  c.subsample_T = 20;
  c.output_dir = out.string();
  return c;
}

std::string field_error(const json& j) {
  try {
    dataset_from_json(j);
  } catch (const DatasetError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Dataset, MinimalFileLoads) {
  const DatasetFile d = dataset_from_json(minimal_dataset());
  EXPECT_EQ(d.tasks.size(), 1u);
  const DemonstrationSet set = d.demonstration_set(0);
  EXPECT_EQ(set.length(), 2u);
  EXPECT_DOUBLE_EQ(set.timestamps()(1), 1.0);
}

TEST(Dataset, SchemaErrorsNameTheField) {
  json j = minimal_dataset();
  j["tasks"][0]["demonstrations"][1].push_back({0.0, 0.0});
  EXPECT_NE(field_error(j).find("tasks[0].demonstrations[1]"), std::string::npos) << field_error(j);

  j = minimal_dataset();
  j.erase("dim");
  EXPECT_NE(field_error(j).find("'dim'"), std::string::npos);

  j = minimal_dataset();
  j["tasks"][0]["demonstrations"][0][0] = {1.0};
  EXPECT_NE(field_error(j).find("demonstrations[0][0]"), std::string::npos);

  j = minimal_dataset();
  j["kind"] = "pose";
  EXPECT_NE(field_error(j).find("'kind'"), std::string::npos);

  j = minimal_dataset();
  j["tasks"][0]["timestamps"] = {0.0, 0.0};
  EXPECT_NE(field_error(j).find("timestamps"), std::string::npos);
}

TEST(Dataset, RejectsNonUnitQuaternions) {
  json j = json::parse(R"({"name": "q", "kind": "quaternion", "dim": 4,
    "tasks": [{"task_name": "a", "demonstrations": [[[1.0, 0.0, 0.0, 0.0], [0.9, 0.0, 0.0, 0.0]]]}]})");
  EXPECT_NE(field_error(j).find("unit quaternion"), std::string::npos);
}

TEST(Dataset, QuaternionRoundtripIsBitIdentical) {
  SyntheticSpec s = small_spec({"arc", "s-curve"});
  s.kind = DatasetKind::Quaternion;
  const fs::path dir = scratch("quat_roundtrip");
  save_dataset(gen_synthetic(s), dir / "a.json");
  const DatasetFile first = load_dataset(dir / "a.json");
  save_dataset(first, dir / "b.json");
  const DatasetFile second = load_dataset(dir / "b.json");
  ASSERT_EQ(first.tasks.size(), second.tasks.size());
  for (std::size_t m = 0; m < first.tasks.size(); ++m) {
    for (std::size_t k = 0; k < first.tasks[m].demonstrations.size(); ++k) {
      EXPECT_EQ(first.tasks[m].demonstrations[k], second.tasks[m].demonstrations[k]);
    }
  }
  EXPECT_EQ(read_file(dir / "a.json"), read_file(dir / "b.json"));
}

TEST(Synthetic, NoiselessLineIsCollinear) {
  SyntheticSpec s = small_spec({"line"});
  s.noise = 0.0;
  const DatasetFile d = gen_synthetic(s);
  for (const auto& p : d.tasks[0].demonstrations) {
    const Eigen::Vector2d dir = (p.row(0) - p.row(p.rows() - 1)).transpose();
    for (Eigen::Index t = 0; t < p.rows(); ++t) {
      const Eigen::Vector2d v = p.row(t).transpose();
      EXPECT_NEAR(dir.x() * v.y() - dir.y() * v.x(), 0.0, 1e-12);
    }
    EXPECT_EQ(p.row(p.rows() - 1).norm(), 0.0);
  }
}

TEST(Synthetic, NoisyDemosDiffer) {
  SyntheticSpec s = small_spec({"sine"});
  s.noise = 0.01;
  const DatasetFile d = gen_synthetic(s);
  const auto& demos = d.tasks[0].demonstrations;
  for (std::size_t a = 0; a < demos.size(); ++a) {
    for (std::size_t b = a + 1; b < demos.size(); ++b) {
      EXPECT_GT(metrics::dtw(demos[a], demos[b]), 0.0);
    }
  }
}

TEST(Synthetic, IsDeterministicPerSeed) {
  const SyntheticSpec s = small_spec({"arc", "sine"});
  EXPECT_EQ(dataset_to_json(gen_synthetic(s)).dump(), dataset_to_json(gen_synthetic(s)).dump());
  SyntheticSpec other = s;
  other.seed = 4;
  EXPECT_NE(dataset_to_json(gen_synthetic(s)).dump(), dataset_to_json(gen_synthetic(other)).dump());
}

TEST(Synthetic, FigureEightRevisitsAStateWithAnotherVelocity) {
  // Nearest pair of non-neighbouring samples: close in space, different heading.
  const int n = 400;
  Eigen::MatrixXd p(n, 2);
  for (int t = 0; t < n; ++t) {
    p.row(t) = shape_point("figure-eight", static_cast<double>(t) / (n - 1)).transpose();
  }
  double best = 1e9;
  int bi = 0, bj = 0;
  for (int i = 1; i < n - 1; ++i) {
    for (int j = i + 20; j < n - 1; ++j) {
      const double d = (p.row(i) - p.row(j)).norm();
      if (d < best) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  }
  const double extent = (p.colwise().maxCoeff() - p.colwise().minCoeff()).norm();
  EXPECT_LT(best, 0.02 * extent);
  const Eigen::RowVector2d vi = (p.row(bi + 1) - p.row(bi - 1)).normalized();
  const Eigen::RowVector2d vj = (p.row(bj + 1) - p.row(bj - 1)).normalized();
  EXPECT_LT(vi.dot(vj), 0.9);
}

TEST(Synthetic, UnknownShapeIsRejected) {
  EXPECT_THROW(shape_point("spiral", 0.5), std::invalid_argument);
  EXPECT_THROW(gen_synthetic(small_spec({"spiral"})), std::invalid_argument);
}

TEST(Config, UnknownKeyIsRejected) {
  json j = config_to_json(preset("desk"));
  EXPECT_NO_THROW(config_from_json(j));
  j["iteratons"] = 5;
  EXPECT_THROW(config_from_json(j), std::invalid_argument);
}

TEST(Config, JsonRoundtrip) {
  ExperimentConfig c = preset("lasa");
  c.task_order = {2, 0, 1};
  c.seeds = {4, 5};
  const ExperimentConfig back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back).dump(), config_to_json(c).dump());
  EXPECT_THROW(preset("nope"), std::invalid_argument);
}

TEST(Config, TaskOrderMustBePermutation) {
  ExperimentConfig c = preset("desk");
  c.task_order = {0, 0, 1};
  EXPECT_THROW(c.validate(3), std::invalid_argument);
  c.task_order = {2, 0, 1};
  EXPECT_NO_THROW(c.validate(3));
}

TEST(Experiment, SingleTaskGivesOneCell) {
  const fs::path out = scratch("single");
  const DatasetFile d = gen_synthetic(small_spec({"arc"}));
  const ResultsBundle b = run_experiment(tiny_experiment(out), d, strategies::Method::SG, 0);
  EXPECT_EQ(b.evaluation.num_tasks(), 1u);
  EXPECT_EQ(b.evaluation.at(0, 0).size(), 3u);
  EXPECT_EQ(b.accuracy.rows(), 1);
  EXPECT_EQ(b.ledger.num_tasks(), 1u);
}

TEST(Experiment, LedgerMatchesParameterAudit) {
  const fs::path out = scratch("audit");
  const DatasetFile d = gen_synthetic(small_spec({"arc", "sine"}));
  for (auto m : {strategies::Method::SG, strategies::Method::HN, strategies::Method::CHN}) {
    ExperimentConfig c = tiny_experiment(out);
    c.strategy.node.iterations = 5;
    const ResultsBundle b = run_experiment(c, d, m, 0);
    strategies::StrategyConfig sc = c.strategy;
    sc.method = m;
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_EQ(b.ledger.param_sizes[i], strategies::expected_parameter_count(sc, i + 1));
    }
  }
}

TEST(Experiment, BundleIsDeterministicAndReplayable) {
  const DatasetFile d = gen_synthetic(small_spec({"arc", "sine"}));
  std::string first_metrics, first_matrix;
  for (int run = 0; run < 2; ++run) {
    const fs::path out = scratch("determinism_" + std::to_string(run));
    ExperimentConfig c = tiny_experiment(out);
    c.methods = {strategies::Method::FT};
    run_all(c, d);
    const fs::path cell = cell_dir(out, strategies::Method::FT, 0);
    const std::string m = read_file(cell / "metrics.json");
    const std::string e = read_file(cell / "eval_matrix.csv");
    if (run == 0) {
      first_metrics = m;
      first_matrix = e;
      const BundleSummary s = summarize_bundle(cell);
      const json recorded = json::parse(m);
      EXPECT_NEAR(s.metrics.acc, recorded["metrics"]["acc"].get<double>(), 1e-12);
      EXPECT_NEAR(s.metrics.rem, recorded["metrics"]["rem"].get<double>(), 1e-12);
      const json replay = reevaluate_bundle(cell);
      EXPECT_TRUE(replay["matches_recorded"].get<bool>());
      EXPECT_LT(replay["max_abs_dtw_difference"].get<double>(), 1e-9);
      EXPECT_TRUE(fs::exists(cell / "predictions" / "task_1_demo_2.csv"));
      EXPECT_TRUE(fs::exists(out / "metrics.csv"));
    } else {
      EXPECT_EQ(m, first_metrics);
      EXPECT_EQ(e, first_matrix);
    }
  }
}

TEST(Robustness, RadiusZeroReproducesNominalPrediction) {
  const DatasetFile d = gen_synthetic(small_spec({"arc"}));
  ExperimentConfig c = tiny_experiment(scratch("robust0"));
  const ResultsBundle b = run_experiment(c, d, strategies::Method::SG, 0);
  const DemonstrationSet demos = subsample(d.demonstration_set(0), c.subsample_T);
  const auto samples = robustness_start(*b.strategy, 0, demos, 5, 0.0, 1);
  const Trajectory nominal =
      b.strategy->predict_one(0, demos.demos[0].points.row(0).transpose(), demos.timestamps());
  const Eigen::VectorXd goal = demos.demos[0].points.row(demos.length() - 1).transpose();
  const double nominal_end = (nominal.points.row(nominal.points.rows() - 1).transpose() - goal).norm();
  for (const auto& s : samples) {
    EXPECT_EQ(s.start_delta, 0.0);
    EXPECT_NEAR(s.end_delta, nominal_end, 1e-12);
  }
  EXPECT_THROW(robustness_start(*b.strategy, 3, demos, 5, 0.0, 1), strategies::UnknownTask);
}

TEST(Robustness, SamplesStayInsideTheBall) {
  const DatasetFile d = gen_synthetic(small_spec({"arc"}));
  ExperimentConfig c = tiny_experiment(scratch("robust_ball"));
  c.strategy.node.iterations = 5;
  const ResultsBundle b = run_experiment(c, d, strategies::Method::SG, 0);
  const DemonstrationSet demos = subsample(d.demonstration_set(0), c.subsample_T);
  const auto samples = robustness_start(*b.strategy, 0, demos, 200, 0.3, 9);
  ASSERT_EQ(samples.size(), 200u);
  double widest = 0.0;
  for (const auto& s : samples) {
    EXPECT_LE(s.start_delta, 0.3 + 1e-12);
    EXPECT_NEAR((s.start - demos.demos[0].points.row(0).transpose()).norm(), s.start_delta, 1e-12);
    widest = std::max(widest, s.start_delta);
  }
  EXPECT_GT(widest, 0.2);
  const std::string csv = robustness_csv(samples);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "sample,start_x0,start_x1,start_delta,end_delta");
  const auto again = robustness_start(*b.strategy, 0, demos, 200, 0.3, 9);
  EXPECT_EQ(robustness_csv(again), csv);
}

TEST(TaskOrder, SingleOrderMatchesPlainRun) {
  const DatasetFile d = gen_synthetic(small_spec({"arc", "sine"}));
  const fs::path out = scratch("order_single");
  ExperimentConfig c = tiny_experiment(out);
  const auto rows = run_task_order_study(c, d, {{0, 1}});
  ASSERT_EQ(rows.size(), 1u);
  const ResultsBundle plain = run_experiment(c, d, strategies::Method::SG, 0);
  EXPECT_DOUBLE_EQ(rows[0].metrics.acc, plain.metrics.acc);
  EXPECT_DOUBLE_EQ(rows[0].metrics.rem, plain.metrics.rem);
  ASSERT_EQ(rows[0].diagonal_error.size(), 2u);
  EXPECT_TRUE(fs::exists(out / "task_order_report.csv"));
}

TEST(TaskOrder, ReportHasOneRowPerOrderMethodSeed) {
  const DatasetFile d = gen_synthetic(small_spec({"arc", "sine"}));
  const fs::path out = scratch("order_rows");
  ExperimentConfig c = tiny_experiment(out);
  c.strategy.node.iterations = 200;
  c.methods = {strategies::Method::SG, strategies::Method::FT};
  c.seeds = {0, 1};
  const auto rows = run_task_order_study(c, d, {{0, 1}, {1, 0}});
  EXPECT_EQ(rows.size(), 8u);
  const std::string report = read_file(out / "task_order_report.csv");
  EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 9);
  // SG learns each task from scratch, so its diagonal errors barely depend on the order.
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].method != "SG") {
      continue;
    }
    for (std::size_t r2 = 0; r2 < rows.size(); ++r2) {
      if (rows[r2].method == "SG" && rows[r2].seed == rows[r].seed && rows[r2].order_index != rows[r].order_index) {
        for (std::size_t t = 0; t < 2; ++t) {
          EXPECT_LE(rows[r].diagonal_error[t], 2.0 * rows[r2].diagonal_error[t]);
        }
      }
    }
  }
}

TEST(QuaternionPipeline, TargetsEndAtOriginAndPredictionsAreUnit) {
  SyntheticSpec s = small_spec({"arc"});
  s.kind = DatasetKind::Quaternion;
  const DatasetFile d = gen_synthetic(s);
  const fs::path out = scratch("quat_pipeline");
  ExperimentConfig c = tiny_experiment(out);
  const auto tasks = prepare_tasks(d, c);
  ASSERT_EQ(tasks.size(), 1u);
  for (const auto& demo : tasks[0].train.demos) {
    EXPECT_EQ(demo.points.cols(), 3);
    EXPECT_LT(demo.points.row(demo.points.rows() - 1).norm(), 1e-12);
  }
  EXPECT_DOUBLE_EQ(accuracy_threshold(tasks, DatasetKind::Quaternion, c), 10.0 * M_PI / 180.0);
  const ResultsBundle b = run_experiment(c, d, strategies::Method::SG, 0);
  EXPECT_EQ(b.accuracy_error, metrics::AccuracyError::Quaternion);
  ASSERT_TRUE(b.evaluation.at(0, 0)[0].quat_error.has_value());
  for (std::size_t k = 0; k < b.final_predictions[0].size(); ++k) {
    const Eigen::MatrixXd& q = tasks[0].quaternions[k];
    const auto goal = so3::UnitQuaternion::from_vector(q.row(q.rows() - 1).transpose());
    const auto back = so3::from_tangent_trajectory(b.final_predictions[0][k], goal);
    for (const auto& p : back.quats) {
      EXPECT_NEAR(p.coeffs().norm(), 1.0, 1e-9);
    }
  }
}
