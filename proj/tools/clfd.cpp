#include "clfd/harness/dataset.hpp"
#include "clfd/harness/experiment.hpp"
#include "clfd/harness/synthetic.hpp"
#include "clfd/so3/quaternion.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace clfd;

// One line of JSON on stderr so callers can parse failures.
int fail(const std::string& kind, const std::string& message) {
  std::string flat = message;
  std::replace(flat.begin(), flat.end(), '\n', ' ');
  std::cerr << json{{"error", kind}, {"message", flat}}.dump() << std::endl;
  return 1;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    harness::write_file_atomic(out_path, text);
  }
}

std::vector<std::vector<std::size_t>> load_orders(const fs::path& path) {
  const json j = json::parse(harness::read_file(path));
  const json& list = j.is_object() ? j.at("orders") : j;
  return list.get<std::vector<std::vector<std::size_t>>>();
}

harness::ExperimentConfig resolve_config(const std::string& config_path, const std::string& dataset_path,
                                         const std::string& out_dir) {
  harness::ExperimentConfig cfg = harness::load_config(config_path);
  if (!dataset_path.empty()) {
    cfg.dataset = dataset_path;
  }
  if (!out_dir.empty()) {
    cfg.output_dir = out_dir;
  }
  if (cfg.dataset.empty()) {
    throw std::invalid_argument("config: no dataset given (use --dataset or the config's 'dataset')");
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("clfd"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Continual learning from demonstration with neural ODEs"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

  std::string spec_path, out_path;
  auto* gen = app.add_subcommand("gen-synthetic", "Generate a synthetic dataset from a spec");
  gen->add_option("--spec", spec_path, "Synthetic spec JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out_path, "Dataset file to write")->required();

  std::string config_path, dataset_path, out_dir;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
  auto* train = app.add_subcommand("train", "Run the sequential experiment for every method and seed");
  train->add_option("--config", config_path, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--dataset", dataset_path, "Dataset JSON (overrides the config)");
  train->add_option("--out", out_dir, "Output directory (overrides the config)");
  train->add_option("--method", methods, "Restrict to these methods");
  train->add_option("--seed", seeds, "Restrict to these seeds");

  std::string bundle;
  auto* eval = app.add_subcommand("eval", "Re-evaluate a saved bundle's final model");
  eval->add_option("--bundle", bundle, "Bundle directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--out", out_path, "Write the JSON report here instead of stdout");

  std::vector<std::string> compare;
  auto* met = app.add_subcommand("metrics", "Recompute metrics from bundles");
  met->add_option("--bundle", bundle, "Bundle directory")->required()->check(CLI::ExistingDirectory);
  met->add_option("--compare", compare, "Further bundles sharing the final-size normalizer")
      ->check(CLI::ExistingDirectory);
  met->add_option("--out", out_path, "Write CSV here instead of stdout");

  std::size_t task = 0, samples = 100;
  double radius = 0.0;
  std::uint64_t rseed = 0;
  auto* rob = app.add_subcommand("robustness", "Predict from perturbed starting points");
  rob->add_option("--bundle", bundle, "Bundle directory")->required()->check(CLI::ExistingDirectory);
  rob->add_option("--task", task, "Task index in training order")->required();
  rob->add_option("--samples", samples, "Number of starting points")->required();
  rob->add_option("--radius", radius, "Ball radius around the demo start")->required();
  rob->add_option("--seed", rseed, "Sampling seed");
  rob->add_option("--out", out_path, "Write CSV here instead of stdout");

  std::string orders_path;
  auto* order = app.add_subcommand("task-order", "Repeat the experiment under several task orders");
  order->add_option("--config", config_path, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  order->add_option("--orders", orders_path, "JSON list of permutations")->required()->check(CLI::ExistingFile);
  order->add_option("--dataset", dataset_path, "Dataset JSON (overrides the config)");
  order->add_option("--out", out_dir, "Output directory (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what());
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*gen) {
      const auto spec = harness::synthetic_spec_from_json(json::parse(harness::read_file(spec_path)));
      harness::save_dataset(harness::gen_synthetic(spec), out_path);
      spdlog::info("wrote {} ({} tasks)", out_path, spec.tasks.size());
    } else if (*train) {
      harness::ExperimentConfig cfg = resolve_config(config_path, dataset_path, out_dir);
      if (!methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : methods) {
          cfg.methods.push_back(strategies::method_from_string(m));
        }
      }
      if (!seeds.empty()) {
        cfg.seeds = seeds;
      }
      const auto dataset = harness::load_dataset(cfg.dataset);
      const auto bundles = harness::run_all(cfg, dataset);
      std::cout << metrics::metrics_csv_header() << "\n";
      for (const auto& b : bundles) {
        std::cout << metrics::metrics_csv_row(strategies::to_string(b.method), b.seed, b.metrics) << "\n";
      }
    } else if (*eval) {
      emit(harness::reevaluate_bundle(bundle).dump(2) + "\n", out_path);
    } else if (*met) {
      std::vector<fs::path> dirs{bundle};
      dirs.insert(dirs.end(), compare.begin(), compare.end());
      std::optional<std::uint64_t> largest;
      if (!compare.empty()) {
        std::uint64_t m = 0;
        for (const auto& d : dirs) {
          const auto s = harness::summarize_bundle(d);
          m = std::max<std::uint64_t>(m, s.ledger.param_sizes.back());
        }
        largest = m;
      }
      std::string csv = metrics::metrics_csv_header() + "\n";
      for (const auto& d : dirs) {
        const auto s = harness::summarize_bundle(d, largest);
        csv += metrics::metrics_csv_row(s.method, s.seed, s.metrics) + "\n";
      }
      emit(csv, out_path);
    } else if (*rob) {
      const auto strategy = strategies::Strategy::load(fs::path(bundle) / "state");
      const auto processed = harness::load_dataset(fs::path(bundle) / "dataset.json");
      if (task >= processed.tasks.size()) {
        throw strategies::UnknownTask("robustness: unknown task " + std::to_string(task));
      }
      harness::ExperimentConfig replay;
      replay.subsample_T = 0;
      const auto prepared = harness::prepare_tasks(processed, replay);
      const auto result = harness::robustness_start(*strategy, task, prepared[task].train, samples, radius, rseed);
      emit(harness::robustness_csv(result), out_path);
    } else if (*order) {
      const harness::ExperimentConfig cfg = resolve_config(config_path, dataset_path, out_dir);
      const auto dataset = harness::load_dataset(cfg.dataset);
      const auto rows = harness::run_task_order_study(cfg, dataset, load_orders(orders_path));
      spdlog::info("wrote {} rows to {}", rows.size(),
                   (fs::path(cfg.output_dir) / "task_order_report.csv").string());
    }
  } catch (const harness::DatasetError& e) {
    return fail("dataset", e.what());
  } catch (const strategies::UnknownTask& e) {
    return fail("unknown_task", e.what());
  } catch (const strategies::StrategyError& e) {
    return fail("strategy", "task " + std::to_string(e.task()) + ": " + e.what());
  } catch (const so3::DomainError& e) {
    return fail("domain", e.what());
  } catch (const json::exception& e) {
    return fail("json", e.what());
  } catch (const std::invalid_argument& e) {
    return fail("invalid_argument", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
  return 0;
}
