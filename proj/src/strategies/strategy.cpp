#include "clfd/strategies/strategy.hpp"

#include "clfd/autodiff/param_io.hpp"

#include <fstream>
#include <sstream>

namespace clfd::strategies {

std::string to_string(Method m) {
  switch (m) {
    case Method::SG: return "SG";
    case Method::FT: return "FT";
    case Method::REP: return "REP";
    case Method::SI: return "SI";
    case Method::MAS: return "MAS";
    case Method::HN: return "HN";
    case Method::CHN: return "CHN";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  for (Method m : all_methods()) {
    if (to_string(m) == name) {
      return m;
    }
  }
  throw std::invalid_argument("unknown method '" + name + "' (expected SG, FT, REP, SI, MAS, HN or CHN)");
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::SG, Method::FT, Method::REP, Method::SI,
                                           Method::MAS, Method::HN, Method::CHN};
  return methods;
}

node::NodeConfig StrategyConfig::node_config() const {
  node::NodeConfig c;
  switch (method) {
    case Method::SG:
      c = node::NodeConfig::make(state_dim, node.hidden, 0, node.time_input);
      break;
    case Method::HN:
      c = node::NodeConfig::make(state_dim, hypernet.target_hidden, 0, node.time_input);
      break;
    case Method::CHN:
      c = node::NodeConfig::make(
          state_dim,
          hypernet.chunked_target_hidden.empty() ? hypernet.target_hidden : hypernet.chunked_target_hidden,
          0, node.time_input);
      break;
    default:
      c = node::NodeConfig::make(state_dim, node.hidden, embedding_dim, node.time_input);
  }
  c.train_iterations = node.iterations;
  c.learning_rate = node.learning_rate;
  c.integrator = node.integrator;
  return c;
}

HypernetConfig StrategyConfig::hypernet_config() const {
  const bool chunked = method == Method::CHN;
  return HypernetConfig::make(node_config().architecture, embedding_dim, hypernet.hidden,
                              hypernet.beta, chunked, hypernet.chunk_dim,
                              hypernet.chunk_embedding_dim);
}

void StrategyConfig::validate() const {
  if (state_dim == 0) {
    throw std::invalid_argument("config: state_dim must be >= 1");
  }
  if (method != Method::SG && embedding_dim == 0) {
    throw std::invalid_argument("config: embedding_dim must be >= 1");
  }
  if (node.iterations == 0) {
    throw std::invalid_argument("config: node.iterations must be >= 1");
  }
  node_config().validate();
  if (method == Method::SI && !(si_c > 0.0 && si_xi > 0.0)) {
    throw std::invalid_argument("config: si.c and si.xi must be positive");
  }
  if (method == Method::MAS && !(mas_lambda > 0.0)) {
    throw std::invalid_argument("config: mas.lambda must be positive");
  }
  if (method == Method::HN || method == Method::CHN) {
    hypernet_config().validate();
    if (hypernet.learning_rate < 0.0) {
      throw std::invalid_argument("config: hypernet.learning_rate must be >= 0");
    }
  }
}

void to_json(nlohmann::json& j, const StrategyConfig& c) {
  j = {{"method", to_string(c.method)},
       {"state_dim", c.state_dim},
       {"node",
        {{"hidden", c.node.hidden},
         {"time_input", c.node.time_input},
         {"iterations", c.node.iterations},
         {"learning_rate", c.node.learning_rate},
         {"integrator", node::to_string(c.node.integrator)}}},
       {"embedding_dim", c.embedding_dim},
       {"si", {{"c", c.si_c}, {"xi", c.si_xi}}},
       {"mas", {{"lambda", c.mas_lambda}}},
       {"hypernet",
        {{"hidden", c.hypernet.hidden},
         {"target_hidden", c.hypernet.target_hidden},
         {"chunked_target_hidden", c.hypernet.chunked_target_hidden},
         {"beta", c.hypernet.beta},
         {"chunk_dim", c.hypernet.chunk_dim},
         {"chunk_embedding_dim", c.hypernet.chunk_embedding_dim},
         {"learning_rate", c.hypernet.learning_rate}}},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, StrategyConfig& c) {
  c.method = method_from_string(j.at("method").get<std::string>());
  c.state_dim = j.value("state_dim", c.state_dim);
  if (j.contains("node")) {
    const auto& n = j["node"];
    c.node.hidden = n.value("hidden", c.node.hidden);
    c.node.time_input = n.value("time_input", c.node.time_input);
    c.node.iterations = n.value("iterations", c.node.iterations);
    c.node.learning_rate = n.value("learning_rate", c.node.learning_rate);
    c.node.integrator = node::integrator_from_string(n.value("integrator", node::to_string(c.node.integrator)));
  }
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  if (j.contains("si")) {
    c.si_c = j["si"].value("c", c.si_c);
    c.si_xi = j["si"].value("xi", c.si_xi);
  }
  if (j.contains("mas")) {
    c.mas_lambda = j["mas"].value("lambda", c.mas_lambda);
  }
  if (j.contains("hypernet")) {
    const auto& h = j["hypernet"];
    c.hypernet.hidden = h.value("hidden", c.hypernet.hidden);
    c.hypernet.target_hidden = h.value("target_hidden", c.hypernet.target_hidden);
    c.hypernet.chunked_target_hidden = h.value("chunked_target_hidden", c.hypernet.chunked_target_hidden);
    c.hypernet.beta = h.value("beta", c.hypernet.beta);
    c.hypernet.chunk_dim = h.value("chunk_dim", c.hypernet.chunk_dim);
    c.hypernet.chunk_embedding_dim = h.value("chunk_embedding_dim", c.hypernet.chunk_embedding_dim);
    c.hypernet.learning_rate = h.value("learning_rate", c.hypernet.learning_rate);
  }
  c.seed = j.value("seed", c.seed);
}

std::size_t expected_parameter_count(const StrategyConfig& config, std::size_t num_tasks) {
  switch (config.method) {
    case Method::SG:
      return num_tasks * ad::count_params(config.node_config().architecture);
    case Method::HN:
    case Method::CHN:
      return config.hypernet_config().total_param_count(num_tasks);
    default:
      return ad::count_params(config.node_config().architecture) + num_tasks * config.embedding_dim;
  }
}

std::size_t TaskSelector::draw(std::size_t num_tasks) {
  if (num_tasks == 0) {
    throw std::invalid_argument("TaskSelector: no tasks to draw from");
  }
  std::uniform_int_distribution<std::size_t> pick(0, num_tasks - 1);
  return pick(rng_);
}

Strategy::Strategy(StrategyConfig config) : config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
}

LearnReport Strategy::learn_task(const DemonstrationSet& demos) {
  const std::size_t task = num_tasks_;
  try {
    demos.validate();
    if (demos.dim() != config_.state_dim) {
      throw std::invalid_argument("demonstrations have dimension " + std::to_string(demos.dim()) +
                                  ", model expects " + std::to_string(config_.state_dim));
    }
    LearnReport r = do_learn(demos);
    ++num_tasks_;
    return r;
  } catch (const StrategyError&) {
    throw;
  } catch (const std::exception& e) {
    throw StrategyError(to_string(config_.method) + " task " + std::to_string(task) + " ('" +
                            demos.name + "'): " + e.what(),
                        task);
  }
}

Trajectory Strategy::predict_one(std::size_t task_id, const Eigen::VectorXd& y0,
                                 const Eigen::VectorXd& timestamps) const {
  return predict(task_id, y0.transpose(), timestamps).front();
}

void Strategy::check_task(std::size_t task_id) const {
  if (task_id >= num_tasks_) {
    throw UnknownTask("task " + std::to_string(task_id) + " has not been learned (" +
                      std::to_string(num_tasks_) + " tasks known)");
  }
}

void Strategy::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["variant"] = to_string(config_.method);
  manifest["config"] = config_;
  manifest["num_tasks"] = num_tasks_;
  std::ostringstream rng_state;
  rng_state << rng_;
  manifest["rng_state"] = rng_state.str();
  save_state(manifest, dir);
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) {
    throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  }
}

std::unique_ptr<Strategy> Strategy::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) {
    throw std::runtime_error("cannot read " + (dir / "manifest.json").string());
  }
  const nlohmann::json manifest = nlohmann::json::parse(in);
  const int version = manifest.at("format_version").get<int>();
  if (version != kFormatVersion) {
    throw std::runtime_error("unsupported strategy state format version " + std::to_string(version));
  }
  auto s = make_strategy(manifest.at("config").get<StrategyConfig>());
  if (to_string(s->method()) != manifest.at("variant").get<std::string>()) {
    throw std::runtime_error("strategy manifest variant disagrees with its config");
  }
  s->num_tasks_ = manifest.at("num_tasks").get<std::size_t>();
  std::istringstream rng_state(manifest.at("rng_state").get<std::string>());
  rng_state >> s->rng_;
  s->load_state(manifest, dir);
  return s;
}

}  // namespace clfd::strategies
