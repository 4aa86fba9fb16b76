#include "tsil/config.hpp"

#include <fstream>

namespace tsil {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw ConfigError(std::string("section '") + key + "' must be an object");
  return j.at(key);
}

LrSchedule schedule_from_json(const json& j, LrSchedule fallback) {
  fallback.initial_lr = get_or(j, "lr", fallback.initial_lr);
  fallback.decay_rate = get_or(j, "decay_rate", fallback.decay_rate);
  fallback.decay_every = get_or(j, "decay_every", fallback.decay_every);
  fallback.validate();
  return fallback;
}

ColumnType column_type(const std::string& s) {
  if (s == "numeric") return ColumnType::numeric;
  if (s == "categorical") return ColumnType::categorical;
  if (s == "auto") return ColumnType::automatic;
  throw ConfigError("unknown column type '" + s + "'");
}

}  // namespace

PolicySpec policy_spec_from_json(const json& j) {
  PolicySpec p;
  p.name = get_or<std::string>(j, "name", p.name);
  if (p.name == "neural_linear_ts") p.prior = {0.25, 3.0, 3.0};
  const json& prior = section(j, "prior");
  p.prior.precision_scale = get_or(prior, "precision_scale", p.prior.precision_scale);
  p.prior.alpha = get_or(prior, "alpha", p.prior.alpha);
  p.prior.beta = get_or(prior, "beta", p.prior.beta);
  p.net.hidden = get_or(j, "hidden", p.net.hidden);
  p.net.training.n_steps = get_or(j, "train_steps", p.net.training.n_steps);
  p.net.training.batch_size = get_or(j, "batch_size", p.net.training.batch_size);
  p.net.schedule = schedule_from_json(section(j, "schedule"), p.net.schedule);
  p.net.rho = get_or(j, "rho", p.net.rho);
  p.net.eps = get_or(j, "eps", p.net.eps);
  p.replicates = get_or(j, "replicates", p.replicates);
  const auto w = get_or<std::string>(j, "bootstrap_weighting", "poisson");
  if (w == "poisson") {
    p.weighting = BootstrapWeighting::poisson;
  } else if (w == "resample") {
    p.weighting = BootstrapWeighting::resample;
  } else {
    throw ConfigError("bootstrap_weighting must be 'poisson' or 'resample'");
  }
  return p;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  auto resolve = [&](const std::filesystem::path& p) {
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };

  const json& env = section(j, "environment");
  auto& e = c.environment;
  e.name = get_or<std::string>(env, "name", e.name);
  e.wheel.delta = get_or(env, "delta", e.wheel.delta);
  e.wheel.sigma = get_or(env, "sigma", e.wheel.sigma);
  e.wheel.mean_hub = get_or(env, "mean_hub", e.wheel.mean_hub);
  e.wheel.mean_inner = get_or(env, "mean_inner", e.wheel.mean_inner);
  e.wheel.mean_spike = get_or(env, "mean_spike", e.wheel.mean_spike);
  e.video_actions = get_or(env, "num_actions", e.video_actions);
  auto& s = e.supervised;
  if (e.name == "mushroom") {
    s.label_column = "class";
    s.reward_rule = RewardRule::mushroom;
  } else if (e.name == "warfarin") {
    s.label_column = "optimal_dose";
    s.reward_rule = RewardRule::dosage;
  } else if (e.name == "classification") {
    s.reward_rule = RewardRule::generic_table;
  }
  if (env.contains("csv")) s.csv_path = resolve(get_or<std::string>(env, "csv", ""));
  s.label_column = get_or(env, "label_column", s.label_column);
  s.feature_columns = get_or(env, "feature_columns", s.feature_columns);
  s.k_levels = get_or(env, "k_levels", s.k_levels);
  s.positive_label = get_or(env, "positive_label", s.positive_label);
  s.shuffle_seed = get_or<std::uint64_t>(env, "shuffle_seed", s.shuffle_seed);
  for (const auto& [name, type] : section(env, "column_types").items()) {
    s.column_types[name] = column_type(type.get<std::string>());
  }

  c.policy = policy_spec_from_json(section(j, "policy"));

  const json& im = section(j, "imitation");
  auto& i = c.imitation;
  i.enabled = get_or(im, "enabled", !im.empty());
  const auto objective = get_or<std::string>(im, "objective", "kl");
  if (objective == "kl") {
    i.objective = DistillObjective::kl;
  } else if (objective == "wasserstein") {
    i.objective = DistillObjective::wasserstein;
  } else {
    throw ConfigError("imitation objective must be 'kl' or 'wasserstein'");
  }
  i.n_a = get_or(im, "n_a", i.n_a);
  i.hidden = get_or(im, "hidden", i.hidden);
  i.distill.n_minibatches = get_or(im, "n_minibatches", i.distill.n_minibatches);
  i.distill.batch_size = get_or(im, "batch_size", i.distill.batch_size);
  i.distill.schedule = schedule_from_json(section(im, "schedule"), i.distill.schedule);
  i.distill.rho = get_or(im, "rho", i.distill.rho);
  i.distill.eps = get_or(im, "eps", i.distill.eps);
  i.distill.hard_samples = get_or(im, "hard_samples", i.distill.hard_samples);
  i.distill.n_policy_samples = get_or(im, "n_policy_samples", i.distill.n_policy_samples);
  i.distill.baseline = get_or(im, "baseline", i.distill.baseline);
  const auto contexts = get_or<std::string>(im, "contexts", "all");
  if (contexts == "all") {
    i.contexts = DistillContexts::all_observed;
  } else if (contexts == "period") {
    i.contexts = DistillContexts::period_observed;
  } else if (contexts == "fresh") {
    i.contexts = DistillContexts::fresh;
  } else {
    throw ConfigError("imitation contexts must be 'all', 'period' or 'fresh'");
  }
  i.n_fresh = get_or(im, "n_fresh", i.n_fresh);
  i.metric = get_or(im, "metric", i.metric);
  i.propensity_workers = get_or(im, "propensity_workers", i.propensity_workers);

  const json& run = section(j, "run");
  c.run.horizon = get_or(run, "horizon", c.run.horizon);
  c.run.batch_period = get_or(run, "batch_period", c.run.batch_period);
  c.run.n_trials = get_or(run, "n_trials", c.run.n_trials);
  c.run.seed = get_or<std::uint64_t>(run, "seed", c.run.seed);
  c.run.workers = get_or(run, "workers", c.run.workers);

  const json& out = section(j, "output");
  c.output.dir = resolve(get_or<std::string>(out, "dir", c.output.dir.string()));
  c.output.per_step = get_or(out, "per_step", c.output.per_step);

  const json& lat = section(j, "latency");
  auto& l = c.latency;
  l.context_dim = get_or(lat, "context_dim", l.context_dim);
  l.num_actions = get_or(lat, "num_actions", l.num_actions);
  l.n_reps = get_or(lat, "n_reps", l.n_reps);
  l.batch = get_or(lat, "batch", l.batch);
  l.warmup_records = get_or(lat, "warmup_records", l.warmup_records);
  l.seed = get_or<std::uint64_t>(lat, "seed", l.seed);
  l.imitation_hidden = get_or(lat, "imitation_hidden", l.imitation_hidden);
  if (lat.contains("policies")) {
    for (const auto& p : lat.at("policies")) {
      l.policies.push_back(p.is_string() ? policy_spec_from_json(json{{"name", p}})
                                         : policy_spec_from_json(p));
    }
  }

  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

void ExperimentConfig::validate() const {
  if (run.batch_period < 1) throw ConfigError("run.batch_period must be >= 1");
  if (run.horizon < run.batch_period) throw ConfigError("run.horizon must be >= run.batch_period");
  if (run.n_trials < 1) throw ConfigError("run.n_trials must be >= 1");
  if (imitation.n_a < 1) throw ConfigError("imitation.n_a must be >= 1");
  if (imitation.distill.batch_size < 1 || imitation.distill.n_minibatches < 0) {
    throw ConfigError("imitation minibatch settings must be positive");
  }
  if (imitation.metric != "line" && imitation.metric != "discrete") {
    throw ConfigError("imitation.metric must be 'line' or 'discrete'");
  }
  if (latency.n_reps < 1000 || latency.batch < 1) throw ConfigError("latency.n_reps must be >= 1000 and latency.batch >= 1");
}

std::unique_ptr<Environment> make_environment(const EnvironmentSpec& spec) {
  if (spec.name == "wheel") return std::make_unique<WheelBandit>(spec.wheel);
  if (spec.name == "video") return std::make_unique<VideoTranscodeBandit>(spec.video_actions);
  if (spec.supervised.csv_path.empty()) {
    throw ConfigError("environment '" + spec.name + "' needs a csv path");
  }
  if (spec.name == "mushroom") {
    return std::make_unique<MushroomBandit>(load_supervised_csv(spec.supervised),
                                            spec.supervised.positive_label);
  }
  if (spec.name == "warfarin") {
    return std::make_unique<DosageBandit>(load_supervised_csv(spec.supervised),
                                          spec.supervised.k_levels);
  }
  if (spec.name == "classification") {
    return std::make_unique<ClassificationBandit>(load_supervised_csv(spec.supervised));
  }
  throw ConfigError("unknown environment '" + spec.name + "'");
}

std::unique_ptr<LearningPolicy> make_policy(const PolicySpec& spec, int context_dim, int k,
                                            std::uint64_t seed) {
  if (spec.name == "uniform") return std::make_unique<UniformRandomPolicy>(context_dim, k);
  if (spec.name == "linear_ts") return std::make_unique<LinearTsPolicy>(context_dim, k, spec.prior);
  if (spec.name == "neural_greedy") {
    return std::make_unique<NeuralGreedyPolicy>(context_dim, k, spec.net, seed);
  }
  if (spec.name == "neural_linear_ts") {
    return std::make_unique<NeuralLinearTsPolicy>(context_dim, k, spec.net, spec.prior, seed);
  }
  if (spec.name == "bootstrap_ts") {
    return std::make_unique<BootstrapTsPolicy>(context_dim, k, spec.replicates, spec.net,
                                               spec.weighting, seed);
  }
  throw ConfigError("unknown policy '" + spec.name + "'");
}

ActionMetric make_metric(const std::string& name, int k) {
  if (name == "line") return ActionMetric::line(k);
  if (name == "discrete") return ActionMetric::discrete(k);
  throw ConfigError("unknown metric '" + name + "'");
}

json imitation_to_json(const ImitationPolicy& policy) {
  const Mlp& net = policy.net();
  json layers = json::array();
  for (const auto& l : net.params().layers) {
    std::vector<double> w(l.weights.data(), l.weights.data() + l.weights.size());
    std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
    layers.push_back({{"rows", l.weights.rows()}, {"cols", l.weights.cols()},
                      {"weights_col_major", w}, {"bias", b}});
  }
  return {{"format", "tsil-imitation-v1"},
          {"input_dim", net.input_dim()},
          {"hidden", net.spec().hidden},
          {"num_actions", net.output_dim()},
          {"activation", "tanh"},
          {"layers", layers}};
}

ImitationPolicy imitation_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "tsil-imitation-v1") {
      throw ConfigError("unsupported imitation model format");
    }
    MlpSpec spec{j.at("input_dim").get<int>(), j.at("hidden").get<std::vector<int>>(),
                 Activation::tanh, j.at("num_actions").get<int>(), OutputHead::softmax};
    MlpParams params;
    for (const auto& l : j.at("layers")) {
      const auto rows = l.at("rows").get<Eigen::Index>();
      const auto cols = l.at("cols").get<Eigen::Index>();
      const auto w = l.at("weights_col_major").get<std::vector<double>>();
      const auto b = l.at("bias").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows) {
        throw ConfigError("imitation model layer has inconsistent sizes");
      }
      params.layers.push_back({Eigen::Map<const Matrix>(w.data(), rows, cols),
                               Eigen::Map<const Vector>(b.data(), rows)});
    }
    return ImitationPolicy(Mlp(spec, std::move(params)));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid imitation model: ") + e.what());
  }
}

}  // namespace tsil
