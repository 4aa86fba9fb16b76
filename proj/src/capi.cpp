#include "tsil/tsil.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <variant>

#include "json.hpp"
#include "tsil/config.hpp"
#include "tsil/divergences.hpp"
#include "tsil/harness.hpp"
#include "tsil/transport.hpp"

struct tsil_rng {
  tsil::Rng rng;
};

struct tsil_policy {
  std::unique_ptr<tsil::LearningPolicy> learner;
  std::unique_ptr<tsil::ImitationPolicy> fixed;

  const tsil::DecisionPolicy& get() const {
    if (learner) return *learner;
    return *fixed;
  }
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

struct InvalidArgument : tsil::Error {
  using tsil::Error::Error;
};

tsil_status fail(tsil_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <class F>
tsil_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return TSIL_OK;
  } catch (const InvalidArgument& e) {
    return fail(TSIL_ERR_INVALID_ARGUMENT, e.what());
  } catch (const tsil::DimensionError& e) {
    return fail(TSIL_ERR_DIMENSION, e.what());
  } catch (const tsil::NumericalError& e) {
    return fail(TSIL_ERR_NUMERICAL, e.what());
  } catch (const tsil::IngestError& e) {
    return fail(TSIL_ERR_INGEST, e.what());
  } catch (const tsil::ExhaustedError& e) {
    return fail(TSIL_ERR_EXHAUSTED, e.what());
  } catch (const tsil::ConfigError& e) {
    return fail(TSIL_ERR_CONFIG, e.what());
  } catch (const json::exception& e) {
    return fail(TSIL_ERR_CONFIG, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(TSIL_ERR_IO, e.what());
  } catch (const std::ios_base::failure& e) {
    return fail(TSIL_ERR_IO, e.what());
  } catch (const tsil::Error& e) {
    return fail(TSIL_ERR_INTERNAL, e.what());
  } catch (const std::exception& e) {
    return fail(TSIL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(TSIL_ERR_INTERNAL, "unknown exception");
  }
}

void require(bool ok, const char* message) {
  if (!ok) throw InvalidArgument(message);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(const json& j, char** out) {
  if (out != nullptr) *out = dup_string(j.dump());
}

tsil::Vector vector_from(const double* data, int n) {
  return Eigen::Map<const tsil::Vector>(data, n);
}

tsil::ActionMetric metric_from(const double* data, int k) {
  if (data == nullptr) return tsil::ActionMetric::line(k);
  return tsil::ActionMetric(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                           Eigen::RowMajor>>(data, k, k));
}

json report_json(const tsil::LatencyReport& r) {
  return {{"policy", r.policy},       {"context_dim", r.context_dim}, {"num_actions", r.num_actions},
          {"n_reps", r.n_reps},       {"mean_ms", r.mean_ms},         {"sem2_ms", r.sem2_ms},
          {"median_batch_ms", r.median_batch_ms}};
}

}  // namespace

extern "C" {

const char* tsil_status_name(tsil_status status) {
  switch (status) {
    case TSIL_OK: return "OK";
    case TSIL_ERR_INVALID_ARGUMENT: return "INVALID_ARGUMENT";
    case TSIL_ERR_DIMENSION: return "DIMENSION";
    case TSIL_ERR_NUMERICAL: return "NUMERICAL";
    case TSIL_ERR_INGEST: return "INGEST";
    case TSIL_ERR_EXHAUSTED: return "EXHAUSTED";
    case TSIL_ERR_CONFIG: return "CONFIG";
    case TSIL_ERR_IO: return "IO";
    case TSIL_ERR_INTERNAL: return "INTERNAL";
  }
  return "UNKNOWN";
}

const char* tsil_last_error(void) { return g_last_error.c_str(); }

const char* tsil_version(void) { return "0.1.0"; }

void tsil_string_free(char* s) { std::free(s); }

tsil_status tsil_rng_create(uint64_t seed, tsil_rng** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = new tsil_rng{tsil::Rng(seed)};
  });
}

void tsil_rng_destroy(tsil_rng* rng) { delete rng; }

tsil_status tsil_policy_create(const char* spec_json, int context_dim, int num_actions,
                               uint64_t seed, tsil_policy** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    require(context_dim >= 1 && num_actions >= 1, "dimensions must be positive");
    const json spec = spec_json == nullptr ? json::object() : json::parse(spec_json);
    auto p = std::make_unique<tsil_policy>();
    p->learner = tsil::make_policy(tsil::policy_spec_from_json(spec), context_dim, num_actions, seed);
    *out = p.release();
  });
}

tsil_status tsil_policy_load(const char* model_path, tsil_policy** out) {
  return guarded([&] {
    require(out != nullptr && model_path != nullptr, "null argument");
    std::ifstream in(model_path);
    if (!in) throw std::ios_base::failure(std::string("cannot open ") + model_path);
    const json j = json::parse(in);
    auto p = std::make_unique<tsil_policy>();
    p->fixed = std::make_unique<tsil::ImitationPolicy>(tsil::imitation_from_json(j));
    *out = p.release();
  });
}

void tsil_policy_destroy(tsil_policy* policy) { delete policy; }

tsil_status tsil_policy_dims(const tsil_policy* policy, int* context_dim, int* num_actions) {
  return guarded([&] {
    require(policy != nullptr, "policy is null");
    if (context_dim != nullptr) *context_dim = policy->get().context_dim();
    if (num_actions != nullptr) *num_actions = policy->get().num_actions();
  });
}

tsil_status tsil_policy_act(const tsil_policy* policy, const double* context, int context_dim,
                            tsil_rng* rng, int* action) {
  return guarded([&] {
    require(policy != nullptr && context != nullptr && rng != nullptr && action != nullptr,
            "null argument");
    *action = policy->get().act(vector_from(context, context_dim), rng->rng);
  });
}

tsil_status tsil_policy_distribution(const tsil_policy* policy, const double* context,
                                     int context_dim, tsil_rng* rng, double* probs,
                                     int num_actions) {
  return guarded([&] {
    require(policy != nullptr && context != nullptr && rng != nullptr && probs != nullptr,
            "null argument");
    if (num_actions != policy->get().num_actions()) {
      throw tsil::DimensionError("distribution length does not match the number of actions");
    }
    const auto d = policy->get().distribution(vector_from(context, context_dim), 4096, rng->rng);
    for (int a = 0; a < num_actions; ++a) probs[a] = d[a];
  });
}

tsil_status tsil_policy_update(tsil_policy* policy, const double* contexts, const int* actions,
                               const double* rewards, size_t n, int context_dim) {
  return guarded([&] {
    require(policy != nullptr, "policy is null");
    require(policy->learner != nullptr, "loaded imitation policies cannot be updated");
    require(n == 0 || (contexts != nullptr && actions != nullptr && rewards != nullptr),
            "null argument");
    std::vector<tsil::InteractionRecord> records(n);
    for (size_t i = 0; i < n; ++i) {
      records[i] = {vector_from(contexts + i * static_cast<size_t>(context_dim), context_dim),
                    actions[i], rewards[i], static_cast<long>(i) + 1};
    }
    policy->learner->update(records);
  });
}

tsil_status tsil_kl(const double* p, const double* q, int k, double* out) {
  return guarded([&] {
    require(p != nullptr && q != nullptr && out != nullptr && k >= 1, "invalid argument");
    *out = tsil::kl_discrete(tsil::ActionDistribution(vector_from(p, k)),
                             tsil::ActionDistribution(vector_from(q, k)));
  });
}

tsil_status tsil_tv(const double* p, const double* q, int k, double* out) {
  return guarded([&] {
    require(p != nullptr && q != nullptr && out != nullptr && k >= 1, "invalid argument");
    *out = tsil::tv_discrete(tsil::ActionDistribution(vector_from(p, k)),
                             tsil::ActionDistribution(vector_from(q, k)));
  });
}

tsil_status tsil_wasserstein(const double* p, const double* q, int k, const double* metric,
                             double* out) {
  return guarded([&] {
    require(p != nullptr && q != nullptr && out != nullptr && k >= 1, "invalid argument");
    *out = tsil::solve_kantorovich_dual(tsil::ActionDistribution(vector_from(p, k)),
                                        tsil::ActionDistribution(vector_from(q, k)),
                                        metric_from(metric, k))
               .value;
  });
}

tsil_status tsil_run_experiment(const char* config_path, const char* output_dir,
                                char** summary_json) {
  return guarded([&] {
    require(config_path != nullptr, "config path is null");
    auto config = tsil::ExperimentConfig::from_file(config_path);
    if (output_dir != nullptr) config.output.dir = output_dir;
    const auto logs = tsil::run_experiment(config, true);
    const auto final = tsil::final_regret(logs);
    json trials = json::array();
    for (const auto& l : logs) {
      trials.push_back({{"trial", l.trial}, {"final_cumulative_regret", l.final_cumulative_regret()}});
    }
    emit({{"output_dir", config.output.dir.string()},
          {"n_trials", logs.size()},
          {"mean_final_regret", final.mean},
          {"sem_final_regret", final.sem},
          {"trials", trials}},
         summary_json);
  });
}

tsil_status tsil_bench_latency(const char* config_path, const char* out_csv, char** summary_json) {
  return guarded([&] {
    require(config_path != nullptr, "config path is null");
    const auto config = tsil::ExperimentConfig::from_file(config_path);
    const auto reports = tsil::run_latency_benchmark(config);
    std::filesystem::path out = out_csv != nullptr ? std::filesystem::path(out_csv)
                                                   : config.output.dir / "latency.csv";
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    tsil::write_latency_csv(reports, out);
    json rows = json::array();
    for (const auto& r : reports) rows.push_back(report_json(r));
    emit({{"output", out.string()}, {"reports", rows}}, summary_json);
  });
}

tsil_status tsil_distill_table(const char* table_csv, const char* out_model,
                               const char* options_json, char** summary_json) {
  return guarded([&] {
    require(table_csv != nullptr && out_model != nullptr, "null path");
    const json options = options_json == nullptr ? json::object() : json::parse(options_json);
    json wrapped = {{"imitation", options}};
    wrapped["imitation"]["enabled"] = true;
    const std::uint64_t seed = options.value("seed", std::uint64_t{0});
    wrapped["imitation"].erase("seed");
    const auto spec = tsil::ExperimentConfig::from_json(wrapped).imitation;

    const auto table = tsil::PropensityTable::read_csv(table_csv);
    const int d = static_cast<int>(table.contexts.front().size());
    const int k = table.propensities.front().size();
    tsil::Rng rng(seed);
    tsil::Rng init = rng.split(tsil::Stream::imitation);
    tsil::ImitationPolicy policy(d, k, spec.hidden, init);
    auto optimizer = tsil::make_distill_optimizer(policy, spec.distill);
    tsil::DistillReport report;
    if (spec.objective == tsil::DistillObjective::kl) {
      report = tsil::distill_kl(table, policy, optimizer, spec.distill, rng);
    } else {
      report = tsil::distill_wasserstein(table, policy, optimizer, tsil::make_metric(spec.metric, k),
                                         spec.distill, rng);
    }
    std::ofstream out(out_model);
    if (!out) throw std::ios_base::failure(std::string("cannot write ") + out_model);
    out << tsil::imitation_to_json(policy).dump(1) << '\n';
    json s = {{"rows", table.size()},
              {"context_dim", d},
              {"num_actions", k},
              {"initial_kl", report.initial_kl},
              {"final_kl", report.final_kl},
              {"model", out_model}};
    if (report.final_w1) {
      s["initial_w1"] = *report.initial_w1;
      s["final_w1"] = *report.final_w1;
    }
    emit(s, summary_json);
  });
}

tsil_status tsil_eval_offline(const char* logged_csv, const char* config_path, char** summary_json) {
  return guarded([&] {
    require(logged_csv != nullptr && config_path != nullptr, "null path");
    const auto config = tsil::ExperimentConfig::from_file(config_path);
    const auto data = tsil::LoggedDataset::read_csv(logged_csv);
    if (data.tuples.empty()) throw tsil::IngestError("logged dataset is empty");
    const tsil::Rng root(config.run.seed);
    tsil::Agent agent(config, data.context_dim(), data.num_actions,
                      root.split(tsil::Stream::policy).seed());
    tsil::Rng replay_rng = root.split(tsil::Stream::replay);
    tsil::Rng fresh_rng = root.split(tsil::Stream::propensity);
    std::size_t fresh_cursor = 0;
    auto fresh = [&] {
      fresh_cursor = (fresh_cursor + 1 + static_cast<std::size_t>(fresh_rng.uniform_int(
                                             static_cast<int>(data.tuples.size())))) %
                     data.tuples.size();
      return data.tuples[fresh_cursor].context;
    };
    tsil::ReplayHooks hooks{[&]() -> const tsil::DecisionPolicy& { return agent.deployed(); },
                            [&](std::span<const tsil::InteractionRecord> batch) {
                              agent.end_period(batch, fresh);
                            }};
    const auto result =
        tsil::replay_evaluate(data, hooks, config.run.horizon, config.run.batch_period, replay_rng);
    emit({{"accepted", result.accepted.size()},
          {"consumed", result.consumed},
          {"acceptance_rate", result.acceptance_rate()},
          {"mean_reward", result.mean_reward()}},
         summary_json);
  });
}

tsil_status tsil_generate_data(const char* env, long n, const char* out_csv, uint64_t seed,
                               char** summary_json) {
  return guarded([&] {
    require(env != nullptr && out_csv != nullptr, "null argument");
    require(n >= 1, "n must be >= 1");
    const std::string name = env;
    const std::filesystem::path out = out_csv;
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    tsil::Rng rng(seed);
    std::string format;
    if (name == "mushroom") {
      tsil::write_synthetic_mushroom_csv(out, static_cast<std::size_t>(n), rng);
      format = "supervised";
    } else if (name == "warfarin") {
      tsil::write_synthetic_warfarin_csv(out, static_cast<std::size_t>(n), rng);
      format = "supervised";
    } else if (name == "wheel" || name == "video") {
      std::unique_ptr<tsil::Environment> e;
      if (name == "wheel") {
        e = std::make_unique<tsil::WheelBandit>();
      } else {
        e = std::make_unique<tsil::VideoTranscodeBandit>();
      }
      tsil::generate_logged(*e, static_cast<std::size_t>(n), rng).write_csv(out);
      format = "logged";
    } else {
      throw InvalidArgument("unknown environment '" + name +
                            "' (expected wheel, video, mushroom or warfarin)");
    }
    emit({{"env", name}, {"rows", n}, {"format", format}, {"output", out.string()}}, summary_json);
  });
}

}  // extern "C"
