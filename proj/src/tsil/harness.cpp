#include "tsil/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "tsil/csv.hpp"

namespace tsil {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void optional_field(csv::Writer& w, const std::optional<double>& v) {
  if (v) {
    w.field(*v);
  } else {
    w.field("NA");
  }
}

}  // namespace

void MetricsLog::write_steps_csv(const std::filesystem::path& path) const {
  csv::Writer w(path);
  w.field("step").field("action").field("reward").field("regret").field("cumulative_regret");
  w.end_row();
  for (const auto& s : steps) {
    w.field(s.step).field(s.action).field(s.reward).field(s.regret).field(s.cumulative_regret);
    w.end_row();
  }
}

void MetricsLog::write_periods_csv(const std::filesystem::path& path) const {
  csv::Writer w(path);
  for (const char* h : {"period", "step", "cumulative_regret", "status", "table_rows", "mean_kl",
                        "mean_w1", "pinsker_violations"}) {
    w.field(h);
  }
  w.end_row();
  for (const auto& p : periods) {
    w.field(p.period).field(p.step).field(p.cumulative_regret);
    w.field(p.distilled ? "distilled" : p.skipped ? "skipped" : "updated");
    w.field(p.table_rows);
    optional_field(w, p.mean_kl);
    optional_field(w, p.mean_w1);
    w.field(p.pinsker_violations);
    w.end_row();
  }
}

void MetricsLog::write_timing_csv(const std::filesystem::path& path) const {
  csv::Writer w(path);
  w.field("period").field("step").field("update_seconds");
  w.end_row();
  for (const auto& p : periods) {
    w.field(p.period).field(p.step).field(p.update_seconds);
    w.end_row();
  }
}

// ---------------------------------------------------------------------------

Agent::Agent(const ExperimentConfig& config, int context_dim, int k, std::uint64_t seed)
    : imitation_spec_(config.imitation),
      base_(make_policy(config.policy, context_dim, k, derive_seed(seed, 1))),
      uniform_(context_dim, k),
      rng_(derive_seed(seed, 2)) {
  if (imitation_spec_.enabled) {
    Rng init = rng_.split(Stream::imitation);
    imitation_.emplace(context_dim, k, imitation_spec_.hidden, init);
    optimizer_.emplace(make_distill_optimizer(*imitation_, imitation_spec_.distill));
    metric_.emplace(make_metric(imitation_spec_.metric, k));
  }
}

const DecisionPolicy& Agent::deployed() const {
  if (!updated_) return uniform_;
  if (imitation_spec_.enabled) {
    if (!distilled_) return uniform_;
    return *imitation_;
  }
  return *base_;
}

PeriodMetrics Agent::end_period(std::span<const InteractionRecord> records,
                                const std::function<Context()>& fresh) {
  const auto start = Clock::now();
  PeriodMetrics m;
  m.period = ++period_;
  base_->update(records);
  updated_ = true;

  if (imitation_spec_.enabled) {
    std::vector<Context> period_contexts;
    period_contexts.reserve(records.size());
    for (const auto& r : records) period_contexts.push_back(r.context);

    std::span<const Context> contexts;
    std::vector<Context> fresh_contexts;
    switch (imitation_spec_.contexts) {
      case DistillContexts::all_observed:
        observed_.insert(observed_.end(), period_contexts.begin(), period_contexts.end());
        contexts = observed_;
        break;
      case DistillContexts::period_observed:
        contexts = period_contexts;
        break;
      case DistillContexts::fresh:
        for (int i = 0; i < imitation_spec_.n_fresh; ++i) fresh_contexts.push_back(fresh());
        contexts = fresh_contexts;
        break;
    }

    if (contexts.empty()) {
      m.skipped = true;
      m.mean_kl = last_kl_;
    } else {
      Rng period_rng = rng_.split(static_cast<std::uint64_t>(period_));
      const PropensityTable table =
          simulate_propensities(*base_, contexts, imitation_spec_.n_a,
                                derive_seed(period_rng.seed(), static_cast<std::uint64_t>(Stream::propensity)),
                                imitation_spec_.propensity_workers);
      Rng train_rng = period_rng.split(Stream::imitation);
      DistillReport report;
      if (imitation_spec_.objective == DistillObjective::kl) {
        report = distill_kl(table, *imitation_, *optimizer_, imitation_spec_.distill, train_rng);
      } else {
        report = distill_wasserstein(table, *imitation_, *optimizer_, *metric_,
                                     imitation_spec_.distill, train_rng);
      }
      distilled_ = true;
      m.distilled = true;
      m.table_rows = static_cast<long>(table.size());
      m.mean_kl = report.final_kl;
      m.mean_w1 = report.final_w1;
      last_kl_ = report.final_kl;
      for (std::size_t i = 0; i < table.size(); ++i) {
        const auto q = *imitation_->exact_distribution(table.contexts[i]);
        const auto d = compare_distributions(laplace_smooth(table.propensities[i]), q);
        if (!d.pinsker_ok) ++m.pinsker_violations;
      }
    }
  }
  m.update_seconds = seconds_since(start);
  return m;
}

// ---------------------------------------------------------------------------

MetricsLog run_trial(const ExperimentConfig& config, int trial) {
  config.validate();
  MetricsLog log;
  log.trial = trial;
  log.seed = derive_seed(config.run.seed, static_cast<std::uint64_t>(trial));
  const Rng trial_rng(log.seed);
  Rng env_rng = trial_rng.split(Stream::environment);
  Rng act_rng = trial_rng.split(Stream::action);
  Rng fresh_rng = trial_rng.split(Stream::propensity);

  auto env = make_environment(config.environment);
  Agent agent(config, env->context_dim(), env->num_actions(),
              trial_rng.split(Stream::policy).seed());
  auto fresh = [&] { return env->next(fresh_rng).context; };

  const long horizon = config.run.horizon;
  const long period = config.run.batch_period;
  log.steps.reserve(static_cast<std::size_t>(horizon));
  std::vector<InteractionRecord> batch;
  batch.reserve(static_cast<std::size_t>(period));
  double cumulative = 0.0;
  for (long t = 1; t <= horizon; ++t) {
    Round round = env->next(env_rng);
    const ActionId a = agent.deployed().act(round.context, act_rng);
    const double r = env->reward(round, a, env_rng);
    const double regret = instant_regret(round, a);
    cumulative += regret;
    log.steps.push_back({t, a, r, regret, cumulative});
    batch.push_back({std::move(round.context), a, r, t});
    if (t % period == 0 && t < horizon) {
      PeriodMetrics m = agent.end_period(batch, fresh);
      m.step = t;
      m.cumulative_regret = cumulative;
      log.periods.push_back(m);
      batch.clear();
    }
  }
  return log;
}

std::vector<MetricsLog> run_experiment(const ExperimentConfig& config, bool write_outputs) {
  config.validate();
  std::vector<MetricsLog> logs(static_cast<std::size_t>(config.run.n_trials));
  parallel_for(logs.size(), config.run.workers,
               [&](std::size_t i) { logs[i] = run_trial(config, static_cast<int>(i)); });
  if (write_outputs) {
    const auto& dir = config.output.dir;
    std::filesystem::create_directories(dir);
    for (const auto& log : logs) {
      const auto id = std::to_string(log.trial);
      if (config.output.per_step) log.write_steps_csv(dir / ("metrics_" + id + ".csv"));
      log.write_periods_csv(dir / ("periods_" + id + ".csv"));
      log.write_timing_csv(dir / ("timing_" + id + ".csv"));
    }
    aggregate_trials(logs).write_csv(dir / "summary.csv");
  }
  return logs;
}

// ---------------------------------------------------------------------------

TrialSummary aggregate_trials(std::span<const MetricsLog> logs) {
  if (logs.empty()) throw ConfigError("aggregating trials needs at least one log");
  const std::size_t t = logs.front().steps.size();
  for (const auto& l : logs) {
    if (l.steps.size() != t) throw DimensionError("trials have different horizons");
  }
  const double n = static_cast<double>(logs.size());
  TrialSummary s;
  s.steps.resize(t);
  s.mean.resize(t);
  s.sem.resize(t);
  for (std::size_t i = 0; i < t; ++i) {
    double sum = 0.0;
    for (const auto& l : logs) sum += l.steps[i].cumulative_regret;
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& l : logs) {
      const double d = l.steps[i].cumulative_regret - mean;
      ss += d * d;
    }
    s.steps[i] = logs.front().steps[i].step;
    s.mean[i] = mean;
    s.sem[i] = n > 1.0 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  }
  return s;
}

void TrialSummary::write_csv(const std::filesystem::path& path) const {
  csv::Writer w(path);
  w.field("step").field("mean_cumulative_regret").field("sem").field("lower").field("upper");
  w.end_row();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    w.field(steps[i]).field(mean[i]).field(sem[i]).field(mean[i] - 2.0 * sem[i]).field(mean[i] + 2.0 * sem[i]);
    w.end_row();
  }
}

FinalRegret final_regret(std::span<const MetricsLog> logs) {
  FinalRegret f;
  if (logs.empty()) return f;
  const double n = static_cast<double>(logs.size());
  for (const auto& l : logs) f.mean += l.final_cumulative_regret();
  f.mean /= n;
  if (logs.size() < 2) return f;
  double ss = 0.0;
  for (const auto& l : logs) ss += std::pow(l.final_cumulative_regret() - f.mean, 2);
  f.sem = std::sqrt(ss / (n - 1.0) / n);
  return f;
}

// ---------------------------------------------------------------------------

LatencyReport bench_latency(const DecisionPolicy& policy, long n_reps, Rng& rng, int batch) {
  if (n_reps < 1 || batch < 1) throw ConfigError("latency benchmark needs n_reps, batch >= 1");
  const int d = policy.context_dim();
  std::vector<Context> pool(256);
  for (auto& c : pool) {
    c.resize(d);
    for (int j = 0; j < d; ++j) c[j] = rng.uniform();
  }
  const long n_batches = std::max<long>(1, n_reps / batch);
  std::vector<double> per_call_ms(static_cast<std::size_t>(n_batches));
  volatile long sink = 0;
  std::size_t next = 0;
  for (long b = 0; b < n_batches; ++b) {
    const auto start = Clock::now();
    long acc = 0;
    for (int i = 0; i < batch; ++i) {
      acc += policy.act(pool[next], rng);
      next = (next + 1) % pool.size();
    }
    per_call_ms[static_cast<std::size_t>(b)] = 1e3 * seconds_since(start) / batch;
    sink = sink + acc;
  }
  LatencyReport r;
  r.policy = policy.name();
  r.context_dim = d;
  r.num_actions = policy.num_actions();
  r.n_reps = n_batches * batch;
  const double m = static_cast<double>(n_batches);
  for (double v : per_call_ms) r.mean_ms += v;
  r.mean_ms /= m;
  double ss = 0.0;
  for (double v : per_call_ms) ss += (v - r.mean_ms) * (v - r.mean_ms);
  r.sem2_ms = n_batches > 1 ? 2.0 * std::sqrt(ss / (m - 1.0) / m) : 0.0;
  std::nth_element(per_call_ms.begin(), per_call_ms.begin() + n_batches / 2, per_call_ms.end());
  r.median_batch_ms = per_call_ms[static_cast<std::size_t>(n_batches / 2)];
  return r;
}

std::vector<LatencyReport> run_latency_benchmark(const ExperimentConfig& config) {
  const auto& lat = config.latency;
  std::vector<PolicySpec> specs = lat.policies;
  if (specs.empty()) {
    for (const char* name : {"uniform", "linear_ts", "neural_greedy", "neural_linear_ts",
                             "bootstrap_ts", "imitation"}) {
      specs.push_back(policy_spec_from_json(nlohmann::json{{"name", name}}));
    }
  }
  Rng rng(lat.seed);
  std::vector<InteractionRecord> warmup(static_cast<std::size_t>(lat.warmup_records));
  for (std::size_t i = 0; i < warmup.size(); ++i) {
    auto& r = warmup[i];
    r.context.resize(lat.context_dim);
    for (int j = 0; j < lat.context_dim; ++j) r.context[j] = rng.uniform();
    r.action = rng.uniform_int(lat.num_actions);
    r.reward = rng.normal();
    r.step = static_cast<long>(i) + 1;
  }

  std::vector<LatencyReport> reports;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    Rng bench_rng = rng.split(static_cast<std::uint64_t>(s));
    if (specs[s].name == "imitation") {
      Rng init = bench_rng.split(Stream::imitation);
      ImitationPolicy policy(lat.context_dim, lat.num_actions, lat.imitation_hidden, init);
      PropensityTable table;
      for (std::size_t i = 0; i < std::min<std::size_t>(warmup.size(), 256); ++i) {
        table.contexts.push_back(warmup[i].context);
        table.propensities.push_back(ActionDistribution::uniform(lat.num_actions));
      }
      if (!table.empty()) {
        DistillConfig dc;
        dc.n_minibatches = 10;
        RmspropState opt = make_distill_optimizer(policy, dc);
        distill_kl(table, policy, opt, dc, bench_rng);
      }
      reports.push_back(bench_latency(policy, lat.n_reps, bench_rng, lat.batch));
    } else {
      auto policy = make_policy(specs[s], lat.context_dim, lat.num_actions, bench_rng.seed());
      policy->update(warmup);
      reports.push_back(bench_latency(*policy, lat.n_reps, bench_rng, lat.batch));
    }
  }
  return reports;
}

void write_latency_csv(std::span<const LatencyReport> reports, const std::filesystem::path& path) {
  csv::Writer w(path);
  for (const char* h : {"policy", "context_dim", "num_actions", "n_reps", "mean_ms", "sem2_ms",
                        "median_batch_ms"}) {
    w.field(h);
  }
  w.end_row();
  for (const auto& r : reports) {
    w.field(r.policy).field(r.context_dim).field(r.num_actions).field(r.n_reps);
    w.field(r.mean_ms).field(r.sem2_ms).field(r.median_batch_ms);
    w.end_row();
  }
}

}  // namespace tsil
