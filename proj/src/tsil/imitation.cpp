#include "tsil/imitation.hpp"

#include <cmath>

#include "tsil/csv.hpp"

namespace tsil {

void PropensityTable::validate() const {
  if (contexts.empty()) throw DimensionError("propensity table is empty");
  if (contexts.size() != propensities.size()) throw DimensionError("one propensity row per context");
  const int d = context_dim();
  const int k = num_actions();
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    check_dim(contexts[i], d, "table context");
    if (propensities[i].size() != k) throw DimensionError("ragged propensity rows");
  }
}

void PropensityTable::write_csv(const std::filesystem::path& path) const {
  validate();
  csv::Writer w(path);
  for (int j = 0; j < context_dim(); ++j) w.field("ctx_" + std::to_string(j));
  for (int a = 0; a < num_actions(); ++a) w.field("p_" + std::to_string(a));
  w.end_row();
  for (std::size_t i = 0; i < size(); ++i) {
    for (double x : contexts[i]) w.field(x);
    for (double p : propensities[i].probs()) w.field(p);
    w.end_row();
  }
}

PropensityTable PropensityTable::read_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  std::vector<std::size_t> ctx_cols;
  std::vector<std::size_t> p_cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    const auto& h = t.header[c];
    if (h.rfind("ctx_", 0) == 0) {
      ctx_cols.push_back(c);
    } else if (h.rfind("p_", 0) == 0) {
      p_cols.push_back(c);
    } else {
      throw IngestError("unexpected propensity-table column", -1, h);
    }
  }
  if (p_cols.empty()) throw IngestError("propensity table has no p_ columns");
  PropensityTable table;
  long row = 0;
  for (const auto& cells : t.rows) {
    ++row;
    auto number = [&](std::size_t c) {
      const auto v = csv::parse_double(cells[c]);
      if (!v) throw IngestError("non-numeric cell", row, t.header[c]);
      return *v;
    };
    Vector x(static_cast<Eigen::Index>(ctx_cols.size()));
    for (std::size_t j = 0; j < ctx_cols.size(); ++j) x[static_cast<Eigen::Index>(j)] = number(ctx_cols[j]);
    Vector p(static_cast<Eigen::Index>(p_cols.size()));
    for (std::size_t a = 0; a < p_cols.size(); ++a) p[static_cast<Eigen::Index>(a)] = number(p_cols[a]);
    try {
      // CSV rounding can leave the sum a few ulps away from 1.
      table.propensities.emplace_back(Vector(p / p.sum()));
    } catch (const Error& e) {
      throw IngestError(std::string("invalid propensity row: ") + e.what(), row);
    }
    table.contexts.push_back(std::move(x));
  }
  table.validate();
  return table;
}

PropensityTable simulate_propensities(const DecisionPolicy& policy,
                                      std::span<const Context> contexts, int n_a,
                                      std::uint64_t seed, int workers) {
  if (n_a < 1) throw DimensionError("n_a must be >= 1");
  PropensityTable table;
  table.n_simulated = n_a;
  table.contexts.assign(contexts.begin(), contexts.end());
  table.propensities.resize(contexts.size());
  parallel_for(contexts.size(), workers, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    table.propensities[i] = policy.distribution(contexts[i], n_a, rng);
  });
  return table;
}

// ---------------------------------------------------------------------------

ImitationPolicy::ImitationPolicy(Mlp net) : net_(std::move(net)) {
  if (net_.spec().head != OutputHead::softmax) throw ConfigError("imitation policy needs a softmax head");
  if (net_.spec().activation != Activation::tanh) throw ConfigError("imitation policy needs tanh layers");
  compile();
}

ImitationPolicy::ImitationPolicy(int context_dim, int k, std::vector<int> hidden, Rng& init_rng)
    : ImitationPolicy(Mlp::initialize(
          {context_dim, std::move(hidden), Activation::tanh, k, OutputHead::softmax}, init_rng)) {}

std::optional<ActionDistribution> ImitationPolicy::exact_distribution(const Context& context) const {
  return ActionDistribution(net_.forward(context));
}

void ImitationPolicy::set_params(MlpParams params) {
  net_.mutable_params() = std::move(params);
  compile();
}

void ImitationPolicy::step(RmspropState& optimizer, const MlpParams& grad) {
  rmsprop_step(optimizer, net_.mutable_params(), grad);
  compile();
}

void ImitationPolicy::compile() {
  const auto& layers = net_.params().layers;
  weights_f_.resize(layers.size());
  biases_f_.resize(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    weights_f_[i] = layers[i].weights.cast<float>();
    biases_f_[i] = layers[i].bias.cast<float>();
  }
}

ActionId ImitationPolicy::do_act(const Context& context, Rng& rng) const {
  thread_local Eigen::VectorXf x, a, b;
  thread_local Vector p;
  x = context.cast<float>();
  const Eigen::VectorXf* h = &x;
  const std::size_t n = weights_f_.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    Eigen::VectorXf& z = (i % 2 == 0) ? a : b;
    z = biases_f_[i];
    z.noalias() += weights_f_[i] * *h;
    z = z.array().tanh();
    h = &z;
  }
  Eigen::VectorXf& out = (n % 2 == 0) ? b : a;
  out = biases_f_[n - 1];
  out.noalias() += weights_f_[n - 1] * *h;
  p = (out.array() - out.maxCoeff()).exp().cast<double>();
  return rng.categorical(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

RmspropState make_distill_optimizer(const ImitationPolicy& policy, const DistillConfig& config) {
  return RmspropState(policy.net().params(), config.schedule, config.rho, config.eps);
}

// ---------------------------------------------------------------------------

double mean_table_kl(const PropensityTable& table, const DecisionPolicy& policy) {
  table.validate();
  Rng unused(0);
  double total = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto q = policy.distribution(table.contexts[i], 1, unused);
    total += kl_discrete(laplace_smooth(table.propensities[i]), q);
  }
  return total / static_cast<double>(table.size());
}

double mean_table_w1(const PropensityTable& table, const DecisionPolicy& policy,
                     const ActionMetric& metric) {
  table.validate();
  Rng unused(0);
  double total = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto q = policy.distribution(table.contexts[i], 1, unused);
    total += solve_kantorovich_dual(table.propensities[i], q, metric).value;
  }
  return total / static_cast<double>(table.size());
}

namespace {

Matrix softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) out.col(j) = softmax(logits.col(j));
  return out;
}

void check_table_for(const PropensityTable& table, const ImitationPolicy& policy) {
  table.validate();
  if (table.num_actions() != policy.num_actions() || table.context_dim() != policy.context_dim()) {
    throw DimensionError("propensity table does not match the imitation policy");
  }
}

// Minibatch indices drawn uniformly with replacement, packed into a column matrix.
Matrix draw_minibatch(const PropensityTable& table, int batch, Rng& rng, std::vector<int>& idx) {
  Matrix x(table.context_dim(), batch);
  idx.resize(static_cast<std::size_t>(batch));
  const int n = static_cast<int>(table.size());
  for (int j = 0; j < batch; ++j) {
    idx[static_cast<std::size_t>(j)] = rng.uniform_int(n);
    x.col(j) = table.contexts[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
  }
  return x;
}

// d/dlogits of the W1 objective for one context, averaged over sampled policy actions.
Vector wasserstein_logit_gradient(const Vector& probs, const ActionDistribution& target,
                                  const ActionMetric& metric, int n_samples, Rng* rng,
                                  bool baseline, double* w1_out) {
  const ActionDistribution current(probs / probs.sum());
  const auto sol = solve_kantorovich_dual(target, current, metric);
  if (w1_out) *w1_out = sol.value;
  const Vector& g = sol.potential;
  const double b = current.probs().dot(g);
  if (!rng) {
    // E_A[-(g(A) - b)(e_A - p)] = -p .* (g - p.g)
    return -current.probs().cwiseProduct(g.array().matrix() - Vector::Constant(g.size(), b));
  }
  const double shift = baseline ? b : 0.0;
  Vector dlogits = Vector::Zero(probs.size());
  const auto& p = current.probs();
  for (int s = 0; s < n_samples; ++s) {
    const int a = rng->categorical(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
    Vector score = -p;
    score[a] += 1.0;
    dlogits -= (g[a] - shift) * score;
  }
  return dlogits / n_samples;
}

}  // namespace

DistillReport distill_kl(const PropensityTable& table, ImitationPolicy& policy,
                         RmspropState& optimizer, const DistillConfig& config, Rng& rng) {
  check_table_for(table, policy);
  DistillReport report;
  report.initial_kl = mean_table_kl(table, policy);
  report.trace.reserve(static_cast<std::size_t>(config.n_minibatches));
  optimizer.reset_schedule();
  const int b = config.batch_size;
  const int k = policy.num_actions();
  std::vector<int> idx;
  for (int step = 0; step < config.n_minibatches; ++step) {
    const Matrix x = draw_minibatch(table, b, rng, idx);
    const Mlp::Pass pass = policy.net().run(x);
    const Matrix probs = softmax_columns(pass.logits);
    Matrix dlogits(k, b);
    double kl = 0.0;
    for (int j = 0; j < b; ++j) {
      const auto& target = table.propensities[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
      Vector t = target.probs();
      if (config.hard_samples) {
        const int a = rng.categorical(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())));
        t.setZero();
        t[a] = 1.0;
      }
      for (int a = 0; a < k; ++a) {
        if (t[a] > 0.0) kl += t[a] * (std::log(t[a]) - std::log(probs(a, j)));
      }
      // d/dlogits of cross-entropy under a softmax head.
      dlogits.col(j) = (probs.col(j) - t) / b;
    }
    report.trace.push_back(kl / b);
    policy.step(optimizer, policy.net().backward_pass(pass, dlogits));
  }
  report.final_kl = mean_table_kl(table, policy);
  return report;
}

MlpParams wasserstein_policy_gradient(const Context& context, const ActionDistribution& target,
                                      const ImitationPolicy& policy, const ActionMetric& metric,
                                      int n_policy_samples, Rng& rng, bool baseline) {
  if (n_policy_samples < 1) throw DimensionError("n_policy_samples must be >= 1");
  check_dim(context, policy.context_dim(), "context");
  const Vector dlogits = wasserstein_logit_gradient(policy.net().forward(context), target, metric,
                                                    n_policy_samples, &rng, baseline, nullptr);
  return policy.net().backward_logits(context, dlogits);
}

MlpParams wasserstein_policy_gradient_exact(const Context& context,
                                            const ActionDistribution& target,
                                            const ImitationPolicy& policy,
                                            const ActionMetric& metric) {
  check_dim(context, policy.context_dim(), "context");
  const Vector dlogits = wasserstein_logit_gradient(policy.net().forward(context), target, metric,
                                                    0, nullptr, true, nullptr);
  return policy.net().backward_logits(context, dlogits);
}

DistillReport distill_wasserstein(const PropensityTable& table, ImitationPolicy& policy,
                                  RmspropState& optimizer, const ActionMetric& metric,
                                  const DistillConfig& config, Rng& rng) {
  check_table_for(table, policy);
  if (metric.size() != policy.num_actions()) throw DimensionError("metric size differs from k");
  if (config.n_policy_samples < 1) throw ConfigError("n_policy_samples must be >= 1");
  DistillReport report;
  report.initial_kl = mean_table_kl(table, policy);
  report.initial_w1 = mean_table_w1(table, policy, metric);
  report.trace.reserve(static_cast<std::size_t>(config.n_minibatches));
  optimizer.reset_schedule();
  const int b = config.batch_size;
  std::vector<int> idx;
  for (int step = 0; step < config.n_minibatches; ++step) {
    const Matrix x = draw_minibatch(table, b, rng, idx);
    const Mlp::Pass pass = policy.net().run(x);
    const Matrix probs = softmax_columns(pass.logits);
    Matrix dlogits(policy.num_actions(), b);
    double w1_sum = 0.0;
    for (int j = 0; j < b; ++j) {
      double w1 = 0.0;
      dlogits.col(j) = wasserstein_logit_gradient(
                           probs.col(j),
                           table.propensities[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])],
                           metric, config.n_policy_samples, &rng, config.baseline, &w1) /
                       b;
      w1_sum += w1;
    }
    report.trace.push_back(w1_sum / b);
    policy.step(optimizer, policy.net().backward_pass(pass, dlogits));
  }
  report.final_kl = mean_table_kl(table, policy);
  report.final_w1 = mean_table_w1(table, policy, metric);
  return report;
}

}  // namespace tsil
