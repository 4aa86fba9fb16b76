#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tsil/tsil.h"

namespace {

int report(tsil_status status, char* summary) {
  if (status != TSIL_OK) {
    std::string message = tsil_last_error();
    for (char& c : message) {
      if (c == '\n' || c == '\r') c = ' ';
    }
    std::fprintf(stderr, "error: code=%s message=%s\n", tsil_status_name(status), message.c_str());
    return static_cast<int>(status);
  }
  std::printf("%s\n", summary != nullptr ? summary : "{}");
  tsil_string_free(summary);
  return 0;
}

std::string distill_options(const std::string& objective, const std::vector<int>& hidden,
                            int minibatches, unsigned long long seed, const std::string& metric) {
  std::ostringstream os;
  os << "{\"objective\":\"" << objective << "\",\"metric\":\"" << metric << "\",\"seed\":" << seed;
  if (minibatches >= 0) os << ",\"n_minibatches\":" << minibatches;
  if (!hidden.empty()) {
    os << ",\"hidden\":[";
    for (std::size_t i = 0; i < hidden.size(); ++i) os << (i ? "," : "") << hidden[i];
    os << "]";
  }
  os << "}";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thompson sampling and imitation-learning bandit experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tsil_version());

  std::string config, out_dir, out_file;
  auto* run = app.add_subcommand("run", "Run an experiment and write metrics CSVs");
  run->add_option("config", config, "Experiment config (JSON)")->required();
  run->add_option("--output-dir", out_dir, "Override output.dir from the config");

  auto* bench = app.add_subcommand("bench-latency", "Time decision latency per policy");
  bench->add_option("config", config, "Experiment config (JSON)")->required();
  bench->add_option("--out", out_file, "Latency CSV path (default <output.dir>/latency.csv)");

  std::string table, model, objective = "kl", metric = "line";
  std::vector<int> hidden;
  int minibatches = -1;
  unsigned long long seed = 0;
  auto* distill = app.add_subcommand("distill", "Fit an imitation policy to a propensity table");
  distill->add_option("table", table, "Propensity table CSV (ctx_*, p_*)")->required();
  distill->add_option("out", model, "Model JSON to write")->required();
  distill->add_option("--objective", objective, "kl or wasserstein")
      ->check(CLI::IsMember({"kl", "wasserstein"}));
  distill->add_option("--metric", metric, "Action metric for wasserstein")
      ->check(CLI::IsMember({"line", "discrete"}));
  distill->add_option("--hidden", hidden, "Hidden layer widths")->delimiter(',');
  distill->add_option("--minibatches", minibatches, "Number of RMSProp minibatches");
  distill->add_option("--seed", seed, "Random seed");

  std::string logged;
  auto* eval = app.add_subcommand("eval-offline", "Rejection-sampling replay on logged data");
  eval->add_option("logged", logged, "Logged CSV (ctx_*, action, reward)")->required();
  eval->add_option("config", config, "Experiment config (JSON)")->required();

  std::string env, data_out;
  long n = 0;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset");
  gen->add_option("env", env, "wheel | video | mushroom | warfarin")->required();
  gen->add_option("n", n, "Number of rows")->required();
  gen->add_option("out", data_out, "Output CSV")->required();
  gen->add_option("--seed", seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string message = e.what();
    for (char& c : message) {
      if (c == '\n') c = ' ';
    }
    std::fprintf(stderr, "error: code=%s message=%s\n",
                 tsil_status_name(TSIL_ERR_INVALID_ARGUMENT), message.c_str());
    return TSIL_ERR_INVALID_ARGUMENT;
  }

  char* summary = nullptr;
  if (*run) {
    const char* dir = out_dir.empty() ? nullptr : out_dir.c_str();
    const tsil_status status = tsil_run_experiment(config.c_str(), dir, &summary);
    return report(status, summary);
  }
  if (*bench) {
    const char* out = out_file.empty() ? nullptr : out_file.c_str();
    const tsil_status status = tsil_bench_latency(config.c_str(), out, &summary);
    return report(status, summary);
  }
  if (*distill) {
    const auto options = distill_options(objective, hidden, minibatches, seed, metric);
    const tsil_status status =
        tsil_distill_table(table.c_str(), model.c_str(), options.c_str(), &summary);
    return report(status, summary);
  }
  if (*eval) {
    const tsil_status status = tsil_eval_offline(logged.c_str(), config.c_str(), &summary);
    return report(status, summary);
  }
  const tsil_status status = tsil_generate_data(env.c_str(), n, data_out.c_str(), seed, &summary);
  return report(status, summary);
}
