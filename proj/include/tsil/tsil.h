/* C interface to the tsil contextual-bandit library. */
#ifndef TSIL_TSIL_H
#define TSIL_TSIL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TSIL_API __declspec(dllexport)
#else
#define TSIL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tsil_status {
  TSIL_OK = 0,
  TSIL_ERR_INVALID_ARGUMENT = 1,
  TSIL_ERR_DIMENSION = 2,
  TSIL_ERR_NUMERICAL = 3,
  TSIL_ERR_INGEST = 4,
  TSIL_ERR_EXHAUSTED = 5,
  TSIL_ERR_CONFIG = 6,
  TSIL_ERR_IO = 7,
  TSIL_ERR_INTERNAL = 8
} tsil_status;

/* Upper-case name of a status code, e.g. "DIMENSION". */
TSIL_API const char* tsil_status_name(tsil_status status);
/* Message of the last failed call on this thread ("" if none). */
TSIL_API const char* tsil_last_error(void);
TSIL_API const char* tsil_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
TSIL_API void tsil_string_free(char* s);

typedef struct tsil_rng tsil_rng;
TSIL_API tsil_status tsil_rng_create(uint64_t seed, tsil_rng** out);
TSIL_API void tsil_rng_destroy(tsil_rng* rng);

typedef struct tsil_policy tsil_policy;

/* spec_json is a policy section as used in experiment configs, e.g.
   {"name": "linear_ts", "prior": {"alpha": 6, "beta": 6, "lambda": 0.25}}. */
TSIL_API tsil_status tsil_policy_create(const char* spec_json, int context_dim, int num_actions,
                                        uint64_t seed, tsil_policy** out);
/* Loads an imitation model written by tsil_distill_table. The result cannot be updated. */
TSIL_API tsil_status tsil_policy_load(const char* model_path, tsil_policy** out);
TSIL_API void tsil_policy_destroy(tsil_policy* policy);

TSIL_API tsil_status tsil_policy_dims(const tsil_policy* policy, int* context_dim,
                                      int* num_actions);
TSIL_API tsil_status tsil_policy_act(const tsil_policy* policy, const double* context,
                                     int context_dim, tsil_rng* rng, int* action);
/* Writes num_actions probabilities: exact where available, else a 4096-draw histogram. */
TSIL_API tsil_status tsil_policy_distribution(const tsil_policy* policy, const double* context,
                                              int context_dim, tsil_rng* rng, double* probs,
                                              int num_actions);
/* contexts is row-major n x context_dim. */
TSIL_API tsil_status tsil_policy_update(tsil_policy* policy, const double* contexts,
                                        const int* actions, const double* rewards, size_t n,
                                        int context_dim);

/* Divergences between discrete distributions of length k. metric is row-major k x k;
   NULL selects |i - j|. */
TSIL_API tsil_status tsil_kl(const double* p, const double* q, int k, double* out);
TSIL_API tsil_status tsil_tv(const double* p, const double* q, int k, double* out);
TSIL_API tsil_status tsil_wasserstein(const double* p, const double* q, int k,
                                      const double* metric, double* out);

/* High-level entry points. Each writes a JSON summary to *summary_json on success. */
/* output_dir (nullable) overrides the config's output.dir. */
TSIL_API tsil_status tsil_run_experiment(const char* config_path, const char* output_dir,
                                         char** summary_json);
TSIL_API tsil_status tsil_bench_latency(const char* config_path, const char* out_csv,
                                        char** summary_json);
/* options_json (nullable): {"objective", "hidden", "n_minibatches", "batch_size", "seed",
   "metric"}. */
TSIL_API tsil_status tsil_distill_table(const char* table_csv, const char* out_model,
                                        const char* options_json, char** summary_json);
TSIL_API tsil_status tsil_eval_offline(const char* logged_csv, const char* config_path,
                                       char** summary_json);
/* env: wheel | video (logged tuples under a uniform policy) or mushroom | warfarin
   (supervised CSV). */
TSIL_API tsil_status tsil_generate_data(const char* env, long n, const char* out_csv,
                                        uint64_t seed, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
