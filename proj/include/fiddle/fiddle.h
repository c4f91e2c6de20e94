/* fiddle.h - C interface to the FIDDLE average-treatment-effect library.
 *
 * All entry points return fiddle_status; FIDDLE_OK means success. On failure
 * fiddle_last_error() gives a human-readable detail message for the calling
 * thread. Objects returned through out-parameters are owned by the caller and
 * must be released with the matching *_free function. Strings returned from
 * accessor functions are owned by the handle they came from and stay valid
 * until that handle is freed.
 */

#ifndef FIDDLE_FIDDLE_H
#define FIDDLE_FIDDLE_H

#include <stdint.h>

#if defined(_WIN32)
#define FIDDLE_API __declspec(dllexport)
#else
#define FIDDLE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fiddle_status {
  FIDDLE_OK = 0,
  FIDDLE_ERR_INVALID_ARGUMENT = 1,
  FIDDLE_ERR_PARSE = 2,
  FIDDLE_ERR_DIMENSION = 3,
  FIDDLE_ERR_DEGENERATE_DATA = 4,
  FIDDLE_ERR_IO = 5,
  FIDDLE_ERR_NON_FINITE = 6,
  FIDDLE_ERR_INTERNAL = 7
} fiddle_status;

typedef struct fiddle_dataset fiddle_dataset;
typedef struct fiddle_config fiddle_config;
typedef struct fiddle_result fiddle_result;

FIDDLE_API const char* fiddle_version(void);

/* Thread-local detail message for the most recent failing call. */
FIDDLE_API const char* fiddle_last_error(void);

/* ---- datasets ---------------------------------------------------------- */

/* Loads the CSV schema y,T,x1,...,xp[,pi_star[,mu0_star,mu1_star]]. */
FIDDLE_API fiddle_status fiddle_dataset_from_csv(const char* path,
                                                 fiddle_dataset** out);

/* Draws one replication of the synthetic benchmark process. `dgp_json`
 * holds {"n":..., "p":..., "seed":..., "noise_sd":0.5}; omitted keys take
 * their defaults. Oracle columns are populated. */
FIDDLE_API fiddle_status fiddle_dataset_generate(const char* dgp_json,
                                                 fiddle_dataset** out);

/* Writes the CSV schema above; oracle columns only when include_oracle != 0
 * and the dataset carries them. Decimals use 17 significant digits so a
 * load/save round trip is exact. */
FIDDLE_API fiddle_status fiddle_dataset_to_csv(const fiddle_dataset* dataset,
                                               const char* path,
                                               int include_oracle);

FIDDLE_API int64_t fiddle_dataset_rows(const fiddle_dataset* dataset);
FIDDLE_API int64_t fiddle_dataset_cols(const fiddle_dataset* dataset);
FIDDLE_API void fiddle_dataset_free(fiddle_dataset* dataset);

/* ---- configuration ------------------------------------------------------ */

/* Fresh configuration with the reference defaults (method fiddle, m = 50,
 * rbar = 10, L = 4, N = 400, lr = 0.001, 100 epochs, batch 64, tau = 0.005,
 * lambda = 1.3 log(p)/n). */
FIDDLE_API fiddle_status fiddle_config_create(fiddle_config** out);

/* Overlays the keys present in a JSON document onto the configuration.
 * Recognized keys: method, m_pretrain, rbar, seed, reps, preset,
 * lambda_from_rule, fastnn{...}, dgp{...}. Unknown keys are rejected. */
FIDDLE_API fiddle_status fiddle_config_update_json(fiddle_config* config,
                                                   const char* json_text);

/* Applies "desk" or "paper". */
FIDDLE_API fiddle_status fiddle_config_apply_preset(fiddle_config* config,
                                                    const char* name);

/* Canonical JSON rendering; owned by the handle. */
FIDDLE_API const char* fiddle_config_json(const fiddle_config* config);

/* 16-hex-digit digest of the canonical JSON, recorded in every output. */
FIDDLE_API const char* fiddle_config_digest(const fiddle_config* config);

FIDDLE_API void fiddle_config_free(fiddle_config* config);

/* ---- estimation --------------------------------------------------------- */

/* Runs the configured method on the dataset. Oracle methods require the
 * corresponding oracle columns. The result JSON is
 * {method, estimate, sigma2, ci:[lo,hi], n, seed, config_digest}. */
FIDDLE_API fiddle_status fiddle_fit(const fiddle_config* config,
                                    const fiddle_dataset* dataset,
                                    fiddle_result** out);

/* Replication benchmark over a grid. `grid_json` holds
 * {"n":[...], "p":[...], "methods":[...]}; reps and the base seed come from
 * the configuration. Rows land in both JSON and CSV renderings. Replications
 * run concurrently up to FIDDLE_THREADS (or `threads` if > 0). */
FIDDLE_API fiddle_status fiddle_benchmark(const fiddle_config* config,
                                          const char* grid_json, int threads,
                                          fiddle_result** out);

/* Fast invariant suite (formula identities, gradient checks, Gram-trick
 * equivalence, doubly-robust identity). *all_passed is set to 1/0; the
 * report JSON lists each check with its timing. */
FIDDLE_API fiddle_status fiddle_selftest(fiddle_result** out, int* all_passed);

/* ---- results ------------------------------------------------------------ */

FIDDLE_API const char* fiddle_result_json(const fiddle_result* result);

/* CSV rendering (benchmark results only; NULL otherwise). */
FIDDLE_API const char* fiddle_result_csv(const fiddle_result* result);

/* Point estimate / variance accessors for fit results. */
FIDDLE_API fiddle_status fiddle_result_estimate(const fiddle_result* result,
                                                double* out);
FIDDLE_API fiddle_status fiddle_result_ci(const fiddle_result* result,
                                          double* lo, double* hi);

/* Serialized nuisance models from the latest fit (NULL when the method has
 * no trained networks, e.g. the oracle baselines). */
FIDDLE_API const char* fiddle_result_models_json(const fiddle_result* result);

FIDDLE_API void fiddle_result_free(fiddle_result* result);

#ifdef __cplusplus
}
#endif

#endif /* FIDDLE_FIDDLE_H */
