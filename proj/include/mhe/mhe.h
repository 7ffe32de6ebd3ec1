/* C interface to the estimation and stability-analysis library.
 *
 * All functions return an mhe_status; on failure mhe_last_error() describes
 * the problem (thread-local, valid until the next call on the same thread).
 * Handles are opaque and must be released with the matching *_free. */
#ifndef MHE_MHE_H
#define MHE_MHE_H

#include <stddef.h>
#include <stdint.h>

#if defined(MHE_BUILDING_LIBRARY)
#define MHE_API __attribute__((visibility("default")))
#else
#define MHE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mhe_status {
  MHE_OK = 0,
  MHE_ERR_NULL = 1,
  MHE_ERR_DOMAIN = 2,
  MHE_ERR_PARSE = 3,
  MHE_ERR_CONFIG = 4,
  MHE_ERR_CAPABILITY = 5,
  MHE_ERR_INFEASIBLE = 6,
  MHE_ERR_DIVERGENCE = 7,
  MHE_ERR_BUFFER = 8,
  MHE_ERR_INTERNAL = 9
} mhe_status;

typedef enum mhe_verb { MHE_VERB_ANALYZE = 0, MHE_VERB_RUN = 1, MHE_VERB_SWEEP = 2, MHE_VERB_PROBE = 3 } mhe_verb;

typedef struct mhe_k mhe_k;
typedef struct mhe_kl mhe_kl;
typedef struct mhe_config mhe_config;
typedef struct mhe_experiment mhe_experiment;

MHE_API const char* mhe_version(void);
MHE_API const char* mhe_last_error(void);
MHE_API const char* mhe_status_name(mhe_status status);

/* Comparison functions in text form, e.g. "linear(2)" or "geom(2,1,0.5)". */
MHE_API mhe_status mhe_k_parse(const char* text, mhe_k** out);
MHE_API mhe_status mhe_k_eval(const mhe_k* f, double r, double* out);
MHE_API mhe_status mhe_k_inverse(const mhe_k* f, double y, double* out);
MHE_API void mhe_k_free(mhe_k* f);

MHE_API mhe_status mhe_kl_parse(const char* text, mhe_kl** out);
MHE_API mhe_status mhe_kl_eval(const mhe_kl* f, double r, int64_t s, double* out);
/* Writes the canonical text into buf (NUL-terminated); *needed receives the
 * required size including the terminator. MHE_ERR_BUFFER if cap is too small. */
MHE_API mhe_status mhe_kl_to_string(const mhe_kl* f, char* buf, size_t cap, size_t* needed);
MHE_API void mhe_kl_free(mhe_kl* f);

/* Experiment configuration (INI text with [experiment], [cost], [grid], [solver],
 * [falsification], [probe], [output] sections). */
MHE_API mhe_status mhe_config_load(const char* path, mhe_config** out);
MHE_API mhe_status mhe_config_parse(const char* text, mhe_config** out);
/* key is "section.name", e.g. "experiment.seed". */
MHE_API mhe_status mhe_config_set(mhe_config* config, const char* key, const char* value);
MHE_API mhe_status mhe_config_echo(const mhe_config* config, char* buf, size_t cap, size_t* needed);
MHE_API void mhe_config_free(mhe_config* config);

/* Runs a verb. The experiment's exit code (0 pass, 2 analysis or configuration
 * failure, 3 solver infeasibility, 4 bound violation) is reported separately
 * from the call status. */
MHE_API mhe_status mhe_experiment_run(const mhe_config* config, mhe_verb verb, int jobs, mhe_experiment** out);
MHE_API int mhe_experiment_exit_code(const mhe_experiment* exp);
MHE_API mhe_status mhe_experiment_summary(const mhe_experiment* exp, char* buf, size_t cap, size_t* needed);
MHE_API mhe_status mhe_experiment_report(const mhe_experiment* exp, char* buf, size_t cap, size_t* needed);
MHE_API mhe_status mhe_experiment_write(const mhe_experiment* exp, const char* dir);
MHE_API void mhe_experiment_free(mhe_experiment* exp);

#ifdef __cplusplus
}
#endif

#endif
