#ifndef DOWSN_H
#define DOWSN_H

/* C interface to the DOWSN simulator.
 *
 * Every function returns a dowsn_status. On failure a description is
 * available from dowsn_last_error() on the calling thread until its next
 * call into the library. Strings returned through char** are owned by the
 * caller and released with dowsn_string_free(). */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define DOWSN_API __declspec(dllexport)
#else
#define DOWSN_API __attribute__((visibility("default")))
#endif

typedef enum dowsn_status {
    DOWSN_OK = 0,
    DOWSN_ERR_INVALID_ARGUMENT = 1,
    DOWSN_ERR_CONFIG = 2,     /* configuration rejected; see dowsn_last_error() */
    DOWSN_ERR_IO = 3,
    DOWSN_ERR_RUN = 4,        /* at least one simulation failed */
    DOWSN_ERR_PAYLOAD = 5,    /* dimension does not fit a packet */
    DOWSN_ERR_ARITHMETIC = 6, /* fixed-point overflow, domain or division error */
    DOWSN_ERR_INTERNAL = 7
} dowsn_status;

typedef enum dowsn_trace_level {
    DOWSN_TRACE_NONE = 0,
    DOWSN_TRACE_IMPROVEMENTS = 1,
    DOWSN_TRACE_FULL = 2
} dowsn_trace_level;

DOWSN_API const char* dowsn_version(void);
DOWSN_API const char* dowsn_last_error(void);
DOWSN_API const char* dowsn_status_name(dowsn_status status);
DOWSN_API void dowsn_string_free(char* s);

/* ---- experiments ------------------------------------------------------- */

typedef struct dowsn_experiment dowsn_experiment;

/* overrides: "dotted.key=value" strings that win over the document. */
DOWSN_API dowsn_status dowsn_experiment_load_file(const char* path, const char* const* overrides,
                                                  size_t override_count, dowsn_experiment** out);
DOWSN_API dowsn_status dowsn_experiment_load_string(const char* yaml, const char* source_name,
                                                    const char* const* overrides, size_t override_count,
                                                    dowsn_experiment** out);
DOWSN_API void dowsn_experiment_free(dowsn_experiment* exp);

DOWSN_API dowsn_status dowsn_experiment_run_count(const dowsn_experiment* exp, size_t* runs);
DOWSN_API dowsn_status dowsn_experiment_name(const dowsn_experiment* exp, char** name);
DOWSN_API dowsn_status dowsn_experiment_hash(const dowsn_experiment* exp, char** hash);
DOWSN_API dowsn_status dowsn_experiment_canonical(const dowsn_experiment* exp, char** yaml);
DOWSN_API dowsn_status dowsn_experiment_variant_count(const dowsn_experiment* exp, size_t* count);
DOWSN_API dowsn_status dowsn_experiment_variant_label(const dowsn_experiment* exp, size_t index, char** label);

typedef void (*dowsn_progress_fn)(size_t done, size_t total, void* user);

/* Runs the whole sweep under output_root/<name>. run_dir (optional) receives
 * that directory and failures (optional) the number of failed runs; the
 * status is DOWSN_ERR_RUN when failures > 0. */
DOWSN_API dowsn_status dowsn_experiment_run(const dowsn_experiment* exp, const char* output_root,
                                            dowsn_progress_fn progress, void* user, char** run_dir,
                                            size_t* failures);

/* One simulation of the sweep. trace (optional) receives the serialized
 * trace; fitness (optional) the average and minimum node-local best. */
DOWSN_API dowsn_status dowsn_experiment_simulate(const dowsn_experiment* exp, size_t variant, const char* problem,
                                                 int dimension, int repetition, dowsn_trace_level level,
                                                 char** trace, double* network_fitness, double* min_fitness);

/* ---- post-processing of a run directory --------------------------------- */

DOWSN_API dowsn_status dowsn_tables(const char* run_dir, char** text);
DOWSN_API dowsn_status dowsn_trend(const char* run_dir, int stride, char** csv);

/* ---- utilities ---------------------------------------------------------- */

/* Payload bytes for a solution of the given dimension. */
DOWSN_API dowsn_status dowsn_payload_size(int dimension, size_t* bytes);

/* Benchmark value of x (Q16.16 raw values) for problem "f1".."f15". */
DOWSN_API dowsn_status dowsn_evaluate(const char* problem, const int32_t* x_raw, int dimension, int32_t* fitness_raw);

/* Energy (mJ) and average power (mW) from the time spent in each state (s),
 * with the default currents at 3 V. */
DOWSN_API dowsn_status dowsn_energy(double t_cpu, double t_lpm, double t_tx, double t_rx, double* energy_mj,
                                    double* power_mw, double* duty_cycle);

#ifdef __cplusplus
}
#endif

#endif
