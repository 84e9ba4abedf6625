/* C interface of the pmdflow toolkit: cylinder-wake simulation, pressure
 * POD and pressure-mode force decomposition.
 *
 * Every call returns a pmdflow_status. On failure a message is available
 * from pmdflow_last_error() on the calling thread until the next call.
 * Handles are opaque and owned by the caller, who releases them with the
 * matching *_free function (which accepts NULL). */
#ifndef PMDFLOW_PMDFLOW_H
#define PMDFLOW_PMDFLOW_H

#include <stddef.h>
#include <stdint.h>

#if defined(PMDFLOW_BUILDING)
#define PMDFLOW_API __attribute__((visibility("default")))
#else
#define PMDFLOW_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pmdflow_status {
    PMDFLOW_OK = 0,
    PMDFLOW_E_VALIDATION = 1,
    PMDFLOW_E_CONFIG = 2,
    PMDFLOW_E_POISSON = 3,
    PMDFLOW_E_CFL = 4,
    PMDFLOW_E_NONFINITE = 5,
    PMDFLOW_E_STREAM_ENDED = 6,
    PMDFLOW_E_EIGEN = 7,
    PMDFLOW_E_DEGENERATE_MODE = 8,
    PMDFLOW_E_MISSING_CASE = 9,
    PMDFLOW_E_NO_CONFIGS = 10,
    PMDFLOW_E_IO = 11,
    PMDFLOW_E_INTERNAL = 12,
    PMDFLOW_E_ARGUMENT = 13
} pmdflow_status;

typedef struct pmdflow_config pmdflow_config;
typedef struct pmdflow_pod pmdflow_pod;

/* Progress messages; `user` is passed through unchanged. */
typedef void (*pmdflow_log_fn)(const char* message, void* user);

PMDFLOW_API const char* pmdflow_version(void);
PMDFLOW_API const char* pmdflow_last_error(void);
PMDFLOW_API const char* pmdflow_status_name(pmdflow_status status);
/* Process exit status for a result: 0 ok, 2 configuration errors, 1 otherwise. */
PMDFLOW_API int pmdflow_exit_code(pmdflow_status status);

/* ---- case configuration ------------------------------------------------ */

PMDFLOW_API pmdflow_status pmdflow_config_load(const char* path, pmdflow_config** out);
PMDFLOW_API pmdflow_status pmdflow_config_parse(const char* text, const char* case_id, pmdflow_config** out);
PMDFLOW_API void pmdflow_config_free(pmdflow_config* cfg);

/* "full" or "ci". */
PMDFLOW_API pmdflow_status pmdflow_config_set_profile(pmdflow_config* cfg, const char* profile);
/* "NxM": radial x circumferential nodes. */
PMDFLOW_API pmdflow_status pmdflow_config_set_grid(pmdflow_config* cfg, const char* spec);
PMDFLOW_API pmdflow_status pmdflow_config_set_seed(pmdflow_config* cfg, uint64_t seed);

/* Copies a NUL-terminated string into buf; `needed` (may be NULL) receives
 * the size including the terminator. PMDFLOW_E_ARGUMENT if buf is too small;
 * buf NULL with len 0 only queries the size. */
PMDFLOW_API pmdflow_status pmdflow_config_case_id(const pmdflow_config* cfg, char* buf, size_t len, size_t* needed);
PMDFLOW_API pmdflow_status pmdflow_config_hash(const pmdflow_config* cfg, char* buf, size_t len, size_t* needed);
PMDFLOW_API pmdflow_status pmdflow_config_text(const pmdflow_config* cfg, char* buf, size_t len, size_t* needed);

/* ---- pipeline ---------------------------------------------------------- */

/* stage: "simulate", "pod", "pmd" or "all". Artifacts go to out_root/<case_id>. */
PMDFLOW_API pmdflow_status pmdflow_run_stage(const pmdflow_config* cfg, const char* stage, const char* out_root,
                                             int resume, pmdflow_log_fn log, void* user);

/* Runs every *.cfg in config_dir with at most `jobs` concurrent cases, then
 * the cross-case report. profile and grid may be NULL. `n_failed` (may be
 * NULL) receives the number of failed cases; per-case messages go to `log`. */
PMDFLOW_API pmdflow_status pmdflow_run_suite(const char* config_dir, const char* out_root, int jobs, int resume,
                                             const char* profile, const char* grid, pmdflow_log_fn log, void* user,
                                             int* n_failed);

/* Writes out_root/regime_summary.csv from the completed case directories. */
PMDFLOW_API pmdflow_status pmdflow_report(const char* out_root);

/* ---- POD of an arbitrary ensemble --------------------------------------- */

/* data: n_points x n_snaps, column-major. weights: n_points entries, or NULL
 * for the Euclidean inner product. */
PMDFLOW_API pmdflow_status pmdflow_pod_compute(const double* data, int n_points, int n_snaps, const double* weights,
                                               int n_modes, pmdflow_pod** out);
PMDFLOW_API void pmdflow_pod_free(pmdflow_pod* pod);
PMDFLOW_API int pmdflow_pod_n_modes(const pmdflow_pod* pod);
PMDFLOW_API int pmdflow_pod_n_points(const pmdflow_pod* pod);
PMDFLOW_API int pmdflow_pod_n_snaps(const pmdflow_pod* pod);
/* All n_snaps eigenvalues, descending. */
PMDFLOW_API pmdflow_status pmdflow_pod_eigenvalues(const pmdflow_pod* pod, double* out, size_t len);
/* n_points x n_modes, column-major. */
PMDFLOW_API pmdflow_status pmdflow_pod_modes(const pmdflow_pod* pod, double* out, size_t len);
/* n_snaps x n_modes, column-major. */
PMDFLOW_API pmdflow_status pmdflow_pod_temporal(const pmdflow_pod* pod, double* out, size_t len);
PMDFLOW_API pmdflow_status pmdflow_pod_mean(const pmdflow_pod* pod, double* out, size_t len);

#ifdef __cplusplus
}
#endif

#endif /* PMDFLOW_PMDFLOW_H */
