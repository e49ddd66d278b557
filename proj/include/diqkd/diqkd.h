#ifndef DIQKD_H
#define DIQKD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define DIQKD_API __declspec(dllexport)
#else
#define DIQKD_API __attribute__((visibility("default")))
#endif

/* Return codes. Non-negative values are successes. */
#define DIQKD_OK 0
#define DIQKD_CLIPPED 1       /* value computed on a vacuous domain and clipped */
#define DIQKD_ABORT 2         /* simulated protocol aborted */
#define DIQKD_E_DOMAIN (-1)   /* argument outside the operation's domain */
#define DIQKD_E_SHAPE (-2)    /* mismatched behavior shapes */
#define DIQKD_E_NOROOT (-3)   /* bracket without sign change */
#define DIQKD_E_PARSE (-4)    /* malformed JSON or missing field */
#define DIQKD_E_USAGE (-5)    /* unknown operation or null argument */
#define DIQKD_E_INTERNAL (-6)

typedef struct diqkd_behavior diqkd_behavior;
typedef struct diqkd_sim diqkd_sim;

DIQKD_API const char* diqkd_version(void);
/* Message for the last failing call on this thread; empty when none. */
DIQKD_API const char* diqkd_last_error(void);
DIQKD_API void diqkd_string_free(char* s);

/* Behaviors */
DIQKD_API int diqkd_behavior_from_json(const char* text, diqkd_behavior** out);
DIQKD_API int diqkd_behavior_new(int nA, int nB, int nX, int nY, const double* table, diqkd_behavior** out);
DIQKD_API int diqkd_behavior_isotropic(double v, diqkd_behavior** out);
DIQKD_API int diqkd_behavior_pr(diqkd_behavior** out);
DIQKD_API int diqkd_behavior_to_json(const diqkd_behavior* b, char** out);
DIQKD_API int diqkd_behavior_dims(const diqkd_behavior* b, int* nA, int* nB, int* nX, int* nY);
DIQKD_API int diqkd_behavior_get(const diqkd_behavior* b, int a, int bb, int x, int y, double* out);
DIQKD_API void diqkd_behavior_free(diqkd_behavior* b);

DIQKD_API int diqkd_chsh(const diqkd_behavior* b, double* beta, double* beta_up);
DIQKD_API int diqkd_is_local(const diqkd_behavior* b, int* local, double* distance);
/* Local weight of b against the given nonlocal points (the 8 PR boxes when n == 0). JSON result.
 * Returns DIQKD_E_DOMAIN when b is outside their convex hull; *out_json still holds the LP report. */
DIQKD_API int diqkd_cc_local_weight(const diqkd_behavior* b, const diqkd_behavior* const* nonlocal, size_t n,
                                    char** out_json);

/* Scalars */
DIQKD_API int diqkd_binary_entropy(double q, double* out);
DIQKD_API int diqkd_dw_rate_chsh(double S, double Q, double* out);

/* Simulation; config is a JSON object (see README). */
DIQKD_API int diqkd_sim_run(const char* config_json, diqkd_sim** out);
/* As above, also writing the per-round CSV trace to trace_path. */
DIQKD_API int diqkd_sim_run_traced(const char* config_json, const char* trace_path, diqkd_sim** out);
DIQKD_API int diqkd_sim_to_json(const diqkd_sim* s, char** out);
DIQKD_API int diqkd_sim_summary(const diqkd_sim* s, double* S_est, double* Q_est, double* key_length, int* abort);
DIQKD_API void diqkd_sim_free(diqkd_sim* s);

/*
 * Generic entry point: op names a computation ("keyrate", "critical", "simulate"),
 * params is a JSON object. On success *out_json receives a JSON object
 * {"status": ..., "results": {...}} to be released with diqkd_string_free.
 * The return code mirrors the status.
 */
DIQKD_API int diqkd_eval(const char* op, const char* params_json, char** out_json);

#ifdef __cplusplus
}
#endif

#endif
