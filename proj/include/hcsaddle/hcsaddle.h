#ifndef HCSADDLE_HCSADDLE_H
#define HCSADDLE_HCSADDLE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HCS_API
#else
#define HCS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hcs_status {
  HCS_OK = 0,
  HCS_ERR_INVALID_ARGUMENT = 1, /* null pointer, unknown enum value */
  HCS_ERR_INVALID_MESH = 2,
  HCS_ERR_LAYOUT = 3,
  HCS_ERR_PARAMETER = 4,
  HCS_ERR_DIMENSION = 5,
  HCS_ERR_BREAKDOWN = 6,
  HCS_ERR_MAX_ITERATIONS = 7,
  HCS_ERR_CONTRACT = 8,
  HCS_ERR_FACTORIZATION = 9,
  HCS_ERR_VERIFICATION = 10,
  HCS_ERR_IO = 11,
  HCS_ERR_BUFFER_TOO_SMALL = 12,
  HCS_ERR_OUT_OF_MEMORY = 13,
  HCS_ERR_INTERNAL = 14
} hcs_status;

/* Static description of a status code. Never NULL. */
HCS_API const char* hcs_status_string(hcs_status status);
/* Message of the last failed call on this thread ("" if none). Valid until the
 * next call on the same thread. */
HCS_API const char* hcs_last_error_message(void);
HCS_API const char* hcs_version(void);

/* ------------------------------------------------------------------ problem */

typedef struct hcs_problem hcs_problem;

typedef enum hcs_layout_kind { HCS_LAYOUT_PERIODIC = 0, HCS_LAYOUT_RANDOM = 1 } hcs_layout_kind;
typedef enum hcs_eps_mode { HCS_EPS_UNIFORM = 0, HCS_EPS_RANDOM = 1 } hcs_eps_mode;

typedef struct hcs_problem_desc {
  int32_t cells_per_side;  /* M */
  int32_t inclusion_cells; /* k */
  int32_t layout;          /* hcs_layout_kind */
  int32_t removal;         /* random layouts: inclusions removed from the lattice */
  uint64_t layout_seed;
  int32_t eps_mode;        /* hcs_eps_mode */
  double eps_value;        /* uniform value, or lower end of the random segment */
  double eps_upper;        /* upper end of the random segment */
  uint64_t eps_seed;
} hcs_problem_desc;

/* M = 8, k = 2, periodic, eps uniform 1e-4, seeds 1. */
HCS_API void hcs_problem_desc_init(hcs_problem_desc* desc);

HCS_API hcs_status hcs_problem_create(const hcs_problem_desc* desc, hcs_problem** out);
HCS_API void hcs_problem_destroy(hcs_problem* problem);

/* N (primal unknowns), n (inclusion unknowns), m (inclusions). Any pointer may be NULL. */
HCS_API hcs_status hcs_problem_dims(const hcs_problem* problem, int32_t* primal, int32_t* inclusion,
                                    int32_t* inclusions);
/* Smallest and largest inclusion epsilon. */
HCS_API hcs_status hcs_problem_eps_range(const hcs_problem* problem, double* eps_min, double* eps_max);

/* Layout manifest as JSON. *needed receives the size including the terminating
 * NUL; a buffer that is too small yields HCS_ERR_BUFFER_TOO_SMALL. */
HCS_API hcs_status hcs_layout_manifest_json(const hcs_problem* problem, char* buffer, size_t capacity,
                                            size_t* needed);

/* Regression hook: scales every m_s used by the saddle operator's Q, leaving the
 * preconditioner untouched. */
HCS_API hcs_status hcs_problem_corrupt_q(hcs_problem* problem, double factor);

/* out = A_eps z, both of length N + n. */
HCS_API hcs_status hcs_apply_saddle(const hcs_problem* problem, const double* z, size_t length, double* out,
                                    size_t out_length);

typedef enum hcs_hs_tag { HCS_HS_BD = 0, HCS_HS_Q = 1, HCS_HS_SIGMA_BD = 2 } hcs_hs_tag;

/* H_S applied to an operand given by its pre-image:
 *   HCS_HS_BD:       operand B_D w, preimage w (length n), block ignored
 *   HCS_HS_Q:        operand Q z, preimage z (length n), block ignored
 *   HCS_HS_SIGMA_BD: operand eps_s B_s p_s, preimage p_s (length n_s)
 * Any other tag is a contract violation (HCS_ERR_CONTRACT). */
HCS_API hcs_status hcs_apply_hs_composed(const hcs_problem* problem, int32_t tag, int32_t block,
                                         const double* preimage, size_t length, double* out, size_t out_length);

/* ------------------------------------------------------------------ solvers */

typedef enum hcs_method { HCS_METHOD_PU = 0, HCS_METHOD_PL = 1, HCS_METHOD_PCG_K = 2 } hcs_method;

typedef enum hcs_ha_kind {
  HCS_HA_EXACT = 0,
  HCS_HA_INNER_CG = 1,
  HCS_HA_DIAGONAL = 2,
  HCS_HA_SGS = 3,
  HCS_HA_MULTIGRID = 4
} hcs_ha_kind;

typedef struct hcs_solver_config {
  int32_t method; /* hcs_method */
  double delta;
  int32_t max_iterations;
  uint64_t seed; /* initial guess */
  int32_t ha_kind;
  int32_t inner_base; /* base preconditioner of HCS_HA_INNER_CG */
  int32_t inner_steps;
} hcs_solver_config;

/* PL, delta 1e-6, 1000 iterations, seed 1, exact H_A, inner CG: 12 steps of SGS. */
HCS_API void hcs_solver_config_init(hcs_solver_config* config);

typedef struct hcs_solver_report {
  int32_t iterations;
  int32_t converged;
  int64_t a_applications;
  int64_t ha_applications;
  double wall_seconds;
  double initial_norm;
  double final_norm;
  double worst_increase; /* largest relative rise of the stopping norm */
} hcs_solver_report;

/* Homogeneous run from a seeded random initial guess. solution (length n for
 * PU, N + n otherwise) and norms may be NULL. norms receives up to
 * norms_capacity stopping-norm values; *norms_length the full count. On
 * breakdown or max-iterations the report still describes the partial run. */
HCS_API hcs_status hcs_solve(const hcs_problem* problem, const hcs_solver_config* config, double* solution,
                             size_t solution_length, hcs_solver_report* report, double* norms,
                             size_t norms_capacity, size_t* norms_length);

/* ----------------------------------------------------------------- spectral */

typedef struct hcs_spectrum_report {
  int32_t dimension;
  int32_t inclusions;
  double a0, b0, eps_max, r_max;
  double mu_hat1, mu_hat2, mu_check1, mu_check2;
  double beta1, beta2, alpha_min, alpha_max;
  double c1, c2, c3, c4;
  /* counts of eigenvalues outside the respective sets and the largest excess */
  int32_t practical_full_outside;
  double practical_full_excess;
  int32_t h0_full_outside;
  double h0_full_excess;
  int32_t h0_restricted_outside;
  double h0_restricted_excess;
  int32_t practical_restricted_outside;
  double practical_restricted_excess;
  double kernel_split_error;
  int32_t literal_pass; /* full H A_eps spectrum inside [mu_check1, mu_hat1] U [1, mu_hat2] */
  int32_t verdict;      /* kernel split + restricted H0 set + restricted [C1,C2] U [C3,C4] */
} hcs_spectrum_report;

/* Dense interval verification. eigenvalues (may be NULL) receives the full
 * spectrum of H A_eps, ascending. A failing verdict is not an error: the call
 * returns HCS_OK and report->verdict == 0. */
HCS_API hcs_status hcs_verify_intervals(const hcs_problem* problem, int32_t ha_kind, double tolerance,
                                        hcs_spectrum_report* report, double* eigenvalues, size_t capacity,
                                        size_t* length);

/* cond_2 of the high-contrast stiffness matrix A_sigma (dense; N <= 4000). */
HCS_API hcs_status hcs_condition_sigma(const hcs_problem* problem, double* condition);

/* Matrix Market export. which: "A", "A_sigma", "B_D", "M", "Q" or "saddle". */
HCS_API hcs_status hcs_export_matrix(const hcs_problem* problem, const char* which, const char* path);

#ifdef __cplusplus
}
#endif

#endif /* HCSADDLE_HCSADDLE_H */
