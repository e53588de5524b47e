/* C interface to the entropy_bridge library.
 *
 * Objects are opaque handles created by *_create / *_solve / *_load calls and
 * released with the matching *_destroy. Every fallible call returns an
 * eb_status; on failure eb_last_error() describes the problem (the message is
 * per thread and valid until the next failing call on that thread). Matrices
 * cross the boundary as row-major double arrays.
 */
#ifndef ENTROPY_BRIDGE_H_
#define ENTROPY_BRIDGE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(EB_BUILDING_LIBRARY)
#define EB_API __attribute__((visibility("default")))
#else
#define EB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum eb_status {
  EB_OK = 0,
  EB_ERR_DIMENSION = 1,
  EB_ERR_NOT_PSD = 2,
  EB_ERR_NOT_PD = 3,
  EB_ERR_UNSTABLE = 4,
  /* Horizon below the reachability index, or gamma not attainable. */
  EB_ERR_UNREACHABLE = 5,
  EB_ERR_PARAMETER = 6,
  EB_ERR_NONCONVERGENCE = 7,
  EB_ERR_CONDITIONING = 8,
  EB_ERR_PARSE = 9,
  EB_ERR_IO = 10,
  EB_ERR_NULL_ARGUMENT = 11,
  EB_ERR_INTERNAL = 12
} eb_status;

EB_API const char* eb_last_error(void);
EB_API const char* eb_status_name(eb_status status);

typedef struct eb_system eb_system;
typedef struct eb_gaussian eb_gaussian;
typedef struct eb_bridge eb_bridge;
typedef struct eb_strategy eb_strategy;
typedef struct eb_chain eb_chain;
typedef struct eb_identity_report eb_identity_report;

/* ---- Linear systems x+ = A x + B w ---- */

typedef struct eb_system_info {
  int state_dim;
  int input_dim;
  double spectral_radius;
  int stable;
  /* Least horizon with a full-rank Gramian, 0 if (A, B) is unreachable. */
  int tau;
} eb_system_info;

EB_API eb_status eb_system_create(int n, int m, const double* a,
                                  const double* b, eb_system** out);
EB_API void eb_system_destroy(eb_system* sys);
EB_API eb_status eb_system_get_info(const eb_system* sys, eb_system_info* out);
/* Infinite-horizon Gramian (n x n); requires a stable system. */
EB_API eb_status eb_system_invariant_cov(const eb_system* sys, double* out);

/* ---- Gaussian laws ---- */

EB_API eb_status eb_gaussian_create(int n, const double* mean,
                                    const double* cov, eb_gaussian** out);
/* N(0, Gamma) for a stable system. */
EB_API eb_status eb_gaussian_invariant(const eb_system* sys, eb_gaussian** out);
EB_API void eb_gaussian_destroy(eb_gaussian* g);
EB_API eb_status eb_gauss_relent(const eb_gaussian* p, const eb_gaussian* q,
                                 double* out);

/* ---- Minimum-supply bridge ---- */

typedef struct eb_bridge_summary {
  double J;
  double mean_part;
  double cov_part;
  int horizon;
  int state_dim;
  int noise_dim;
} eb_bridge_summary;

/* Returns EB_ERR_UNREACHABLE (message names tau) when the horizon is too
 * short. */
EB_API eb_status eb_bridge_solve(const eb_system* sys, int horizon,
                                 const eb_gaussian* initial,
                                 const eb_gaussian* terminal, eb_bridge** out);
EB_API void eb_bridge_destroy(eb_bridge* b);
EB_API eb_status eb_bridge_get_summary(const eb_bridge* b,
                                       eb_bridge_summary* out);
EB_API eb_status eb_bridge_mho(const eb_bridge* b, double* out);
/* Ascending eigenvalues of mho (n entries). */
EB_API eb_status eb_bridge_mho_eigenvalues(const eb_bridge* b, double* out);
/* Optimal strategy; the caller owns the returned handle. */
EB_API eb_status eb_bridge_strategy(const eb_bridge* b, eb_strategy** out);

/* max(D(terminal || P*) - D(initial || P*), 0). */
EB_API eb_status eb_lower_bound(const eb_system* sys,
                                const eb_gaussian* initial,
                                const eb_gaussian* terminal, double* out);
/* D(terminal || P*). */
EB_API eb_status eb_inf_horizon_supply(const eb_system* sys,
                                       const eb_gaussian* terminal,
                                       double* out);

/* ---- Noise strategies ---- */

/* eps <= 0 selects half of the largest admissible value. */
EB_API eb_status eb_strategy_feasible(const eb_system* sys, int horizon,
                                      const eb_gaussian* initial,
                                      const eb_gaussian* terminal, double eps,
                                      eb_strategy** out);
EB_API eb_status eb_strategy_nominal(const eb_system* sys, int horizon,
                                     const double* anchor_mean,
                                     eb_strategy** out);
EB_API void eb_strategy_destroy(eb_strategy* s);
EB_API eb_status eb_strategy_dims(const eb_strategy* s, int* horizon,
                                  int* noise_dim, int* state_dim);
/* Any output pointer may be NULL. Sizes: w_mean mt, gain mt x n,
 * cond_cov mt x mt. */
EB_API eb_status eb_strategy_params(const eb_strategy* s, double* w_mean,
                                    double* gain, double* cond_cov);
EB_API eb_status eb_strategy_supply(const eb_strategy* s,
                                    const double* initial_cov, double* out);

/* ---- Robustness index ---- */

typedef struct eb_robustness_result {
  double Z;
  double lambda;
  double gamma_attained;
  double sigma_residual;
  double constraint_residual;
  double lambda_mean_limit;
  int converged;
  int continuation_steps;
  int fixed_point_iterations;
  /* Set when the call fails with EB_ERR_UNREACHABLE. */
  double max_gamma;
} eb_robustness_result;

/* weight may be NULL for the identity. */
EB_API eb_status eb_robustness_index(const eb_system* sys, const double* weight,
                                     double gamma, eb_robustness_result* out);
EB_API eb_status eb_z_1d(double a, double gamma, double* z, double* mho);
EB_API double eb_z_1d_asymptote(double a, double gamma);

/* ---- Monte Carlo ---- */

typedef struct eb_sim_config {
  long long samples;
  uint64_t seed;
  /* 0 = automatic, capped by ENTROPY_BRIDGE_THREADS. */
  int threads;
} eb_sim_config;

/* Outputs (n = state dimension): mean[n], mean_se[n], cov[n*n], cov_se[n*n],
 * supply[2] = {estimate, standard error}. Any may be NULL. */
EB_API eb_status eb_simulate(const eb_system* sys, const eb_strategy* strategy,
                             const eb_gaussian* initial,
                             const eb_sim_config* config, double* mean,
                             double* mean_se, double* cov, double* cov_se,
                             double* supply);
EB_API eb_status eb_normal_stream(uint64_t seed, size_t count, double* out);

/* ---- Finite-state oracle ---- */

EB_API eb_status eb_chain_load(const char* path, eb_chain** out);
EB_API eb_status eb_chain_parse(const char* text, eb_chain** out);
EB_API eb_status eb_chain_random(int nx, int nw, uint64_t seed, eb_chain** out);
EB_API void eb_chain_destroy(eb_chain* c);
EB_API eb_status eb_chain_dims(const eb_chain* c, int* nx, int* nw);
/* closed_classes may be NULL. */
EB_API eb_status eb_chain_invariant(const eb_chain* c, double* out,
                                    int* closed_classes);
/* *out = +inf and *feasible = 0 when psi cannot be reached from phi. */
EB_API eb_status eb_chain_min_supply(const eb_chain* c, const double* phi,
                                     const double* psi, int horizon,
                                     double* out, int* feasible);
/* Identity suite on a random strategy (markov != 0: state-feedback only). */
EB_API eb_status eb_chain_identity_suite(const eb_chain* c, int horizon,
                                         uint64_t strategy_seed, int markov,
                                         eb_identity_report** out);
EB_API void eb_identity_report_destroy(eb_identity_report* r);
EB_API size_t eb_identity_report_size(const eb_identity_report* r);
EB_API eb_status eb_identity_report_get(const eb_identity_report* r, size_t i,
                                        const char** name, double* value,
                                        int* passed);

#ifdef __cplusplus
}
#endif

#endif /* ENTROPY_BRIDGE_H_ */
