#include "entropy_bridge/entropy_bridge.h"

#include <cstring>
#include <memory>
#include <sstream>
#include <string>

#include "entropy_bridge/bridge.hpp"
#include "entropy_bridge/chain_oracle.hpp"
#include "entropy_bridge/mc.hpp"
#include "entropy_bridge/robustness.hpp"

using namespace entropy_bridge;

struct eb_system {
  LinearSystem sys;
};
struct eb_gaussian {
  GaussianDist dist;
};
struct eb_bridge {
  BridgeSolution sol;
  int horizon;
};
struct eb_strategy {
  NoiseStrategy strategy;
};
struct eb_chain {
  FiniteChainModel model;
};
struct eb_identity_report {
  IdentityReport report;
};

namespace {

thread_local std::string g_last_error;

eb_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return EB_ERR_DIMENSION;
    case ErrorKind::kNotPsd: return EB_ERR_NOT_PSD;
    case ErrorKind::kNotPd: return EB_ERR_NOT_PD;
    case ErrorKind::kUnstable: return EB_ERR_UNSTABLE;
    case ErrorKind::kUnreachable: return EB_ERR_UNREACHABLE;
    case ErrorKind::kParameter: return EB_ERR_PARAMETER;
    case ErrorKind::kNonconvergence: return EB_ERR_NONCONVERGENCE;
    case ErrorKind::kConditioning: return EB_ERR_CONDITIONING;
    case ErrorKind::kParse: return EB_ERR_PARSE;
    case ErrorKind::kIo: return EB_ERR_IO;
  }
  return EB_ERR_INTERNAL;
}

eb_status fail(eb_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

/// Runs f, translating exceptions into status codes.
template <typename F>
eb_status guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(EB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(EB_ERR_INTERNAL, e.what());
  }
}

#define EB_REQUIRE(ptr)                                                   \
  do {                                                                    \
    if ((ptr) == nullptr) return fail(EB_ERR_NULL_ARGUMENT, #ptr " is NULL"); \
  } while (0)

Matrix read_matrix(const double* p, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = p[i * cols + j];
  }
  return m;
}

void write_matrix(const Matrix& m, double* out) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
  }
}

}  // namespace

extern "C" {

const char* eb_last_error(void) { return g_last_error.c_str(); }

const char* eb_status_name(eb_status status) {
  switch (status) {
    case EB_OK: return "ok";
    case EB_ERR_DIMENSION: return "dimension";
    case EB_ERR_NOT_PSD: return "not_psd";
    case EB_ERR_NOT_PD: return "not_pd";
    case EB_ERR_UNSTABLE: return "unstable";
    case EB_ERR_UNREACHABLE: return "unreachable";
    case EB_ERR_PARAMETER: return "parameter";
    case EB_ERR_NONCONVERGENCE: return "nonconvergence";
    case EB_ERR_CONDITIONING: return "conditioning";
    case EB_ERR_PARSE: return "parse";
    case EB_ERR_IO: return "io";
    case EB_ERR_NULL_ARGUMENT: return "null_argument";
    case EB_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

eb_status eb_system_create(int n, int m, const double* a, const double* b,
                           eb_system** out) {
  EB_REQUIRE(a);
  EB_REQUIRE(b);
  EB_REQUIRE(out);
  if (n < 1 || m < 1) return fail(EB_ERR_DIMENSION, "n and m must be >= 1");
  return guarded([&] {
    *out = new eb_system{LinearSystem(read_matrix(a, n, n), read_matrix(b, n, m))};
    return EB_OK;
  });
}

void eb_system_destroy(eb_system* sys) { delete sys; }

eb_status eb_system_get_info(const eb_system* sys, eb_system_info* out) {
  EB_REQUIRE(sys);
  EB_REQUIRE(out);
  return guarded([&] {
    out->state_dim = sys->sys.state_dim();
    out->input_dim = sys->sys.input_dim();
    out->spectral_radius = sys->sys.spectral_radius();
    out->stable = sys->sys.stable() ? 1 : 0;
    out->tau = reachability_index(sys->sys).value_or(0);
    return EB_OK;
  });
}

eb_status eb_system_invariant_cov(const eb_system* sys, double* out) {
  EB_REQUIRE(sys);
  EB_REQUIRE(out);
  return guarded([&] {
    write_matrix(dlyap_inf(sys->sys).matrix(), out);
    return EB_OK;
  });
}

eb_status eb_gaussian_create(int n, const double* mean, const double* cov,
                             eb_gaussian** out) {
  EB_REQUIRE(mean);
  EB_REQUIRE(cov);
  EB_REQUIRE(out);
  if (n < 1) return fail(EB_ERR_DIMENSION, "n must be >= 1");
  return guarded([&] {
    *out = new eb_gaussian{GaussianDist(Eigen::Map<const Vector>(mean, n),
                                        SymMatrix(read_matrix(cov, n, n)))};
    return EB_OK;
  });
}

eb_status eb_gaussian_invariant(const eb_system* sys, eb_gaussian** out) {
  EB_REQUIRE(sys);
  EB_REQUIRE(out);
  return guarded([&] {
    *out = new eb_gaussian{invariant_distribution(sys->sys)};
    return EB_OK;
  });
}

void eb_gaussian_destroy(eb_gaussian* g) { delete g; }

eb_status eb_gauss_relent(const eb_gaussian* p, const eb_gaussian* q,
                          double* out) {
  EB_REQUIRE(p);
  EB_REQUIRE(q);
  EB_REQUIRE(out);
  return guarded([&] {
    *out = gauss_relent(p->dist, q->dist);
    return EB_OK;
  });
}

eb_status eb_bridge_solve(const eb_system* sys, int horizon,
                          const eb_gaussian* initial,
                          const eb_gaussian* terminal, eb_bridge** out) {
  EB_REQUIRE(sys);
  EB_REQUIRE(initial);
  EB_REQUIRE(terminal);
  EB_REQUIRE(out);
  if (horizon < 1) return fail(EB_ERR_PARAMETER, "horizon must be >= 1");
  return guarded([&] {
    *out = new eb_bridge{
        min_supply(sys->sys, horizon, initial->dist, terminal->dist), horizon};
    return EB_OK;
  });
}

void eb_bridge_destroy(eb_bridge* b) { delete b; }

eb_status eb_bridge_get_summary(const eb_bridge* b, eb_bridge_summary* out) {
  EB_REQUIRE(b);
  EB_REQUIRE(out);
  out->J = b->sol.J;
  out->mean_part = b->sol.mean_part;
  out->cov_part = b->sol.cov_part;
  out->horizon = b->horizon;
  out->state_dim = b->sol.mho.order();
  out->noise_dim = b->sol.strategy.noise_dim();
  return EB_OK;
}

eb_status eb_bridge_mho(const eb_bridge* b, double* out) {
  EB_REQUIRE(b);
  EB_REQUIRE(out);
  write_matrix(b->sol.mho.matrix(), out);
  return EB_OK;
}

eb_status eb_bridge_mho_eigenvalues(const eb_bridge* b, double* out) {
  EB_REQUIRE(b);
  EB_REQUIRE(out);
  return guarded([&] {
    const Vector v = sym_eig(b->sol.mho).values;
    std::copy(v.data(), v.data() + v.size(), out);
    return EB_OK;
  });
}

eb_status eb_bridge_strategy(const eb_bridge* b, eb_strategy** out) {
  EB_REQUIRE(b);
  EB_REQUIRE(out);
  return guarded([&] {
    *out = new eb_strategy{b->sol.strategy};
    return EB_OK;
  });
}

eb_status eb_lower_bound(const eb_system* sys, const eb_gaussian* initial,
                         const eb_gaussian* terminal, double* out) {
  EB_REQUIRE(sys);
  EB_REQUIRE(initial);
  EB_REQUIRE(terminal);
  EB_REQUIRE(out);
  return guarded([&] {
    *out = lower_bound(initial->dist, terminal->dist,
                       invariant_distribution(sys->sys));
    return EB_OK;
  });
}

eb_status eb_inf_horizon_supply(const eb_system* sys,
                                const eb_gaussian* terminal, double* out) {
  EB_REQUIRE(sys);
  EB_REQUIRE(terminal);
  EB_REQUIRE(out);
  return guarded([&] {
    *out = inf_horizon_supply(terminal->dist, sys->sys);
    return EB_OK;
  });
}

eb_status eb_strategy_feasible(const eb_system* sys, int horizon,
                               const eb_gaussian* initial,
                               const eb_gaussian* terminal, double eps,
                               eb_strategy** out) {
  EB_REQUIRE(sys);
  EB_REQUIRE(initial);
  EB_REQUIRE(terminal);
  EB_REQUIRE(out);
  return guarded([&] {
    std::optional<double> e;
    if (eps > 0.0) e = eps;
    *out = new eb_strategy{
        feasible_strategy(sys->sys, horizon, initial->dist, terminal->dist, e)};
    return EB_OK;
  });
}

eb_status eb_strategy_nominal(const eb_system* sys, int horizon,
                              const double* anchor_mean, eb_strategy** out) {
  EB_REQUIRE(sys);
  EB_REQUIRE(anchor_mean);
  EB_REQUIRE(out);
  return guarded([&] {
    const int n = sys->sys.state_dim();
    *out = new eb_strategy{NoiseStrategy::Nominal(
        sys->sys, horizon, Eigen::Map<const Vector>(anchor_mean, n))};
    return EB_OK;
  });
}

void eb_strategy_destroy(eb_strategy* s) { delete s; }

eb_status eb_strategy_dims(const eb_strategy* s, int* horizon, int* noise_dim,
                           int* state_dim) {
  EB_REQUIRE(s);
  if (horizon) *horizon = s->strategy.horizon();
  if (noise_dim) *noise_dim = s->strategy.noise_dim();
  if (state_dim) *state_dim = s->strategy.state_dim();
  return EB_OK;
}

eb_status eb_strategy_params(const eb_strategy* s, double* w_mean, double* gain,
                             double* cond_cov) {
  EB_REQUIRE(s);
  const NoiseStrategy& st = s->strategy;
  if (w_mean) std::copy(st.w_mean().data(), st.w_mean().data() + st.noise_dim(), w_mean);
  if (gain) write_matrix(st.gain(), gain);
  if (cond_cov) write_matrix(st.cond_cov().matrix(), cond_cov);
  return EB_OK;
}

eb_status eb_strategy_supply(const eb_strategy* s, const double* initial_cov,
                             double* out) {
  EB_REQUIRE(s);
  EB_REQUIRE(initial_cov);
  EB_REQUIRE(out);
  return guarded([&] {
    const int n = s->strategy.state_dim();
    *out = strategy_supply(s->strategy, SymMatrix(read_matrix(initial_cov, n, n)));
    return EB_OK;
  });
}

eb_status eb_robustness_index(const eb_system* sys, const double* weight,
                              double gamma, eb_robustness_result* out) {
  EB_REQUIRE(sys);
  EB_REQUIRE(out);
  *out = eb_robustness_result{};
  try {
    const int n = sys->sys.state_dim();
    const SymMatrix pi = weight ? SymMatrix(read_matrix(weight, n, n))
                                : SymMatrix::Identity(n);
    const RobustnessSolution r =
        robustness_index(RobustnessProblem(sys->sys, pi, gamma));
    out->Z = r.Z;
    out->lambda = r.lambda;
    out->gamma_attained = r.gamma_attained;
    out->sigma_residual = r.sigma_residual;
    out->constraint_residual = r.constraint_residual;
    out->lambda_mean_limit = r.lambda_mean_limit;
    out->converged = r.converged ? 1 : 0;
    out->continuation_steps = r.continuation_steps;
    out->fixed_point_iterations = r.fixed_point_iterations;
    out->max_gamma = r.gamma_attained;
    return EB_OK;
  } catch (const GammaUnattainableError& e) {
    out->max_gamma = e.max_gamma();
    out->lambda = e.lambda();
    return fail(EB_ERR_UNREACHABLE, e.what());
  } catch (...) {
    return guarded([] () -> eb_status { throw; });
  }
}

eb_status eb_z_1d(double a, double gamma, double* z, double* mho) {
  return guarded([&] {
    const ScalarRobustness r = z_1d(a, gamma);
    if (z) *z = r.Z;
    if (mho) *mho = r.mho;
    return EB_OK;
  });
}

double eb_z_1d_asymptote(double a, double gamma) {
  return z_1d_asymptote(a, gamma);
}

eb_status eb_simulate(const eb_system* sys, const eb_strategy* strategy,
                      const eb_gaussian* initial, const eb_sim_config* config,
                      double* mean, double* mean_se, double* cov,
                      double* cov_se, double* supply) {
  EB_REQUIRE(sys);
  EB_REQUIRE(strategy);
  EB_REQUIRE(initial);
  EB_REQUIRE(config);
  return guarded([&] {
    SimConfig c;
    c.samples = config->samples;
    c.seed = config->seed;
    c.threads = config->threads;
    const MomentReport r =
        simulate(sys->sys, strategy->strategy, initial->dist, c);
    const auto n = r.mean.size();
    if (mean) std::copy(r.mean.data(), r.mean.data() + n, mean);
    if (mean_se) std::copy(r.mean_se.data(), r.mean_se.data() + n, mean_se);
    if (cov) write_matrix(r.cov, cov);
    if (cov_se) write_matrix(r.cov_se, cov_se);
    if (supply) {
      supply[0] = r.supply;
      supply[1] = r.supply_se;
    }
    return EB_OK;
  });
}

eb_status eb_normal_stream(uint64_t seed, size_t count, double* out) {
  EB_REQUIRE(out);
  return guarded([&] {
    NormalStream s(seed);
    for (size_t i = 0; i < count; ++i) out[i] = s.next_normal();
    return EB_OK;
  });
}

eb_status eb_chain_load(const char* path, eb_chain** out) {
  EB_REQUIRE(path);
  EB_REQUIRE(out);
  return guarded([&] {
    *out = new eb_chain{load_chain_model(path)};
    return EB_OK;
  });
}

eb_status eb_chain_parse(const char* text, eb_chain** out) {
  EB_REQUIRE(text);
  EB_REQUIRE(out);
  return guarded([&] {
    std::istringstream in(text);
    *out = new eb_chain{parse_chain_model(in)};
    return EB_OK;
  });
}

eb_status eb_chain_random(int nx, int nw, uint64_t seed, eb_chain** out) {
  EB_REQUIRE(out);
  if (nx < 1 || nw < 1) return fail(EB_ERR_DIMENSION, "alphabet sizes must be >= 1");
  return guarded([&] {
    *out = new eb_chain{random_chain_model(nx, nw, seed)};
    return EB_OK;
  });
}

void eb_chain_destroy(eb_chain* c) { delete c; }

eb_status eb_chain_dims(const eb_chain* c, int* nx, int* nw) {
  EB_REQUIRE(c);
  if (nx) *nx = static_cast<int>(c->model.nx());
  if (nw) *nw = static_cast<int>(c->model.nw());
  return EB_OK;
}

eb_status eb_chain_invariant(const eb_chain* c, double* out,
                             int* closed_classes) {
  EB_REQUIRE(c);
  EB_REQUIRE(out);
  return guarded([&] {
    const InvariantResult r = invariant_dist(c->model);
    std::copy(r.dist.masses().begin(), r.dist.masses().end(), out);
    if (closed_classes) *closed_classes = r.closed_classes;
    return EB_OK;
  });
}

eb_status eb_chain_min_supply(const eb_chain* c, const double* phi,
                              const double* psi, int horizon, double* out,
                              int* feasible) {
  EB_REQUIRE(c);
  EB_REQUIRE(phi);
  EB_REQUIRE(psi);
  EB_REQUIRE(out);
  return guarded([&] {
    const std::size_t nx = c->model.nx();
    const FiniteDist p(std::vector<double>(phi, phi + nx));
    const FiniteDist q(std::vector<double>(psi, psi + nx));
    const BridgeOracleResult r = exact_min_supply(c->model, p, q, horizon);
    *out = r.J;
    if (feasible) *feasible = r.feasible ? 1 : 0;
    if (!r.feasible) {
      std::ostringstream os;
      os << "terminal law not reachable; violated subset {";
      for (std::size_t i = 0; i < r.certificate.size(); ++i) {
        os << (i ? "," : "") << r.certificate[i];
      }
      os << "}";
      g_last_error = os.str();
    }
    return EB_OK;
  });
}

eb_status eb_chain_identity_suite(const eb_chain* c, int horizon,
                                  uint64_t strategy_seed, int markov,
                                  eb_identity_report** out) {
  EB_REQUIRE(c);
  EB_REQUIRE(out);
  return guarded([&] {
    const StrategyTable s =
        markov ? random_markov_strategy(c->model, horizon, strategy_seed)
               : random_strategy(c->model, horizon, strategy_seed);
    *out = new eb_identity_report{identity_suite(c->model, s)};
    return EB_OK;
  });
}

void eb_identity_report_destroy(eb_identity_report* r) { delete r; }

size_t eb_identity_report_size(const eb_identity_report* r) {
  return r ? r->report.checks.size() : 0;
}

eb_status eb_identity_report_get(const eb_identity_report* r, size_t i,
                                 const char** name, double* value,
                                 int* passed) {
  EB_REQUIRE(r);
  if (i >= r->report.checks.size()) {
    return fail(EB_ERR_PARAMETER, "report index out of range");
  }
  const IdentityCheck& c = r->report.checks[i];
  if (name) *name = c.name.c_str();
  if (value) *value = c.value;
  if (passed) *passed = c.passed ? 1 : 0;
  return EB_OK;
}

}  // extern "C"
