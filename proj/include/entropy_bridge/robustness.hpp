#pragma once

// Robustness index Z(gamma) for one-step reachable linear systems: the least
// supply rate the noise needs to hold the weighted second moment of the state
// at gamma times its nominal value.

#include <string>
#include <vector>

#include "entropy_bridge/bridge.hpp"
#include "entropy_bridge/matgauss.hpp"

namespace entropy_bridge {

/// Requested gamma is beyond what the continuation reached before the
/// stationarity equation lost positive definiteness.
class GammaUnattainableError : public Error {
 public:
  GammaUnattainableError(const std::string& what, double max_gamma,
                         double lambda)
      : Error(ErrorKind::kUnreachable, what),
        max_gamma_(max_gamma),
        lambda_(lambda) {}
  double max_gamma() const { return max_gamma_; }
  double lambda() const { return lambda_; }

 private:
  double max_gamma_;
  double lambda_;
};

class RobustnessProblem {
 public:
  /// Requires rho(A) < 1, B of full row rank, weight > 0 and gamma >= 1.
  RobustnessProblem(LinearSystem sys, SymMatrix weight, double gamma);

  const LinearSystem& sys() const { return sys_; }
  const SymMatrix& weight() const { return weight_; }
  double gamma() const { return gamma_; }
  /// Infinite-horizon Gramian Gamma.
  const SymMatrix& invariant_cov() const { return invariant_cov_; }
  /// Tr(Pi Gamma).
  double nominal_loss() const { return nominal_loss_; }

 private:
  LinearSystem sys_;
  SymMatrix weight_;
  double gamma_;
  SymMatrix invariant_cov_;
  double nominal_loss_;
};

struct RobustnessOptions {
  /// Largest step weight of the damped fixed-point update; 1 is the plain
  /// fixed-point map.
  double damping = 1.0;
  /// Frobenius norm of Sigma^{1/2} D Sigma^{1/2} at which the fixed point is
  /// accepted, where D is the gap between the inverse RHS and Sigma^{-1}.
  double fix_tol = 1e-11;
  int max_fixed_point_iterations = 50000;
  /// Relative tolerance on Tr(Pi Sigma)/Tr(Pi Gamma) = gamma.
  double lam_tol = 1e-10;
  /// 0 selects 0.05 / Tr(Pi Gamma).
  double initial_step = 0.0;
  int max_continuation_steps = 100000;
};

struct RobustnessSolution {
  double Z = 0.0;
  double lambda = 0.0;
  SymMatrix sigma;
  /// Tr(Pi Sigma) / Tr(Pi Gamma) at the returned point.
  double gamma_attained = 1.0;
  bool converged = false;
  int continuation_steps = 0;
  int fixed_point_iterations = 0;
  /// ||Sigma - RHS(Sigma)||_F / ||Sigma||_F.
  double sigma_residual = 0.0;
  /// |gamma_attained - gamma|.
  double constraint_residual = 0.0;
  /// 1/rho(Pi (I-A)^{-1} Gamma_1 (I-A^T)^{-1}); the zero-mean reduction needs
  /// lambda below it.
  double lambda_mean_limit = 0.0;
  std::vector<std::string> warnings;
};

/// sigma(z) = -2 / (1 + sqrt(1 + 4z)).
double sigma_func(double z);

/// sigma(UV) for U >= 0, V > 0, evaluated through V^{1/2} U V^{1/2}.
Matrix sigma_of_product(const SymMatrix& u, const SymMatrix& v);

/// One-step maintenance supply rate of N(alpha, sigma).
double jtilde(const Vector& alpha, const SymMatrix& sigma,
              const LinearSystem& sys);

/// Right-hand side of the stationarity equation Sigma = RHS(Sigma, lambda).
/// Throws NotPdError when the inverted matrix is not positive definite.
SymMatrix sigma_equation_rhs(double lambda, const RobustnessProblem& prob,
                             const SymMatrix& sigma);

struct SigmaSolve {
  SymMatrix sigma;
  int iterations = 0;
  double residual = 0.0;
};

/// Solves Sigma = RHS(Sigma, lambda) from warm_start by line-searched descent
/// on jtilde(0, Sigma) - lambda Tr(Pi Sigma) / 2. Throws NonconvergenceError
/// carrying the last iterate.
SigmaSolve solve_sigma(double lambda, const RobustnessProblem& prob,
                       const SymMatrix& warm_start,
                       const RobustnessOptions& options = {});

/// Continuation in lambda from (0, Gamma) until Tr(Pi Sigma)/Tr(Pi Gamma)
/// reaches gamma.
RobustnessSolution robustness_index(const RobustnessProblem& prob,
                                    const RobustnessOptions& options = {});

struct ScalarRobustness {
  double Z;
  double mho;
};

/// Closed form for n = m = 1 (independent of B and of the weight).
ScalarRobustness z_1d(double a, double gamma);

/// Large-gamma asymptote (1 - |A|) gamma / (2 (1 + |A|)).
double z_1d_asymptote(double a, double gamma);

}  // namespace entropy_bridge
