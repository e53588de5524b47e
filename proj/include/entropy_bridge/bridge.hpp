#pragma once

// Minimum conditional relative-entropy supply for steering a linear system
// x+ = A x + B w between Gaussian state laws, and the noise strategies that
// realize or bound it. The nominal noise is N(0, I_m) white noise.

#include <optional>
#include <variant>
#include <vector>

#include "entropy_bridge/entropy.hpp"
#include "entropy_bridge/matgauss.hpp"

namespace entropy_bridge {

/// Gaussian conditional law of the stacked noise W_{0:t-1} given X_0 = x:
/// N(w_mean + gain (x - anchor_mean), cond_cov).
class NoiseStrategy {
 public:
  NoiseStrategy(int horizon, Vector w_mean, Matrix gain, SymMatrix cond_cov,
                Vector anchor_mean);

  /// Nominal white noise: zero mean, zero gain, identity covariance.
  static NoiseStrategy Nominal(const LinearSystem& sys, int horizon,
                               const Vector& anchor_mean);

  int horizon() const { return horizon_; }
  int noise_dim() const { return static_cast<int>(w_mean_.size()); }
  int state_dim() const { return static_cast<int>(gain_.cols()); }
  const Vector& w_mean() const { return w_mean_; }
  const Matrix& gain() const { return gain_; }
  const SymMatrix& cond_cov() const { return cond_cov_; }
  const Vector& anchor_mean() const { return anchor_mean_; }

 private:
  int horizon_;
  Vector w_mean_;
  Matrix gain_;
  SymMatrix cond_cov_;
  Vector anchor_mean_;
};

struct BridgeSolution {
  double J = 0.0;
  /// ||beta - A^t alpha||^2 in the Gamma_t^{-1} norm.
  double mean_part = 0.0;
  /// Tr(U + V - sqrt(I + 4UV)) - ln det mho; nonnegative.
  double cov_part = 0.0;
  SymMatrix mho;
  SymMatrix U;
  SymMatrix V;
  NoiseStrategy strategy;
};

/// Horizon shorter than the reachability index: the supply is +inf.
struct Unreachable {
  int horizon = 0;
  std::optional<int> tau;
};

using BridgeResult = std::variant<BridgeSolution, Unreachable>;

/// Solves the Gaussian bridge; horizons with singular Gamma_t yield
/// Unreachable instead of throwing.
BridgeResult solve_bridge(const LinearSystem& sys, int horizon,
                          const GaussianDist& initial,
                          const GaussianDist& terminal);

/// Supply value of a result: J, or +inf when unreachable.
double supply_value(const BridgeResult& r);

/// As solve_bridge but throws UnreachableError naming tau.
BridgeSolution min_supply(const LinearSystem& sys, int horizon,
                          const GaussianDist& initial,
                          const GaussianDist& terminal);

/// The unique optimal (Markov, Gaussian) strategy.
NoiseStrategy optimal_strategy(const LinearSystem& sys, int horizon,
                               const GaussianDist& initial,
                               const GaussianDist& terminal);

/// Largest admissible epsilon for the feasible strategy, 1/rho(Gamma_t Theta^{-1}).
double feasible_epsilon_max(const LinearSystem& sys, int horizon,
                            const GaussianDist& terminal);

/// Steering strategy with conditional covariance eps I. Without eps the
/// default is half the largest admissible value.
NoiseStrategy feasible_strategy(const LinearSystem& sys, int horizon,
                                const GaussianDist& initial,
                                const GaussianDist& terminal,
                                std::optional<double> eps = std::nullopt);

/// Conditional relative entropy of a Gaussian strategy for Cov(X_0) = sigma.
double strategy_supply(const NoiseStrategy& strategy, const SymMatrix& sigma);

/// Moments of X_t when X_0 has the moments of `initial` and the noise follows
/// `strategy`.
GaussianDist push_forward(const LinearSystem& sys, const NoiseStrategy& strategy,
                          const GaussianDist& initial);

/// max(D(Psi || P*) - D(Phi || P*), 0).
double lower_bound(const GaussianDist& initial, const GaussianDist& terminal,
                   const GaussianDist& invariant);

/// N(0, Gamma) with Gamma the infinite-horizon Gramian.
GaussianDist invariant_distribution(const LinearSystem& sys);

/// Limit of the minimum supply as the horizon grows: D(Psi || P*).
double inf_horizon_supply(const GaussianDist& terminal, const LinearSystem& sys);

/// Sum of one-step minimum supplies along P_0, ..., P_T.
double path_supply(const LinearSystem& sys,
                   const std::vector<GaussianDist>& path);

}  // namespace entropy_bridge
