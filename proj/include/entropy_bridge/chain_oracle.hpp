#pragma once

// Exact finite-state engine for x+ = f(x, w) with i.i.d. nominal noise R:
// nominal kernel and invariant law, exact path laws under history-dependent
// noise strategies, supplies, the entropy balance, Markovization and
// minimum-supply bridges by I-projection.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "entropy_bridge/entropy.hpp"

namespace entropy_bridge {

/// Largest number of (x0, w_0..w_{t-1}) atoms the oracle will enumerate.
inline constexpr std::size_t kMaxChainAtoms = 10'000'000;

class FiniteChainModel {
 public:
  /// f_table is laid out x-major: f_table[x * nw + w] = f(x, w).
  FiniteChainModel(std::size_t nx, std::size_t nw, std::vector<int> f_table,
                   FiniteDist noise, FiniteDist initial);

  std::size_t nx() const { return nx_; }
  std::size_t nw() const { return nw_; }
  int f(std::size_t x, std::size_t w) const { return f_[x * nw_ + w]; }
  const std::vector<int>& f_table() const { return f_; }
  const FiniteDist& noise() const { return noise_; }
  const FiniteDist& initial() const { return initial_; }

  /// State after applying the k leading digits of a t-digit noise word.
  std::size_t state_after(std::size_t x0, std::size_t word, int t,
                          int k) const;

 private:
  std::size_t nx_;
  std::size_t nw_;
  std::vector<int> f_;
  FiniteDist noise_;
  FiniteDist initial_;
};

/// Reads the tabular model format: `nx nw`, then nx*nw lines `x w f(x,w)`,
/// then nw noise masses, then nx initial masses. `#` starts a comment.
FiniteChainModel parse_chain_model(std::istream& in,
                                   const std::string& source = "<input>");
FiniteChainModel load_chain_model(const std::string& path);
std::string format_chain_model(const FiniteChainModel& model);

/// History-dependent noise law over t steps. Step k conditions on the
/// history (x0, w_0..w_{k-1}), indexed x0 * nw^k + prefix with w_0 most
/// significant.
class StrategyTable {
 public:
  /// tables[k] has nx * nw^k * nw entries; every conditional slice must be
  /// a probability vector.
  StrategyTable(std::size_t nx, std::size_t nw,
                std::vector<std::vector<double>> tables);

  static StrategyTable Nominal(const FiniteChainModel& model, int horizon);
  /// kernels[k][x * nw + w] is the law of W_k given X_k = x.
  static StrategyTable FromMarkovKernels(
      const FiniteChainModel& model,
      const std::vector<std::vector<double>>& kernels);

  int horizon() const { return static_cast<int>(tables_.size()); }
  std::size_t nx() const { return nx_; }
  std::size_t nw() const { return nw_; }
  double operator()(int k, std::size_t history, std::size_t w) const {
    return tables_[k][history * nw_ + w];
  }
  const std::vector<std::vector<double>>& tables() const { return tables_; }

 private:
  std::size_t nx_;
  std::size_t nw_;
  std::vector<std::vector<double>> tables_;
};

/// Exact law of (X_0, W_0..W_{t-1}) under a model and strategy.
class PathLaw {
 public:
  PathLaw(const FiniteChainModel& model, const StrategyTable& strategy);
  /// Path law with X_0 ~ initial instead of the model's initial law.
  PathLaw(const FiniteChainModel& model, const StrategyTable& strategy,
          const FiniteDist& initial);

  int horizon() const { return t_; }
  std::size_t words() const { return words_; }
  /// Mass of the path (x0, word).
  double operator()(std::size_t x0, std::size_t word) const {
    return masses_[x0 * words_ + word];
  }
  const std::vector<double>& masses() const { return masses_; }

  /// Law of X_k.
  FiniteDist state_law(int k) const;
  /// Joint law of (X_s, W_s..W_{t-1}).
  FiniteJoint joint(int s, int t) const;

 private:
  const FiniteChainModel* model_;
  int t_;
  std::size_t words_;
  std::vector<double> masses_;
};

/// Row-stochastic nominal kernel G(y | x) = sum of R(w) over f(x, w) = y,
/// stored as rows of a flat nx*nx table.
std::vector<double> nominal_kernel(const FiniteChainModel& model);

struct InvariantResult {
  FiniteDist dist;
  double residual = 0.0;
  int iterations = 0;
  /// Number of closed communicating classes; > 1 means P_* is not unique.
  int closed_classes = 1;
  std::vector<std::string> warnings;
};

/// Power iteration from the model's initial law; a periodic chain is
/// iterated through its lazy version, whose limit is the Cesaro limit.
InvariantResult invariant_dist(const FiniteChainModel& model);

struct Propagation {
  /// P_s .. P_t.
  std::vector<FiniteDist> laws;
  FiniteJoint joint;
};

Propagation propagate(const FiniteChainModel& model,
                      const StrategyTable& strategy, int s, int t);

/// Conditional supply E_{s,t} of W_s..W_{t-1} given X_s.
double supply(const FiniteChainModel& model, const StrategyTable& strategy,
              int s, int t);

struct BalanceTerms {
  double supply = 0.0;
  /// D(P_t || P_*) - D(P_0 || P_*).
  double storage_gain = 0.0;
  /// Posterior divergence of (X_0, W) given X_t from its nominal posterior.
  double dissipation = 0.0;
};

/// Throws ParameterError when the initial law charges a state outside the
/// support of `invariant`; both storage terms are then infinite.
BalanceTerms balance_terms(const FiniteChainModel& model,
                           const StrategyTable& strategy,
                           const FiniteDist& invariant);

/// Replaces the noise law from step s on by its conditional given X_s.
StrategyTable markovize(const StrategyTable& strategy,
                        const FiniteChainModel& model, int s);

/// True when the law of W_s..W_{t-1} given the history depends on it only
/// through X_s (on histories of positive mass).
bool markov_at(const FiniteChainModel& model, const StrategyTable& strategy,
               int s);

/// True when every step's noise law depends on the history only through the
/// current state (on histories of positive mass).
bool is_markov(const FiniteChainModel& model, const StrategyTable& strategy);

struct BridgeOracleResult {
  /// Minimum supply; +inf when infeasible.
  double J = kInfinity;
  bool feasible = false;
  /// Optimal joint over X_0 x W^t, x0-major. Empty when infeasible.
  std::vector<double> joint;
  /// Terminal states T with Psi(T) exceeding the Phi-mass that can reach T.
  std::vector<int> certificate;
  int iterations = 0;
  double defect = 0.0;
};

/// Minimum supply over one step from phi to psi.
BridgeOracleResult one_step_min_supply(const FiniteChainModel& model,
                                       const FiniteDist& phi,
                                       const FiniteDist& psi);

/// Minimum supply over t steps with only the terminal law prescribed.
BridgeOracleResult exact_min_supply(const FiniteChainModel& model,
                                    const FiniteDist& phi,
                                    const FiniteDist& psi, int t);

/// Minimum supply over t steps with X_1..X_t all distributed as phi.
BridgeOracleResult tracking_min_supply(const FiniteChainModel& model,
                                       const FiniteDist& phi, int t);

struct BellmanResult {
  double value = kInfinity;
  /// Mass of state 0 in the minimizing intermediate law.
  double argmin = 0.0;
};

/// min over intermediate laws of J_1(phi, theta) + J_1(theta, psi) for a
/// two-state model: grid scan then golden-section refinement.
BellmanResult bellman_two_step(const FiniteChainModel& model,
                               const FiniteDist& phi, const FiniteDist& psi,
                               int grid_points = 201);

/// Random irreducible model with positive noise and initial masses.
FiniteChainModel random_chain_model(std::size_t nx, std::size_t nw,
                                    std::uint64_t seed);
/// Two-state, two-noise model with f(x, 0) != f(x, 1).
FiniteChainModel random_mixing_model(std::uint64_t seed);
/// Random history-dependent strategy with positive masses.
StrategyTable random_strategy(const FiniteChainModel& model, int horizon,
                              std::uint64_t seed);
/// Random strategy depending on the history only through the current state.
StrategyTable random_markov_strategy(const FiniteChainModel& model,
                                     int horizon, std::uint64_t seed);

struct IdentityCheck {
  std::string name;
  double value = 0.0;
  bool passed = false;
};

struct IdentityReport {
  std::vector<IdentityCheck> checks;
  bool all_passed() const;
};

/// Balance, superadditivity, Markovization and support checks on one
/// model/strategy pair.
IdentityReport identity_suite(const FiniteChainModel& model,
                              const StrategyTable& strategy);

}  // namespace entropy_bridge
