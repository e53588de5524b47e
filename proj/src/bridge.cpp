#include "entropy_bridge/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace entropy_bridge {

namespace {

void check_boundary(const LinearSystem& sys, const GaussianDist& initial,
                    const GaussianDist& terminal) {
  const int n = sys.state_dim();
  if (initial.dim() != n || terminal.dim() != n) {
    throw DimensionError("boundary distributions must have dimension " +
                         std::to_string(n));
  }
}

std::string unreachable_message(int horizon, std::optional<int> tau) {
  std::ostringstream os;
  os << "horizon t = " << horizon
     << " is unreachable: the reachability Gramian is singular";
  if (tau) {
    os << " (minimal steering horizon tau = " << *tau << ")";
  } else {
    os << " (tau does not exist: the pair (A, B) is not reachable)";
  }
  return os.str();
}

/// Gramian data shared by the strategy constructions.
struct Reach {
  GramianSet g;
  SymMatrix gamma_inv;
  SymMatrix gamma_sqrt;
  SymMatrix gamma_inv_sqrt;
};

std::optional<Reach> reach(const LinearSystem& sys, int horizon) {
  GramianSet g = gramians(sys, horizon);
  if (!g.full_rank) return std::nullopt;
  const SymEig e = sym_eig_pd(g.gamma, "reachability Gramian");
  Reach r{std::move(g), e.apply([](double x) { return 1.0 / x; }),
          e.apply([](double x) { return std::sqrt(x); }),
          e.apply([](double x) { return 1.0 / std::sqrt(x); })};
  return r;
}

Reach reach_or_throw(const LinearSystem& sys, int horizon) {
  auto r = reach(sys, horizon);
  if (!r) {
    throw UnreachableError(
        unreachable_message(horizon, reachability_index(sys)));
  }
  return std::move(*r);
}

Vector optimal_mean(const Reach& r, const GaussianDist& initial,
                    const GaussianDist& terminal) {
  const Vector d = terminal.mean() - r.g.A_power * initial.mean();
  return r.g.H.transpose() * (r.gamma_inv.matrix() * d);
}

NoiseStrategy strategy_from_mho(const Reach& r, const SymMatrix& mho,
                                const GaussianDist& initial,
                                const GaussianDist& terminal) {
  const Matrix& H = r.g.H;
  const int mt = static_cast<int>(H.cols());
  // N = Gamma^{-1} - S^{-1} with S = Gamma^{1/2} mho Gamma^{1/2}.
  const SymMatrix s_inv =
      congruence(r.gamma_inv_sqrt.matrix(), inverse_pd(mho, "mho"));
  const SymMatrix n_mult = r.gamma_inv - s_inv;
  const SymMatrix precision = SymMatrix::Identity(mt) -
                              congruence(H.transpose(), n_mult);
  const SymEig pe = sym_eig(precision);
  const double smallest = pe.values.minCoeff();
  if (!(smallest > tol::kPositiveDefinite * precision.trace())) {
    std::ostringstream os;
    os << "optimal conditional noise covariance is not positive definite: "
          "I - H^T N H has eigenvalue "
       << smallest;
    throw ConditioningError(os.str(), smallest);
  }
  const SymMatrix cond_cov = pe.apply([](double x) { return 1.0 / x; });
  Matrix gain = cond_cov.matrix() * H.transpose() * n_mult.matrix() *
                r.g.A_power;
  return NoiseStrategy(r.g.horizon, optimal_mean(r, initial, terminal),
                       std::move(gain), cond_cov, initial.mean());
}

}  // namespace

NoiseStrategy::NoiseStrategy(int horizon, Vector w_mean, Matrix gain,
                             SymMatrix cond_cov, Vector anchor_mean)
    : horizon_(horizon),
      w_mean_(std::move(w_mean)),
      gain_(std::move(gain)),
      cond_cov_(std::move(cond_cov)),
      anchor_mean_(std::move(anchor_mean)) {
  const auto mt = w_mean_.size();
  if (horizon_ < 1 || gain_.rows() != mt || cond_cov_.order() != mt ||
      gain_.cols() != anchor_mean_.size()) {
    throw DimensionError("inconsistent noise strategy dimensions");
  }
  // Admissibility: the conditional law must be equivalent to N(0, I).
  sym_eig_pd(cond_cov_, "conditional noise covariance");
}

NoiseStrategy NoiseStrategy::Nominal(const LinearSystem& sys, int horizon,
                                     const Vector& anchor_mean) {
  const int mt = sys.input_dim() * horizon;
  return NoiseStrategy(horizon, Vector::Zero(mt),
                       Matrix::Zero(mt, sys.state_dim()),
                       SymMatrix::Identity(mt), anchor_mean);
}

BridgeResult solve_bridge(const LinearSystem& sys, int horizon,
                          const GaussianDist& initial,
                          const GaussianDist& terminal) {
  check_boundary(sys, initial, terminal);
  auto r = reach(sys, horizon);
  if (!r) return Unreachable{horizon, reachability_index(sys)};

  const Vector d = terminal.mean() - r->g.A_power * initial.mean();
  const double mean_part = quad_form(r->gamma_inv, d);
  const SymMatrix U =
      congruence(r->gamma_inv_sqrt.matrix() * r->g.A_power, initial.cov());
  const SymMatrix V = congruence(r->gamma_inv_sqrt.matrix(), terminal.cov());
  const RiccatiSolution ric = riccati_closed_form(U, V);
  const double logdet_mho = logdet_pd(ric.mho, "mho");
  const double cov_part = std::max(
      0.0, U.trace() + V.trace() - ric.tr_sqrt - logdet_mho);

  NoiseStrategy strategy = strategy_from_mho(*r, ric.mho, initial, terminal);
  return BridgeSolution{0.5 * (mean_part + cov_part),
                        mean_part,
                        cov_part,
                        ric.mho,
                        U,
                        V,
                        std::move(strategy)};
}

double supply_value(const BridgeResult& r) {
  if (const auto* s = std::get_if<BridgeSolution>(&r)) return s->J;
  return kInfinity;
}

BridgeSolution min_supply(const LinearSystem& sys, int horizon,
                          const GaussianDist& initial,
                          const GaussianDist& terminal) {
  BridgeResult r = solve_bridge(sys, horizon, initial, terminal);
  if (const auto* u = std::get_if<Unreachable>(&r)) {
    throw UnreachableError(unreachable_message(u->horizon, u->tau));
  }
  return std::get<BridgeSolution>(std::move(r));
}

NoiseStrategy optimal_strategy(const LinearSystem& sys, int horizon,
                               const GaussianDist& initial,
                               const GaussianDist& terminal) {
  return min_supply(sys, horizon, initial, terminal).strategy;
}

double feasible_epsilon_max(const LinearSystem& sys, int horizon,
                            const GaussianDist& terminal) {
  const Reach r = reach_or_throw(sys, horizon);
  // rho(Gamma_t Theta^{-1}) = lambda_max(Theta^{-1/2} Gamma_t Theta^{-1/2}).
  const SymMatrix scaled = congruence(
      inv_sqrt_pd(terminal.cov(), "terminal covariance").matrix(), r.g.gamma);
  return 1.0 / sym_eig(scaled).values.maxCoeff();
}

NoiseStrategy feasible_strategy(const LinearSystem& sys, int horizon,
                                const GaussianDist& initial,
                                const GaussianDist& terminal,
                                std::optional<double> eps) {
  check_boundary(sys, initial, terminal);
  const Reach r = reach_or_throw(sys, horizon);
  const double eps_max = feasible_epsilon_max(sys, horizon, terminal);
  const double e = eps.value_or(0.5 * eps_max);
  if (!(e > 0.0) || e > eps_max * (1.0 + 1e-12)) {
    std::ostringstream os;
    os.precision(17);
    os << "epsilon = " << e << " outside (0, " << eps_max << "]";
    throw ParameterError(os.str());
  }
  const SymMatrix slack = terminal.cov() - r.g.gamma * e;
  const Matrix root =
      sqrt_psd(slack, terminal.cov().max_eigenvalue()).matrix();
  const Matrix sigma_inv_sqrt =
      inv_sqrt_pd(initial.cov(), "initial covariance").matrix();
  const Matrix& H = r.g.H;
  Matrix gain = H.transpose() * r.gamma_inv.matrix() *
                (root * sigma_inv_sqrt - r.g.A_power);
  const int mt = static_cast<int>(H.cols());
  return NoiseStrategy(horizon, optimal_mean(r, initial, terminal),
                       std::move(gain), SymMatrix::Identity(mt) * e,
                       initial.mean());
}

double strategy_supply(const NoiseStrategy& strategy, const SymMatrix& sigma) {
  if (sigma.order() != strategy.state_dim()) {
    throw DimensionError("initial covariance order does not match the gain");
  }
  const double mt = static_cast<double>(strategy.noise_dim());
  const Matrix& K = strategy.gain();
  const double gain_energy = (K * sigma.matrix() * K.transpose()).trace();
  return 0.5 * (strategy.w_mean().squaredNorm() + gain_energy +
                strategy.cond_cov().trace() -
                logdet_pd(strategy.cond_cov(), "conditional noise covariance") -
                mt);
}

GaussianDist push_forward(const LinearSystem& sys, const NoiseStrategy& strategy,
                          const GaussianDist& initial) {
  const GramianSet g = gramians(sys, strategy.horizon());
  if (strategy.state_dim() != sys.state_dim() ||
      strategy.noise_dim() != g.H.cols() || initial.dim() != sys.state_dim()) {
    throw DimensionError("strategy does not match the system");
  }
  const Vector mean =
      g.A_power * initial.mean() +
      g.H * (strategy.w_mean() +
             strategy.gain() * (initial.mean() - strategy.anchor_mean()));
  const Matrix closed = g.A_power + g.H * strategy.gain();
  const SymMatrix cov = congruence(closed, initial.cov()) +
                        congruence(g.H, strategy.cond_cov());
  return GaussianDist(mean, cov);
}

double lower_bound(const GaussianDist& initial, const GaussianDist& terminal,
                   const GaussianDist& invariant) {
  return std::max(
      gauss_relent(terminal, invariant) - gauss_relent(initial, invariant), 0.0);
}

GaussianDist invariant_distribution(const LinearSystem& sys) {
  return GaussianDist(Vector::Zero(sys.state_dim()), dlyap_inf(sys));
}

double inf_horizon_supply(const GaussianDist& terminal,
                          const LinearSystem& sys) {
  return gauss_relent(terminal, invariant_distribution(sys));
}

double path_supply(const LinearSystem& sys,
                   const std::vector<GaussianDist>& path) {
  if (!gramian_full_rank(SymMatrix::FromSymmetricProduct(
          sys.B() * sys.B().transpose()))) {
    throw UnreachableError(
        "distribution tracking requires a full-row-rank B (Gamma_1 > 0)");
  }
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    total += min_supply(sys, 1, path[k], path[k + 1]).J;
  }
  return total;
}

}  // namespace entropy_bridge
