#include "entropy_bridge/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace entropy_bridge {

namespace {

struct OneStep {
  SymMatrix gamma1_inv;
  SymMatrix gamma1_inv_sqrt;
  double logdet_gamma1;
};

OneStep one_step(const LinearSystem& sys) {
  const SymMatrix gamma1 =
      SymMatrix::FromSymmetricProduct(sys.B() * sys.B().transpose());
  if (!gramian_full_rank(gamma1)) {
    throw UnreachableError(
        "one-step Gramian B B^T is singular: B must have full row rank");
  }
  const SymEig e = sym_eig_pd(gamma1, "one-step Gramian");
  return OneStep{e.apply([](double x) { return 1.0 / x; }),
                 e.apply([](double x) { return 1.0 / std::sqrt(x); }),
                 e.values.array().log().sum()};
}

double weighted_ratio(const RobustnessProblem& prob, const SymMatrix& sigma) {
  return (prob.weight().matrix() * sigma.matrix()).trace() /
         prob.nominal_loss();
}

}  // namespace

RobustnessProblem::RobustnessProblem(LinearSystem sys, SymMatrix weight,
                                     double gamma)
    : sys_(std::move(sys)), weight_(std::move(weight)), gamma_(gamma) {
  if (weight_.order() != sys_.state_dim()) {
    throw DimensionError("weight order must equal the state dimension");
  }
  sym_eig_pd(weight_, "weight matrix");
  if (!(gamma_ >= 1.0) || !std::isfinite(gamma_)) {
    throw ParameterError("gamma must be a finite number >= 1");
  }
  one_step(sys_);
  invariant_cov_ = dlyap_inf(sys_);
  nominal_loss_ = (weight_.matrix() * invariant_cov_.matrix()).trace();
}

double sigma_func(double z) { return -2.0 / (1.0 + std::sqrt(1.0 + 4.0 * z)); }

Matrix sigma_of_product(const SymMatrix& u, const SymMatrix& v) {
  const UvSimilarity sim = uv_similarity(u, v);
  const SymMatrix sw = sim.w.apply(sigma_func);
  return sim.v_inv_sqrt.matrix() * sw.matrix() * sim.v_sqrt.matrix();
}

double jtilde(const Vector& alpha, const SymMatrix& sigma,
              const LinearSystem& sys) {
  const int n = sys.state_dim();
  if (alpha.size() != n || sigma.order() != n) {
    throw DimensionError("jtilde: dimension mismatch");
  }
  const OneStep os = one_step(sys);
  const Matrix& A = sys.A();
  const Matrix& G = os.gamma1_inv_sqrt.matrix();
  const SymMatrix U = congruence(G * A, sigma);
  const SymMatrix V = congruence(G, sigma);
  const RiccatiSolution ric = riccati_closed_form(U, V);
  const Vector drift = alpha - A * alpha;
  const Matrix precision = A.transpose() * os.gamma1_inv.matrix() * A +
                           os.gamma1_inv.matrix();
  const double value = quad_form(os.gamma1_inv, drift) + os.logdet_gamma1 -
                       n * std::log(2.0) +
                       (precision * sigma.matrix()).trace() -
                       logdet_pd(sigma, "Sigma") + ric.logdet_factor -
                       ric.tr_sqrt;
  return 0.5 * value;
}

namespace {

/// S = Sigma^{1/2} and M = S D S, where RHS^{-1} = Sigma^{-1} + D.
struct StationarityParts {
  Matrix s;
  Matrix m;
};

StationarityParts stationarity_parts(double lambda,
                                     const RobustnessProblem& prob,
                                     const SymMatrix& sigma) {
  const LinearSystem& sys = prob.sys();
  const int n = sys.state_dim();
  const OneStep os = one_step(sys);
  const Matrix& A = sys.A();
  const Matrix& G = os.gamma1_inv_sqrt.matrix();
  const SymMatrix U = congruence(G * A, sigma);
  const SymMatrix V = congruence(G, sigma);
  const UvSimilarity sim = uv_similarity(U, V);
  // With mho = -V sigma(UV) the Riccati identity mho + mho U mho = V turns
  // RHS^{-1} into Sigma^{-1} + D, where
  //   D = A^T G (I - mho) G A + G (I - mho^{-1}) G - lambda Pi
  // vanishes at the fixed point. Forming D directly avoids cancelling the
  // large terms of the expanded expression.
  const SymMatrix f = sim.w.apply(
      [](double x) { return 2.0 / (1.0 + std::sqrt(1.0 + 4.0 * x)); });
  const SymMatrix f_inv = sim.w.apply(
      [](double x) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * x)); });
  const Matrix I = Matrix::Identity(n, n);
  const Matrix one_minus_mho = I - congruence(sim.v_sqrt.matrix(), f).matrix();
  const Matrix one_minus_mho_inv =
      I - congruence(sim.v_inv_sqrt.matrix(), f_inv).matrix();
  const Matrix d = A.transpose() * G * one_minus_mho * G * A +
                   G * one_minus_mho_inv * G - lambda * prob.weight().matrix();
  StationarityParts out;
  out.s = sqrt_pd(sigma, "Sigma").matrix();
  out.m = out.s * d * out.s;
  return out;
}

/// (Sigma^{-1} + w D)^{-1} = S (I + w M)^{-1} S.
SymMatrix precision_step(const StationarityParts& p, double w) {
  const Matrix I = Matrix::Identity(p.s.rows(), p.s.cols());
  const SymMatrix inner = SymMatrix::FromSymmetricProduct(I + w * p.m);
  return congruence(p.s, inverse_pd(inner, "stationarity matrix"));
}

}  // namespace

SymMatrix sigma_equation_rhs(double lambda, const RobustnessProblem& prob,
                             const SymMatrix& sigma) {
  return precision_step(stationarity_parts(lambda, prob, sigma), 1.0);
}

namespace {

enum class SolveFailure { kNone, kLeftCone, kIterationLimit };

struct SolveAttempt {
  SigmaSolve result;
  SolveFailure failure = SolveFailure::kNone;
  std::string message;
  SymMatrix last;
};

/// jtilde(0, Sigma) - lambda Tr(Pi Sigma) / 2, whose Sigma-gradient is D / 2.
double lagrangian(double lambda, const RobustnessProblem& prob,
                  const SymMatrix& sigma) {
  const int n = prob.sys().state_dim();
  return jtilde(Vector::Zero(n), sigma, prob.sys()) -
         0.5 * lambda * (prob.weight().matrix() * sigma.matrix()).trace();
}

/// Descent on the Lagrangian through damped precision updates
/// Sigma^{-1} <- Sigma^{-1} + w D. The full step w = 1 is the plain fixed
/// point map. Each step is shortened until it stays positive definite and
/// passes an Armijo test, so iterates far from the fixed point still make
/// progress. Once the predicted decrease sinks below the roundoff of the
/// Lagrangian the test switches to a decrease of the gradient norm. An
/// iterate that runs off to infinity means the Lagrangian is unbounded below,
/// i.e. lambda lies past the breakdown of the equation.
SolveAttempt attempt_sigma(double lambda, const RobustnessProblem& prob,
                           const SymMatrix& warm_start,
                           const RobustnessOptions& options) {
  constexpr int kBacktracks = 60;
  constexpr double kArmijo = 1e-4;
  constexpr double kNoise = 1e-11;
  constexpr double kRoundoffFloor = 1e-8;
  SolveAttempt out;
  SymMatrix sigma = warm_start;
  const double blowup = 1e12 * std::max(1.0, warm_start.norm());
  double f = lagrangian(lambda, prob, sigma);
  StationarityParts parts = stationarity_parts(lambda, prob, sigma);
  double w = options.damping;
  auto fail = [&](SolveFailure why, std::string msg, int it) {
    out.failure = why;
    out.message = std::move(msg);
    out.result.iterations = it;
    out.last = sigma;
    return out;
  };
  for (int it = 1; it <= options.max_fixed_point_iterations; ++it) {
    const double g = parts.m.norm();
    if (g < options.fix_tol) {
      const SymMatrix check = sigma_equation_rhs(lambda, prob, sigma);
      out.result = SigmaSolve{sigma, it, (check - sigma).norm() / sigma.norm()};
      return out;
    }
    SymMatrix next;
    StationarityParts next_parts;
    double f_next = 0.0;
    bool accepted = false;
    for (int k = 0; k < kBacktracks && !accepted; ++k, w *= 0.5) {
      try {
        next = precision_step(parts, w);
        f_next = lagrangian(lambda, prob, next);
        next_parts = stationarity_parts(lambda, prob, next);
      } catch (const NotPdError&) {
        continue;
      }
      const double predicted = kArmijo * 0.5 * w * g * g;
      accepted = predicted > kNoise * (1.0 + std::abs(f))
                     ? f_next <= f - predicted
                     : next_parts.m.norm() < g;
      if (accepted) break;
    }
    if (!accepted && g < kRoundoffFloor) {
      // No step reduces the gradient any further: roundoff floor.
      const SymMatrix check = sigma_equation_rhs(lambda, prob, sigma);
      out.result = SigmaSolve{sigma, it, (check - sigma).norm() / sigma.norm()};
      return out;
    }
    if (!accepted) {
      std::ostringstream os;
      os << "line search failed for lambda = " << lambda
         << " at gradient norm " << g;
      return fail(SolveFailure::kIterationLimit, os.str(), it);
    }
    sigma = next;
    f = f_next;
    parts = std::move(next_parts);
    if (!(sigma.norm() < blowup)) {
      std::ostringstream os;
      os << "fixed point left the positive definite cone: Sigma grows "
            "without bound for lambda = "
         << lambda;
      return fail(SolveFailure::kLeftCone, os.str(), it);
    }
    w = std::min(options.damping, 2.0 * w);
  }
  std::ostringstream os;
  os << "fixed point for lambda = " << lambda << " did not converge in "
     << options.max_fixed_point_iterations << " iterations";
  return fail(SolveFailure::kIterationLimit, os.str(),
              options.max_fixed_point_iterations);
}

}  // namespace

SigmaSolve solve_sigma(double lambda, const RobustnessProblem& prob,
                       const SymMatrix& warm_start,
                       const RobustnessOptions& options) {
  SolveAttempt a = attempt_sigma(lambda, prob, warm_start, options);
  if (a.failure != SolveFailure::kNone) {
    throw NonconvergenceError(a.message, a.last.matrix());
  }
  return a.result;
}

RobustnessSolution robustness_index(const RobustnessProblem& prob,
                                    const RobustnessOptions& options) {
  const LinearSystem& sys = prob.sys();
  const int n = sys.state_dim();
  RobustnessSolution out;

  {
    const Matrix I = Matrix::Identity(n, n);
    const Matrix inv = (I - sys.A()).inverse();
    const SymMatrix c = congruence(inv, SymMatrix::FromSymmetricProduct(
                                            sys.B() * sys.B().transpose()));
    const SymMatrix scaled =
        congruence(sqrt_pd(prob.weight(), "weight matrix").matrix(), c);
    out.lambda_mean_limit = 1.0 / sym_eig(scaled).values.maxCoeff();
  }

  const double target = prob.gamma();
  if (target == 1.0) {
    out.sigma = prob.invariant_cov();
    out.converged = true;
    return out;
  }

  double lam = 0.0;
  SymMatrix sigma = prob.invariant_cov();
  double g = 1.0;
  double step = options.initial_step > 0.0 ? options.initial_step
                                           : 0.05 / prob.nominal_loss();
  bool warned_monotone = false;

  auto attempt = [&](double l, const SymMatrix& warm) {
    SolveAttempt a = attempt_sigma(l, prob, warm, options);
    out.fixed_point_iterations += a.result.iterations;
    return a;
  };
  auto evaluate = [&](double l, const SymMatrix& warm) {
    SolveAttempt a = attempt(l, warm);
    if (a.failure != SolveFailure::kNone) {
      throw NonconvergenceError(a.message, a.last.matrix());
    }
    return a.result;
  };

  // Continuation until the target is bracketed.
  double lam_hi = 0.0;
  SymMatrix sigma_hi;
  double g_hi = 0.0;
  bool bracketed = false;
  while (!bracketed) {
    if (++out.continuation_steps > options.max_continuation_steps) {
      throw NonconvergenceError("continuation step limit reached",
                                sigma.matrix());
    }
    const double trial = lam + step;
    SolveAttempt a = attempt(trial, sigma);
    if (a.failure != SolveFailure::kNone) {
      step *= 0.5;
      if (step < 1e-15 * std::max(1.0, lam)) {
        std::ostringstream os;
        os.precision(10);
        if (a.failure == SolveFailure::kLeftCone) {
          os << "gamma = " << target
             << " is not attainable: the stationarity equation breaks down "
                "near lambda = "
             << lam << " with maximum attained gamma " << g;
          throw GammaUnattainableError(os.str(), g, lam);
        }
        os << "continuation stalled at lambda = " << lam
           << " (attained gamma " << g << "): " << a.message;
        throw NonconvergenceError(os.str(), a.last.matrix());
      }
      continue;
    }
    const SigmaSolve& s = a.result;
    const double g_trial = weighted_ratio(prob, s.sigma);
    if (g_trial < g && !warned_monotone) {
      out.warnings.push_back(
          "loss ratio decreased along the continuation path");
      warned_monotone = true;
    }
    if (g_trial >= target) {
      lam_hi = trial;
      sigma_hi = s.sigma;
      g_hi = g_trial;
      bracketed = true;
    } else {
      lam = trial;
      sigma = s.sigma;
      g = g_trial;
      if (s.iterations < 40) step *= 1.5;
    }
  }

  // Illinois-modified secant on h(lambda) = g(lambda) - gamma.
  double lo = lam, h_lo = g - target;
  double hi = lam_hi, h_hi = g_hi - target;
  SymMatrix sig_lo = sigma, sig_hi = sigma_hi;
  double best_lam = hi;
  SymMatrix best_sigma = sig_hi;
  double best_h = h_hi;
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    if (std::abs(best_h) <= options.lam_tol * target) break;
    if (hi - lo <= 4e-16 * std::max(1.0, std::abs(hi))) break;
    double mid = (lo * h_hi - hi * h_lo) / (h_hi - h_lo);
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    const SymMatrix& warm = (mid - lo < hi - mid) ? sig_lo : sig_hi;
    SigmaSolve s = evaluate(mid, warm);
    const double h_mid = weighted_ratio(prob, s.sigma) - target;
    if (std::abs(h_mid) < std::abs(best_h)) {
      best_h = h_mid;
      best_lam = mid;
      best_sigma = s.sigma;
    }
    if (h_mid < 0.0) {
      lo = mid;
      h_lo = h_mid;
      sig_lo = s.sigma;
      if (side == -1) h_hi *= 0.5;
      side = -1;
    } else {
      hi = mid;
      h_hi = h_mid;
      sig_hi = s.sigma;
      if (side == 1) h_lo *= 0.5;
      side = 1;
    }
  }

  out.lambda = best_lam;
  out.sigma = best_sigma;
  out.gamma_attained = weighted_ratio(prob, best_sigma);
  out.constraint_residual = std::abs(out.gamma_attained - target);
  out.sigma_residual =
      (sigma_equation_rhs(best_lam, prob, best_sigma) - best_sigma).norm() /
      best_sigma.norm();
  out.converged = out.constraint_residual <= options.lam_tol * target;
  if (!out.converged) {
    out.warnings.push_back("secant refinement stopped before lam_tol");
  }
  if (out.lambda >= out.lambda_mean_limit) {
    out.warnings.push_back(
        "lambda exceeds the limit for the zero-mean reduction");
  }
  out.Z = jtilde(Vector::Zero(n), best_sigma, sys);
  return out;
}

ScalarRobustness z_1d(double a, double gamma) {
  if (!(std::abs(a) < 1.0)) throw ParameterError("z_1d requires |A| < 1");
  if (!(gamma >= 1.0)) throw ParameterError("z_1d requires gamma >= 1");
  if (gamma == 1.0) return {0.0, 1.0};
  const double c = 1.0 - a * a;
  const double mho =
      2.0 * gamma / (c + std::sqrt(c * c + 4.0 * a * a * gamma * gamma));
  const double r = 2.0 * a * gamma / c;
  const double z =
      0.5 * ((1.0 + a * a) / c * gamma - std::sqrt(1.0 + r * r) - std::log(mho));
  return {z, mho};
}

double z_1d_asymptote(double a, double gamma) {
  const double m = std::abs(a);
  return (1.0 - m) * gamma / (2.0 * (1.0 + m));
}

}  // namespace entropy_bridge
