#include "entropy_bridge/entropy.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace entropy_bridge {

namespace {

constexpr double kMassTol = 1e-12;

void check_masses(const std::vector<double>& masses) {
  double total = 0.0;
  for (double p : masses) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ParameterError("probability masses must be finite and nonnegative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kMassTol) {
    std::ostringstream os;
    os.precision(17);
    os << "probability masses sum to " << total << ", not 1";
    throw ParameterError(os.str());
  }
}

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

GaussianDist::GaussianDist(Vector mean, SymMatrix cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (mean_.size() != cov_.order()) {
    throw DimensionError("Gaussian mean has length " +
                         std::to_string(mean_.size()) + " but covariance order " +
                         std::to_string(cov_.order()));
  }
  sym_eig_pd(cov_, "Gaussian covariance");
}

FiniteDist::FiniteDist(std::vector<double> masses) : masses_(std::move(masses)) {
  check_masses(masses_);
}

FiniteDist FiniteDist::Normalized(std::vector<double> masses) {
  double total = 0.0;
  for (double p : masses) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ParameterError("probability masses must be finite and nonnegative");
    }
    total += p;
  }
  if (!(total > 0.0)) throw ParameterError("masses have zero total");
  for (double& p : masses) p /= total;
  FiniteDist d;
  d.masses_ = std::move(masses);
  return d;
}

FiniteDist FiniteDist::Uniform(std::size_t n) {
  return FiniteDist::Normalized(std::vector<double>(n, 1.0));
}

FiniteDist FiniteDist::PointMass(std::size_t n, std::size_t at) {
  std::vector<double> m(n, 0.0);
  m.at(at) = 1.0;
  return FiniteDist(std::move(m));
}

FiniteJoint::FiniteJoint(std::size_t nx, std::size_t nw, int k,
                         std::vector<double> masses)
    : nx_(nx), nw_(nw), k_(k), words_(ipow(nw, k)), masses_(std::move(masses)) {
  if (k < 0 || masses_.size() != nx_ * words_) {
    throw DimensionError("joint mass table has " +
                         std::to_string(masses_.size()) + " entries, expected " +
                         std::to_string(nx_ * words_));
  }
  check_masses(masses_);
}

FiniteDist FiniteJoint::state_marginal() const {
  std::vector<double> p(nx_, 0.0);
  for (std::size_t x = 0; x < nx_; ++x) {
    for (std::size_t w = 0; w < words_; ++w) p[x] += (*this)(x, w);
  }
  return FiniteDist::Normalized(std::move(p));
}

GaussRelentParts gauss_relent_parts(const GaussianDist& p,
                                    const GaussianDist& q) {
  if (p.dim() != q.dim()) {
    throw DimensionError("relative entropy between Gaussians of dimension " +
                         std::to_string(p.dim()) + " and " +
                         std::to_string(q.dim()));
  }
  const SymEig qe = sym_eig_pd(q.cov(), "reference covariance");
  const SymMatrix q_inv = qe.apply([](double x) { return 1.0 / x; });
  const SymMatrix q_inv_sqrt =
      qe.apply([](double x) { return 1.0 / std::sqrt(x); });
  // chi = C_Q^{-1} C_P is similar to C_Q^{-1/2} C_P C_Q^{-1/2}.
  const Vector chi = sym_eig(congruence(q_inv_sqrt.matrix(), p.cov())).values;
  const double n = static_cast<double>(p.dim());
  const Vector d = p.mean() - q.mean();
  GaussRelentParts out;
  out.mean_part = quad_form(q_inv, d);
  out.cov_part = chi.sum() - chi.array().log().sum() - n;
  return out;
}

double gauss_relent(const GaussianDist& p, const GaussianDist& q) {
  const GaussRelentParts parts = gauss_relent_parts(p, q);
  return 0.5 * (parts.mean_part + parts.cov_part);
}

double finite_relent(const FiniteDist& p, const FiniteDist& q) {
  if (p.size() != q.size()) {
    throw DimensionError("alphabet sizes differ: " + std::to_string(p.size()) +
                         " vs " + std::to_string(q.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kInfinity;
    sum += p[i] * std::log(p[i] / q[i]);
  }
  return sum;
}

double word_mass(const FiniteDist& ref_noise, std::size_t word, int k) {
  const std::size_t nw = ref_noise.size();
  double mass = 1.0;
  for (int i = 0; i < k; ++i) {
    mass *= ref_noise[word % nw];
    word /= nw;
  }
  return mass;
}

double finite_cond_relent(const FiniteJoint& joint, const FiniteDist& ref_noise,
                          int k) {
  if (joint.nw() != ref_noise.size() || joint.word_length() != k) {
    throw DimensionError("joint shape does not match |W|^k with |W| = " +
                         std::to_string(ref_noise.size()) +
                         ", k = " + std::to_string(k));
  }
  const std::size_t words = joint.words();
  std::vector<double> ref(words);
  for (std::size_t w = 0; w < words; ++w) ref[w] = word_mass(ref_noise, w, k);
  double sum = 0.0;
  for (std::size_t x = 0; x < joint.nx(); ++x) {
    double px = 0.0;
    for (std::size_t w = 0; w < words; ++w) px += joint(x, w);
    if (px == 0.0) continue;
    for (std::size_t w = 0; w < words; ++w) {
      const double q = joint(x, w);
      if (q == 0.0) continue;
      if (ref[w] == 0.0) return kInfinity;
      sum += q * std::log((q / px) / ref[w]);
    }
  }
  return sum;
}

}  // namespace entropy_bridge
