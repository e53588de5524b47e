#pragma once

// Relative entropy of Gaussian measures and of finite measures, including the
// conditional supply of a noise-word law against the nominal product law.

#include <cstddef>
#include <limits>
#include <vector>

#include "entropy_bridge/matgauss.hpp"

namespace entropy_bridge {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// N(mean, cov) with cov > 0.
class GaussianDist {
 public:
  GaussianDist(Vector mean, SymMatrix cov);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  const SymMatrix& cov() const { return cov_; }

 private:
  Vector mean_;
  SymMatrix cov_;
};

/// Probability masses over an indexed alphabet.
class FiniteDist {
 public:
  FiniteDist() = default;
  /// Requires nonnegative masses summing to 1 within 1e-12.
  explicit FiniteDist(std::vector<double> masses);
  /// Divides by the total; for accumulated results with rounding drift.
  static FiniteDist Normalized(std::vector<double> masses);
  static FiniteDist Uniform(std::size_t n);
  static FiniteDist PointMass(std::size_t n, std::size_t at);

  std::size_t size() const { return masses_.size(); }
  double operator[](std::size_t i) const { return masses_[i]; }
  const std::vector<double>& masses() const { return masses_; }

 private:
  std::vector<double> masses_;
};

/// Masses over X x W^k, laid out x-major with the noise word in base |W|
/// (w_0 most significant).
class FiniteJoint {
 public:
  FiniteJoint(std::size_t nx, std::size_t nw, int k,
              std::vector<double> masses);

  std::size_t nx() const { return nx_; }
  std::size_t nw() const { return nw_; }
  int word_length() const { return k_; }
  std::size_t words() const { return words_; }
  double operator()(std::size_t x, std::size_t word) const {
    return masses_[x * words_ + word];
  }
  const std::vector<double>& masses() const { return masses_; }
  FiniteDist state_marginal() const;

 private:
  std::size_t nx_;
  std::size_t nw_;
  int k_;
  std::size_t words_;
  std::vector<double> masses_;
};

/// D(P || Q) for Gaussians. Throws NotPdError if Q.cov is singular.
double gauss_relent(const GaussianDist& p, const GaussianDist& q);

/// Mean and covariance parts of gauss_relent (before the factor 1/2).
struct GaussRelentParts {
  double mean_part;
  double cov_part;
};
GaussRelentParts gauss_relent_parts(const GaussianDist& p,
                                    const GaussianDist& q);

/// sum p_i ln(p_i / q_i) with 0 ln 0 = 0; +inf if p charges a q-null point.
double finite_relent(const FiniteDist& p, const FiniteDist& q);

/// Conditional relative entropy of the noise-word law given the state
/// against ref_noise^k; +inf when absolute continuity fails.
double finite_cond_relent(const FiniteJoint& joint, const FiniteDist& ref_noise,
                          int k);

/// Product mass R^k(word) for a word in base |W|.
double word_mass(const FiniteDist& ref_noise, std::size_t word, int k);

}  // namespace entropy_bridge
