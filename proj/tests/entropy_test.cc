#include "entropy_bridge/entropy.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace entropy_bridge {
namespace {

// KL(Ber(3/4) || Ber(1/2)), evaluated in 40-digit arithmetic.
constexpr double kCoinSupply = 0.13081203594113696;

GaussianDist Scalar(double mean, double var) {
  return GaussianDist(Vector::Constant(1, mean),
                      SymMatrix::Diagonal(Vector::Constant(1, var)));
}

TEST(GaussianDistTest, ValidatesShapeAndDefiniteness) {
  EXPECT_THROW(GaussianDist(Vector::Zero(2), SymMatrix::Identity(3)),
               DimensionError);
  EXPECT_THROW(GaussianDist(Vector::Zero(2), SymMatrix::Zero(2)), NotPdError);
}

TEST(GaussRelentTest, SelfIsZero) {
  const GaussianDist p(Vector::Ones(3), SymMatrix::Identity(3) * 2.0);
  EXPECT_NEAR(gauss_relent(p, p), 0.0, 1e-15);
}

TEST(GaussRelentTest, ScalarFormula) {
  // 1/2 (s/q + (m1-m2)^2/q - 1 - ln(s/q)).
  const double expected = 0.5 * (2.0 / 3.0 + 4.0 / 3.0 - 1.0 - std::log(2.0 / 3.0));
  EXPECT_NEAR(gauss_relent(Scalar(1.0, 2.0), Scalar(-1.0, 3.0)), expected, 1e-15);
}

TEST(GaussRelentTest, PartsAndNonnegativity) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 4;
    Matrix g1(d, d), g2(d, d);
    Vector m1(d), m2(d);
    for (int i = 0; i < d; ++i) {
      m1[i] = n(rng);
      m2[i] = n(rng);
      for (int j = 0; j < d; ++j) {
        g1(i, j) = n(rng);
        g2(i, j) = n(rng);
      }
    }
    const GaussianDist p(m1, SymMatrix::FromSymmetricProduct(
                                 g1 * g1.transpose() + 0.1 * Matrix::Identity(d, d)));
    const GaussianDist q(m2, SymMatrix::FromSymmetricProduct(
                                 g2 * g2.transpose() + 0.1 * Matrix::Identity(d, d)));
    const GaussRelentParts parts = gauss_relent_parts(p, q);
    EXPECT_GE(parts.mean_part, 0.0);
    EXPECT_GE(parts.cov_part, -1e-12);
    EXPECT_NEAR(gauss_relent(p, q), 0.5 * (parts.mean_part + parts.cov_part),
                1e-14 * (1.0 + parts.mean_part + parts.cov_part));
    // Direct formula with explicit inverse.
    const Matrix qi = q.cov().matrix().inverse();
    const Vector dm = p.mean() - q.mean();
    const double direct =
        0.5 * ((qi * p.cov().matrix()).trace() + dm.dot(qi * dm) - d +
               std::log(q.cov().matrix().determinant() /
                        p.cov().matrix().determinant()));
    EXPECT_NEAR(gauss_relent(p, q), direct, 1e-9 * (1.0 + std::abs(direct)));
  }
}

TEST(FiniteDistTest, ChecksNormalization) {
  EXPECT_THROW(FiniteDist({0.5, 0.6}), ParameterError);
  EXPECT_THROW(FiniteDist({1.5, -0.5}), ParameterError);
  EXPECT_NO_THROW(FiniteDist({0.25, 0.75}));
  const FiniteDist u = FiniteDist::Uniform(4);
  EXPECT_DOUBLE_EQ(u[2], 0.25);
  EXPECT_EQ(FiniteDist::PointMass(3, 1)[1], 1.0);
}

TEST(FiniteRelentTest, Conventions) {
  const FiniteDist p({0.75, 0.25});
  const FiniteDist half({0.5, 0.5});
  EXPECT_NEAR(finite_relent(p, half), kCoinSupply, 1e-16);
  // 0 ln 0 = 0.
  EXPECT_NEAR(finite_relent(FiniteDist({1.0, 0.0}), half), std::log(2.0), 1e-16);
  // Mass on a null point.
  EXPECT_EQ(finite_relent(half, FiniteDist({1.0, 0.0})), kInfinity);
}

TEST(FiniteCondRelentTest, CoinFromFixedState) {
  // State 0 with probability 1; the noise is Ber(3/4) against a fair coin.
  const FiniteJoint joint(2, 2, 1, {0.75, 0.25, 0.0, 0.0});
  EXPECT_NEAR(finite_cond_relent(joint, FiniteDist({0.5, 0.5}), 1), kCoinSupply,
              1e-16);
}

TEST(FiniteCondRelentTest, ProductLawHasZeroSupply) {
  const FiniteDist r({0.3, 0.7});
  std::vector<double> masses;
  for (double px : {0.2, 0.8}) {
    for (std::size_t w = 0; w < 4; ++w) masses.push_back(px * word_mass(r, w, 2));
  }
  const FiniteJoint joint(2, 2, 2, masses);
  EXPECT_NEAR(finite_cond_relent(joint, r, 2), 0.0, 1e-15);
  EXPECT_NEAR(joint.state_marginal()[0], 0.2, 1e-15);
}

TEST(FiniteCondRelentTest, AbsoluteContinuityFailure) {
  const FiniteJoint joint(1, 2, 1, {0.5, 0.5});
  EXPECT_EQ(finite_cond_relent(joint, FiniteDist({1.0, 0.0}), 1), kInfinity);
}

TEST(FiniteJointTest, ShapeChecks) {
  EXPECT_THROW(FiniteJoint(2, 2, 2, std::vector<double>(4, 0.25)), DimensionError);
  EXPECT_THROW(finite_cond_relent(FiniteJoint(1, 2, 1, {0.5, 0.5}),
                                  FiniteDist({0.2, 0.3, 0.5}), 1),
               DimensionError);
}

TEST(WordMassTest, ProductOfDigits) {
  const FiniteDist r({0.1, 0.2, 0.7});
  // Word (2, 0, 1) in base 3 with w_0 most significant: 2*9 + 0*3 + 1 = 19.
  EXPECT_NEAR(word_mass(r, 19, 3), 0.7 * 0.1 * 0.2, 1e-17);
}

}  // namespace
}  // namespace entropy_bridge
