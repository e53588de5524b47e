#include "entropy_bridge/matgauss.hpp"

#include <initializer_list>
#include <limits>
#include <random>

#include <gtest/gtest.h>

namespace entropy_bridge {
namespace {

Vector Vec(std::initializer_list<double> v) {
  return Eigen::Map<const Vector>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

Matrix RandomMatrix(int rows, int cols, std::mt19937_64* rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = n(*rng);
  }
  return m;
}

SymMatrix RandomPd(int n, std::mt19937_64* rng, double shift = 0.1) {
  const Matrix g = RandomMatrix(n, n, rng);
  return SymMatrix::FromSymmetricProduct(g * g.transpose() +
                                         shift * Matrix::Identity(n, n));
}

/// Random A scaled to spectral radius `rho`.
Matrix RandomStable(int n, double rho, std::mt19937_64* rng) {
  Matrix a = RandomMatrix(n, n, rng);
  const double r = Eigen::EigenSolver<Matrix>(a).eigenvalues().cwiseAbs().maxCoeff();
  return a * (rho / r);
}

TEST(SymMatrixTest, RejectsAsymmetricInput) {
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  EXPECT_THROW(SymMatrix{m}, DimensionError);
  EXPECT_THROW(SymMatrix{Matrix(2, 3)}, DimensionError);
}

TEST(SymMatrixTest, StoresExactSymmetricPart) {
  Matrix m(2, 2);
  m << 1, 2, 2 + 1e-13, 4;
  const SymMatrix s(m);
  EXPECT_EQ(s(0, 1), s(1, 0));
}

TEST(SymEigTest, IdentityAndDiagonal) {
  const SymEig e = sym_eig(SymMatrix::Identity(3));
  EXPECT_TRUE(e.values.isApprox(Vector::Ones(3)));

  const SymEig d = sym_eig(SymMatrix::Diagonal(Vec({4.0, 1.0})));
  EXPECT_DOUBLE_EQ(d.values[0], 1.0);
  EXPECT_DOUBLE_EQ(d.values[1], 4.0);
  EXPECT_NEAR(std::abs(d.vectors(1, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(d.vectors(0, 1)), 1.0, 1e-15);
}

TEST(SymEigTest, ReconstructsRandomMatrix) {
  std::mt19937_64 rng(7);
  const Matrix g = RandomMatrix(5, 5, &rng);
  const SymMatrix s = SymMatrix::FromSymmetricProduct(g + g.transpose());
  const SymEig e = sym_eig(s);
  const Matrix q = e.vectors;
  const Matrix rebuilt = q * e.values.asDiagonal() * q.transpose();
  EXPECT_LT((rebuilt - s.matrix()).norm(), 1e-10 * (1.0 + s.norm()));
  EXPECT_LT((q.transpose() * q - Matrix::Identity(5, 5)).norm(), 1e-10);
  for (int i = 1; i < 5; ++i) EXPECT_LE(e.values[i - 1], e.values[i]);
}

TEST(SqrtPsdTest, Examples) {
  EXPECT_TRUE(sqrt_psd(SymMatrix::Identity(3)).matrix().isApprox(
      Matrix::Identity(3, 3)));
  const SymMatrix r = sqrt_psd(SymMatrix::Diagonal(Vec({4.0, 9.0})));
  EXPECT_NEAR(r(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(r(1, 1), 3.0, 1e-15);

  std::mt19937_64 rng(3);
  const Matrix g = RandomMatrix(4, 4, &rng);
  const SymMatrix s = SymMatrix::FromSymmetricProduct(g * g.transpose());
  const Matrix root = sqrt_psd(s).matrix();
  EXPECT_LT((root * root - s.matrix()).norm(), 1e-9 * (1.0 + s.norm()));
}

TEST(SqrtPsdTest, ClampsRoundingNoiseAndRejectsNegative) {
  const SymMatrix tiny = SymMatrix::Diagonal(Vec({1.0, -1e-12}));
  EXPECT_EQ(sqrt_psd(tiny)(1, 1), 0.0);
  const SymMatrix neg = SymMatrix::Diagonal(Vec({1.0, -1e-3}));
  EXPECT_THROW(sqrt_psd(neg), NotPsdError);
  // A vanishing difference of large operands.
  const SymMatrix zeroish = SymMatrix::Diagonal(Vec({-3e-17}));
  EXPECT_THROW(sqrt_psd(zeroish), NotPsdError);
  EXPECT_EQ(sqrt_psd(zeroish, 1.0)(0, 0), 0.0);
}

TEST(PdFunctionsTest, ErrorsNameTheMatrix) {
  const SymMatrix singular = SymMatrix::Diagonal(Vec({1.0, 0.0}));
  try {
    inverse_pd(singular, "terminal covariance");
    FAIL();
  } catch (const NotPdError& e) {
    EXPECT_NE(std::string(e.what()).find("terminal covariance"),
              std::string::npos);
  }
}

TEST(LinearSystemTest, CachesSpectralRadius) {
  Matrix a(2, 2);
  a << 0.5, 1.0, 0.0, -0.9;
  const LinearSystem sys(a, Matrix::Identity(2, 2));
  EXPECT_NEAR(sys.spectral_radius(), 0.9, 1e-14);
  EXPECT_TRUE(sys.stable());
  EXPECT_THROW(LinearSystem(a, Matrix::Identity(3, 1)), DimensionError);
}

TEST(DlyapTest, ScalarClosedForm) {
  const LinearSystem sys(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1));
  EXPECT_NEAR(dlyap_inf(sys)(0, 0), 4.0 / 3.0, 1e-14);
}

TEST(DlyapTest, ZeroDynamics) {
  Matrix b(2, 1);
  b << 1.0, 2.0;
  const LinearSystem sys(Matrix::Zero(2, 2), b);
  EXPECT_TRUE(dlyap_inf(sys).matrix().isApprox(b * b.transpose()));
}

TEST(DlyapTest, ResidualOnRandomSystem) {
  std::mt19937_64 rng(11);
  const LinearSystem sys(RandomStable(4, 0.9, &rng), RandomMatrix(4, 2, &rng));
  const Matrix g = dlyap_inf(sys).matrix();
  const Matrix res = g - sys.A() * g * sys.A().transpose() -
                     sys.B() * sys.B().transpose();
  EXPECT_LT(res.norm(), 1e-10 * g.norm());
}

TEST(DlyapTest, RejectsUnstable) {
  const LinearSystem sys(Matrix::Constant(1, 1, 1.0), Matrix::Ones(1, 1));
  EXPECT_THROW(dlyap_inf(sys), InstabilityError);
}

TEST(GramiansTest, ScalarHorizonTwo) {
  const LinearSystem sys(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1));
  const GramianSet g = gramians(sys, 2);
  EXPECT_NEAR(g.gamma(0, 0), 1.25, 1e-15);
  EXPECT_NEAR(g.gamma(0, 0), (1.0 - std::pow(0.5, 4)) * 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(g.H(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(g.H(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(g.A_power(0, 0), 0.25, 1e-15);
}

TEST(GramiansTest, OneStepFullRowRank) {
  std::mt19937_64 rng(5);
  const LinearSystem sys(RandomStable(3, 0.7, &rng), RandomMatrix(3, 3, &rng));
  const GramianSet g = gramians(sys, 1);
  EXPECT_TRUE(g.full_rank);
  EXPECT_EQ(g.tau, 1);
  EXPECT_TRUE(g.gamma.matrix().isApprox(sys.B() * sys.B().transpose()));
}

TEST(GramiansTest, UnreachablePair) {
  Matrix b(2, 1);
  b << 1.0, 0.0;
  const LinearSystem sys(0.5 * Matrix::Identity(2, 2), b);
  for (int t = 1; t <= 5; ++t) EXPECT_FALSE(gramians(sys, t).full_rank);
  EXPECT_FALSE(reachability_index(sys).has_value());
}

TEST(GramiansTest, ChainOfIntegratorsNeedsTwoSteps) {
  Matrix a(2, 2), b(2, 1);
  a << 0.5, 1.0, 0.0, 0.5;
  b << 0.0, 1.0;
  const LinearSystem sys(a, b);
  EXPECT_FALSE(gramians(sys, 1).full_rank);
  EXPECT_TRUE(gramians(sys, 2).full_rank);
  EXPECT_EQ(reachability_index(sys), 2);
}

TEST(GramiansTest, RecurrenceAndFactorization) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 4, m = 1 + trial % 2;
    const LinearSystem sys(RandomStable(n, 0.95, &rng), RandomMatrix(n, m, &rng));
    for (int t = 1; t < 10; ++t) {
      const GramianSet g = gramians(sys, t);
      const GramianSet g1 = gramians(sys, t + 1);
      const Matrix rec = sys.A() * g.gamma.matrix() * sys.A().transpose() +
                         sys.B() * sys.B().transpose();
      EXPECT_LT((g1.gamma.matrix() - rec).norm(), 1e-12 * g1.gamma.norm());
      EXPECT_LT((g.H * g.H.transpose() - g.gamma.matrix()).norm(),
                1e-12 * g.gamma.norm());
    }
  }
}

TEST(GramiansTest, ConvergesToInfiniteHorizon) {
  std::mt19937_64 rng(4);
  const double rho = 0.8;
  const LinearSystem sys(RandomStable(3, rho, &rng), RandomMatrix(3, 2, &rng));
  const Matrix g = dlyap_inf(sys).matrix();
  double prev = std::numeric_limits<double>::infinity();
  for (int t = 5; t <= 40; t += 5) {
    const double err = (gramians(sys, t).gamma.matrix() - g).norm();
    EXPECT_LE(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-4 * g.norm());
}

TEST(RiccatiTest, ZeroU) {
  std::mt19937_64 rng(1);
  const SymMatrix v = RandomPd(3, &rng);
  const RiccatiSolution r = riccati_closed_form(SymMatrix::Zero(3), v);
  EXPECT_LT((r.mho - v).norm(), 1e-12 * v.norm());
}

TEST(RiccatiTest, VEqualsIdentityPlusU) {
  std::mt19937_64 rng(2);
  const Matrix g = RandomMatrix(4, 4, &rng);
  const SymMatrix u = SymMatrix::FromSymmetricProduct(g * g.transpose());
  const RiccatiSolution r = riccati_closed_form(u, SymMatrix::Identity(4) + u);
  EXPECT_LT((r.mho.matrix() - Matrix::Identity(4, 4)).norm(), 1e-10);
}

TEST(RiccatiTest, ScalarIntegers) {
  const RiccatiSolution r = riccati_closed_form(
      SymMatrix::Diagonal(Vector::Constant(1, 1.0)),
      SymMatrix::Diagonal(Vector::Constant(1, 2.0)));
  EXPECT_NEAR(r.mho(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(r.tr_sqrt, 3.0, 1e-15);
  EXPECT_NEAR(r.logdet_factor, std::log(4.0), 1e-15);
}

TEST(RiccatiTest, ResidualOnRandomPairs) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 6;
    const Matrix g = RandomMatrix(n, n, &rng);
    const SymMatrix u = SymMatrix::FromSymmetricProduct(g * g.transpose());
    const SymMatrix v = RandomPd(n, &rng, 0.01);
    const Matrix x = riccati_closed_form(u, v).mho.matrix();
    EXPECT_LE((x + x * u.matrix() * x - v.matrix()).norm(), 1e-9 * v.norm())
        << "trial " << trial;
  }
}

TEST(RiccatiTest, SimilarityMatchesDirectEigenvalues) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 4;
    const SymMatrix u = RandomPd(n, &rng);
    const SymMatrix v = RandomPd(n, &rng);
    const RiccatiSolution r = riccati_closed_form(u, v);
    const Eigen::VectorXcd mu =
        Eigen::EigenSolver<Matrix>(u.matrix() * v.matrix()).eigenvalues();
    double tr = 0.0, ld = 0.0;
    for (int i = 0; i < n; ++i) {
      const double s = std::sqrt(1.0 + 4.0 * mu[i].real());
      tr += s;
      ld += std::log(1.0 + s);
    }
    EXPECT_NEAR(r.tr_sqrt, tr, 1e-8 * std::max(1.0, tr));
    EXPECT_NEAR(r.logdet_factor, ld, 1e-8 * std::max(1.0, ld));
  }
}

TEST(RiccatiTest, RejectsSingularV) {
  EXPECT_THROW(riccati_closed_form(SymMatrix::Identity(2),
                                   SymMatrix::Diagonal(Vec({1, 0}))),
               NotPdError);
}

}  // namespace
}  // namespace entropy_bridge
