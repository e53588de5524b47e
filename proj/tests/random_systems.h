#pragma once

#include <cmath>
#include <random>

#include "entropy_bridge/bridge.hpp"
#include "entropy_bridge/matgauss.hpp"

namespace entropy_bridge {
namespace test {

inline Matrix RandomMatrix(std::mt19937_64* rng, int rows, int cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = n(*rng);
  }
  return m;
}

inline Vector RandomVector(std::mt19937_64* rng, int n, double scale = 1.0) {
  return scale * RandomMatrix(rng, n, 1).col(0);
}

/// G G^T + floor I.
inline SymMatrix RandomPd(std::mt19937_64* rng, int n, double floor = 0.2) {
  const Matrix g = RandomMatrix(rng, n, n);
  return SymMatrix::FromSymmetricProduct(g * g.transpose() +
                                         floor * Matrix::Identity(n, n));
}

/// Rescales A to the requested spectral radius.
inline Matrix RandomStableA(std::mt19937_64* rng, int n, double radius) {
  const Matrix a = RandomMatrix(rng, n, n);
  const double rho = a.eigenvalues().cwiseAbs().maxCoeff();
  return a * (radius / rho);
}

/// Stable system with spectral radius in [0.2, 0.8]; m = n makes it one-step
/// reachable almost surely.
inline LinearSystem RandomStableSystem(std::mt19937_64* rng, int n, int m) {
  std::uniform_real_distribution<double> radius(0.2, 0.8);
  return LinearSystem(RandomStableA(rng, n, radius(*rng)),
                      RandomMatrix(rng, n, m));
}

/// Stable system with spectral norm of A in [0.2, 0.8], which keeps the
/// transient growth of A^k bounded.
inline LinearSystem RandomContractiveSystem(std::mt19937_64* rng, int n,
                                            int m) {
  std::uniform_real_distribution<double> radius(0.2, 0.8);
  const Matrix a = RandomMatrix(rng, n, n);
  const double norm = Eigen::JacobiSVD<Matrix>(a).singularValues()[0];
  return LinearSystem(a * (radius(*rng) / norm), RandomMatrix(rng, n, m));
}

inline GaussianDist RandomGaussian(std::mt19937_64* rng, int n) {
  return GaussianDist(RandomVector(rng, n), RandomPd(rng, n));
}

}  // namespace test
}  // namespace entropy_bridge
