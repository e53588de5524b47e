#pragma once

// Dense symmetric linear algebra for the linear-Gaussian solvers:
// eigendecomposition-based matrix functions, reachability Gramians and the
// closed-form solution of  X + X U X = V.

#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "entropy_bridge/errors.hpp"

namespace entropy_bridge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace tol {
/// Symmetry defect allowed relative to the Frobenius norm.
inline constexpr double kSymmetry = 1e-10;
/// Smallest eigenvalue of a PD matrix must exceed this times its trace.
inline constexpr double kPositiveDefinite = 1e-12;
/// Negative eigenvalues down to this times the largest |eigenvalue| are
/// treated as rounding noise and clamped to zero.
inline constexpr double kClamp = 1e-10;
/// Relative eigenvalue threshold for full rank of a Gramian.
inline constexpr double kRank = 1e-9;
}  // namespace tol

/// Real symmetric matrix. Construction checks the symmetry defect and stores
/// the exact symmetric part.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix Identity(int n);
  static SymMatrix Zero(int n);
  static SymMatrix Diagonal(const Vector& d);
  /// Symmetrizes without checking; for products that are symmetric in exact
  /// arithmetic (T S T^T and the like).
  static SymMatrix FromSymmetricProduct(const Matrix& m);

  int order() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }
  double norm() const { return m_.norm(); }

  double min_eigenvalue() const;
  double max_eigenvalue() const;
  /// Smallest eigenvalue > kPositiveDefinite * trace.
  bool is_positive_definite() const;
  /// Smallest eigenvalue >= -kClamp * largest |eigenvalue|.
  bool is_positive_semidefinite() const;

  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator-(const SymMatrix& o) const;
  SymMatrix operator*(double s) const;

 private:
  Matrix m_;
};

/// Eigenpairs of a symmetric matrix; eigenvalues ascending, eigenvectors
/// orthonormal (columns).
struct SymEig {
  Vector values;
  Matrix vectors;

  /// Q f(Lambda) Q^T.
  SymMatrix apply(const std::function<double(double)>& f) const;
};

SymEig sym_eig(const SymMatrix& s);

/// Principal square root of a PSD matrix. Negative eigenvalues down to
/// -kClamp * max(largest |eigenvalue|, scale) are clamped to zero; pass the
/// size of the operands as `scale` when s is a difference that may vanish.
SymMatrix sqrt_psd(const SymMatrix& s, double scale = 0.0);

/// Inverse of a PD matrix through its eigendecomposition. `what` names the
/// matrix in the error message.
SymMatrix inverse_pd(const SymMatrix& s, const char* what = "matrix");
SymMatrix inv_sqrt_pd(const SymMatrix& s, const char* what = "matrix");
SymMatrix sqrt_pd(const SymMatrix& s, const char* what = "matrix");
double logdet_pd(const SymMatrix& s, const char* what = "matrix");

/// Eigendecomposition with PD gating; throws NotPdError naming `what`.
SymEig sym_eig_pd(const SymMatrix& s, const char* what);

/// T S T^T.
SymMatrix congruence(const Matrix& t, const SymMatrix& s);

/// x^T M x.
double quad_form(const SymMatrix& m, const Vector& x);

/// Discrete-time linear system x+ = A x + B w.
class LinearSystem {
 public:
  LinearSystem(Matrix a, Matrix b);

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  int state_dim() const { return static_cast<int>(a_.rows()); }
  int input_dim() const { return static_cast<int>(b_.cols()); }
  double spectral_radius() const { return spectral_radius_; }
  bool stable() const { return spectral_radius_ < 1.0; }

 private:
  Matrix a_;
  Matrix b_;
  double spectral_radius_;
};

/// Infinite-horizon reachability Gramian, solution of G = A G A^T + B B^T,
/// by the doubling iteration. Throws InstabilityError when rho(A) >= 1.
SymMatrix dlyap_inf(const LinearSystem& sys);

struct GramianSet {
  int horizon = 0;
  /// [A^{t-1}B ... AB B], n x (m t).
  Matrix H;
  /// A^t.
  Matrix A_power;
  SymMatrix gamma;
  bool full_rank = false;
  /// Least t with Gamma_t > 0, scanned over 1..n.
  std::optional<int> tau;
};

GramianSet gramians(const LinearSystem& sys, int horizon);

/// Least t >= 1 with a full-rank Gramian, or nullopt for unreachable pairs.
std::optional<int> reachability_index(const LinearSystem& sys);

bool gramian_full_rank(const SymMatrix& gamma);

/// Symmetric representation of the product U V for V > 0:
/// W = V^{1/2} U V^{1/2} is similar to U V.
struct UvSimilarity {
  SymMatrix v_sqrt;
  SymMatrix v_inv_sqrt;
  SymEig w;
};

UvSimilarity uv_similarity(const SymMatrix& u, const SymMatrix& v);

struct RiccatiSolution {
  /// Unique PD solution of X + X U X = V.
  SymMatrix mho;
  /// Tr sqrt(I + 4 U V).
  double tr_sqrt = 0.0;
  /// ln det(I + sqrt(I + 4 U V)).
  double logdet_factor = 0.0;
};

RiccatiSolution riccati_closed_form(const SymMatrix& u, const SymMatrix& v);

}  // namespace entropy_bridge
