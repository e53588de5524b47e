#include "entropy_bridge/matgauss.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace entropy_bridge {

namespace {

std::string dims(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

double max_abs(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("symmetric matrix must be square, got " + dims(m));
  }
  const double defect = (m - m.transpose()).cwiseAbs().maxCoeff();
  const double allowed = tol::kSymmetry * m.norm();
  if (m.size() > 0 && defect > allowed) {
    std::ostringstream os;
    os << "matrix is not symmetric: max |S_ij - S_ji| = " << defect
       << " exceeds " << allowed;
    throw DimensionError(os.str());
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::Identity(int n) {
  return FromSymmetricProduct(Matrix::Identity(n, n));
}

SymMatrix SymMatrix::Zero(int n) {
  return FromSymmetricProduct(Matrix::Zero(n, n));
}

SymMatrix SymMatrix::Diagonal(const Vector& d) {
  return FromSymmetricProduct(d.asDiagonal().toDenseMatrix());
}

SymMatrix SymMatrix::FromSymmetricProduct(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("symmetric matrix must be square, got " + dims(m));
  }
  SymMatrix s;
  s.m_ = 0.5 * (m + m.transpose());
  return s;
}

double SymMatrix::min_eigenvalue() const {
  return sym_eig(*this).values.minCoeff();
}

double SymMatrix::max_eigenvalue() const {
  return sym_eig(*this).values.maxCoeff();
}

bool SymMatrix::is_positive_definite() const {
  if (order() == 0) return false;
  const double t = trace();
  return t > 0.0 && min_eigenvalue() > tol::kPositiveDefinite * t;
}

bool SymMatrix::is_positive_semidefinite() const {
  if (order() == 0) return true;
  const Vector ev = sym_eig(*this).values;
  return ev.minCoeff() >= -tol::kClamp * max_abs(ev);
}

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  return FromSymmetricProduct(m_ + o.m_);
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
  return FromSymmetricProduct(m_ - o.m_);
}

SymMatrix SymMatrix::operator*(double s) const {
  return FromSymmetricProduct(s * m_);
}

SymMatrix SymEig::apply(const std::function<double(double)>& f) const {
  Vector fv = values.unaryExpr(f);
  return SymMatrix::FromSymmetricProduct(vectors * fv.asDiagonal() *
                                         vectors.transpose());
}

SymEig sym_eig(const SymMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.matrix());
  if (solver.info() != Eigen::Success) {
    throw ConditioningError("symmetric eigendecomposition failed", 0.0);
  }
  return SymEig{solver.eigenvalues(), solver.eigenvectors()};
}

SymMatrix sqrt_psd(const SymMatrix& s, double scale) {
  const SymEig e = sym_eig(s);
  const double clamp = tol::kClamp * std::max(max_abs(e.values), scale);
  const double smallest = e.values.size() ? e.values.minCoeff() : 0.0;
  if (smallest < -clamp) {
    std::ostringstream os;
    os << "matrix is not positive semidefinite: eigenvalue " << smallest;
    throw NotPsdError(os.str(), smallest);
  }
  return e.apply([](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
}

SymEig sym_eig_pd(const SymMatrix& s, const char* what) {
  SymEig e = sym_eig(s);
  const double t = s.trace();
  const double smallest = e.values.size() ? e.values.minCoeff() : 0.0;
  if (s.order() == 0 || !(t > 0.0) ||
      !(smallest > tol::kPositiveDefinite * t)) {
    std::ostringstream os;
    os << what << " is not positive definite: smallest eigenvalue "
       << smallest;
    throw NotPdError(os.str(), smallest);
  }
  return e;
}

SymMatrix inverse_pd(const SymMatrix& s, const char* what) {
  return sym_eig_pd(s, what).apply([](double x) { return 1.0 / x; });
}

SymMatrix inv_sqrt_pd(const SymMatrix& s, const char* what) {
  return sym_eig_pd(s, what).apply([](double x) { return 1.0 / std::sqrt(x); });
}

SymMatrix sqrt_pd(const SymMatrix& s, const char* what) {
  return sym_eig_pd(s, what).apply([](double x) { return std::sqrt(x); });
}

double logdet_pd(const SymMatrix& s, const char* what) {
  return sym_eig_pd(s, what).values.array().log().sum();
}

SymMatrix congruence(const Matrix& t, const SymMatrix& s) {
  if (t.cols() != s.order()) {
    throw DimensionError("congruence: " + dims(t) + " times order " +
                         std::to_string(s.order()));
  }
  return SymMatrix::FromSymmetricProduct(t * s.matrix() * t.transpose());
}

double quad_form(const SymMatrix& m, const Vector& x) {
  if (x.size() != m.order()) {
    throw DimensionError("quadratic form: vector length " +
                         std::to_string(x.size()) + " vs order " +
                         std::to_string(m.order()));
  }
  return x.dot(m.matrix() * x);
}

LinearSystem::LinearSystem(Matrix a, Matrix b)
    : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() == 0 || a_.rows() != a_.cols()) {
    throw DimensionError("state matrix A must be square and nonempty, got " +
                         dims(a_));
  }
  if (b_.rows() != a_.rows() || b_.cols() == 0) {
    throw DimensionError("input matrix B must have " +
                         std::to_string(a_.rows()) + " rows, got " + dims(b_));
  }
  Eigen::EigenSolver<Matrix> es(a_, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw ConditioningError("eigenvalues of A did not converge", 0.0);
  }
  spectral_radius_ = es.eigenvalues().cwiseAbs().maxCoeff();
}

SymMatrix dlyap_inf(const LinearSystem& sys) {
  if (!sys.stable()) {
    std::ostringstream os;
    os << "infinite-horizon Gramian requires rho(A) < 1, got "
       << sys.spectral_radius();
    throw InstabilityError(os.str(), sys.spectral_radius());
  }
  // Doubling: after k steps Q = sum_{j < 2^k} A^j B B^T A^jT.
  Matrix q = sys.B() * sys.B().transpose();
  Matrix ak = sys.A();
  constexpr int kMaxIter = 200;
  for (int it = 0; it < kMaxIter; ++it) {
    Matrix next = q + ak * q * ak.transpose();
    next = 0.5 * (next + next.transpose());
    const double update = (next - q).norm();
    q = std::move(next);
    if (update <= 1e-14 * q.norm()) {
      return SymMatrix::FromSymmetricProduct(q);
    }
    ak = ak * ak;
  }
  throw NonconvergenceError("doubling iteration for the Lyapunov equation "
                            "did not converge",
                            q);
}

bool gramian_full_rank(const SymMatrix& gamma) {
  const Vector ev = sym_eig(gamma).values;
  const double largest = ev.maxCoeff();
  return largest > 0.0 && ev.minCoeff() > tol::kRank * largest;
}

std::optional<int> reachability_index(const LinearSystem& sys) {
  const int n = sys.state_dim();
  const Matrix bbt = sys.B() * sys.B().transpose();
  Matrix g = bbt;
  for (int t = 1; t <= n; ++t) {
    if (t > 1) g = sys.A() * g * sys.A().transpose() + bbt;
    if (gramian_full_rank(SymMatrix::FromSymmetricProduct(g))) return t;
  }
  return std::nullopt;
}

GramianSet gramians(const LinearSystem& sys, int horizon) {
  if (horizon < 1) {
    throw ParameterError("horizon must be >= 1, got " +
                         std::to_string(horizon));
  }
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  GramianSet out;
  out.horizon = horizon;
  out.H.resize(n, m * horizon);
  // Fill right to left: block k (from the right) is A^k B.
  Matrix power = Matrix::Identity(n, n);
  const Matrix bbt = sys.B() * sys.B().transpose();
  Matrix g = Matrix::Zero(n, n);
  for (int k = 0; k < horizon; ++k) {
    out.H.block(0, m * (horizon - 1 - k), n, m) = power * sys.B();
    g = sys.A() * g * sys.A().transpose() + bbt;
    g = 0.5 * (g + g.transpose());
    power = sys.A() * power;
  }
  out.A_power = power;
  out.gamma = SymMatrix::FromSymmetricProduct(g);
  out.full_rank = gramian_full_rank(out.gamma);
  out.tau = reachability_index(sys);
  return out;
}

UvSimilarity uv_similarity(const SymMatrix& u, const SymMatrix& v) {
  if (u.order() != v.order()) {
    throw DimensionError("U and V must have equal order");
  }
  const SymEig ve = sym_eig_pd(v, "V");
  UvSimilarity out;
  out.v_sqrt = ve.apply([](double x) { return std::sqrt(x); });
  out.v_inv_sqrt = ve.apply([](double x) { return 1.0 / std::sqrt(x); });
  const SymMatrix w = congruence(out.v_sqrt.matrix(), u);
  out.w = sym_eig(w);
  // W is PSD when U is; clamp rounding noise so sqrt(1 + 4w) stays real.
  const double clamp = tol::kClamp * max_abs(out.w.values);
  for (Eigen::Index i = 0; i < out.w.values.size(); ++i) {
    double& x = out.w.values[i];
    if (x < -clamp) {
      std::ostringstream os;
      os << "U is not positive semidefinite: V^{1/2} U V^{1/2} has eigenvalue "
         << x;
      throw NotPsdError(os.str(), x);
    }
    if (x < 0.0) x = 0.0;
  }
  return out;
}

RiccatiSolution riccati_closed_form(const SymMatrix& u, const SymMatrix& v) {
  const UvSimilarity sim = uv_similarity(u, v);
  RiccatiSolution out;
  const Vector root = (1.0 + 4.0 * sim.w.values.array()).sqrt();
  out.tr_sqrt = root.sum();
  out.logdet_factor = (1.0 + root.array()).log().sum();
  // mho = 2 V^{1/2} (I + sqrt(I + 4W))^{-1} V^{1/2}
  const SymMatrix middle = sim.w.apply(
      [](double x) { return 2.0 / (1.0 + std::sqrt(1.0 + 4.0 * x)); });
  out.mho = congruence(sim.v_sqrt.matrix(), middle);
  return out;
}

}  // namespace entropy_bridge
