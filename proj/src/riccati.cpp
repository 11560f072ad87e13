#include "turnpike/riccati.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace turnpike {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

constexpr double kAxisTol = 1e-8;      // hyperbolicity margin for the eigen-split
constexpr int kMaxLyapunovDim = 32;    // Kronecker solve is dense n^2 x n^2

void require_square(const MatrixXd& M, const char* name) {
  if (M.rows() != M.cols())
    throw std::invalid_argument(std::string(name) + " must be square");
  if (!M.allFinite())
    throw std::invalid_argument(std::string(name) + " has non-finite entries");
}

double operator_norm(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  return M.jacobiSvd().singularValues()(0);
}

/// Real basis of the stable invariant subspace of Ham. Throws when the
/// eigenvalue split is not clean (eigenvalue within kAxisTol of the axis)
/// or the stable count differs from n.
MatrixXd stable_subspace_basis(const MatrixXd& Ham, const MatrixXd& A,
                               const MatrixXd& R, const MatrixXd& Q,
                               VectorXcd* stable, VectorXcd* unstable) {
  const int n2 = static_cast<int>(Ham.rows());
  const int n = n2 / 2;
  Eigen::EigenSolver<MatrixXd> es(Ham);
  if (es.info() != Eigen::Success)
    throw NumericalFailure("Hamiltonian eigendecomposition failed");

  const double scale = std::max(1.0, Ham.norm());
  std::vector<int> order(n2);
  for (int i = 0; i < n2; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto ea = es.eigenvalues()(a), eb = es.eigenvalues()(b);
    if (ea.real() != eb.real()) return ea.real() < eb.real();
    return ea.imag() < eb.imag();
  });

  std::vector<std::complex<double>> st, un;
  MatrixXd basis(n2, n);
  int cols = 0;
  for (int idx : order) {
    const std::complex<double> lam = es.eigenvalues()(idx);
    if (std::abs(lam.real()) <= kAxisTol * scale) {
      // Marginal eigenvalue: diagnose which hypothesis broke.
      if (!pbh_stabilizable(A, R))
        throw NotStabilizable("(A, R) is not stabilizable: Hamiltonian eigenvalue on the imaginary axis");
      if (!pbh_detectable(Q, A))
        throw NotDetectable("(Q, A) is not detectable: Hamiltonian eigenvalue on the imaginary axis");
      throw NumericalFailure("Hamiltonian eigenvalue within tolerance of the imaginary axis");
    }
    if (lam.real() > 0) {
      un.push_back(lam);
      continue;
    }
    st.push_back(lam);
    if (lam.imag() == 0.0) {
      if (cols < n) basis.col(cols) = es.eigenvectors().col(idx).real();
      ++cols;
    } else if (lam.imag() > 0.0) {
      // complex pair contributes a 2-d real block; the conjugate is skipped
      if (cols + 1 < n + 1 && cols < n) basis.col(cols) = es.eigenvectors().col(idx).real();
      ++cols;
      if (cols < n) basis.col(cols) = es.eigenvectors().col(idx).imag();
      ++cols;
    }
  }
  if (static_cast<int>(st.size()) != n || cols != n)
    throw NumericalFailure("stable eigenspace of Ham does not have dimension n");

  if (stable) {
    stable->resize(n);
    for (int i = 0; i < n; ++i) (*stable)(i) = st[i];
  }
  if (unstable) {
    unstable->resize(n);
    for (int i = 0; i < n; ++i) (*unstable)(i) = un[i];
  }
  return basis;
}

/// Kronecker-product solve of X M^T + M X = W without the Hurwitz guard.
MatrixXd lyapunov_kron(const MatrixXd& M, const MatrixXd& W) {
  const int n = static_cast<int>(M.rows());
  MatrixXd K = MatrixXd::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        K(i + n * j, i + n * k) += M(j, k); // X M^T term
        K(i + n * j, k + n * j) += M(i, k); // M X term
      }
    }
  VectorXd w(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) w(i + n * j) = W(i, j);
  VectorXd x = K.partialPivLu().solve(w);
  MatrixXd X(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = x(i + n * j);
  const double sym = (W - W.transpose()).norm();
  if (sym <= 1e-12 * (1.0 + W.norm())) X = MatrixXd(0.5 * (X + X.transpose().eval()));
  return X;
}

} // namespace

void LinearTriple::validate() const {
  require_square(A, "A");
  if (B.rows() != A.rows())
    throw std::invalid_argument("B row count must match A");
  if (C.cols() != A.cols())
    throw std::invalid_argument("C column count must match A");
  if (!B.allFinite() || !C.allFinite())
    throw std::invalid_argument("triple has non-finite entries");
}

Eigen::MatrixXd RiccatiSolution::T_inverse() const {
  const int m = n();
  MatrixXd Ti(2 * m, 2 * m);
  Ti.topLeftCorner(m, m) = L * P + MatrixXd::Identity(m, m);
  Ti.topRightCorner(m, m) = -L;
  Ti.bottomLeftCorner(m, m) = -P;
  Ti.bottomRightCorner(m, m) = MatrixXd::Identity(m, m);
  return Ti;
}

MatrixXd hamiltonian_matrix(const MatrixXd& A, const MatrixXd& R, const MatrixXd& Q) {
  const int n = static_cast<int>(A.rows());
  MatrixXd H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = A;
  H.topRightCorner(n, n) = -R;
  H.bottomLeftCorner(n, n) = -Q;
  H.bottomRightCorner(n, n) = -A.transpose();
  return H;
}

double care_residual(const MatrixXd& A, const MatrixXd& R, const MatrixXd& Q,
                     const MatrixXd& P) {
  return (P * A + A.transpose() * P - P * R * P + Q).norm();
}

RiccatiSolution solve_care(const MatrixXd& A, const MatrixXd& R, const MatrixXd& Q) {
  require_square(A, "A");
  require_square(R, "R");
  require_square(Q, "Q");
  const int n = static_cast<int>(A.rows());
  if (R.rows() != n || Q.rows() != n)
    throw std::invalid_argument("A, R, Q must share dimensions");

  const MatrixXd Ham = hamiltonian_matrix(A, R, Q);
  RiccatiSolution sol;
  MatrixXd basis = stable_subspace_basis(Ham, A, R, Q, &sol.stable_eigs, &sol.unstable_eigs);

  const MatrixXd X1 = basis.topRows(n);
  const MatrixXd X2 = basis.bottomRows(n);
  Eigen::FullPivLU<MatrixXd> lu(X1.transpose());
  if (!lu.isInvertible()) {
    // The stable eigenspace does not graph over the state block.
    if (!pbh_stabilizable(A, R))
      throw NotStabilizable("(A, R) is not stabilizable: stable eigenspace degenerate");
    if (!pbh_detectable(Q, A))
      throw NotDetectable("(Q, A) is not detectable: stable eigenspace degenerate");
    throw NumericalFailure("stable subspace has singular state projection; P undefined");
  }
  MatrixXd P = lu.solve(X2.transpose()).transpose();
  P = MatrixXd(0.5 * (P + P.transpose().eval()));

  // Newton refinement: A_c^T D + D A_c = -residual(P).
  const double res_tol = 1e-9 * (1.0 + P.squaredNorm());
  for (int pass = 0; pass < 3; ++pass) {
    const MatrixXd Ac = A - R * P;
    const MatrixXd res = P * A + A.transpose() * P - P * R * P + Q;
    if (pass > 0 && res.norm() <= res_tol) break;
    const MatrixXd D = lyapunov_kron(Ac.transpose(), -res);
    P = P + D;
    P = MatrixXd(0.5 * (P + P.transpose().eval()));
  }
  if (care_residual(A, R, Q, P) > res_tol)
    throw NumericalFailure("Riccati residual above tolerance after refinement");

  sol.P = P;
  sol.A_c = A - R * P;

  const Eigen::VectorXcd ac_eigs = sol.A_c.eigenvalues();
  if (ac_eigs.real().maxCoeff() >= 0.0)
    throw NumericalFailure("closed-loop matrix A - RP is not Hurwitz");

  sol.L = solve_lyapunov(sol.A_c, R);
  sol.T_sympl.resize(2 * n, 2 * n);
  sol.T_sympl.topLeftCorner(n, n) = MatrixXd::Identity(n, n);
  sol.T_sympl.topRightCorner(n, n) = sol.L;
  sol.T_sympl.bottomLeftCorner(n, n) = P;
  sol.T_sympl.bottomRightCorner(n, n) = P * sol.L + MatrixXd::Identity(n, n);
  return sol;
}

MatrixXd solve_lyapunov(const MatrixXd& M, const MatrixXd& W) {
  require_square(M, "M");
  require_square(W, "W");
  const int n = static_cast<int>(M.rows());
  if (W.rows() != n)
    throw std::invalid_argument("M and W must share dimensions");
  if (n > kMaxLyapunovDim)
    throw std::invalid_argument("Lyapunov solver is dense Kronecker; n must be <= 32");
  const VectorXcd eigs = M.eigenvalues();
  if (eigs.real().maxCoeff() >= -1e-10)
    throw NotHurwitz("Lyapunov solve requires a Hurwitz coefficient matrix");
  return lyapunov_kron(M, W);
}

std::pair<MatrixXd, MatrixXd> block_diagonalize(const MatrixXd& A,
                                                const MatrixXd& R,
                                                const MatrixXd& Q) {
  RiccatiSolution sol = solve_care(A, R, Q);
  return {sol.T_sympl, sol.A_c};
}

bool pbh_stabilizable(const MatrixXd& A, const MatrixXd& B) {
  require_square(A, "A");
  if (B.rows() != A.rows())
    throw std::invalid_argument("B row count must match A");
  if (!B.allFinite())
    throw std::invalid_argument("B has non-finite entries");
  const int n = static_cast<int>(A.rows());
  if (n == 0) return true;
  const double tol = 1e-9 * operator_norm(A);
  const VectorXcd eigs = A.eigenvalues();
  for (int i = 0; i < n; ++i) {
    const std::complex<double> lam = eigs(i);
    if (lam.real() < -1e-9) continue;
    MatrixXcd pencil(n, n + static_cast<int>(B.cols()));
    pencil.leftCols(n) = A.cast<std::complex<double>>() -
                         lam * MatrixXcd::Identity(n, n);
    pencil.rightCols(B.cols()) = B.cast<std::complex<double>>();
    const VectorXd sv = pencil.jacobiSvd().singularValues();
    int rank = 0;
    for (int k = 0; k < sv.size(); ++k)
      if (sv(k) > tol) ++rank;
    if (rank < n) return false;
  }
  return true;
}

bool pbh_detectable(const MatrixXd& C, const MatrixXd& A) {
  return pbh_stabilizable(A.transpose(), C.transpose());
}

NonsingularityCheck check_pl_plus_i(const MatrixXd& P, const MatrixXd& L) {
  const int n = static_cast<int>(P.rows());
  const MatrixXd PL = P * L;
  const MatrixXd V = PL + MatrixXd::Identity(n, n);
  NonsingularityCheck out;
  out.min_sv = V.jacobiSvd().singularValues().minCoeff();
  out.nonsingular = out.min_sv > 1e-10 * (1.0 + operator_norm(PL));
  return out;
}

std::vector<Phi11Determinant> phi11_nonsingular(const MatrixXd& A,
                                                const MatrixXd& R,
                                                const MatrixXd& Q,
                                                const std::vector<double>& t_grid) {
  for (double t : t_grid)
    if (t < 0.0) throw std::invalid_argument("phi11_nonsingular: times must be >= 0");

  const RiccatiSolution sol = solve_care(A, R, Q);
  const int n = sol.n();
  const double trace_Ac = sol.A_c.trace();
  const MatrixXd I = MatrixXd::Identity(n, n);

  std::vector<Phi11Determinant> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    const MatrixXd Em = (-t * sol.A_c).exp();
    const MatrixXd Ltilde = sol.L - Em * sol.L * Em.transpose();
    const MatrixXd G = I + Ltilde * sol.P;

    Eigen::PartialPivLU<MatrixXd> lu(G);
    const VectorXd diag = lu.matrixLU().diagonal();
    double log_abs = 0.0;
    double sign = static_cast<double>(lu.permutationP().determinant());
    bool singular = false;
    for (int i = 0; i < n; ++i) {
      if (diag(i) == 0.0) { singular = true; break; }
      log_abs += std::log(std::abs(diag(i)));
      if (diag(i) < 0.0) sign = -sign;
    }

    Phi11Determinant d;
    d.t = t;
    if (singular) {
      d.det_scaled = 0.0;
      d.log_abs_det = -std::numeric_limits<double>::infinity();
      d.sign = 0.0;
      d.det = 0.0;
      d.nonsingular = false;
    } else {
      d.det_scaled = sign * std::exp(log_abs);
      d.log_abs_det = t * trace_Ac + log_abs;
      d.sign = sign;
      d.det = sign * std::exp(d.log_abs_det);
      d.nonsingular = log_abs > std::log(1e-12);
    }
    out.push_back(d);
  }
  return out;
}

} // namespace turnpike
