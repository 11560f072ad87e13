#ifndef TURNPIKE_RICCATI_HPP
#define TURNPIKE_RICCATI_HPP

#include <Eigen/Dense>
#include <vector>

#include "turnpike/errors.hpp"

namespace turnpike {

/// A linear plant (A, B) with output map C, as used by the stabilizability
/// and detectability hypotheses.
struct LinearTriple {
  Eigen::MatrixXd A; // n x n
  Eigen::MatrixXd B; // n x m
  Eigen::MatrixXd C; // r x n

  int n() const { return static_cast<int>(A.rows()); }
  void validate() const; // throws std::invalid_argument on bad shapes / non-finite entries
};

/// Stabilizing solution of PA + A^T P - PRP + Q = 0 together with the
/// closed-loop matrix A_c = A - RP, the Lyapunov companion L solving
/// L A_c^T + A_c L = R, and the symplectic transform
/// T = [[I, L], [P, PL+I]] that block-diagonalizes the Hamiltonian matrix
/// Ham = [[A, -R], [-Q, -A^T]].
struct RiccatiSolution {
  Eigen::MatrixXd P;       // symmetric psd
  Eigen::MatrixXd L;       // symmetric nsd
  Eigen::MatrixXd A_c;     // Hurwitz
  Eigen::MatrixXd T_sympl; // 2n x 2n
  Eigen::VectorXcd stable_eigs;
  Eigen::VectorXcd unstable_eigs;

  int n() const { return static_cast<int>(P.rows()); }
  /// Closed-form inverse [[LP+I, -L], [-P, I]].
  Eigen::MatrixXd T_inverse() const;
};

/// Assemble Ham = [[A, -R], [-Q, -A^T]].
Eigen::MatrixXd hamiltonian_matrix(const Eigen::MatrixXd& A,
                                   const Eigen::MatrixXd& R,
                                   const Eigen::MatrixXd& Q);

/// Stabilizing CARE solve by the invariant-subspace method (stable
/// eigenspace of Ham) with one Newton refinement pass.
///
/// Throws NotStabilizable / NotDetectable when the eigenvalue split fails
/// (eigenvalues within 1e-8 of the imaginary axis), NumericalFailure when
/// the residual stays above 1e-9 * (1 + |P|^2) after refinement.
RiccatiSolution solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& R,
                           const Eigen::MatrixXd& Q);

/// Solve X M^T + M X = W for Hurwitz M via the Kronecker linear system.
/// X is symmetric whenever W is. Throws NotHurwitz when an eigenvalue of M
/// has real part >= -1e-10.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& M, const Eigen::MatrixXd& W);

/// The symplectic transform and closed-loop matrix of the Hamiltonian
/// block-diagonalization Ham T = T diag(A_c, -A_c^T).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd>
block_diagonalize(const Eigen::MatrixXd& A, const Eigen::MatrixXd& R,
                  const Eigen::MatrixXd& Q);

/// PBH rank test: true iff rank [A - lambda I, B] = n for every eigenvalue
/// lambda of A with Re lambda >= -1e-9. Rank decided by singular values
/// against 1e-9 * |A|.
bool pbh_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Dual test: pbh_stabilizable(A^T, C^T).
bool pbh_detectable(const Eigen::MatrixXd& C, const Eigen::MatrixXd& A);

struct NonsingularityCheck {
  bool nonsingular = false;
  double min_sv = 0.0;
};

/// Smallest singular value of PL + I against 1e-10 * (1 + |PL|).
NonsingularityCheck check_pl_plus_i(const Eigen::MatrixXd& P,
                                    const Eigen::MatrixXd& L);

struct Phi11Determinant {
  double t = 0.0;
  double det = 0.0;        // e^{t tr A_c} * det(I + Ltilde(t) P); may over/underflow
  double log_abs_det = 0.0;
  double sign = 0.0;
  double det_scaled = 0.0; // det(I + Ltilde(t) P); the well-scaled nonsingularity factor
  bool nonsingular = false;
};

/// det Phi_11(t) for Phi(t) = exp(t Ham), evaluated through the
/// block-diagonalization as Phi_11(t) = exp(t A_c)(I + Ltilde(t) P) with
/// Ltilde(t) = L - exp(-t A_c) L exp(-t A_c^T). The determinant factors as
/// e^{t tr A_c} * det(I + Ltilde P); the first factor is positive, so the
/// nonsingularity verdict tests |det(I + Ltilde P)| > 1e-12.
std::vector<Phi11Determinant>
phi11_nonsingular(const Eigen::MatrixXd& A, const Eigen::MatrixXd& R,
                  const Eigen::MatrixXd& Q, const std::vector<double>& t_grid);

/// Frobenius norm of PA + A^T P - PRP + Q.
double care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& R,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& P);

} // namespace turnpike

#endif
