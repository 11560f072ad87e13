#ifndef TURNPIKE_MODEL_HPP
#define TURNPIKE_MODEL_HPP

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "turnpike/ode.hpp"
#include "turnpike/riccati.hpp"

namespace turnpike {

/// Control-affine plant xdot = f(x) + g(x) u with analytic first
/// derivatives. `dg[k]` is the Jacobian of the k-th column of g.
struct ControlAffineSystem {
  int n = 0;
  int m = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> g;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> df;
  std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&)> dg;
  std::string name;

  /// Registration-time checks: f(0) = 0 (to 1e-12) and df/dg consistent
  /// with finite differences of f/g at seeded random points in the unit
  /// ball. Throws std::invalid_argument on violation.
  void validate() const;
};

enum class OcpKind { Ocp1, Ocp2 };

/// Optimal control problem over one of the two quadratic cost shapes.
/// Ocp1 tracks Cx toward the target z with free terminal state; Ocp2
/// penalizes |Cx|^2 and pins x(T) = xf.
struct OcpProblem {
  ControlAffineSystem system;
  OcpKind kind = OcpKind::Ocp1;
  Eigen::MatrixXd C;              // r x n
  Eigen::VectorXd z;              // r (Ocp1; zero for Ocp2)
  Eigen::VectorXd x0;             // n
  Eigen::VectorXd xf;             // n (Ocp2 only)
  std::vector<double> horizons;

  int n() const { return system.n; }
  int m() const { return system.m; }
  /// Target vector entering the costate equation: z for Ocp1, 0 for Ocp2.
  Eigen::VectorXd effective_z() const;
  void validate() const;
};

/// Solution of the steady optimization problem packaged with the
/// linearization data at the corresponding Hamiltonian equilibrium.
struct SteadyOptimum {
  Eigen::VectorXd x_bar;
  Eigen::VectorXd u_bar;
  Eigen::VectorXd p_bar;
  Eigen::MatrixXd A_z;
  Eigen::MatrixXd B_z;
  double J_s = 0.0;
  bool hyperbolic = false;
  int stable_dim = 0;

  Eigen::VectorXd equilibrium() const; // (x_bar, p_bar) stacked
};

/// The characteristic system of the Hamilton-Jacobi equation:
///   xdot = f(x) - g(x) g(x)^T p
///   pdot = -Df(x)^T p + sum_k (g_k^T p) Dg_k^T p - C^T (C x - z)
/// with H(x, p) = p^T f - 1/2 p^T g g^T p + 1/2 |Cx - z|^2.
class HamiltonianField {
public:
  HamiltonianField() = default;
  explicit HamiltonianField(OcpProblem problem);

  int n() const { return problem_->n(); }
  int dim() const { return 2 * problem_->n(); }
  const OcpProblem& problem() const { return *problem_; }

  double hamiltonian(const Eigen::VectorXd& x, const Eigen::VectorXd& p) const;
  double hamiltonian(const Eigen::VectorXd& z) const;
  Eigen::VectorXd control(const Eigen::VectorXd& x, const Eigen::VectorXd& p) const;

  Eigen::VectorXd eval(const Eigen::VectorXd& z) const;
  /// Analytic blocks except the (p, x) block, which uses central finite
  /// differences of the costate equation.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& z) const;

  /// Jacobian of the state rows with respect to x: Df - D_x(g g^T p).
  Eigen::MatrixXd state_jacobian_x(const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& p) const;

  VectorField as_vector_field() const;

private:
  std::shared_ptr<const OcpProblem> problem_;
};

HamiltonianField build_hamiltonian_field(const OcpProblem& problem);

struct SopOptions {
  int max_iterations = 200;
  int max_halvings = 40;
  double tolerance_factor = 1e-11; // |X_H| <= factor * (1 + |x| + |p|)
  double dedup_radius = 1e-6;
  double hyperbolic_axis_tol = 1e-8;
};

struct SopDiagnostics {
  int seeds_tried = 0;
  int seeds_converged = 0;
  int seeds_failed = 0;
};

/// Newton on the 2n equilibrium equations from every seed. Seeds may be
/// given in (x, p) form (dimension 2n) or x-only (dimension n), in which
/// case the costate is lifted by a linear least-squares estimate. Roots
/// are sorted lexicographically and deduplicated.
std::vector<SteadyOptimum> solve_sop(const OcpProblem& problem,
                                     const std::vector<Eigen::VectorXd>& seeds,
                                     const SopOptions& opts = {},
                                     SopDiagnostics* diag = nullptr);

struct HypothesisReport {
  bool stabilizable = false;  // PBH on (A_z, B_z)
  bool detectable = false;    // PBH on (C, A_z)
  bool hyperbolic = false;
  bool care_ok = false;       // solve_care succeeded on (A_z, B_z B_z^T, C^T C)
  bool transversal = false;   // PL + I nonsingular
  double pl_plus_i_min_sv = 0.0;
  std::string care_failure;

  bool all_pass() const {
    return stabilizable && detectable && hyperbolic && care_ok && transversal;
  }
};

/// The checkable hypotheses behind the turnpike theorems: PBH tests on the
/// linearization triple, hyperbolicity, and transversality of the unstable
/// tangent space with {p = 0} through the PL + I block.
HypothesisReport check_hypotheses(const SteadyOptimum& opt, const OcpProblem& problem);

} // namespace turnpike

#endif
