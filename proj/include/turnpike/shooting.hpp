#ifndef TURNPIKE_SHOOTING_HPP
#define TURNPIKE_SHOOTING_HPP

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "turnpike/model.hpp"
#include "turnpike/ode.hpp"

namespace turnpike {

/// Terminal condition of the two-point boundary value problem.
struct CostateZero {};          // OCP1: p(T) = 0
struct StateTarget {            // OCP2: x(T) = xf
  Eigen::VectorXd xf;
};
using TerminalCondition = std::variant<CostateZero, StateTarget>;

struct BvpSpec {
  HamiltonianField field;
  double T = 0.0;
  Eigen::VectorXd x0;
  TerminalCondition terminal;
  std::optional<Eigen::VectorXd> p0_guess;

  void validate() const;
  /// 1 + |x0| + |xf or 0|, the scale entering the residual tolerance.
  double boundary_scale() const;
};

struct ShootingOptions {
  double rtol = 1e-11;
  double atol = 1e-13;
  int max_iterations = 50;
  int max_halvings = 30;
  double boundary_tol_factor = 1e-8; // accept when |r| <= factor * boundary_scale
  double target_factor = 1e-10;      // Newton aims lower than the acceptance tol
  double condition_limit = 1e12;
  /// Accept once the residual reaches the double-precision floor imposed by
  /// the shooting sensitivity (|J| * eps * p0 scale), even above the
  /// nominal tolerance. Long horizons on hyperbolic problems hit this.
  bool accept_at_conditioning_floor = true;
};

struct ContinuationRecord {
  double T = 0.0;
  Eigen::VectorXd x0;
  Eigen::VectorXd p0;
  double residual = 0.0;
};

struct BvpSolution {
  Trajectory trajectory;  // (x, p) over [0, T]
  VariationalFlow flow;   // same span, with the 2n x 2n transition matrix
  Eigen::VectorXd p0;
  double residual = 0.0;
  int newton_iters = 0;
  bool at_conditioning_floor = false;
  double conditioning_floor = 0.0;
  std::vector<ContinuationRecord> continuation_path;
  HamiltonianField field;

  int n() const { return field.n(); }
  double T() const { return trajectory.t1(); }
  Eigen::VectorXd state(double t) const;
  Eigen::VectorXd costate(double t) const;
  Eigen::VectorXd control(double t) const;
  double hamiltonian(double t) const;
};

class NewtonDivergence : public Error {
public:
  NewtonDivergence(const std::string& what, Eigen::VectorXd best_p0,
                   double residual, int iterations)
      : Error(what), best_p0(std::move(best_p0)), residual(residual),
        iterations(iterations) {}
  Eigen::VectorXd best_p0;
  double residual;
  int iterations;
};

class IntegrationBlowup : public Error {
public:
  using Error::Error;
};

class SingularShootingJacobian : public Error {
public:
  SingularShootingJacobian(const std::string& what, double condition)
      : Error(what), condition(condition) {}
  double condition;
};

class ContinuationStalled : public Error {
public:
  ContinuationStalled(const std::string& what, std::shared_ptr<BvpSolution> achieved)
      : Error(what), achieved(std::move(achieved)) {}
  std::shared_ptr<BvpSolution> achieved; // last successful step, may be null
};

/// Initial costate on the tangent space of the stable manifold:
/// p0 = p_bar + P (x0 - x_bar) with P the stabilizing Riccati solution at
/// the steady optimum. Falls back to p_bar when the CARE solve fails.
Eigen::VectorXd riccati_costate_guess(const SteadyOptimum& opt,
                                      const OcpProblem& problem,
                                      const Eigen::VectorXd& x0);

/// Damped Newton on p0 -> boundary residual with the Jacobian taken from
/// the variational flow.
BvpSolution solve_bvp(const BvpSpec& spec, const ShootingOptions& opts = {});

inline BvpSolution solve_bvp(const BvpSpec& spec, double rtol, double atol) {
  ShootingOptions opts;
  opts.rtol = rtol;
  opts.atol = atol;
  return solve_bvp(spec, opts);
}

/// One homotopy step: any subset of (T, x0, xf, z) may move.
struct ContinuationStep {
  std::optional<double> T;
  std::optional<Eigen::VectorXd> x0;
  std::optional<Eigen::VectorXd> xf;
  std::optional<Eigen::VectorXd> z;
};
using ContinuationPlan = std::vector<ContinuationStep>;

/// Chain of solve_bvp calls, each warm-started from the previous costate.
/// Failed steps are bisected in the homotopy parameter up to 10 times.
BvpSolution solve_with_continuation(const BvpSpec& spec, const ContinuationPlan& plan,
                                    const ShootingOptions& opts = {});

struct PCondition {
  bool ok = false;
  double min_abs_det = 0.0;
  std::vector<std::pair<double, double>> dets; // (t, det D_{x0} x(t))
};

/// Samples det D_{x0} x_T(t) = det(Phi_xx(t) + Phi_xp(t) dp0/dx0) on a
/// uniform grid; ok iff every |det| > 1e-10 and the sign never flips.
PCondition verify_p_condition(const BvpSolution& sol, int samples = 200);

} // namespace turnpike

#endif
