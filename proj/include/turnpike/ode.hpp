#ifndef TURNPIKE_ODE_HPP
#define TURNPIKE_ODE_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "turnpike/errors.hpp"

namespace turnpike {

/// Autonomous vector field. When `jacobian` is empty it is replaced by
/// central finite differences with step 1e-6 * (1 + |state|).
struct VectorField {
  int dim = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eval;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

/// Jacobian of a field at a state, falling back to finite differences.
Eigen::MatrixXd field_jacobian(const VectorField& field, const Eigen::VectorXd& state);

struct IntegrationStats {
  long steps = 0;
  long rejected = 0;
  long rhs_evaluations = 0;
};

/// Solution of an initial value problem with per-step cubic-Hermite dense
/// output. Node times are strictly monotone in the direction of
/// integration; the interpolant reproduces the node states exactly.
class Trajectory {
public:
  double t0() const { return t0_; }
  double t1() const { return t1_; }
  int dim() const { return dim_; }

  const std::vector<double>& times() const { return times_; }
  const std::vector<Eigen::VectorXd>& states() const { return states_; }

  /// Dense-output evaluation; t may exceed the span by a 1e-9 relative slack.
  Eigen::VectorXd at(double t) const;
  /// Interpolated time derivative.
  Eigen::VectorXd derivative_at(double t) const;

  IntegrationStats stats;

private:
  friend class DormandPrince;
  double t0_ = 0.0, t1_ = 0.0;
  int dim_ = 0;
  std::vector<double> times_;
  std::vector<Eigen::VectorXd> states_;
  std::vector<Eigen::VectorXd> derivs_; // f(y) at nodes, one per node
  std::size_t locate(double t) const;
};

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double blowup_norm = 1e8;
  long max_steps = 2'000'000;
};

/// Adaptive Dormand-Prince 5(4). Backward spans (t1 < t0) are allowed.
Trajectory integrate(const VectorField& field, const Eigen::VectorXd& x0,
                     double t0, double t1, double rtol, double atol);

Trajectory integrate(const VectorField& field, const Eigen::VectorXd& x0,
                     double t0, double t1, const IntegratorOptions& opts);

/// State trajectory co-integrated with the transition matrix
/// Phi(t) solving  dPhi/dt = Df(z(t)) Phi,  Phi(t0) = I.
class VariationalFlow {
public:
  VariationalFlow() = default;
  VariationalFlow(Trajectory joint, int n);

  const Trajectory& joint() const { return joint_; }
  double t0() const { return joint_.t0(); }
  double t1() const { return joint_.t1(); }
  int n() const { return n_; }

  Eigen::VectorXd state(double t) const;
  Eigen::MatrixXd transition(double t) const;

private:
  Trajectory joint_;
  int n_ = 0;
};

VariationalFlow integrate_with_variational(const VectorField& field,
                                           const Eigen::VectorXd& x0, double t0,
                                           double t1, double rtol, double atol);

VariationalFlow integrate_with_variational(const VectorField& field,
                                           const Eigen::VectorXd& x0, double t0,
                                           double t1, const IntegratorOptions& opts);

} // namespace turnpike

#endif
