#include "turnpike/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace turnpike {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd field_jacobian(const VectorField& field, const VectorXd& state) {
  if (field.jacobian) return field.jacobian(state);
  const double h = 1e-6 * (1.0 + state.norm());
  MatrixXd J(field.dim, field.dim);
  for (int j = 0; j < field.dim; ++j) {
    VectorXd xp = state, xm = state;
    xp(j) += h;
    xm(j) -= h;
    J.col(j) = (field.eval(xp) - field.eval(xm)) / (2.0 * h);
  }
  return J;
}

namespace {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

} // namespace

class DormandPrince {
public:
  DormandPrince(const VectorField& field, const IntegratorOptions& opts)
      : field_(field), opts_(opts) {}

  Trajectory run(const VectorXd& x0, double t0, double t1) {
    if (t1 == t0) throw std::invalid_argument("integrate: empty time span");
    if (!(opts_.rtol > 0.0) || !(opts_.atol > 0.0))
      throw std::invalid_argument("integrate: tolerances must be positive");
    if (!x0.allFinite()) throw std::invalid_argument("integrate: non-finite initial state");

    Trajectory traj;
    traj.dim_ = field_.dim;
    traj.t0_ = t0;
    traj.t1_ = t1;

    const double dir = (t1 > t0) ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    const double hmax = span / 10.0;

    double t = t0;
    VectorXd y = x0;
    VectorXd f = rhs(traj, y);
    double h = dir * initial_step(y, f, hmax);

    traj.times_.push_back(t);
    traj.states_.push_back(y);
    traj.derivs_.push_back(f);

    VectorXd k2(field_.dim), k3(field_.dim), k4(field_.dim), k5(field_.dim),
        k6(field_.dim), k7(field_.dim), ynew(field_.dim), yerr(field_.dim);

    bool last_rejected = false;
    while (dir * (t1 - t) > 0.0) {
      if (traj.stats.steps + traj.stats.rejected > opts_.max_steps)
        throw StepSizeUnderflow("integrate: step budget exhausted");
      if (std::abs(h) < 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0))
        throw StepSizeUnderflow("integrate: step size underflow");
      if (dir * (t + h - t1) > 0.0) h = t1 - t;

      k2 = rhs(traj, y + h * (a21 * f));
      k3 = rhs(traj, y + h * (a31 * f + a32 * k2));
      k4 = rhs(traj, y + h * (a41 * f + a42 * k2 + a43 * k3));
      k5 = rhs(traj, y + h * (a51 * f + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = rhs(traj, y + h * (a61 * f + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      ynew = y + h * (b1 * f + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = rhs(traj, ynew); // FSAL
      yerr = h * (e1 * f + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double err = 0.0;
      for (int i = 0; i < field_.dim; ++i) {
        const double sc = opts_.atol + opts_.rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
        const double q = yerr(i) / sc;
        err += q * q;
      }
      err = std::sqrt(err / field_.dim);

      if (err <= 1.0) {
        t += h;
        y = ynew;
        f = k7;
        traj.times_.push_back(t);
        traj.states_.push_back(y);
        traj.derivs_.push_back(f);
        ++traj.stats.steps;
        if (y.norm() > opts_.blowup_norm)
          throw StepSizeUnderflow("integrate: state norm exceeded blow-up guard");
        const double fac = (err == 0.0) ? 10.0
                                        : 0.9 * std::pow(err, -0.2);
        double grow = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
        h *= grow;
        if (std::abs(h) > hmax) h = dir * hmax;
        last_rejected = false;
      } else {
        ++traj.stats.rejected;
        h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
        last_rejected = true;
      }
    }
    return traj;
  }

private:
  VectorXd rhs(Trajectory& traj, const VectorXd& y) {
    ++traj.stats.rhs_evaluations;
    VectorXd d = field_.eval(y);
    if (!d.allFinite())
      throw NonFiniteDerivative("integrate: vector field returned a non-finite value");
    return d;
  }

  // Hairer-Norsett-Wanner starting step heuristic.
  double initial_step(const VectorXd& y, const VectorXd& f, double hmax) const {
    double d0 = 0.0, d1 = 0.0;
    for (int i = 0; i < field_.dim; ++i) {
      const double sc = opts_.atol + opts_.rtol * std::abs(y(i));
      d0 += (y(i) / sc) * (y(i) / sc);
      d1 += (f(i) / sc) * (f(i) / sc);
    }
    d0 = std::sqrt(d0 / field_.dim);
    d1 = std::sqrt(d1 / field_.dim);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, hmax);

    VectorXd y1 = y + h0 * f;
    VectorXd f1 = field_.eval(y1);
    if (!f1.allFinite())
      throw NonFiniteDerivative("integrate: vector field returned a non-finite value");
    double d2 = 0.0;
    for (int i = 0; i < field_.dim; ++i) {
      const double sc = opts_.atol + opts_.rtol * std::abs(y(i));
      const double q = (f1(i) - f(i)) / sc;
      d2 += q * q;
    }
    d2 = std::sqrt(d2 / field_.dim) / h0;

    double h1 = (std::max(d1, d2) <= 1e-15)
                    ? std::max(1e-6, h0 * 1e-3)
                    : std::pow(0.01 / std::max(d1, d2), 0.2);
    return std::min({100.0 * h0, h1, hmax});
  }

  const VectorField& field_;
  IntegratorOptions opts_;
};

std::size_t Trajectory::locate(double t) const {
  const double slack = 1e-9 * (std::abs(t1_ - t0_) + 1.0);
  const bool fwd = t1_ >= t0_;
  const double lo = fwd ? t0_ : t1_, hi = fwd ? t1_ : t0_;
  if (t < lo - slack || t > hi + slack)
    throw std::out_of_range("Trajectory::at: time outside the integration span");

  // binary search for the step containing t
  std::size_t a = 0, b = times_.size() - 1;
  while (b - a > 1) {
    const std::size_t m = (a + b) / 2;
    const bool left = fwd ? (t < times_[m]) : (t > times_[m]);
    if (left)
      b = m;
    else
      a = m;
  }
  return a;
}

VectorXd Trajectory::at(double t) const {
  if (times_.size() == 1) return states_.front();
  const std::size_t i = locate(t);
  const double ta = times_[i], tb = times_[i + 1];
  const double h = tb - ta;
  const double s = (t - ta) / h;
  const double s2 = s * s, s3 = s2 * s;
  // cubic Hermite basis
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * states_[i] + (h10 * h) * derivs_[i] + h01 * states_[i + 1] +
         (h11 * h) * derivs_[i + 1];
}

VectorXd Trajectory::derivative_at(double t) const {
  if (times_.size() == 1) return derivs_.front();
  const std::size_t i = locate(t);
  const double ta = times_[i], tb = times_[i + 1];
  const double h = tb - ta;
  const double s = (t - ta) / h;
  const double d00 = (6 * s * s - 6 * s) / h;
  const double d10 = 3 * s * s - 4 * s + 1;
  const double d01 = (-6 * s * s + 6 * s) / h;
  const double d11 = 3 * s * s - 2 * s;
  return d00 * states_[i] + d10 * derivs_[i] + d01 * states_[i + 1] +
         d11 * derivs_[i + 1];
}

Trajectory integrate(const VectorField& field, const VectorXd& x0, double t0,
                     double t1, const IntegratorOptions& opts) {
  DormandPrince stepper(field, opts);
  return stepper.run(x0, t0, t1);
}

Trajectory integrate(const VectorField& field, const VectorXd& x0, double t0,
                     double t1, double rtol, double atol) {
  IntegratorOptions opts;
  opts.rtol = rtol;
  opts.atol = atol;
  return integrate(field, x0, t0, t1, opts);
}

VariationalFlow::VariationalFlow(Trajectory joint, int n)
    : joint_(std::move(joint)), n_(n) {}

VectorXd VariationalFlow::state(double t) const {
  return joint_.at(t).head(n_);
}

MatrixXd VariationalFlow::transition(double t) const {
  const VectorXd z = joint_.at(t);
  MatrixXd Phi(n_, n_);
  for (int j = 0; j < n_; ++j) Phi.col(j) = z.segment(n_ + n_ * j, n_);
  return Phi;
}

VariationalFlow integrate_with_variational(const VectorField& field,
                                           const VectorXd& x0, double t0,
                                           double t1, const IntegratorOptions& opts) {
  const int n = field.dim;
  VectorField joint;
  joint.dim = n + n * n;
  joint.eval = [&field, n](const VectorXd& z) {
    const VectorXd x = z.head(n);
    const MatrixXd J = field_jacobian(field, x);
    VectorXd dz(n + n * n);
    dz.head(n) = field.eval(x);
    for (int j = 0; j < n; ++j)
      dz.segment(n + n * j, n) = J * z.segment(n + n * j, n);
    return dz;
  };

  VectorXd z0(n + n * n);
  z0.head(n) = x0;
  MatrixXd I = MatrixXd::Identity(n, n);
  for (int j = 0; j < n; ++j) z0.segment(n + n * j, n) = I.col(j);

  return VariationalFlow(integrate(joint, z0, t0, t1, opts), n);
}

VariationalFlow integrate_with_variational(const VectorField& field,
                                           const VectorXd& x0, double t0,
                                           double t1, double rtol, double atol) {
  IntegratorOptions opts;
  opts.rtol = rtol;
  opts.atol = atol;
  return integrate_with_variational(field, x0, t0, t1, opts);
}

} // namespace turnpike
