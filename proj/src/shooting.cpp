#include "turnpike/shooting.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace turnpike {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void BvpSpec::validate() const {
  if (!(T > 0.0)) throw std::invalid_argument("BvpSpec: horizon must be positive");
  if (x0.size() != field.n())
    throw std::invalid_argument("BvpSpec: x0 must match the state dimension");
  if (field.problem().kind == OcpKind::Ocp1) {
    if (!std::holds_alternative<CostateZero>(terminal))
      throw std::invalid_argument("BvpSpec: OCP1 requires the free-endpoint condition p(T) = 0");
  } else {
    if (!std::holds_alternative<StateTarget>(terminal))
      throw std::invalid_argument("BvpSpec: OCP2 requires a terminal state target");
    if (std::get<StateTarget>(terminal).xf.size() != field.n())
      throw std::invalid_argument("BvpSpec: xf must match the state dimension");
  }
  if (p0_guess && p0_guess->size() != field.n())
    throw std::invalid_argument("BvpSpec: p0 guess must match the state dimension");
}

double BvpSpec::boundary_scale() const {
  double s = 1.0 + x0.norm();
  if (const auto* st = std::get_if<StateTarget>(&terminal)) s += st->xf.norm();
  return s;
}

VectorXd BvpSolution::state(double t) const { return trajectory.at(t).head(n()); }
VectorXd BvpSolution::costate(double t) const { return trajectory.at(t).tail(n()); }

VectorXd BvpSolution::control(double t) const {
  const VectorXd z = trajectory.at(t);
  return field.control(z.head(n()), z.tail(n()));
}

double BvpSolution::hamiltonian(double t) const {
  return field.hamiltonian(trajectory.at(t));
}

VectorXd riccati_costate_guess(const SteadyOptimum& opt, const OcpProblem& problem,
                               const VectorXd& x0) {
  try {
    const RiccatiSolution care = solve_care(opt.A_z, opt.B_z * opt.B_z.transpose(),
                                            problem.C.transpose() * problem.C);
    return opt.p_bar + care.P * (x0 - opt.x_bar);
  } catch (const Error&) {
    return opt.p_bar;
  }
}

namespace {

VectorXd boundary_residual(const BvpSpec& spec, const VectorXd& zT) {
  const int n = spec.field.n();
  if (std::holds_alternative<CostateZero>(spec.terminal)) return zT.tail(n);
  return zT.head(n) - std::get<StateTarget>(spec.terminal).xf;
}

MatrixXd shooting_jacobian(const BvpSpec& spec, const MatrixXd& Phi) {
  const int n = spec.field.n();
  if (std::holds_alternative<CostateZero>(spec.terminal))
    return Phi.block(n, n, n, n); // dp(T)/dp0
  return Phi.block(0, n, n, n);   // dx(T)/dp0
}

VectorXd stack(const VectorXd& x, const VectorXd& p) {
  VectorXd z(x.size() + p.size());
  z << x, p;
  return z;
}

} // namespace

BvpSolution solve_bvp(const BvpSpec& spec, const ShootingOptions& opts) {
  spec.validate();
  const int n = spec.field.n();
  const VectorField vf = spec.field.as_vector_field();
  IntegratorOptions iopts;
  iopts.rtol = opts.rtol;
  iopts.atol = opts.atol;

  const double scale = spec.boundary_scale();
  const double accept_tol = opts.boundary_tol_factor * scale;
  const double target_tol = opts.target_factor * scale;

  VectorXd p0 = spec.p0_guess.value_or(VectorXd::Zero(n));

  VariationalFlow flow;
  try {
    flow = integrate_with_variational(vf, stack(spec.x0, p0), 0.0, spec.T, iopts);
  } catch (const IntegrationError& e) {
    throw IntegrationBlowup(std::string("shooting: initial guess does not integrate (") +
                            e.what() + "); try continuation");
  }
  VectorXd r = boundary_residual(spec, flow.state(spec.T));
  double rnorm = r.norm();

  VectorXd best_p0 = p0;
  double best_rnorm = rnorm;
  double floor_estimate = 0.0;
  int iters = 0;

  for (; iters < opts.max_iterations && rnorm > target_tol; ++iters) {
    const MatrixXd J = shooting_jacobian(spec, flow.transition(spec.T));
    Eigen::JacobiSVD<MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (smin <= 0.0 || smax / smin > opts.condition_limit)
      throw SingularShootingJacobian("shooting Jacobian condition number exceeds limit",
                                     smin > 0.0 ? smax / smin
                                                : std::numeric_limits<double>::infinity());

    floor_estimate = 10.0 * std::numeric_limits<double>::epsilon() * smax * (1.0 + p0.norm());
    const VectorXd step = svd.solve(-r);

    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      const VectorXd trial = p0 + alpha * step;
      try {
        const Trajectory tr = integrate(vf, stack(spec.x0, trial), 0.0, spec.T, iopts);
        const double rn = boundary_residual(spec, tr.at(spec.T)).norm();
        if (rn <= (1.0 - 1e-4 * alpha) * rnorm) {
          p0 = trial;
          rnorm = rn;
          accepted = true;
          break;
        }
      } catch (const IntegrationError&) {
        // trial escaped; shorten the step
      }
      alpha *= 0.5;
    }
    if (!accepted) break; // stalled: floor or divergence, decided below

    flow = integrate_with_variational(vf, stack(spec.x0, p0), 0.0, spec.T, iopts);
    r = boundary_residual(spec, flow.state(spec.T));
    rnorm = r.norm(); // variational re-run is the authoritative residual
    if (rnorm < best_rnorm) {
      best_rnorm = rnorm;
      best_p0 = p0;
    }
  }

  const bool at_floor = opts.accept_at_conditioning_floor && rnorm <= std::max(floor_estimate, 0.0);
  if (rnorm > accept_tol && !at_floor) {
    std::ostringstream msg;
    msg << "shooting Newton stalled at residual " << best_rnorm << " (tolerance "
        << accept_tol << ") after " << iters << " iterations";
    throw NewtonDivergence(msg.str(), best_p0, best_rnorm, iters);
  }

  BvpSolution sol;
  sol.field = spec.field;
  sol.flow = flow;
  sol.trajectory = flow.joint(); // placeholder, replaced below
  sol.p0 = p0;
  sol.residual = rnorm;
  sol.newton_iters = iters;
  sol.at_conditioning_floor = rnorm > accept_tol;
  sol.conditioning_floor = floor_estimate;

  // Store the plain 2n-state trajectory for dense readback.
  sol.trajectory = integrate(vf, stack(spec.x0, p0), 0.0, spec.T, iopts);
  return sol;
}

namespace {

struct HomotopyState {
  double T;
  VectorXd x0;
  VectorXd xf; // empty for OCP1
  VectorXd z;  // empty for OCP2
};

HomotopyState state_from_spec(const BvpSpec& spec) {
  HomotopyState h;
  h.T = spec.T;
  h.x0 = spec.x0;
  if (const auto* st = std::get_if<StateTarget>(&spec.terminal)) h.xf = st->xf;
  if (spec.field.problem().kind == OcpKind::Ocp1) h.z = spec.field.problem().z;
  return h;
}

HomotopyState apply_step(const HomotopyState& base, const ContinuationStep& step) {
  HomotopyState h = base;
  if (step.T) h.T = *step.T;
  if (step.x0) h.x0 = *step.x0;
  if (step.xf) h.xf = *step.xf;
  if (step.z) h.z = *step.z;
  return h;
}

HomotopyState interpolate(const HomotopyState& a, const HomotopyState& b, double lam) {
  HomotopyState h;
  h.T = a.T + lam * (b.T - a.T);
  h.x0 = a.x0 + lam * (b.x0 - a.x0);
  if (a.xf.size()) h.xf = a.xf + lam * (b.xf - a.xf);
  if (a.z.size()) h.z = a.z + lam * (b.z - a.z);
  return h;
}

BvpSpec spec_at(const BvpSpec& proto, const HomotopyState& h, const VectorXd& p0) {
  OcpProblem pr = proto.field.problem();
  pr.x0 = h.x0;
  if (pr.kind == OcpKind::Ocp1) pr.z = h.z;
  if (pr.kind == OcpKind::Ocp2) pr.xf = h.xf;
  BvpSpec s;
  s.field = HamiltonianField(pr);
  s.T = h.T;
  s.x0 = h.x0;
  if (pr.kind == OcpKind::Ocp1)
    s.terminal = CostateZero{};
  else
    s.terminal = StateTarget{h.xf};
  s.p0_guess = p0;
  return s;
}

} // namespace

namespace {

bool same_state(const HomotopyState& a, const HomotopyState& b) {
  if (std::abs(a.T - b.T) > 1e-12 * (1.0 + std::abs(b.T))) return false;
  if ((a.x0 - b.x0).norm() > 1e-12 * (1.0 + b.x0.norm())) return false;
  if (a.xf.size() && (a.xf - b.xf).norm() > 1e-12 * (1.0 + b.xf.norm())) return false;
  if (a.z.size() && (a.z - b.z).norm() > 1e-12 * (1.0 + b.z.norm())) return false;
  return true;
}

} // namespace

BvpSolution solve_with_continuation(const BvpSpec& spec, const ContinuationPlan& plan,
                                    const ShootingOptions& opts) {
  spec.validate();
  if (plan.empty()) return solve_bvp(spec, opts);

  const HomotopyState target = state_from_spec(spec);
  VectorXd p0 = spec.p0_guess.value_or(VectorXd::Zero(spec.field.n()));

  std::shared_ptr<BvpSolution> last; // most recent solved step
  std::optional<HomotopyState> solved_at;
  std::vector<ContinuationRecord> path;

  // The plan's entries are solved in order; the route always ends at the
  // spec's own parameters.
  std::vector<HomotopyState> route;
  {
    HomotopyState cursor = target;
    for (const ContinuationStep& step : plan) {
      cursor = apply_step(cursor, step);
      route.push_back(cursor);
    }
    if (!same_state(cursor, target)) route.push_back(target);
  }

  for (const HomotopyState& goal : route) {
    double lam_lo = 0.0;
    int bisections = 0;
    while (lam_lo < 1.0) {
      double lam = 1.0;
      for (;;) {
        const double lam_try = lam_lo + lam * (1.0 - lam_lo);
        const HomotopyState trial =
            solved_at ? interpolate(*solved_at, goal, lam_try) : goal;
        try {
          BvpSolution sol = solve_bvp(spec_at(spec, trial, p0), opts);
          p0 = sol.p0;
          path.push_back({trial.T, trial.x0, p0, sol.residual});
          last = std::make_shared<BvpSolution>(std::move(sol));
          lam_lo = solved_at ? lam_try : 1.0;
          if (lam_lo > 1.0 - 1e-12) lam_lo = 1.0;
          solved_at = trial;
          break;
        } catch (const Error&) {
          lam *= 0.5;
          if (++bisections > 10) {
            if (last) last->continuation_path = path;
            std::ostringstream msg;
            msg << "continuation stalled after 10 bisections at homotopy fraction "
                << lam_lo;
            throw ContinuationStalled(msg.str(), last);
          }
          if (!solved_at) continue; // no base to retreat toward; retry is hopeless
        }
      }
    }
  }

  BvpSolution out = *last;
  out.continuation_path = path;
  return out;
}

PCondition verify_p_condition(const BvpSolution& sol, int samples) {
  if (samples < 2) throw std::invalid_argument("verify_p_condition: need at least 2 samples");
  const int n = sol.n();
  const double T = sol.T();
  const MatrixXd PhiT = sol.flow.transition(T);

  // dp0/dx0 from the converged boundary condition (implicit function theorem)
  const bool ocp1 = sol.field.problem().kind == OcpKind::Ocp1;
  const MatrixXd Jp = ocp1 ? PhiT.block(n, n, n, n) : PhiT.block(0, n, n, n);
  const MatrixXd Jx = ocp1 ? PhiT.block(n, 0, n, n) : PhiT.block(0, 0, n, n);
  Eigen::JacobiSVD<MatrixXd> svd(Jp, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (smin <= 0.0 || smax / smin > 1e12)
    throw SingularShootingJacobian("verify_p_condition: implicit-function solve ill-conditioned",
                                   smin > 0.0 ? smax / smin
                                              : std::numeric_limits<double>::infinity());
  const MatrixXd dp0_dx0 = svd.solve(-Jx);

  PCondition out;
  out.ok = true;
  out.min_abs_det = std::numeric_limits<double>::infinity();
  double prev_det = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double t = T * k / (samples - 1);
    const MatrixXd Phi = sol.flow.transition(t);
    const MatrixXd D = Phi.block(0, 0, n, n) + Phi.block(0, n, n, n) * dp0_dx0;
    const double det = D.determinant();
    out.dets.emplace_back(t, det);
    out.min_abs_det = std::min(out.min_abs_det, std::abs(det));
    if (std::abs(det) <= 1e-10) out.ok = false;
    if (k > 0 && std::signbit(det) != std::signbit(prev_det)) out.ok = false;
    prev_det = det;
  }
  return out;
}

} // namespace turnpike
