#include "turnpike/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace turnpike {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void ControlAffineSystem::validate() const {
  if (n <= 0 || m <= 0) throw std::invalid_argument("system dimensions must be positive");
  if (!f || !g || !df || !dg) throw std::invalid_argument("system maps must all be set");

  const VectorXd zero = VectorXd::Zero(n);
  if (f(zero).norm() > 1e-12)
    throw std::invalid_argument("system '" + name + "': f(0) must vanish");

  // analytic derivatives against central differences at seeded points
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> dist(0.0, 1.0);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = dist(rng);
    if (x.norm() > 1.0) x /= x.norm() * 1.0001;

    MatrixXd Jf(n, n);
    std::vector<MatrixXd> Jg(m, MatrixXd(n, n));
    for (int j = 0; j < n; ++j) {
      VectorXd xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      Jf.col(j) = (f(xp) - f(xm)) / (2.0 * h);
      const MatrixXd gp = g(xp), gm = g(xm);
      for (int k = 0; k < m; ++k) Jg[k].col(j) = (gp.col(k) - gm.col(k)) / (2.0 * h);
    }
    if ((df(x) - Jf).norm() > 1e-5 * (1.0 + Jf.norm()))
      throw std::invalid_argument("system '" + name + "': df disagrees with finite differences");
    const auto dgx = dg(x);
    if (static_cast<int>(dgx.size()) != m)
      throw std::invalid_argument("system '" + name + "': dg must have one Jacobian per input column");
    for (int k = 0; k < m; ++k)
      if ((dgx[k] - Jg[k]).norm() > 1e-5 * (1.0 + Jg[k].norm()))
        throw std::invalid_argument("system '" + name + "': dg disagrees with finite differences");
  }
}

VectorXd OcpProblem::effective_z() const {
  if (kind == OcpKind::Ocp1) return z;
  return VectorXd::Zero(C.rows());
}

void OcpProblem::validate() const {
  system.validate();
  if (C.cols() != system.n)
    throw std::invalid_argument("C column count must equal the state dimension");
  if (kind == OcpKind::Ocp1) {
    if (z.size() != C.rows())
      throw std::invalid_argument("target z must match the output dimension of C");
  } else {
    if (xf.size() != system.n)
      throw std::invalid_argument("terminal state xf must match the state dimension");
  }
  if (x0.size() != 0 && x0.size() != system.n)
    throw std::invalid_argument("x0 must match the state dimension");
  for (std::size_t i = 1; i < horizons.size(); ++i)
    if (!(horizons[i] > horizons[i - 1]))
      throw std::invalid_argument("horizons must be strictly increasing");
  for (double T : horizons)
    if (!(T > 0.0)) throw std::invalid_argument("horizons must be positive");
}

VectorXd SteadyOptimum::equilibrium() const {
  VectorXd eq(x_bar.size() + p_bar.size());
  eq << x_bar, p_bar;
  return eq;
}

HamiltonianField::HamiltonianField(OcpProblem problem)
    : problem_(std::make_shared<const OcpProblem>(std::move(problem))) {
  problem_->validate();
}

HamiltonianField build_hamiltonian_field(const OcpProblem& problem) {
  return HamiltonianField(problem);
}

double HamiltonianField::hamiltonian(const VectorXd& x, const VectorXd& p) const {
  const auto& pr = *problem_;
  const MatrixXd gx = pr.system.g(x);
  const VectorXd gtp = gx.transpose() * p;
  const VectorXd out = pr.C * x - pr.effective_z();
  return p.dot(pr.system.f(x)) - 0.5 * gtp.squaredNorm() + 0.5 * out.squaredNorm();
}

double HamiltonianField::hamiltonian(const VectorXd& zstate) const {
  const int nn = n();
  return hamiltonian(zstate.head(nn), zstate.tail(nn));
}

VectorXd HamiltonianField::control(const VectorXd& x, const VectorXd& p) const {
  return -problem_->system.g(x).transpose() * p;
}

VectorXd HamiltonianField::eval(const VectorXd& zstate) const {
  const auto& pr = *problem_;
  const int nn = n();
  const VectorXd x = zstate.head(nn);
  const VectorXd p = zstate.tail(nn);

  const MatrixXd gx = pr.system.g(x);
  const VectorXd gtp = gx.transpose() * p; // = -u
  const auto dgx = pr.system.dg(x);

  VectorXd dz(2 * nn);
  dz.head(nn) = pr.system.f(x) - gx * gtp;

  VectorXd pdot = -pr.system.df(x).transpose() * p;
  for (int k = 0; k < pr.m(); ++k)
    pdot += gtp(k) * (dgx[k].transpose() * p);
  pdot -= pr.C.transpose() * (pr.C * x - pr.effective_z());
  dz.tail(nn) = pdot;
  return dz;
}

MatrixXd HamiltonianField::state_jacobian_x(const VectorXd& x, const VectorXd& p) const {
  const auto& pr = *problem_;
  const MatrixXd gx = pr.system.g(x);
  const VectorXd gtp = gx.transpose() * p;
  const auto dgx = pr.system.dg(x);
  MatrixXd A = pr.system.df(x);
  for (int k = 0; k < pr.m(); ++k)
    A -= gtp(k) * dgx[k] + gx.col(k) * (p.transpose() * dgx[k]);
  return A;
}

MatrixXd HamiltonianField::jacobian(const VectorXd& zstate) const {
  const int nn = n();
  const VectorXd x = zstate.head(nn);
  const VectorXd p = zstate.tail(nn);
  const MatrixXd gx = problem_->system.g(x);

  MatrixXd J(2 * nn, 2 * nn);
  const MatrixXd A = state_jacobian_x(x, p);
  J.topLeftCorner(nn, nn) = A;
  J.topRightCorner(nn, nn) = -gx * gx.transpose();
  J.bottomRightCorner(nn, nn) = -A.transpose();

  // D_x(pdot) = -H_xx needs second derivatives of f and g; differentiate
  // the costate rows of eval numerically instead.
  const double h = 1e-6 * (1.0 + zstate.norm());
  for (int j = 0; j < nn; ++j) {
    VectorXd zp = zstate, zm = zstate;
    zp(j) += h;
    zm(j) -= h;
    J.block(nn, j, nn, 1) = (eval(zp).tail(nn) - eval(zm).tail(nn)) / (2.0 * h);
  }
  return J;
}

VectorField HamiltonianField::as_vector_field() const {
  VectorField vf;
  vf.dim = dim();
  auto self = *this; // shares the problem pointer
  vf.eval = [self](const VectorXd& z) { return self.eval(z); };
  vf.jacobian = [self](const VectorXd& z) { return self.jacobian(z); };
  return vf;
}

namespace {

/// x-only seeds get their costate from the linear part of pdot = 0.
VectorXd lift_seed(const OcpProblem& pr, const VectorXd& xs) {
  const VectorXd rhs = pr.C.transpose() * (pr.C * xs - pr.effective_z());
  const MatrixXd M = -pr.system.df(xs).transpose();
  VectorXd p = M.completeOrthogonalDecomposition().solve(rhs);
  if (!p.allFinite()) p = VectorXd::Zero(pr.n());
  VectorXd seed(2 * pr.n());
  seed << xs, p;
  return seed;
}

struct NewtonOutcome {
  bool converged = false;
  VectorXd root;
};

NewtonOutcome newton_equilibrium(const HamiltonianField& field, VectorXd z,
                                 const SopOptions& opts) {
  const auto residual_ok = [&](const VectorXd& zz, double r) {
    return r <= opts.tolerance_factor * (1.0 + zz.norm());
  };
  VectorXd F = field.eval(z);
  double fnorm = F.norm();
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (residual_ok(z, fnorm)) return {true, z};
    Eigen::FullPivLU<MatrixXd> lu(field.jacobian(z));
    if (!lu.isInvertible()) return {false, z};
    const VectorXd step = lu.solve(-F);
    if (!step.allFinite()) return {false, z};

    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      const VectorXd trial = z + alpha * step;
      const VectorXd Ft = field.eval(trial);
      if (Ft.allFinite() && Ft.norm() < fnorm) {
        z = trial;
        F = Ft;
        fnorm = Ft.norm();
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) return {residual_ok(z, fnorm), z};
  }
  return {residual_ok(z, fnorm), z};
}

} // namespace

std::vector<SteadyOptimum> solve_sop(const OcpProblem& problem,
                                     const std::vector<VectorXd>& seeds,
                                     const SopOptions& opts, SopDiagnostics* diag) {
  if (seeds.empty()) throw std::invalid_argument("solve_sop: at least one seed required");
  const HamiltonianField field(problem);
  const int nn = problem.n();

  std::vector<VectorXd> roots;
  SopDiagnostics local;
  for (const VectorXd& s : seeds) {
    ++local.seeds_tried;
    VectorXd z0;
    if (s.size() == 2 * nn)
      z0 = s;
    else if (s.size() == nn)
      z0 = lift_seed(problem, s);
    else
      throw std::invalid_argument("solve_sop: seed dimension must be n or 2n");

    const NewtonOutcome out = newton_equilibrium(field, z0, opts);
    if (out.converged) {
      ++local.seeds_converged;
      roots.push_back(out.root);
    } else {
      ++local.seeds_failed;
    }
  }
  if (diag) *diag = local;

  std::sort(roots.begin(), roots.end(), [](const VectorXd& a, const VectorXd& b) {
    for (int i = 0; i < a.size(); ++i)
      if (a(i) != b(i)) return a(i) < b(i);
    return false;
  });
  std::vector<VectorXd> unique_roots;
  for (const VectorXd& r : roots) {
    bool dup = false;
    for (const VectorXd& u : unique_roots)
      if ((r - u).norm() <= opts.dedup_radius) {
        dup = true;
        break;
      }
    if (!dup) unique_roots.push_back(r);
  }

  std::vector<SteadyOptimum> optima;
  for (const VectorXd& r : unique_roots) {
    SteadyOptimum opt;
    opt.x_bar = r.head(nn);
    opt.p_bar = r.tail(nn);
    opt.u_bar = field.control(opt.x_bar, opt.p_bar);
    opt.A_z = field.state_jacobian_x(opt.x_bar, opt.p_bar);
    opt.B_z = problem.system.g(opt.x_bar);
    const VectorXd track = problem.C * opt.x_bar - problem.effective_z();
    opt.J_s = 0.5 * (track.squaredNorm() + opt.u_bar.squaredNorm());

    const Eigen::VectorXcd eigs = field.jacobian(r).eigenvalues();
    opt.hyperbolic = true;
    opt.stable_dim = 0;
    for (int i = 0; i < eigs.size(); ++i) {
      if (std::abs(eigs(i).real()) <= opts.hyperbolic_axis_tol) opt.hyperbolic = false;
      if (eigs(i).real() < -opts.hyperbolic_axis_tol) ++opt.stable_dim;
    }
    optima.push_back(std::move(opt));
  }
  return optima;
}

HypothesisReport check_hypotheses(const SteadyOptimum& opt, const OcpProblem& problem) {
  HypothesisReport rep;
  rep.stabilizable = pbh_stabilizable(opt.A_z, opt.B_z);
  rep.detectable = pbh_detectable(problem.C, opt.A_z);
  rep.hyperbolic = opt.hyperbolic;
  try {
    const RiccatiSolution sol = solve_care(opt.A_z, opt.B_z * opt.B_z.transpose(),
                                           problem.C.transpose() * problem.C);
    rep.care_ok = true;
    const NonsingularityCheck chk = check_pl_plus_i(sol.P, sol.L);
    rep.transversal = chk.nonsingular;
    rep.pl_plus_i_min_sv = chk.min_sv;
  } catch (const Error& e) {
    rep.care_ok = false;
    rep.care_failure = e.what();
  }
  return rep;
}

} // namespace turnpike
