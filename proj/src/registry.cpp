#include "turnpike/registry.hpp"

#include <sstream>

namespace turnpike {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ControlAffineSystem byrnes_system() {
  ControlAffineSystem sys;
  sys.n = 2;
  sys.m = 1;
  sys.name = "byrnes";
  sys.f = [](const VectorXd& x) {
    VectorXd v(2);
    v << -x(0) + x(0) * x(0) * x(1), 0.0;
    return v;
  };
  sys.g = [](const VectorXd&) {
    MatrixXd G(2, 1);
    G << 0.0, 1.0;
    return G;
  };
  sys.df = [](const VectorXd& x) {
    MatrixXd J(2, 2);
    J << -1.0 + 2.0 * x(0) * x(1), x(0) * x(0), 0.0, 0.0;
    return J;
  };
  sys.dg = [](const VectorXd&) { return std::vector<MatrixXd>{MatrixXd::Zero(2, 2)}; };
  return sys;
}

ControlAffineSystem scalar_cubic_system() {
  ControlAffineSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.name = "scalar_cubic";
  sys.f = [](const VectorXd& x) {
    VectorXd v(1);
    v << -x(0) + x(0) * x(0);
    return v;
  };
  sys.g = [](const VectorXd&) { return MatrixXd::Ones(1, 1); };
  sys.df = [](const VectorXd& x) {
    MatrixXd J(1, 1);
    J << -1.0 + 2.0 * x(0);
    return J;
  };
  sys.dg = [](const VectorXd&) { return std::vector<MatrixXd>{MatrixXd::Zero(1, 1)}; };
  return sys;
}

ControlAffineSystem linear_system(const MatrixXd& A, const MatrixXd& B) {
  ControlAffineSystem sys;
  sys.n = static_cast<int>(A.rows());
  sys.m = static_cast<int>(B.cols());
  sys.name = "lqr";
  sys.f = [A](const VectorXd& x) { return VectorXd(A * x); };
  sys.g = [B](const VectorXd&) { return B; };
  sys.df = [A](const VectorXd&) { return A; };
  const int n = sys.n, m = sys.m;
  sys.dg = [n, m](const VectorXd&) {
    return std::vector<MatrixXd>(m, MatrixXd::Zero(n, n));
  };
  return sys;
}

std::vector<VectorXd> grid_seeds_2d(double x_lo, double x_hi, double p_lo,
                                    double p_hi, int per_dim) {
  std::vector<VectorXd> seeds;
  for (int i = 0; i < per_dim; ++i)
    for (int j = 0; j < per_dim; ++j) {
      VectorXd s(2);
      s << x_lo + (x_hi - x_lo) * i / (per_dim - 1),
          p_lo + (p_hi - p_lo) * j / (per_dim - 1);
      seeds.push_back(s);
    }
  return seeds;
}

} // namespace

std::vector<std::string> registry_names() { return {"byrnes", "lqr", "scalar_cubic"}; }

RegistryEntry registry_lookup(const std::string& name) {
  if (name == "byrnes") {
    RegistryEntry e;
    e.name = name;
    e.system = byrnes_system();
    e.default_C = MatrixXd::Identity(2, 2);
    CascadeStructure cs;
    cs.n1 = 1;
    cs.n2 = 1;
    cs.A3 = MatrixXd::Zero(1, 1);
    cs.B2 = MatrixXd::Ones(1, 1);
    cs.C2 = MatrixXd::Ones(1, 1);
    e.cascade = cs;
    e.default_sop_seeds = {VectorXd::Zero(4)};
    return e;
  }
  if (name == "scalar_cubic") {
    RegistryEntry e;
    e.name = name;
    e.system = scalar_cubic_system();
    e.default_C = MatrixXd::Zero(1, 1);
    e.multi_equilibrium = true;
    e.default_sop_seeds = grid_seeds_2d(-1.0, 2.0, -1.0, 1.0, 5);
    return e;
  }
  if (name == "lqr") {
    MatrixXd A(2, 2), B(2, 1);
    A << 0, 1, 0, 0;
    B << 0, 1;
    return registry_lqr(A, B, MatrixXd::Identity(2, 2));
  }
  std::ostringstream msg;
  msg << "unknown system '" << name << "'; available:";
  for (const auto& n : registry_names()) msg << " " << n;
  throw UnknownSystem(msg.str());
}

RegistryEntry registry_lqr(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C) {
  RegistryEntry e;
  e.name = "lqr";
  e.system = linear_system(A, B);
  e.default_C = C;
  e.default_sop_seeds = {VectorXd::Zero(2 * e.system.n)};
  return e;
}

OcpProblem byrnes_ocp1(const VectorXd& z, const VectorXd& x0, std::vector<double> horizons) {
  RegistryEntry e = registry_lookup("byrnes");
  OcpProblem pr;
  pr.system = e.system;
  pr.kind = OcpKind::Ocp1;
  pr.C = e.default_C;
  pr.z = z;
  pr.x0 = x0;
  pr.horizons = std::move(horizons);
  return pr;
}

OcpProblem byrnes_ocp2(const VectorXd& x0, const VectorXd& xf, std::vector<double> horizons) {
  RegistryEntry e = registry_lookup("byrnes");
  OcpProblem pr;
  pr.system = e.system;
  pr.kind = OcpKind::Ocp2;
  pr.C = e.default_C;
  pr.x0 = x0;
  pr.xf = xf;
  pr.horizons = std::move(horizons);
  return pr;
}

OcpProblem scalar_cubic_ocp2(double x0, double xf, std::vector<double> horizons) {
  RegistryEntry e = registry_lookup("scalar_cubic");
  OcpProblem pr;
  pr.system = e.system;
  pr.kind = OcpKind::Ocp2;
  pr.C = e.default_C;
  pr.x0 = VectorXd::Constant(1, x0);
  pr.xf = VectorXd::Constant(1, xf);
  pr.horizons = std::move(horizons);
  return pr;
}

OcpProblem lqr_ocp1(const VectorXd& z, const VectorXd& x0, std::vector<double> horizons) {
  RegistryEntry e = registry_lookup("lqr");
  OcpProblem pr;
  pr.system = e.system;
  pr.kind = OcpKind::Ocp1;
  pr.C = e.default_C;
  pr.z = z;
  pr.x0 = x0;
  pr.horizons = std::move(horizons);
  return pr;
}

} // namespace turnpike
