#ifndef TURNPIKE_REGISTRY_HPP
#define TURNPIKE_REGISTRY_HPP

#include <optional>
#include <string>
#include <vector>

#include "turnpike/model.hpp"

namespace turnpike {

/// Cascade decomposition of plants whose x2-subsystem is linear:
///   x1dot = A1 x1 + A2(x1, x2) x1,   x2dot = A3 x2 + B2 u,
/// with the x2-block output weight C2. This is what makes the unstable
/// manifold of the Hamiltonian system an affine set.
struct CascadeStructure {
  int n1 = 0;
  int n2 = 0;
  Eigen::MatrixXd A3;
  Eigen::MatrixXd B2;
  Eigen::MatrixXd C2;
};

struct RegistryEntry {
  std::string name;
  ControlAffineSystem system;
  Eigen::MatrixXd default_C;
  bool multi_equilibrium = false;
  std::optional<CascadeStructure> cascade;
  std::vector<Eigen::VectorXd> default_sop_seeds;
};

std::vector<std::string> registry_names();

/// Throws UnknownSystem with the available names for an unknown lookup.
RegistryEntry registry_lookup(const std::string& name);

/// The configurable linear entry.
RegistryEntry registry_lqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& C);

// Ready-made problems for the built-in systems.
OcpProblem byrnes_ocp1(const Eigen::VectorXd& z, const Eigen::VectorXd& x0,
                       std::vector<double> horizons = {});
OcpProblem byrnes_ocp2(const Eigen::VectorXd& x0, const Eigen::VectorXd& xf,
                       std::vector<double> horizons = {});
OcpProblem scalar_cubic_ocp2(double x0, double xf, std::vector<double> horizons = {});
OcpProblem lqr_ocp1(const Eigen::VectorXd& z, const Eigen::VectorXd& x0,
                    std::vector<double> horizons = {});

} // namespace turnpike

#endif
