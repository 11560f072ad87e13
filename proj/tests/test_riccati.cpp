#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "test_util.hpp"
#include "turnpike/riccati.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace turnpike;

namespace {

MatrixXd scalar(double v) {
  MatrixXd M(1, 1);
  M(0, 0) = v;
  return M;
}

testutil::RandomTriple random_stab_det_triple(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> mdist(1, n);
  for (;;) {
    testutil::RandomTriple t;
    t.A = testutil::random_matrix(n, n, rng);
    t.B = testutil::random_matrix(n, mdist(rng), rng);
    t.C = testutil::random_matrix(mdist(rng), n, rng);
    if (!pbh_stabilizable(t.A, t.B)) continue;
    if (!pbh_detectable(t.C, t.A)) continue;
    RiccatiSolution sol;
    try {
      sol = solve_care(t.A, t.B * t.B.transpose(), t.C.transpose() * t.C);
    } catch (const Error&) {
      continue;
    }
    if (sol.P.norm() > 1e3 || sol.L.norm() > 1e3) continue;
    return t;
  }
}

MatrixXd symplectic_J(int n) {
  MatrixXd J = MatrixXd::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n) = MatrixXd::Identity(n, n);
  J.bottomLeftCorner(n, n) = -MatrixXd::Identity(n, n);
  return J;
}

void check_riccati_invariants(const MatrixXd& A, const MatrixXd& R,
                              const MatrixXd& Q, const RiccatiSolution& sol) {
  const int n = sol.n();
  CHECK((sol.P - sol.P.transpose()).norm() <= 1e-10 * (1.0 + sol.P.norm()));
  // P psd, L nsd
  Eigen::SelfAdjointEigenSolver<MatrixXd> pe(sol.P);
  CHECK(pe.eigenvalues().minCoeff() >= -1e-9 * (1.0 + sol.P.norm()));
  Eigen::SelfAdjointEigenSolver<MatrixXd> le(sol.L);
  CHECK(le.eigenvalues().maxCoeff() <= 1e-9 * (1.0 + sol.L.norm()));
  // residual and closed loop
  CHECK(care_residual(A, R, Q, sol.P) <= 1e-9 * (1.0 + sol.P.squaredNorm()));
  CHECK(sol.A_c.eigenvalues().real().maxCoeff() < 0.0);
  // L solves L A_c^T + A_c L = R
  CHECK((sol.L * sol.A_c.transpose() + sol.A_c * sol.L - R).norm() <=
        1e-10 * (1.0 + sol.L.norm()) + 1e-12);
  // symplectic identity and closed-form inverse
  const MatrixXd J = symplectic_J(n);
  CHECK((sol.T_sympl.transpose() * J * sol.T_sympl - J).norm() <= 1e-9);
  CHECK((sol.T_sympl * sol.T_inverse() - MatrixXd::Identity(2 * n, 2 * n)).norm() <= 1e-8);
}

} // namespace

TEST_CASE("care: scalar Q=0 with Hurwitz A forces P=0") {
  RiccatiSolution sol = solve_care(scalar(-1.0), scalar(0.0), scalar(0.0));
  CHECK(std::abs(sol.P(0, 0)) <= 1e-14);
  CHECK(sol.A_c(0, 0) == doctest::Approx(-1.0));
  check_riccati_invariants(scalar(-1.0), scalar(0.0), scalar(0.0), sol);
}

TEST_CASE("care: scalar closed form") {
  // 2aP - rP^2 + q = 0, stabilizing root P = (a + sqrt(a^2 + r q)) / r
  const double cases[][3] = {{0.0, 1.0, 1.0}, {1.0, 2.0, 3.0}, {-0.5, 0.3, 2.0}};
  for (auto& c : cases) {
    const double a = c[0], r = c[1], q = c[2];
    const double p_exact = (a + std::sqrt(a * a + r * q)) / r;
    RiccatiSolution sol = solve_care(scalar(a), scalar(r), scalar(q));
    CHECK(sol.P(0, 0) == doctest::Approx(p_exact).epsilon(1e-12));
    CHECK(sol.A_c(0, 0) == doctest::Approx(-std::sqrt(a * a + r * q)).epsilon(1e-12));
    check_riccati_invariants(scalar(a), scalar(r), scalar(q), sol);
  }
}

TEST_CASE("care: double integrator") {
  MatrixXd A(2, 2), B(2, 1), C(2, 2);
  A << 0, 1, 0, 0;
  B << 0, 1;
  C = MatrixXd::Identity(2, 2);
  const MatrixXd R = B * B.transpose();
  const MatrixXd Q = C.transpose() * C;
  RiccatiSolution sol = solve_care(A, R, Q);
  CHECK(care_residual(A, R, Q, sol.P) <= 1e-9);
  CHECK(sol.A_c.eigenvalues().real().maxCoeff() < 0.0);
  check_riccati_invariants(A, R, Q, sol);
}

TEST_CASE("care: diagnosis of infeasible data") {
  // A = 1 unstable with R = 0: not stabilizable
  CHECK_THROWS_AS(solve_care(scalar(1.0), scalar(0.0), scalar(1.0)), NotStabilizable);
  // A = 1 unstable, R = 1, Q = 0: stable mode of Ham sits on the axis? No:
  // Ham = [[1,-1],[0,-1]] is hyperbolic, so this succeeds; use a marginal A.
  CHECK_THROWS_AS(solve_care(scalar(0.0), scalar(0.0), scalar(0.0)), NotStabilizable);
}

TEST_CASE("care: undetectable marginal pair reports NotDetectable") {
  // A = 0 (marginal), R = 1 keeps (A,R) stabilizable; Q = 0 leaves the
  // Hamiltonian with a zero eigenvalue pair -> detectability diagnosis.
  MatrixXd A = scalar(0.0), R = scalar(1.0), Q = scalar(0.0);
  CHECK_THROWS_AS(solve_care(A, R, Q), NotDetectable);
}

TEST_CASE("lyapunov: scalar cases") {
  CHECK(solve_lyapunov(scalar(-1.0), scalar(2.0))(0, 0) == doctest::Approx(-1.0));
  // closed form X = r / (2 a_c)
  for (double ac : {-0.5, -2.0, -7.5}) {
    for (double r : {1.0, 0.25}) {
      CHECK(solve_lyapunov(scalar(ac), scalar(r))(0, 0) ==
            doctest::Approx(r / (2.0 * ac)).epsilon(1e-12));
    }
  }
  MatrixXd M = MatrixXd::Zero(2, 2);
  M(0, 0) = -1.0;
  M(1, 1) = -2.0;
  CHECK(solve_lyapunov(M, MatrixXd::Zero(2, 2)).norm() == 0.0);
}

TEST_CASE("lyapunov: rejects non-Hurwitz coefficient") {
  CHECK_THROWS_AS(solve_lyapunov(scalar(0.0), scalar(1.0)), NotHurwitz);
  CHECK_THROWS_AS(solve_lyapunov(scalar(0.5), scalar(1.0)), NotHurwitz);
}

TEST_CASE("lyapunov: residual property on random Hurwitz systems") {
  std::mt19937_64 rng(42);
  for (int k = 0; k < 20; ++k) {
    const int n = 1 + static_cast<int>(rng() % 5);
    MatrixXd M = testutil::random_matrix(n, n, rng);
    M -= (M.eigenvalues().real().maxCoeff() + 0.5) * MatrixXd::Identity(n, n);
    MatrixXd W = testutil::random_matrix(n, n, rng);
    W = MatrixXd(0.5 * (W + W.transpose().eval()));
    const MatrixXd X = solve_lyapunov(M, W);
    CHECK((X * M.transpose() + M * X - W).norm() <= 1e-10 * (1.0 + X.norm()));
    CHECK((X - X.transpose()).norm() <= 1e-10 * (1.0 + X.norm()));
  }
}

TEST_CASE("block_diagonalize: trivial and scalar cases") {
  {
    auto [T, Ac] = block_diagonalize(scalar(-1.0), scalar(0.0), scalar(0.0));
    CHECK((T - MatrixXd::Identity(2, 2)).norm() <= 1e-12);
    CHECK(Ac(0, 0) == doctest::Approx(-1.0));
  }
  {
    // a=0, r=1, q=1 -> P=1, A_c=-1, L=-1/2
    RiccatiSolution sol = solve_care(scalar(0.0), scalar(1.0), scalar(1.0));
    CHECK(sol.P(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.A_c(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(sol.L(0, 0) == doctest::Approx(-0.5).epsilon(1e-12));
    const MatrixXd Ham = hamiltonian_matrix(scalar(0.0), scalar(1.0), scalar(1.0));
    MatrixXd D = MatrixXd::Zero(2, 2);
    D(0, 0) = sol.A_c(0, 0);
    D(1, 1) = -sol.A_c(0, 0);
    CHECK((Ham * sol.T_sympl - sol.T_sympl * D).norm() <= 1e-10);
  }
}

TEST_CASE("block_diagonalize: residual property on a seeded n=4 triple") {
  std::mt19937_64 rng(7);
  auto t = random_stab_det_triple(4, rng);
  const MatrixXd R = t.B * t.B.transpose();
  const MatrixXd Q = t.C.transpose() * t.C;
  auto [T, Ac] = block_diagonalize(t.A, R, Q);
  const MatrixXd Ham = hamiltonian_matrix(t.A, R, Q);
  MatrixXd D = MatrixXd::Zero(8, 8);
  D.topLeftCorner(4, 4) = Ac;
  D.bottomRightCorner(4, 4) = -Ac.transpose();
  CHECK((Ham * T - T * D).norm() <= 1e-8 * (1.0 + Ham.norm()));
}

TEST_CASE("pbh tests: canonical examples") {
  MatrixXd A(2, 2), B(2, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  CHECK(pbh_stabilizable(A, B));
  CHECK(pbh_detectable(B.transpose(), A.transpose()));

  CHECK_FALSE(pbh_stabilizable(scalar(1.0), scalar(0.0)));

  MatrixXd A2 = MatrixXd::Zero(2, 2);
  A2(0, 0) = -1.0;
  A2(1, 1) = 2.0;
  CHECK_FALSE(pbh_stabilizable(A2, MatrixXd::Zero(2, 1)));
  // the unstable mode is the unreachable one; stable-only deficiency is fine
  MatrixXd B2(2, 1);
  B2 << 0, 1;
  CHECK(pbh_stabilizable(A2, B2));
}

TEST_CASE("pbh: invariance under state-space similarity") {
  std::mt19937_64 rng(99);
  for (int k = 0; k < 20; ++k) {
    const int n = 2 + static_cast<int>(rng() % 4);
    const int m = 1 + static_cast<int>(rng() % 2);
    MatrixXd A = testutil::random_matrix(n, n, rng);
    MatrixXd B = testutil::random_matrix(n, m, rng);
    if (k % 3 == 0) B.setZero(); // mix in uncontrollable cases
    // well-conditioned similarity: orthogonal times mild diagonal
    Eigen::HouseholderQR<MatrixXd> qr(testutil::random_matrix(n, n, rng));
    MatrixXd Qo = qr.householderQ();
    VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = 0.5 + (i % 3) * 0.75;
    MatrixXd T = Qo * d.asDiagonal();
    const MatrixXd Ti = T.inverse();
    CHECK(pbh_stabilizable(A, B) == pbh_stabilizable(T * A * Ti, T * B));
  }
}

TEST_CASE("check_pl_plus_i") {
  {
    // P = 0 (Q=0 case): PL + I = I
    RiccatiSolution sol = solve_care(scalar(-1.0), scalar(1.0), scalar(0.0));
    CHECK(sol.P.norm() <= 1e-12);
    auto chk = check_pl_plus_i(sol.P, sol.L);
    CHECK(chk.nonsingular);
    CHECK(chk.min_sv == doctest::Approx(1.0));
  }
  {
    RiccatiSolution sol = solve_care(scalar(0.0), scalar(1.0), scalar(1.0));
    auto chk = check_pl_plus_i(sol.P, sol.L);
    CHECK(chk.nonsingular);
    CHECK(chk.min_sv == doctest::Approx(0.5).epsilon(1e-10));
  }
}

TEST_CASE("L is negative definite for controllable (A, R)") {
  std::mt19937_64 rng(1234);
  for (int k = 0; k < 10; ++k) {
    const int n = 1 + static_cast<int>(rng() % 4);
    MatrixXd A = testutil::random_matrix(n, n, rng);
    MatrixXd B = testutil::random_matrix(n, n, rng); // square B: controllable a.s.
    MatrixXd C = testutil::random_matrix(n, n, rng);
    const MatrixXd R = B * B.transpose();
    const MatrixXd Q = C.transpose() * C;
    RiccatiSolution sol;
    try {
      sol = solve_care(A, R, Q);
    } catch (const Error&) {
      continue;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> le(sol.L);
    CHECK(le.eigenvalues().maxCoeff() < -1e-12 * sol.L.norm());
  }
}

TEST_CASE("phi11: determinant at t=0 is one") {
  auto dets = phi11_nonsingular(scalar(0.0), scalar(1.0), scalar(1.0), {0.0});
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].det == doctest::Approx(1.0));
  CHECK(dets[0].nonsingular);
}

TEST_CASE("phi11: scalar a=0, r=1, q=1 gives cosh(t)") {
  // exp(t Ham) for Ham = [[0,-1],[-1,0]] has (1,1) entry cosh(t)
  auto dets = phi11_nonsingular(scalar(0.0), scalar(1.0), scalar(1.0), {1.0, 2.5});
  CHECK(dets[0].det == doctest::Approx(std::cosh(1.0)).epsilon(1e-10));
  CHECK(dets[1].det == doctest::Approx(std::cosh(2.5)).epsilon(1e-10));
}

TEST_CASE("phi11: agrees with the eigendecomposition oracle on n<=4") {
  std::mt19937_64 rng(5150);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    auto t = random_stab_det_triple(n, rng);
    // keep the exponents mild so neither determinant path loses digits
    t.A *= 0.4;
    t.B *= 0.5;
    t.C *= 0.5;
    if (!pbh_stabilizable(t.A, t.B) || !pbh_detectable(t.C, t.A)) continue;
    const MatrixXd R = t.B * t.B.transpose();
    const MatrixXd Q = t.C.transpose() * t.C;
    const MatrixXd Ham = hamiltonian_matrix(t.A, R, Q);
    const std::vector<double> grid = {0.1, 0.5, 1.0, 2.0};
    auto dets = phi11_nonsingular(t.A, R, Q, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const MatrixXd Phi = testutil::expm_eig(Ham, grid[i]);
      const double oracle = Phi.topLeftCorner(n, n).determinant();
      CHECK(dets[i].det == doctest::Approx(oracle).epsilon(1e-6));
    }
  }
}

TEST_CASE("phi11: random n=3 instance nonzero on {0.1, 1, 10}") {
  std::mt19937_64 rng(31337);
  auto t = random_stab_det_triple(3, rng);
  auto dets = phi11_nonsingular(t.A, t.B * t.B.transpose(),
                                t.C.transpose() * t.C, {0.1, 1.0, 10.0});
  for (const auto& d : dets) {
    CHECK(d.nonsingular);
    CHECK(std::abs(d.det_scaled) > 1e-12);
  }
}

TEST_CASE("riccati invariants hold across seeded random triples") {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 25; ++k) {
    const int n = 1 + static_cast<int>(rng() % 6);
    auto t = random_stab_det_triple(n, rng);
    const MatrixXd R = t.B * t.B.transpose();
    const MatrixXd Q = t.C.transpose() * t.C;
    RiccatiSolution sol = solve_care(t.A, R, Q);
    check_riccati_invariants(t.A, R, Q, sol);
    CHECK(check_pl_plus_i(sol.P, sol.L).nonsingular);
  }
}
