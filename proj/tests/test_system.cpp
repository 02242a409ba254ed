#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <vector>

#include "ringctl/ovm.hpp"
#include "ringctl/rng.hpp"
#include "ringctl/system.hpp"

using namespace ringctl;

namespace {
const OvmParams kDefaults{};

Controller zero_controller(int n) {
  Controller c;
  c.K = Eigen::RowVectorXd::Zero(2 * n);
  return c;
}

// Nonlinear OVM acceleration of a follower, used to cross-check the
// linearization blocks by finite differences.
double ovm_accel(double s, double v, double v_prev, const OvmParams& p) {
  return p.alpha * (optimal_velocity(s, p) - v) + p.beta * (v_prev - v);
}
}  // namespace

TEST_CASE("acceleration-guidance blocks at defaults") {
  const SystemMatrices sys = build_system(kDefaults, GuidanceKind::PiecewiseAcceleration);
  const double a1 = 0.6 * M_PI / 2.0;

  // D1 in follower rows, D2 coupling to predecessor.
  CHECK(sys.A(2, 2) == 0.0);
  CHECK(sys.A(2, 3) == -1.0);
  CHECK(sys.A(3, 2) == doctest::Approx(a1).epsilon(1e-12));
  CHECK(sys.A(3, 3) == doctest::Approx(-1.5));
  CHECK(sys.A(2, 0) == 0.0);
  CHECK(sys.A(2, 1) == 1.0);
  CHECK(sys.A(3, 1) == doctest::Approx(0.9));

  // Guided-vehicle row: C1 on the diagonal, C2 closing the ring.
  CHECK(sys.A(0, 1) == -1.0);
  CHECK(sys.A(1, 1) == 0.0);
  CHECK(sys.A(0, 2 * 19 + 1) == 1.0);
  CHECK(sys.A(1, 2 * 19 + 1) == 0.0);

  CHECK(sys.B(1, 0) == 1.0);
  CHECK(sys.B.col(0).sum() == 1.0);

  // Finite-difference linearization of the nonlinear follower dynamics.
  const Equilibrium eq = sys.eq;
  const double h = 1e-6;
  const double dds = (ovm_accel(eq.s_star + h, eq.v_star, eq.v_star, kDefaults) -
                      ovm_accel(eq.s_star - h, eq.v_star, eq.v_star, kDefaults)) /
                     (2 * h);
  const double ddv = (ovm_accel(eq.s_star, eq.v_star + h, eq.v_star, kDefaults) -
                      ovm_accel(eq.s_star, eq.v_star - h, eq.v_star, kDefaults)) /
                     (2 * h);
  const double ddvp = (ovm_accel(eq.s_star, eq.v_star, eq.v_star + h, kDefaults) -
                       ovm_accel(eq.s_star, eq.v_star, eq.v_star - h, kDefaults)) /
                      (2 * h);
  CHECK(sys.A(3, 2) == doctest::Approx(dds).epsilon(1e-6));
  CHECK(sys.A(3, 3) == doctest::Approx(ddv).epsilon(1e-9));
  CHECK(sys.A(3, 1) == doctest::Approx(ddvp).epsilon(1e-9));
}

TEST_CASE("velocity-guidance blocks at defaults") {
  const SystemMatrices sys = build_system(kDefaults, GuidanceKind::PiecewiseVelocity);
  CHECK(sys.A(0, 1) == -1.0);
  CHECK(sys.A(1, 1) == doctest::Approx(-1.5));
  CHECK(sys.A(1, 2 * 19 + 1) == doctest::Approx(0.9));
  CHECK(sys.B(1, 0) == doctest::Approx(0.6));
}

TEST_CASE("block pattern is exactly the ring template") {
  OvmParams p = kDefaults;
  p.n = 5;
  const SystemMatrices sys = build_system(p, GuidanceKind::PiecewiseAcceleration);
  for (int bi = 0; bi < 5; ++bi)
    for (int bj = 0; bj < 5; ++bj) {
      const bool diag = bi == bj;
      const bool sub = bj == bi - 1;
      const bool corner = bi == 0 && bj == 4;
      if (!diag && !sub && !corner)
        CHECK(sys.A.block<2, 2>(2 * bi, 2 * bj).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("smallest ring n=2") {
  OvmParams p = kDefaults;
  p.n = 2;  // equilibrium spacing 200 m sits in the flat region, so a1 = 0
  const SystemMatrices sys = build_system(p, GuidanceKind::PiecewiseAcceleration);
  CHECK(sys.A.rows() == 4);
  CHECK(sys.A(0, 3) == 1.0);   // C2 in the top-right block
  CHECK(sys.A(2, 1) == 1.0);   // D2 below the diagonal
  CHECK(sys.A(3, 2) == 0.0);
  CHECK(sys.A(3, 3) == doctest::Approx(-1.5));
  CHECK(sys.A(3, 1) == doctest::Approx(0.9));
}

TEST_CASE("spacing rows of A sum to zero") {
  for (GuidanceKind g :
       {GuidanceKind::PiecewiseAcceleration, GuidanceKind::PiecewiseVelocity}) {
    const SystemMatrices sys = build_system(kDefaults, g);
    for (int i = 0; i < sys.n(); ++i)
      CHECK(std::abs(sys.A.row(2 * i).sum()) == 0.0);
  }
}

TEST_CASE("B_d is the acceleration-channel selector") {
  const SystemMatrices sys = build_system(kDefaults, GuidanceKind::PiecewiseAcceleration);
  for (int i = 0; i < sys.dim(); ++i) {
    CHECK(sys.B_d(i, i) == (i % 2 == 1 ? 1.0 : 0.0));
  }
  CHECK(sys.B_d.sum() == sys.n());
}

TEST_CASE("closed_loop identities") {
  const SystemMatrices sys = build_system(kDefaults, GuidanceKind::PiecewiseAcceleration);
  Controller c = zero_controller(20);
  CHECK((closed_loop(sys, c) - sys.A).norm() == 0.0);

  Rng rng(42);
  Controller c2;
  c2.K = Eigen::RowVectorXd(40);
  for (int i = 0; i < 40; ++i) c2.K(i) = rng.next_uniform(-1, 1);
  c2.k_mult = 0.0;
  CHECK((closed_loop(sys, c2) - sys.A).norm() == 0.0);

  c2.k_mult = 2.0;
  const Eigen::MatrixXd acl = closed_loop(sys, c2);
  CHECK((acl - (sys.A - sys.B * (2.0 * c2.K))).norm() == 0.0);

  Controller bad;
  bad.K = Eigen::RowVectorXd::Zero(10);
  CHECK_THROWS_AS(closed_loop(sys, bad), std::invalid_argument);
}

TEST_CASE("reduction dimensions and embedding equality") {
  const SystemMatrices sys = build_system(kDefaults, GuidanceKind::PiecewiseAcceleration);
  Rng rng(7);
  Controller c;
  c.K = Eigen::RowVectorXd(40);
  for (int i = 0; i < 40; ++i) c.K(i) = rng.next_uniform(-2, 2);
  const ReducedSystem red = reduce(sys, c);
  CHECK(red.A_red.rows() == 39);
  CHECK(red.A_red.cols() == 39);
  CHECK(red.B_red.rows() == 39);

  const Eigen::MatrixXd D = reduction_delete(20);
  const Eigen::MatrixXd E = reduction_embed(20);
  CHECK((D * E - Eigen::MatrixXd::Identity(39, 39)).norm() == 0.0);

  // On the constraint manifold the reduced dynamics reproduce the projection
  // of the full dynamics.
  const Eigen::MatrixXd Acl_full = closed_loop(sys, c);
  const Eigen::MatrixXd Acl_red = red.A_red + red.A1_red;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x(40);
    for (int i = 0; i < 40; ++i) x(i) = rng.next_uniform(-5, 5);
    // Enforce sum of spacing errors = 0 by fixing s1~.
    double s_rest = 0.0;
    for (int i = 1; i < 20; ++i) s_rest += x(2 * i);
    x(0) = -s_rest;
    const Eigen::VectorXd full_deriv = D * (Acl_full * x);
    const Eigen::VectorXd red_deriv = Acl_red * (D * x);
    CHECK((full_deriv - red_deriv).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("reduction drops exactly one zero mode when K = 0") {
  const SystemMatrices sys = build_system(kDefaults, GuidanceKind::PiecewiseAcceleration);
  const ReducedSystem red = reduce(sys, zero_controller(20));

  Eigen::EigenSolver<Eigen::MatrixXd> es_full(sys.A, false);
  Eigen::EigenSolver<Eigen::MatrixXd> es_red(red.A_red, false);
  std::vector<std::complex<double>> full(es_full.eigenvalues().data(),
                                         es_full.eigenvalues().data() + 40);
  std::vector<std::complex<double>> redv(es_red.eigenvalues().data(),
                                         es_red.eigenvalues().data() + 39);

  // Remove the zero eigenvalue from the full spectrum, then match sets.
  auto closest_to_zero = std::min_element(
      full.begin(), full.end(),
      [](auto a, auto b) { return std::abs(a) < std::abs(b); });
  CHECK(std::abs(*closest_to_zero) < 1e-10);
  full.erase(closest_to_zero);

  double worst = 0.0;
  for (const auto& mu : redv) {
    double best = 1e300;
    for (const auto& lam : full) best = std::min(best, std::abs(mu - lam));
    worst = std::max(worst, best);
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("gain lifting agrees with the reduced gain on the manifold") {
  const SystemMatrices sys = build_system(kDefaults, GuidanceKind::PiecewiseAcceleration);
  Rng rng(99);
  Eigen::RowVectorXd K_red(39);
  for (int i = 0; i < 39; ++i) K_red(i) = rng.next_uniform(-1, 1);
  const Eigen::RowVectorXd K = lift_gain(K_red, 20);
  CHECK(K(0) == 0.0);

  const Eigen::MatrixXd D = reduction_delete(20);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(40);
    for (int i = 0; i < 40; ++i) x(i) = rng.next_uniform(-5, 5);
    double s_rest = 0.0;
    for (int i = 1; i < 20; ++i) s_rest += x(2 * i);
    x(0) = -s_rest;
    CHECK(K * x == doctest::Approx((K_red * (D * x))(0)).epsilon(1e-12));
  }
}

TEST_CASE("reduced disturbance input selects velocity coordinates") {
  const SystemMatrices sys = build_system(kDefaults, GuidanceKind::PiecewiseAcceleration);
  const Eigen::MatrixXd Bd_red = reduce_disturbance_input(sys);
  CHECK(Bd_red.rows() == 39);
  CHECK(Bd_red.cols() == 20);
  // Vehicle 1's velocity is reduced coordinate 0; vehicle i>1's velocity sits
  // at reduced index 2i-2.
  CHECK(Bd_red(0, 0) == 1.0);
  CHECK(Bd_red(2, 1) == 1.0);
  CHECK(Bd_red.sum() == 20.0);
}
