#ifndef RINGCTL_SYSTEM_HPP
#define RINGCTL_SYSTEM_HPP

#include <Eigen/Dense>

#include "ringctl/ovm.hpp"

namespace ringctl {

// Which quantity the guided vehicle holds constant between control updates.
enum class GuidanceKind { PiecewiseAcceleration, PiecewiseVelocity };

// Linearized error dynamics of the ring with one guided vehicle:
//   xdot(t) = A x(t) + A1 x(t_k),  A1 = -B * (k_mult * K).
// State layout is [s1~, v1~, s2~, v2~, ..., sn~, vn~] with the guided vehicle
// at index 1 and its predecessor the ring-closing vehicle n.
struct SystemMatrices {
  Eigen::MatrixXd A;    // 2n x 2n
  Eigen::MatrixXd B;    // 2n x 1
  Eigen::MatrixXd B_d;  // 2n x 2n, diag(0,1,0,1,...): disturbance on accelerations
  GuidanceKind guidance = GuidanceKind::PiecewiseAcceleration;
  OvmParams params;
  Equilibrium eq;

  int n() const { return params.n; }
  int dim() const { return 2 * params.n; }
};

enum class ControllerProvenance { H2, LkSynthesized, Manual };

// Full-state feedback gain. Sign convention: the closed-loop injection is
// A1 = -B * (k_mult * K), i.e. the guided vehicle applies acceleration
// u = -(k_mult * K) x(t_k). H2 and LK syntheses both store K in this
// convention so that A - B K is the stabilized continuous loop.
struct Controller {
  Eigen::RowVectorXd K;  // 1 x 2n
  double k_mult = 1.0;
  ControllerProvenance provenance = ControllerProvenance::Manual;

  Eigen::RowVectorXd effective_gain() const { return k_mult * K; }
};

// Reduced representation after eliminating the redundant headway coordinate
// s1~ via the ring constraint sum_i si~ = 0.
struct ReducedSystem {
  Eigen::MatrixXd A_red;     // (2n-1) x (2n-1)
  Eigen::MatrixXd B_red;     // (2n-1) x 1
  Eigen::RowVectorXd K_red;  // 1 x (2n-1), already scaled by k_mult
  Eigen::MatrixXd A1_red;    // -B_red * K_red

  int dim() const { return static_cast<int>(A_red.rows()); }
};

SystemMatrices build_system(const OvmParams& p, GuidanceKind g);

// A - B * (k_mult * K). Throws on dimension mismatch.
Eigen::MatrixXd closed_loop(const SystemMatrices& sys, const Controller& c);

ReducedSystem reduce(const SystemMatrices& sys, const Controller& c);

// Deletion operator D: full (2n) -> reduced (2n-1), drops coordinate s1~.
Eigen::MatrixXd reduction_delete(int n);

// Embedding operator E: reduced (2n-1) -> full (2n), reconstructing
// s1~ = -(s2~ + ... + sn~). D*E = I; E*D is the identity on the constraint
// manifold sum si~ = 0.
Eigen::MatrixXd reduction_embed(int n);

// Reduced disturbance input matrix: maps the n per-vehicle acceleration
// disturbances into the reduced state (zero spacing columns of B_d dropped).
Eigen::MatrixXd reduce_disturbance_input(const SystemMatrices& sys);

// Lift a reduced gain row back to the full state: the s1~ entry is set to 0,
// which agrees with K_red on the constraint manifold.
Eigen::RowVectorXd lift_gain(const Eigen::RowVectorXd& K_red, int n);

}  // namespace ringctl

#endif  // RINGCTL_SYSTEM_HPP
