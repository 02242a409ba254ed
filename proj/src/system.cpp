#include "ringctl/system.hpp"

#include <stdexcept>

namespace ringctl {

SystemMatrices build_system(const OvmParams& p, GuidanceKind g) {
  p.validate();
  SystemMatrices sys;
  sys.params = p;
  sys.eq = equilibrium(p);
  sys.guidance = g;
  const int n = p.n;
  const int dim = 2 * n;
  const Equilibrium& eq = sys.eq;

  Eigen::Matrix2d D1, D2, C1, C2;
  D1 << 0.0, -1.0, eq.a1, -eq.a2;
  D2 << 0.0, 1.0, 0.0, eq.a3;

  Eigen::Vector2d B1;
  if (g == GuidanceKind::PiecewiseAcceleration) {
    C1 << 0.0, -1.0, 0.0, 0.0;
    C2 << 0.0, 1.0, 0.0, 0.0;
    B1 << 0.0, 1.0;
  } else {
    // Velocity guidance: the a1 tracking term moves from the plant into the
    // control channel, the OVM damping stays on the guided vehicle's row.
    C1 << 0.0, -1.0, 0.0, -eq.a2;
    C2 << 0.0, 1.0, 0.0, eq.a3;
    B1 << 0.0, p.alpha;
  }

  sys.A = Eigen::MatrixXd::Zero(dim, dim);
  // Guided vehicle row-block: own dynamics C1, ring closure C2 to vehicle n.
  sys.A.block<2, 2>(0, 0) = C1;
  sys.A.block<2, 2>(0, 2 * (n - 1)) = C2;
  // Followers i=2..n: own dynamics D1, coupling D2 to predecessor i-1.
  for (int i = 1; i < n; ++i) {
    sys.A.block<2, 2>(2 * i, 2 * i) = D1;
    sys.A.block<2, 2>(2 * i, 2 * (i - 1)) = D2;
  }

  sys.B = Eigen::MatrixXd::Zero(dim, 1);
  sys.B.block<2, 1>(0, 0) = B1;

  sys.B_d = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < n; ++i) sys.B_d(2 * i + 1, 2 * i + 1) = 1.0;

  return sys;
}

Eigen::MatrixXd closed_loop(const SystemMatrices& sys, const Controller& c) {
  if (c.K.size() != sys.dim())
    throw std::invalid_argument("closed_loop: gain dimension mismatch");
  return sys.A - sys.B * (c.k_mult * c.K);
}

Eigen::MatrixXd reduction_delete(int n) {
  const int dim = 2 * n;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(dim - 1, dim);
  for (int i = 0; i < dim - 1; ++i) D(i, i + 1) = 1.0;
  return D;
}

Eigen::MatrixXd reduction_embed(int n) {
  const int dim = 2 * n;
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(dim, dim - 1);
  // Row 0 reconstructs s1~ from the retained spacings s2~..sn~, which sit at
  // reduced indices 1, 3, ..., 2n-3.
  for (int i = 1; i < n; ++i) E(0, 2 * i - 1) = -1.0;
  for (int i = 0; i < dim - 1; ++i) E(i + 1, i) = 1.0;
  return E;
}

ReducedSystem reduce(const SystemMatrices& sys, const Controller& c) {
  if (c.K.size() != sys.dim())
    throw std::invalid_argument("reduce: gain dimension mismatch");
  const int n = sys.n();
  const Eigen::MatrixXd D = reduction_delete(n);
  const Eigen::MatrixXd E = reduction_embed(n);
  ReducedSystem red;
  red.A_red = D * sys.A * E;
  red.B_red = D * sys.B;
  red.K_red = c.effective_gain() * E;
  red.A1_red = -red.B_red * red.K_red;
  return red;
}

Eigen::MatrixXd reduce_disturbance_input(const SystemMatrices& sys) {
  const int n = sys.n();
  const Eigen::MatrixXd D = reduction_delete(n);
  // Select the n acceleration columns of B_d (columns 1, 3, ..., 2n-1).
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2 * n, n);
  for (int i = 0; i < n; ++i) S(2 * i + 1, i) = 1.0;
  return D * sys.B_d * S;
}

Eigen::RowVectorXd lift_gain(const Eigen::RowVectorXd& K_red, int n) {
  if (K_red.size() != 2 * n - 1)
    throw std::invalid_argument("lift_gain: dimension mismatch");
  Eigen::RowVectorXd K = Eigen::RowVectorXd::Zero(2 * n);
  K.tail(2 * n - 1) = K_red;
  return K;
}

}  // namespace ringctl
