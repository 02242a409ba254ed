#include "ringctl/h2.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "ringctl/lyapunov.hpp"

namespace ringctl {

void H2Weights::validate() const {
  if (!(gamma_s > 0.0 && gamma_v > 0.0 && gamma_u > 0.0))
    throw std::invalid_argument("H2Weights: all weights must be > 0");
}

H2Solution h2_controller(const SystemMatrices& sys, const H2Weights& w,
                         const LmiOptions& opt) {
  w.validate();
  Controller zero;
  zero.K = Eigen::RowVectorXd::Zero(sys.dim());
  const ReducedSystem red = reduce(sys, zero);
  const int d = red.dim();

  // Reduced coordinate j maps to full coordinate j+1: even j are velocities,
  // odd j are spacings.
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    const double g = (j % 2 == 0) ? w.gamma_v : w.gamma_s;
    Q(j, j) = g * g;
  }
  const Eigen::MatrixXd R = Eigen::MatrixXd::Constant(1, 1, w.gamma_u * w.gamma_u);

  LmiProblem lp;
  MatrixVar X = lp.add_sym_var(d);
  MatrixVar Y = lp.add_sym_var(1);
  MatrixVar Z = lp.add_var(1, d);
  const Factor I = Factor::I();
  const Factor FA = Factor::dense(red.A_red);
  const Factor FB = Factor::dense(red.B_red);

  // (A X - B Z) + (A X - B Z)^T + I <= 0
  BlockExpr& b1 = lp.add_block(d, BlockSense::NegDef, 0.0);
  b1.add_sym(0, 0, 1.0, FA, X, false, I);
  b1.add_sym(0, 0, -1.0, FB, Z, false, I);
  b1.add_const(0, 0, Eigen::MatrixXd::Identity(d, d));

  // [[Y, Z], [Z^T, X]] >= 0
  BlockExpr& b2 = lp.add_block(1 + d, BlockSense::PosDef, 0.0);
  b2.add_sym(0, 0, 0.5, I, Y, false, I);
  b2.add_sym(0, 1, 1.0, I, Z, false, I);
  b2.add_sym(1, 1, 0.5, I, X, false, I);

  // X strictly positive definite.
  BlockExpr& b3 = lp.add_block(d, BlockSense::PosDef, 1e-6);
  b3.add_sym(0, 0, 0.5, I, X, false, I);

  lp.objective_add_trace(Q, X);
  lp.objective_add_trace(R, Y);

  sdp::Options sopt = opt.sdp;
  sopt.feasibility_mode = false;
  const sdp::Result res = sdp::solve(lp.build(), sopt);

  H2Solution sol;
  sol.solver_status = res.status;
  sol.note = res.note;
  if (res.status != sdp::SolveStatus::Optimal) return sol;

  sol.X = lp.value(X, res.y);
  sol.Y = lp.value(Y, res.y)(0, 0);
  sol.Z = lp.value(Z, res.y).row(0);
  sol.objective_value = res.objective;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.X, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 1e-9) {
    sol.note = "X not positive definite";
    return sol;
  }

  const Eigen::RowVectorXd K_red =
      sol.X.ldlt().solve(sol.Z.transpose()).transpose();
  const int n = sys.n();
  sol.K.K = lift_gain(K_red, n);
  sol.K.k_mult = 1.0;
  sol.K.provenance = ControllerProvenance::H2;

  if (!is_hurwitz(red.A_red - red.B_red * K_red)) {
    sol.note = "closed loop not Hurwitz";
    return sol;
  }
  sol.ok = true;
  return sol;
}

Controller scale_controller(const Controller& c, double k_mult) {
  if (k_mult < 0.0) throw std::invalid_argument("scale_controller: k_mult must be >= 0");
  Controller out = c;
  out.k_mult = c.k_mult * k_mult;
  return out;
}

}  // namespace ringctl
