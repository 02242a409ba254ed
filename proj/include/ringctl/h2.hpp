#ifndef RINGCTL_H2_HPP
#define RINGCTL_H2_HPP

#include <Eigen/Dense>

#include "ringctl/lmi.hpp"
#include "ringctl/system.hpp"

namespace ringctl {

struct H2Weights {
  double gamma_s = 0.03;  // weight on spacing errors
  double gamma_v = 0.15;  // weight on velocity errors
  double gamma_u = 1.0;   // weight on control effort

  void validate() const;
};

struct H2Solution {
  Eigen::MatrixXd X;       // reduced Lyapunov-type variable, SPD
  double Y = 0.0;          // scalar effort bound
  Eigen::RowVectorXd Z;    // reduced synthesis row, K_red = Z X^{-1}
  Controller K;            // lifted to the full state, A1 = -B K convention
  double objective_value = 0.0;
  sdp::SolveStatus solver_status = sdp::SolveStatus::NumericalFailure;
  bool ok = false;
  std::string note;
};

// State-feedback design minimizing Trace(Q X) + Trace(R Y) subject to the
// closed-loop Gramian inequality on the reduced system (the full ring has an
// uncontrollable zero mode that makes the constraint infeasible).
H2Solution h2_controller(const SystemMatrices& sys, const H2Weights& w = {},
                         const LmiOptions& opt = {});

// New controller with the effective gain scaled by k_mult (gains unchanged,
// multiplier composed).
Controller scale_controller(const Controller& c, double k_mult);

}  // namespace ringctl

#endif  // RINGCTL_H2_HPP
