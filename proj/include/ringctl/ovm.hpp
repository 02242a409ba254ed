#ifndef RINGCTL_OVM_HPP
#define RINGCTL_OVM_HPP

#include <stdexcept>
#include <string>

namespace ringctl {

// Physical and driver parameters of the ring-road Optimal Velocity Model.
// Defaults are the standard operating point used throughout the experiments.
struct OvmParams {
  double L = 400.0;     // ring circumference [m]
  int n = 20;           // vehicle count
  double s_st = 5.0;    // lower spacing threshold [m], V(s)=0 below
  double s_go = 35.0;   // upper spacing threshold [m], V(s)=v_max above
  double v_max = 30.0;  // maximum optimal velocity [m/s]
  double alpha = 0.6;   // sensitivity to optimal-velocity gap [1/s]
  double beta = 0.9;    // sensitivity to relative velocity [1/s]

  void validate() const {
    if (!(L > 0)) throw std::invalid_argument("OvmParams: L must be > 0");
    if (n < 2) throw std::invalid_argument("OvmParams: n must be >= 2");
    if (!(s_st > 0 && s_st < s_go))
      throw std::invalid_argument("OvmParams: need 0 < s_st < s_go");
    if (!(v_max > 0)) throw std::invalid_argument("OvmParams: v_max must be > 0");
    if (!(alpha > 0)) throw std::invalid_argument("OvmParams: alpha must be > 0");
    if (!(beta > 0)) throw std::invalid_argument("OvmParams: beta must be > 0");
  }
};

// Uniform-flow equilibrium and the linearization coefficients around it:
// a1 = alpha * V'(s*), a2 = alpha + beta, a3 = beta.
struct Equilibrium {
  double s_star;  // equilibrium spacing L/n [m]
  double v_star;  // equilibrium velocity V(s*) [m/s]
  double a1;      // [1/s^2]
  double a2;      // [1/s]
  double a3;      // [1/s]
};

// Spacing-dependent optimal velocity V(s): 0 below s_st, v_max above s_go,
// raised-cosine ramp in between. Total, continuous, nondecreasing.
double optimal_velocity(double s, const OvmParams& p);

// dV/ds. Zero outside (s_st, s_go); the clamp boundaries return 0, which
// coincides with the one-sided flat limit and keeps the function continuous.
double optimal_velocity_slope(double s, const OvmParams& p);

Equilibrium equilibrium(const OvmParams& p);

// Left-hand side of the uncontrolled OVM stability criterion
// alpha + 2*beta - 2*V'(L/n). Nonnegative means the uncontrolled platoon is
// stable; more negative means more unstable.
double string_stability_margin(const OvmParams& p);

}  // namespace ringctl

#endif  // RINGCTL_OVM_HPP
