#include "ringctl/ovm.hpp"

#include <cmath>

namespace ringctl {

double optimal_velocity(double s, const OvmParams& p) {
  if (s <= p.s_st) return 0.0;
  if (s >= p.s_go) return p.v_max;
  const double phase = M_PI * (s - p.s_st) / (p.s_go - p.s_st);
  return 0.5 * p.v_max * (1.0 - std::cos(phase));
}

double optimal_velocity_slope(double s, const OvmParams& p) {
  if (s <= p.s_st || s >= p.s_go) return 0.0;
  const double w = M_PI / (p.s_go - p.s_st);
  return 0.5 * p.v_max * w * std::sin(w * (s - p.s_st));
}

Equilibrium equilibrium(const OvmParams& p) {
  p.validate();
  Equilibrium eq;
  eq.s_star = p.L / p.n;
  eq.v_star = optimal_velocity(eq.s_star, p);
  eq.a1 = p.alpha * optimal_velocity_slope(eq.s_star, p);
  eq.a2 = p.alpha + p.beta;
  eq.a3 = p.beta;
  return eq;
}

double string_stability_margin(const OvmParams& p) {
  p.validate();
  return p.alpha + 2.0 * p.beta - 2.0 * optimal_velocity_slope(p.L / p.n, p);
}

}  // namespace ringctl
