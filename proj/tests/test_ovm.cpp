#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ringctl/ovm.hpp"

using namespace ringctl;

namespace {
const OvmParams kDefaults{};

double central_diff_velocity(double s, const OvmParams& p, double h = 1e-6) {
  return (optimal_velocity(s + h, p) - optimal_velocity(s - h, p)) / (2.0 * h);
}
}  // namespace

TEST_CASE("optimal velocity clamps and midpoint value") {
  CHECK(optimal_velocity(5.0, kDefaults) == 0.0);
  CHECK(optimal_velocity(35.0, kDefaults) == 30.0);
  CHECK(optimal_velocity(20.0, kDefaults) == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(optimal_velocity(2.0, kDefaults) == 0.0);
  CHECK(optimal_velocity(100.0, kDefaults) == 30.0);
}

TEST_CASE("optimal velocity is monotone, continuous, bounded on a grid") {
  double prev = -1.0;
  const int grid = 10000;
  for (int i = 0; i <= grid; ++i) {
    const double s = 0.0 + 45.0 * i / grid;
    const double v = optimal_velocity(s, kDefaults);
    CHECK(v >= 0.0);
    CHECK(v <= kDefaults.v_max);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
  // Continuity at the clamp boundaries.
  CHECK(optimal_velocity(5.0 + 1e-9, kDefaults) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(optimal_velocity(35.0 - 1e-9, kDefaults) == doctest::Approx(30.0).epsilon(1e-6));
}

TEST_CASE("slope matches the closed form and finite differences") {
  CHECK(optimal_velocity_slope(20.0, kDefaults) ==
        doctest::Approx(M_PI / 2.0).epsilon(1e-12));
  CHECK(optimal_velocity_slope(4.0, kDefaults) == 0.0);
  CHECK(optimal_velocity_slope(5.0, kDefaults) == 0.0);
  CHECK(optimal_velocity_slope(35.0, kDefaults) == 0.0);

  OvmParams fast = kDefaults;
  fast.v_max = 60.0;
  CHECK(optimal_velocity_slope(20.0, fast) == doctest::Approx(M_PI).epsilon(1e-12));

  // 1e3 interior points against central differences.
  for (int i = 1; i < 1000; ++i) {
    const double s = 5.0 + 30.0 * i / 1000.0;
    CHECK(optimal_velocity_slope(s, kDefaults) ==
          doctest::Approx(central_diff_velocity(s, kDefaults)).epsilon(1e-6));
  }
}

TEST_CASE("equilibrium at defaults and in the clamp regions") {
  const Equilibrium eq = equilibrium(kDefaults);
  CHECK(eq.s_star == doctest::Approx(20.0));
  CHECK(eq.v_star == doctest::Approx(15.0));
  CHECK(eq.a1 == doctest::Approx(0.6 * M_PI / 2.0).epsilon(1e-12));
  CHECK(eq.a1 == doctest::Approx(0.6 * central_diff_velocity(20.0, kDefaults)).epsilon(1e-6));
  CHECK(eq.a2 == doctest::Approx(1.5));
  CHECK(eq.a3 == doctest::Approx(0.9));
  CHECK(eq.a2 > eq.a3);
  CHECK(eq.a3 > 0.0);

  OvmParams tight = kDefaults;
  tight.L = 100.0;
  const Equilibrium eq_lo = equilibrium(tight);
  CHECK(eq_lo.s_star == doctest::Approx(5.0));
  CHECK(eq_lo.v_star == 0.0);
  CHECK(eq_lo.a1 == 0.0);

  OvmParams wide = kDefaults;
  wide.L = 700.0;
  const Equilibrium eq_hi = equilibrium(wide);
  CHECK(eq_hi.v_star == 30.0);
  CHECK(eq_hi.a1 == 0.0);
}

TEST_CASE("string stability margin") {
  CHECK(string_stability_margin(kDefaults) ==
        doctest::Approx(2.4 - M_PI).epsilon(1e-12));
  CHECK(string_stability_margin(kDefaults) < 0.0);

  OvmParams stable = kDefaults;
  stable.beta = 2.0;
  CHECK(string_stability_margin(stable) == doctest::Approx(4.6 - M_PI).epsilon(1e-12));
  CHECK(string_stability_margin(stable) > 0.0);

  OvmParams flat = kDefaults;
  flat.L = 700.0;
  CHECK(string_stability_margin(flat) == doctest::Approx(2.4).epsilon(1e-12));
}

TEST_CASE("parameter validation rejects bad inputs") {
  OvmParams bad = kDefaults;
  bad.n = 1;
  CHECK_THROWS_AS(equilibrium(bad), std::invalid_argument);
  bad = kDefaults;
  bad.s_st = 40.0;
  CHECK_THROWS_AS(equilibrium(bad), std::invalid_argument);
  bad = kDefaults;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(equilibrium(bad), std::invalid_argument);
}
