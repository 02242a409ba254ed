#ifndef RINGCTL_SIM_HPP
#define RINGCTL_SIM_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ringctl/system.hpp"

namespace ringctl {

struct SimConfig {
  double t_step = 0.01;        // forward-Euler step [s]
  double total_time = 300.0;   // horizon [s]
  int n_seeds = 50;            // trajectories per ensemble
  double perturb_s = 7.5;      // position perturbation half-width [m]
  double perturb_v = 4.5;      // velocity perturbation half-width [m/s]
  double a_min = -5.0;         // maximum deceleration [m/s^2]
  double s_d = 0.5;            // safe distance for emergency braking [m]
  double convergence_eps = 1.0;
  std::uint64_t rng_seed = 1;
  bool aeb_enabled = true;
  double bernoulli_p = 0.5;
  bool redraw_mask_each_step = false;  // disturbance mask per step vs per trajectory
  bool delay_uniform = false;          // reaction delay Unif[0,Sigma] vs constant Sigma

  void validate() const;
};

struct DisturbanceModel {
  enum class Kind { None, Nonvanishing, Vanishing, ReactionDelay };
  Kind kind = Kind::None;
  double d_nv = 0.0;   // [m/s^2]
  double d_v = 0.0;    // [1/s^2 per unit state norm]
  double Sigma = 0.0;  // [s]

  static DisturbanceModel none() { return {}; }
  static DisturbanceModel nonvanishing(double d) {
    return {Kind::Nonvanishing, d, 0.0, 0.0};
  }
  static DisturbanceModel vanishing(double d) { return {Kind::Vanishing, 0.0, d, 0.0}; }
  static DisturbanceModel reaction_delay(double sigma) {
    return {Kind::ReactionDelay, 0.0, 0.0, sigma};
  }
};

enum class PlantModel { Linearized, NonlinearOvm };

struct TrajectoryEvent {
  enum class Kind { AebTriggered, Collision };
  double t = 0.0;
  Kind kind = Kind::AebTriggered;
  int vehicle = 0;
};

// Full state history; memory-heavy, used for exports and focused tests.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;  // error states x(t)
  std::vector<std::pair<double, double>> control_log;  // (time, applied u)
  std::vector<TrajectoryEvent> events;
  bool collided = false;
  double final_error_norm = 0.0;
  double snapped_delta = 0.0;
};

// Compact per-trajectory record used by ensembles and searches.
struct TrajectorySummary {
  bool collided = false;
  bool converged = false;
  double final_error_norm = 0.0;
  double min_spacing = 0.0;
  int aeb_activations = 0;
  std::vector<double> norm_history;  // ||x(t)||_2 at every step
};

struct StabilityVerdict {
  enum class Status { Converged, Collided, NotConverged };
  Status status = Status::NotConverged;
  double final_error_norm = 0.0;  // worst final norm across the ensemble
  std::optional<double> ultimate_bound;
  int n_converged = 0;
  int n_collided = 0;
};

// Initial error state x(0): per-vehicle position and velocity perturbations
// drawn uniformly from the configured half-widths, deterministic in
// (cfg.rng_seed, seed). Spacing errors are differences of the position draws.
Eigen::VectorXd initial_state(const OvmParams& p, const SimConfig& cfg,
                              std::uint64_t seed);

// Emergency braking: full deceleration when the closing-speed inequality
// triggers or the spacing is already below the safe distance.
std::optional<double> aeb_override(double v_i, double v_prev, double s_i,
                                   const SimConfig& cfg);

// Zero-order-hold simulation: u = -(k_mult K) x(t_k) held for `delta` seconds
// (snapped down to a whole number of steps). Throws if delta < t_step.
Trajectory simulate(const SystemMatrices& sys, const Controller& c, double delta,
                    const DisturbanceModel& dist, PlantModel plant,
                    const SimConfig& cfg, std::uint64_t seed);

TrajectorySummary simulate_summary(const SystemMatrices& sys, const Controller& c,
                                   double delta, const DisturbanceModel& dist,
                                   PlantModel plant, const SimConfig& cfg,
                                   std::uint64_t seed);

// Independent reference integrator with continuous (every-step) control and no
// hold machinery; used to pin down the delta = t_step limit in tests.
TrajectorySummary simulate_continuous_reference(const SystemMatrices& sys,
                                                const Controller& c, PlantModel plant,
                                                const SimConfig& cfg,
                                                std::uint64_t seed);

// Seeds 0..n_seeds-1, OpenMP-parallel; output independent of thread count.
std::vector<TrajectorySummary> run_ensemble(const SystemMatrices& sys,
                                            const Controller& c, double delta,
                                            const DisturbanceModel& dist,
                                            PlantModel plant, const SimConfig& cfg);

// Serial reference for the parallel ensemble; must match it exactly.
std::vector<TrajectorySummary> run_ensemble_serial(const SystemMatrices& sys,
                                                   const Controller& c, double delta,
                                                   const DisturbanceModel& dist,
                                                   PlantModel plant,
                                                   const SimConfig& cfg);

StabilityVerdict classify(const std::vector<TrajectorySummary>& trajs,
                          const SimConfig& cfg);

// Largest state norm over the trailing fraction of all trajectories.
double ultimate_bound(const std::vector<TrajectorySummary>& trajs,
                      double tail_fraction = 0.10);

}  // namespace ringctl

#endif  // RINGCTL_SIM_HPP
