#include "ringctl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "ringctl/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ringctl {

namespace {

constexpr std::uint64_t kPurposeInit = 1;
constexpr std::uint64_t kPurposeMask = 2;
constexpr std::uint64_t kPurposeDelay = 3;

struct Observer {
  virtual void on_state(int step, double t, const Eigen::VectorXd& x,
                        double min_spacing) = 0;
  virtual void on_control(double t, double u) {}
  virtual void on_event(const TrajectoryEvent&) {}
  virtual ~Observer() = default;
};

long hold_steps_for(double delta, double t_step) {
  if (delta < t_step - 1e-12)
    throw std::invalid_argument("simulate: delta must be >= t_step");
  return std::max<long>(1, static_cast<long>(std::floor(delta / t_step + 1e-9)));
}

// Shared forward-Euler core for both plant models. The error state x is the
// single source of truth; physical coordinates are x plus the equilibrium.
void integrate(const SystemMatrices& sys, const Controller& c, double delta,
               const DisturbanceModel& dist, PlantModel plant, const SimConfig& cfg,
               std::uint64_t seed, bool continuous_control, Observer& obs) {
  cfg.validate();
  if (c.K.size() != sys.dim())
    throw std::invalid_argument("simulate: gain dimension mismatch");

  const int n = sys.n();
  const int dim = sys.dim();
  const double dt = cfg.t_step;
  const long n_steps = std::lround(cfg.total_time / dt);
  const long hold_steps = hold_steps_for(delta, dt);
  const Equilibrium& eq = sys.eq;
  const Eigen::RowVectorXd K_eff = c.effective_gain();

  Eigen::VectorXd x = initial_state(sys.params, cfg, seed);

  Rng mask_rng = Rng::stream(cfg.rng_seed, seed, kPurposeMask);
  Rng delay_rng = Rng::stream(cfg.rng_seed, seed, kPurposeDelay);
  std::vector<double> mask(n, 0.0);
  auto draw_mask = [&] {
    for (int i = 0; i < n; ++i)
      mask[i] = mask_rng.next_bernoulli(cfg.bernoulli_p) ? 1.0 : 0.0;
  };
  if (dist.kind == DisturbanceModel::Kind::Nonvanishing ||
      dist.kind == DisturbanceModel::Kind::Vanishing)
    draw_mask();

  double u_cur = 0.0;
  std::deque<std::pair<double, double>> pending;  // (activation time, u)
  std::vector<bool> collided_vehicle(n, false);
  std::vector<bool> aeb_prev(n, false);

  Eigen::VectorXd xdot(dim);
  for (long k = 0; k <= n_steps; ++k) {
    const double t = k * dt;

    // Control update: sample x(t_k) at hold boundaries, or every step in the
    // continuous reference mode.
    if (continuous_control) {
      u_cur = -(K_eff * x)(0);
    } else if (k % hold_steps == 0) {
      const double u_new = -(K_eff * x)(0);
      if (dist.kind == DisturbanceModel::Kind::ReactionDelay && dist.Sigma > 0.0) {
        const double sigma =
            cfg.delay_uniform ? delay_rng.next_uniform(0.0, dist.Sigma) : dist.Sigma;
        pending.emplace_back(t + sigma, u_new);
      } else {
        u_cur = u_new;
        obs.on_control(t, u_cur);
      }
    }
    while (!pending.empty() && pending.front().first <= t + 1e-12) {
      u_cur = pending.front().second;
      obs.on_control(pending.front().first, u_cur);
      pending.pop_front();
    }

    // Physical spacings for collision detection; current state first.
    double min_spacing = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double s_i = eq.s_star + x(2 * i);
      min_spacing = std::min(min_spacing, s_i);
      if (s_i < 0.0 && !collided_vehicle[i]) {
        collided_vehicle[i] = true;
        obs.on_event({t, TrajectoryEvent::Kind::Collision, i});
      }
    }
    obs.on_state(static_cast<int>(k), t, x, min_spacing);
    if (k == n_steps) break;

    if (dist.kind != DisturbanceModel::Kind::None && cfg.redraw_mask_each_step &&
        dist.kind != DisturbanceModel::Kind::ReactionDelay)
      draw_mask();

    const double xnorm =
        dist.kind == DisturbanceModel::Kind::Vanishing ? x.norm() : 0.0;
    auto disturbance = [&](int i) -> double {
      switch (dist.kind) {
        case DisturbanceModel::Kind::Nonvanishing:
          return mask[i] * dist.d_nv;
        case DisturbanceModel::Kind::Vanishing:
          return mask[i] * dist.d_v * xnorm;
        default:
          return 0.0;
      }
    };

    // Model derivatives.
    if (plant == PlantModel::Linearized) {
      xdot.noalias() = sys.A * x;
      xdot.noalias() += sys.B * u_cur;
      for (int i = 0; i < n; ++i) xdot(2 * i + 1) += disturbance(i);
    } else {
      for (int i = 0; i < n; ++i) {
        const int prev = (i == 0) ? n - 1 : i - 1;
        const double s_i = eq.s_star + x(2 * i);
        const double v_i = eq.v_star + x(2 * i + 1);
        const double v_p = eq.v_star + x(2 * prev + 1);
        xdot(2 * i) = v_p - v_i;
        double accel;
        if (i == 0) {
          if (sys.guidance == GuidanceKind::PiecewiseAcceleration) {
            accel = u_cur;
          } else {
            // Held value is a desired velocity error around v*.
            accel = sys.params.alpha * (eq.v_star + u_cur - v_i) +
                    sys.params.beta * (v_p - v_i);
          }
        } else {
          accel = sys.params.alpha * (optimal_velocity(s_i, sys.params) - v_i) +
                  sys.params.beta * (v_p - v_i);
        }
        xdot(2 * i + 1) = accel + disturbance(i);
      }
    }

    // Emergency braking in physical coordinates, overriding every vehicle's
    // commanded acceleration; never weaker than what the model already does.
    if (cfg.aeb_enabled) {
      for (int i = 0; i < n; ++i) {
        const int prev = (i == 0) ? n - 1 : i - 1;
        const double s_i = eq.s_star + x(2 * i);
        const double v_i = eq.v_star + x(2 * i + 1);
        const double v_p = eq.v_star + x(2 * prev + 1);
        const auto brake = aeb_override(v_i, v_p, s_i, cfg);
        if (brake) {
          xdot(2 * i + 1) = std::min(xdot(2 * i + 1), *brake);
          if (!aeb_prev[i])
            obs.on_event({t, TrajectoryEvent::Kind::AebTriggered, i});
          aeb_prev[i] = true;
        } else {
          aeb_prev[i] = false;
        }
      }
    }

    x += dt * xdot;
  }
}

struct SummaryObserver : Observer {
  explicit SummaryObserver(long n_steps) { out.norm_history.reserve(n_steps + 1); }
  void on_state(int, double, const Eigen::VectorXd& x, double min_spacing) override {
    const double nrm = x.norm();
    out.norm_history.push_back(nrm);
    out.final_error_norm = nrm;
    out.min_spacing = std::min(out.min_spacing, min_spacing);
    if (min_spacing < 0.0) out.collided = true;
  }
  void on_event(const TrajectoryEvent& e) override {
    if (e.kind == TrajectoryEvent::Kind::AebTriggered) ++out.aeb_activations;
  }
  TrajectorySummary out{false, false, 0.0, std::numeric_limits<double>::infinity(), 0, {}};
};

struct FullObserver : Observer {
  void on_state(int, double t, const Eigen::VectorXd& x, double min_spacing) override {
    out.times.push_back(t);
    out.states.push_back(x);
    out.final_error_norm = x.norm();
    if (min_spacing < 0.0) out.collided = true;
  }
  void on_control(double t, double u) override { out.control_log.emplace_back(t, u); }
  void on_event(const TrajectoryEvent& e) override { out.events.push_back(e); }
  Trajectory out;
};

}  // namespace

void SimConfig::validate() const {
  if (!(t_step > 0.0)) throw std::invalid_argument("SimConfig: t_step must be > 0");
  if (!(total_time >= t_step))
    throw std::invalid_argument("SimConfig: total_time must be >= t_step");
  if (!(convergence_eps > 0.0))
    throw std::invalid_argument("SimConfig: convergence_eps must be > 0");
  if (n_seeds < 1) throw std::invalid_argument("SimConfig: n_seeds must be >= 1");
}

Eigen::VectorXd initial_state(const OvmParams& p, const SimConfig& cfg,
                              std::uint64_t seed) {
  p.validate();
  const int n = p.n;
  Rng rng = Rng::stream(cfg.rng_seed, seed, kPurposeInit);
  std::vector<double> ds(n), dv(n);
  for (int i = 0; i < n; ++i) ds[i] = rng.next_uniform(-cfg.perturb_s, cfg.perturb_s);
  for (int i = 0; i < n; ++i) dv[i] = rng.next_uniform(-cfg.perturb_v, cfg.perturb_v);
  Eigen::VectorXd x(2 * n);
  for (int i = 0; i < n; ++i) {
    const int prev = (i == 0) ? n - 1 : i - 1;
    x(2 * i) = ds[prev] - ds[i];
    x(2 * i + 1) = dv[i];
  }
  return x;
}

std::optional<double> aeb_override(double v_i, double v_prev, double s_i,
                                   const SimConfig& cfg) {
  if (s_i <= cfg.s_d) return cfg.a_min;  // inside the safe distance: full braking
  const double closing = (v_i * v_i - v_prev * v_prev) / (2.0 * (s_i - cfg.s_d));
  if (closing >= std::abs(cfg.a_min)) return cfg.a_min;
  return std::nullopt;
}

Trajectory simulate(const SystemMatrices& sys, const Controller& c, double delta,
                    const DisturbanceModel& dist, PlantModel plant,
                    const SimConfig& cfg, std::uint64_t seed) {
  FullObserver obs;
  integrate(sys, c, delta, dist, plant, cfg, seed, false, obs);
  obs.out.snapped_delta = hold_steps_for(delta, cfg.t_step) * cfg.t_step;
  return std::move(obs.out);
}

TrajectorySummary simulate_summary(const SystemMatrices& sys, const Controller& c,
                                   double delta, const DisturbanceModel& dist,
                                   PlantModel plant, const SimConfig& cfg,
                                   std::uint64_t seed) {
  SummaryObserver obs(std::lround(cfg.total_time / cfg.t_step));
  integrate(sys, c, delta, dist, plant, cfg, seed, false, obs);
  obs.out.converged = obs.out.final_error_norm <= cfg.convergence_eps;
  return std::move(obs.out);
}

TrajectorySummary simulate_continuous_reference(const SystemMatrices& sys,
                                                const Controller& c, PlantModel plant,
                                                const SimConfig& cfg,
                                                std::uint64_t seed) {
  SummaryObserver obs(std::lround(cfg.total_time / cfg.t_step));
  integrate(sys, c, cfg.t_step, DisturbanceModel::none(), plant, cfg, seed, true, obs);
  obs.out.converged = obs.out.final_error_norm <= cfg.convergence_eps;
  return std::move(obs.out);
}

std::vector<TrajectorySummary> run_ensemble(const SystemMatrices& sys,
                                            const Controller& c, double delta,
                                            const DisturbanceModel& dist,
                                            PlantModel plant, const SimConfig& cfg) {
  std::vector<TrajectorySummary> out(cfg.n_seeds);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int seed = 0; seed < cfg.n_seeds; ++seed)
    out[seed] = simulate_summary(sys, c, delta, dist, plant, cfg, seed);
  return out;
}

std::vector<TrajectorySummary> run_ensemble_serial(const SystemMatrices& sys,
                                                   const Controller& c, double delta,
                                                   const DisturbanceModel& dist,
                                                   PlantModel plant,
                                                   const SimConfig& cfg) {
  std::vector<TrajectorySummary> out(cfg.n_seeds);
  for (int seed = 0; seed < cfg.n_seeds; ++seed)
    out[seed] = simulate_summary(sys, c, delta, dist, plant, cfg, seed);
  return out;
}

StabilityVerdict classify(const std::vector<TrajectorySummary>& trajs,
                          const SimConfig& cfg) {
  if (trajs.empty()) throw std::invalid_argument("classify: empty ensemble");
  StabilityVerdict v;
  bool any_collision = false;
  bool all_converged = true;
  for (const auto& tr : trajs) {
    any_collision = any_collision || tr.collided;
    if (tr.collided) ++v.n_collided;
    const bool conv = !tr.collided && tr.final_error_norm <= cfg.convergence_eps;
    if (conv) ++v.n_converged;
    all_converged = all_converged && conv;
    v.final_error_norm = std::max(v.final_error_norm, tr.final_error_norm);
  }
  if (any_collision)
    v.status = StabilityVerdict::Status::Collided;
  else if (all_converged)
    v.status = StabilityVerdict::Status::Converged;
  else
    v.status = StabilityVerdict::Status::NotConverged;
  return v;
}

double ultimate_bound(const std::vector<TrajectorySummary>& trajs,
                      double tail_fraction) {
  if (trajs.empty()) throw std::invalid_argument("ultimate_bound: empty ensemble");
  const size_t len = trajs.front().norm_history.size();
  for (const auto& tr : trajs)
    if (tr.norm_history.size() != len)
      throw std::invalid_argument("ultimate_bound: trajectories of unequal length");
  const size_t tail = std::max<size_t>(
      1, static_cast<size_t>(std::ceil(tail_fraction * static_cast<double>(len))));
  double bound = 0.0;
  for (const auto& tr : trajs)
    for (size_t i = len - tail; i < len; ++i)
      bound = std::max(bound, tr.norm_history[i]);
  return bound;
}

}  // namespace ringctl
