#include "flapsim/cost.hpp"

#include <algorithm>
#include <cmath>

namespace flapsim::cost {

void CostConfig::validate(double sim_dt) const {
  if (!(w_momentum >= 0.0)) throw ValidationError("cost.w_momentum", "must be >= 0");
  if (!(w_velocity >= 0.0)) throw ValidationError("cost.w_velocity", "must be >= 0");
  if (!(w_pitch >= 0.0)) throw ValidationError("cost.w_pitch", "must be >= 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("cost.dt_s", "must be positive");
  const double ratio = dt / sim_dt;
  if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw ValidationError("cost.dt_s", "must be an integer multiple of sim.dt_s");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("cost.horizon_s", "must be positive");
  if (!(warmup >= 0.0) || !(warmup < horizon)) throw ValidationError("cost.warmup_s", "must lie in [0, horizon)");
  if (!(penalty > 0.0) || !std::isfinite(penalty)) throw ValidationError("cost.penalty", "must be positive");
}

int CostConfig::decimation(double sim_dt) const { return static_cast<int>(std::llround(dt / sim_dt)); }

CostResult cost_from_trajectory(const sim::Trajectory& traj, double theta_ref, const CostConfig& cfg) {
  CostResult r;
  if (traj.rows == 0) return r;
  const int ct = traj.column("t");
  const int cpi = traj.column("Pi_x");
  const int cv = traj.column("dx");
  const int cth = traj.column("theta_y");
  const double eps = 1e-9 * cfg.dt;
  double sum = 0.0;
  for (std::size_t row = 0; row < traj.rows; ++row) {
    const double t = traj.at(row, ct);
    if (t < cfg.warmup - eps || t >= cfg.horizon - eps) continue;
    double pi2 = 0.0, v2 = 0.0;
    for (int i = 0; i < 3; ++i) {
      pi2 += traj.at(row, cpi + i) * traj.at(row, cpi + i);
      v2 += traj.at(row, cv + i) * traj.at(row, cv + i);
    }
    const double e = theta_ref - traj.at(row, cth);
    sum += (cfg.w_momentum * pi2 + cfg.w_velocity * v2 + cfg.w_pitch * e * e) * cfg.dt;
    ++r.samples;
  }
  r.J = sum;
  return r;
}

double failure_penalty(const CostConfig& cfg, double t_fail) {
  const double remaining = std::max(0.0, cfg.horizon - t_fail);
  return cfg.penalty * (1.0 + remaining / cfg.horizon);
}

CostResult evaluate_cost(const Model& model, const sim::SimConfig& sim, const CostConfig& cfg) {
  cfg.validate(sim.dt);
  sim::SimConfig run = sim;
  run.duration = cfg.horizon;
  run.log_every = cfg.decimation(sim.dt);
  run.record_strips = false;
  sim::EpisodeFailure failure;
  const sim::Trajectory traj = sim::run_episode(model, run, &failure);
  if (failure.failed) {
    CostResult r;
    r.J = failure_penalty(cfg, failure.time);
    r.penalized = true;
    r.failure = failure.code;
    r.failure_time = failure.time;
    r.message = failure.message;
    return r;
  }
  return cost_from_trajectory(traj, model.control.theta_ref, cfg);
}

}  // namespace flapsim::cost
