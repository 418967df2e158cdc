#pragma once

// Episode cost: time-weighted sum of squared angular momentum, body speed and
// pitch error sampled on a costing grid after a warm-up interval.

#include "flapsim/errors.hpp"
#include "flapsim/sim.hpp"

#include <string>

namespace flapsim::cost {

struct CostConfig {
  double w_momentum = 1.0;   // w1
  double w_velocity = 1.0;   // w2
  double w_pitch = 10.0;     // w3
  double dt = 1.0e-3;        // costing step, s (integer multiple of the integrator step)
  double horizon = 4.0;      // episode length, s
  double warmup = 1.0;       // excluded from the sum, s
  double penalty = 1.0e6;    // base cost of a failed episode

  // Throws ValidationError; sim_dt is the integrator step the grid must align with.
  void validate(double sim_dt) const;
  int decimation(double sim_dt) const;
};

struct CostResult {
  double J = 0.0;
  bool penalized = false;  // the episode failed; J is a penalty, not a measured cost
  ErrorCode failure = ErrorCode::kOk;
  double failure_time = 0.0;
  std::string message;
  int samples = 0;
};

// Sum over logged rows with warmup <= t < horizon. The trajectory must be
// logged on the costing grid.
CostResult cost_from_trajectory(const sim::Trajectory& traj, double theta_ref, const CostConfig& cfg);

// Penalty for an episode that failed at t_fail: penalty * (1 + (T - t_fail) / T).
double failure_penalty(const CostConfig& cfg, double t_fail);

// Runs one episode on the costing grid and returns its cost. Simulation
// failures are converted into a flagged penalty rather than thrown.
CostResult evaluate_cost(const Model& model, const sim::SimConfig& sim, const CostConfig& cfg);

}  // namespace flapsim::cost
