#pragma once

// Post-processing of logged trajectories: limit-cycle detection on a crank
// phase section and the energy ledger.

#include "flapsim/sim.hpp"

#include <vector>

namespace flapsim::analysis {

struct LimitCycleOptions {
  double section_phase = 0.0;  // crank angle of the section, rad (mod 2 pi)
  double threshold = 0.05;     // weighted return distance
  int consecutive = 3;         // trailing returns below threshold to declare a cycle
  int min_periods = 10;        // crank revolutions required
  // Metric weights (inverse squared scales).
  double weight_pitch = 1.0;         // 1/rad^2
  double weight_omega = 1.0e-2;      // 1/(rad/s)^2
  double weight_translation = 1.0;   // 1/(m/s)^2
  double weight_joint = 1.0e-4;      // 1/(rad/s)^2
  void validate() const;
};

struct LimitCycleReport {
  bool detected = false;
  double period = 0.0;          // s
  double transient_end = 0.0;   // s, first crossing of the detected run
  std::vector<double> crossing_times;
  std::vector<double> distances;  // distances[i] between crossings i and i+1
};

// Section states are linearly interpolated between logged samples. Throws
// TooShort when the trajectory covers fewer than min_periods revolutions.
LimitCycleReport detect_limit_cycle(const sim::Trajectory& traj, const LimitCycleOptions& options);

// The same detection on raw series (time, crank angle, section state rows);
// used for synthetic trajectories.
LimitCycleReport detect_limit_cycle(const std::vector<double>& t, const std::vector<double>& crank,
                                    const std::vector<std::vector<double>>& states,
                                    const std::vector<double>& weights, const LimitCycleOptions& options);

struct EnergyLedger {
  std::vector<double> t;
  std::vector<double> kinetic, gravity, spring, total;
  std::vector<double> work_damping, work_aero, work_drive;
  std::vector<double> residual;  // E - E0 - W_nonconservative
  double scale = 0.0;            // energy scale used for the relative residual
  double max_abs_residual = 0.0;
  double max_rel_residual = 0.0;
};

// Energy scale: max(T + V_s) + max |V_g - V_g(0)| + max |W| over the record.
EnergyLedger energy_audit(const sim::Trajectory& traj);

}  // namespace flapsim::analysis
