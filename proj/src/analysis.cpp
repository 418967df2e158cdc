#include "flapsim/analysis.hpp"

#include "flapsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace flapsim::analysis {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void LimitCycleOptions::validate() const {
  if (!(threshold > 0.0)) throw ValidationError("limit_cycle.threshold", "must be positive");
  if (consecutive < 1) throw ValidationError("limit_cycle.consecutive", "must be at least 1");
  if (min_periods < 2) throw ValidationError("limit_cycle.min_periods", "must be at least 2");
  for (double w : {weight_pitch, weight_omega, weight_translation, weight_joint}) {
    if (!(w >= 0.0)) throw ValidationError("limit_cycle.weights", "must be >= 0");
  }
}

LimitCycleReport detect_limit_cycle(const std::vector<double>& t, const std::vector<double>& crank,
                                    const std::vector<std::vector<double>>& states,
                                    const std::vector<double>& weights, const LimitCycleOptions& options) {
  options.validate();
  if (t.size() < 2 || crank.size() != t.size() || states.size() != t.size()) {
    throw TooShort("limit-cycle detection needs at least two aligned samples");
  }
  const double revolutions = std::abs(crank.back() - crank.front()) / kTwoPi;
  if (revolutions < options.min_periods) {
    throw TooShort("trajectory spans " + std::to_string(revolutions) + " crank periods, fewer than " +
                   std::to_string(options.min_periods));
  }

  // Section crossings: the unwrapped crank angle passes section_phase + 2 pi n.
  std::vector<std::vector<double>> section;
  LimitCycleReport rep;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double a = (crank[i - 1] - options.section_phase) / kTwoPi;
    const double b = (crank[i] - options.section_phase) / kTwoPi;
    const double n = std::floor(b);
    if (b > a && n > std::floor(a)) {
      const double f = (n - a) / (b - a);
      rep.crossing_times.push_back(t[i - 1] + f * (t[i] - t[i - 1]));
      std::vector<double> x(states[i].size());
      for (std::size_t j = 0; j < x.size(); ++j) x[j] = states[i - 1][j] + f * (states[i][j] - states[i - 1][j]);
      section.push_back(std::move(x));
    }
  }
  for (std::size_t i = 1; i < section.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < section[i].size(); ++j) {
      const double dx = section[i][j] - section[i - 1][j];
      d2 += weights[j] * dx * dx;
    }
    rep.distances.push_back(std::sqrt(d2));
  }

  // The cycle is declared on the run of sub-threshold returns that lasts to
  // the end of the record; an early quiet stretch that later grows does not count.
  std::size_t start = rep.distances.size();
  while (start > 0 && rep.distances[start - 1] < options.threshold) --start;
  rep.detected = static_cast<int>(rep.distances.size() - start) >= options.consecutive;
  const std::size_t from = rep.detected ? start : 0;
  if (rep.crossing_times.size() >= from + 2) {
    rep.period = (rep.crossing_times.back() - rep.crossing_times[from]) /
                 static_cast<double>(rep.crossing_times.size() - 1 - from);
  }
  if (rep.detected) rep.transient_end = rep.crossing_times[start];
  return rep;
}

LimitCycleReport detect_limit_cycle(const sim::Trajectory& traj, const LimitCycleOptions& options) {
  const std::vector<std::string> names = {"theta_y", "omega_x", "omega_y", "omega_z", "dx",      "dy",
                                          "dz",      "dphi_lh", "dphi_lr", "dphi_rh", "dphi_rr"};
  std::vector<double> weights = {options.weight_pitch,       options.weight_omega,       options.weight_omega,
                                 options.weight_omega,       options.weight_translation, options.weight_translation,
                                 options.weight_translation, options.weight_joint,       options.weight_joint,
                                 options.weight_joint,       options.weight_joint};
  std::vector<int> cols;
  for (const auto& n : names) cols.push_back(traj.column(n));
  std::vector<std::vector<double>> states(traj.rows, std::vector<double>(names.size()));
  for (std::size_t r = 0; r < traj.rows; ++r)
    for (std::size_t j = 0; j < cols.size(); ++j) states[r][j] = traj.at(r, cols[j]);
  return detect_limit_cycle(traj.series("t"), traj.series("theta_1"), states, weights, options);
}

EnergyLedger energy_audit(const sim::Trajectory& traj) {
  EnergyLedger led;
  led.t = traj.series("t");
  led.kinetic = traj.series("kinetic");
  led.gravity = traj.series("potential_gravity");
  led.spring = traj.series("potential_spring");
  led.work_damping = traj.series("work_damping");
  led.work_aero = traj.series("work_aero");
  led.work_drive = traj.series("work_drive");
  const std::size_t n = led.t.size();
  led.total.resize(n);
  led.residual.resize(n);
  if (n == 0) return led;
  double motion = 0.0, grav = 0.0, work = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    led.total[i] = led.kinetic[i] + led.gravity[i] + led.spring[i];
    const double w = led.work_damping[i] + led.work_aero[i] + led.work_drive[i];
    led.residual[i] = led.total[i] - led.total[0] - (w - (led.work_damping[0] + led.work_aero[0] + led.work_drive[0]));
    motion = std::max(motion, led.kinetic[i] + led.spring[i]);
    grav = std::max(grav, std::abs(led.gravity[i] - led.gravity[0]));
    work = std::max(work, std::abs(w));
    led.max_abs_residual = std::max(led.max_abs_residual, std::abs(led.residual[i]));
  }
  led.scale = motion + grav + work;
  led.max_rel_residual = led.scale > 0.0 ? led.max_abs_residual / led.scale : led.max_abs_residual;
  return led;
}

}  // namespace flapsim::analysis
