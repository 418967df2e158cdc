#pragma once

// One simulated episode: controllers, linkage, massed bodies and aerodynamics
// advanced together by fixed-step RK4.

#include "flapsim/errors.hpp"
#include "flapsim/model.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace flapsim::sim {

struct SimConfig {
  double dt = 1e-4;        // s
  double duration = 4.0;   // s
  int log_every = 10;      // integrator steps per logged sample

  bool gravity = true;
  bool aero = true;
  bool damping = true;
  ctl::ControlToggles controllers{};
  bool parallel_aero = false;
  bool record_strips = false;

  // Initial condition.
  Eigen::Vector3d position{0.0, 0.0, 0.0};
  Eigen::Vector3d velocity{0.0, 0.0, 0.0};
  double pitch = 33.0 * 3.14159265358979323846 / 180.0;  // rad
  Eigen::Vector3d omega{0.0, 0.0, 0.0};
  double crank_angle = 0.0;  // rad
  double crank_rate = 0.0;   // rad/s
  bool fdc_from_zero_path = true;  // otherwise fdc_lengths below
  Eigen::Vector4d fdc_lengths{7.8e-3, 10.5e-3, 6.2e-3, 7.2e-3};

  // Divergence bounds.
  double max_speed = 100.0;   // m/s
  double max_rate = 1.0e4;    // rad/s

  int steps() const;
  void validate() const;
};

struct SimState {
  kin::KinematicState k;
  dyn::DynamicState d;
  double w_damp = 0.0;
  double w_aero = 0.0;
  double w_drive = 0.0;
  double t = 0.0;
};

inline constexpr int kPackedSize = 2 * kin::kCoords + 3 + 4 + 9 + 3 + 4 + 3 + 3;
using Packed = Eigen::Matrix<double, kPackedSize, 1>;
Packed pack(const SimState& s);
SimState unpack(const Packed& x, double t);

// Everything evaluated at one state: the derivative plus the diagnostics that
// the log records.
struct Evaluation {
  Packed derivative = Packed::Zero();
  ctl::ControlOutput control;
  dyn::CouplingResult coupling;
  aero::AeroResult aero;
  double theta_y = 0.0;
};

Evaluation evaluate(const Model& model, const SimConfig& cfg, const SimState& s, bool record_strips = false);

SimState initial_state(const Model& model, const SimConfig& cfg);

// Column-major friendly log: one row per logged sample.
struct Trajectory {
  std::vector<std::string> columns;
  std::vector<double> data;  // row-major, rows x columns.size()
  std::size_t rows = 0;

  double max_closure_residual = 0.0;  // over every integration step
  int steps = 0;
  double dt = 0.0;

  struct StripRow {
    double t;
    int k;
    double alpha, v_r, lift, drag;
  };
  std::vector<StripRow> strips;

  int column(const std::string& name) const;  // throws when absent
  double at(std::size_t row, int col) const { return data[row * columns.size() + col]; }
  std::vector<double> series(const std::string& name) const;
};

const std::vector<std::string>& trajectory_columns();

// Failure of an episode after it started integrating.
struct EpisodeFailure {
  bool failed = false;
  ErrorCode code = ErrorCode::kOk;
  double time = 0.0;  // time of the last accepted state, s
  std::string message;
};

// Integrates one episode. Without a failure sink, integration errors
// propagate; with one, they are recorded and the trajectory logged up to the
// failure is returned.
Trajectory run_episode(const Model& model, const SimConfig& cfg, EpisodeFailure* failure = nullptr);

// Energies of a state (massed subsystem).
struct Energies {
  double kinetic = 0.0;
  double gravity = 0.0;
  double spring = 0.0;
};
Energies energies(const Model& model, const SimConfig& cfg, const SimState& s);

// Total angular momentum of the massed bodies about the vehicle COM (inertial).
Eigen::Vector3d total_angular_momentum(const Model& model, const SimState& s);

}  // namespace flapsim::sim
