#include "flapsim/sim.hpp"

#include "flapsim/errors.hpp"

#include <cmath>
#include <sstream>

namespace flapsim::sim {

namespace {

constexpr int kOffQ = 0;
constexpr int kOffQdot = kin::kCoords;
constexpr int kOffP = 2 * kin::kCoords;
constexpr int kOffPhi = kOffP + 3;
constexpr int kOffR = kOffPhi + 4;
constexpr int kOffPdot = kOffR + 9;
constexpr int kOffPhidot = kOffPdot + 3;
constexpr int kOffOmega = kOffPhidot + 4;
constexpr int kOffWork = kOffOmega + 3;

const char* kSegNames[4] = {"LH", "LR", "RH", "RR"};

std::vector<std::string> build_columns() {
  const std::vector<std::string> coords = {"theta_1",  "theta_2",  "theta_4", "theta_9",
                                           "theta_10", "theta_12", "theta_13", "theta_14",
                                           "l_3b",     "l_3c",     "l_8b",     "l_10b"};
  const std::vector<std::string> qd = {"x", "y", "z", "phi_lh", "phi_lr", "phi_rh", "phi_rr"};
  std::vector<std::string> c = {"t"};
  for (const auto& n : coords) c.push_back(n);
  for (const auto& n : coords) c.push_back("d" + n);
  for (const auto& n : qd) c.push_back(n);
  for (const auto& n : qd) c.push_back("d" + n);
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j) c.push_back("R" + std::to_string(i) + std::to_string(j));
  for (const char* n : {"omega_x", "omega_y", "omega_z", "u_g", "u_3b", "u_3c", "u_8b", "u_10b", "lref_3b",
                        "lref_3c", "lref_8b", "lref_10b"})
    c.push_back(n);
  for (const char* s : kSegNames)
    for (const char* q : {"_Fx", "_Fy", "_Fz", "_Mx", "_My", "_Mz"}) c.push_back(std::string(s) + q);
  for (const char* n : {"kinetic", "potential_gravity", "potential_spring", "work_damping", "work_aero",
                        "work_drive", "Pi_x", "Pi_y", "Pi_z", "theta_y", "closure_residual"})
    c.push_back(n);
  return c;
}

Eigen::Vector3d gravity_vector(const Model& model, const SimConfig& cfg) {
  return cfg.gravity ? Eigen::Vector3d(0.0, 0.0, -model.gravity) : Eigen::Vector3d::Zero();
}

dyn::DrivenPoints driven_points(const Model& model, const kin::KinematicState& k) {
  const kin::DrivenJointOutput out = kin::driven_joint_output(model.topology, k, kin::CoordVector::Zero());
  return {out.p5, out.p16, out.v5, out.v16};
}

void check_divergence(const SimState& s, const SimConfig& cfg) {
  auto fail = [&](const std::string& what) {
    std::ostringstream os;
    os << "episode diverged at t = " << s.t << " s: " << what;
    throw SimDiverged(os.str());
  };
  const Packed x = pack(s);
  if (!x.allFinite()) fail("non-finite state");
  if (s.d.p_dot.norm() > cfg.max_speed) fail("body speed above bound");
  const double rate = std::max({s.d.omega.cwiseAbs().maxCoeff(), s.d.phi_dot.cwiseAbs().maxCoeff(),
                                std::abs(s.k.qdot[kin::kTheta1])});
  if (rate > cfg.max_rate) fail("angular rate above bound");
}

}  // namespace

int SimConfig::steps() const { return static_cast<int>(std::llround(duration / dt)); }

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("sim.dt_s", "must be positive");
  if (!(duration >= dt) || !std::isfinite(duration)) throw ValidationError("sim.duration_s", "must be >= dt");
  if (log_every < 1) throw ValidationError("sim.log_every_steps", "must be at least 1");
  if (!(max_speed > 0.0)) throw ValidationError("sim.divergence.max_speed_m_per_s", "must be positive");
  if (!(max_rate > 0.0)) throw ValidationError("sim.divergence.max_rate_rad_per_s", "must be positive");
  if (!position.allFinite() || !velocity.allFinite() || !omega.allFinite() || !std::isfinite(pitch) ||
      !std::isfinite(crank_angle) || !std::isfinite(crank_rate)) {
    throw ValidationError("sim.initial", "initial condition not finite");
  }
}

Packed pack(const SimState& s) {
  Packed x;
  x.segment<kin::kCoords>(kOffQ) = s.k.q;
  x.segment<kin::kCoords>(kOffQdot) = s.k.qdot;
  x.segment<3>(kOffP) = s.d.p;
  x.segment<4>(kOffPhi) = s.d.phi;
  x.segment<9>(kOffR) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(s.d.R.data());
  x.segment<3>(kOffPdot) = s.d.p_dot;
  x.segment<4>(kOffPhidot) = s.d.phi_dot;
  x.segment<3>(kOffOmega) = s.d.omega;
  x[kOffWork] = s.w_damp;
  x[kOffWork + 1] = s.w_aero;
  x[kOffWork + 2] = s.w_drive;
  return x;
}

SimState unpack(const Packed& x, double t) {
  SimState s;
  s.k.q = x.segment<kin::kCoords>(kOffQ);
  s.k.qdot = x.segment<kin::kCoords>(kOffQdot);
  s.d.p = x.segment<3>(kOffP);
  s.d.phi = x.segment<4>(kOffPhi);
  s.d.R = Eigen::Map<const Eigen::Matrix3d>(x.data() + kOffR);
  s.d.p_dot = x.segment<3>(kOffPdot);
  s.d.phi_dot = x.segment<4>(kOffPhidot);
  s.d.omega = x.segment<3>(kOffOmega);
  s.w_damp = x[kOffWork];
  s.w_aero = x[kOffWork + 1];
  s.w_drive = x[kOffWork + 2];
  s.t = t;
  return s;
}

Evaluation evaluate(const Model& model, const SimConfig& cfg, const SimState& s, bool record_strips) {
  Evaluation e;
  e.theta_y = model.pitch_of(s.d.R);
  e.control = ctl::control_step(s.k.qdot[kin::kTheta1], s.k.fdc_lengths(), s.k.fdc_rates(), e.theta_y,
                                model.control, cfg.controllers);
  kin::KinematicInput input;
  input.crank_accel = e.control.u_g;
  input.fdc_accel = e.control.u_p;
  const kin::CoordVector qdd = kin::kinematic_eom(model.topology, s.k, input);

  e.coupling = dyn::coupling_forces(s.d, model.mass, driven_points(model, s.k), model.coupling, cfg.damping);
  dyn::GenVector Q = e.coupling.Q;
  if (cfg.aero) {
    e.aero = cfg.parallel_aero
                 ? aero::aero_forces_parallel(s.d, model.mass, model.elements(), model.air, record_strips)
                 : aero::aero_forces_serial(s.d, model.mass, model.elements(), model.air, record_strips);
    Q += e.aero.Q;
  }
  const dyn::GenVector vdot = dyn::dynamics_accel(s.d, model.mass, Q, gravity_vector(model, cfg));

  Packed& d = e.derivative;
  d.segment<kin::kCoords>(kOffQ) = s.k.qdot;
  d.segment<kin::kCoords>(kOffQdot) = qdd;
  d.segment<3>(kOffP) = s.d.p_dot;
  d.segment<4>(kOffPhi) = s.d.phi_dot;
  const Eigen::Matrix3d Rdot = s.d.R * dyn::hat(s.d.omega);
  d.segment<9>(kOffR) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(Rdot.data());
  d.segment<10>(kOffPdot) = vdot;
  d[kOffWork] = e.coupling.damper_power;
  d[kOffWork + 1] = cfg.aero ? e.aero.power : 0.0;
  d[kOffWork + 2] = e.coupling.drive_power;
  return e;
}

SimState initial_state(const Model& model, const SimConfig& cfg) {
  const kin::FdcVector fdc = cfg.fdc_from_zero_path ? kin::FdcVector(model.control.l_ref_zp) : cfg.fdc_lengths;
  SimState s;
  s.k = kin::solve_loop_closure(model.topology, cfg.crank_angle, fdc);
  s.k.qdot.setZero();
  s.k.qdot[kin::kTheta1] = cfg.crank_rate;
  s.k = kin::project_state(model.topology, s.k);
  s.d.p = cfg.position;
  s.d.p_dot = cfg.velocity;
  s.d.R = model.plate_attitude(cfg.pitch);
  s.d.omega = cfg.omega;
  s.d.phi = dyn::matched_wing_angles(model.topology.geometry, s.k.q);
  const double h_rate = s.k.qdot[kin::kTheta4];
  const double r_rate = s.k.qdot[kin::kTheta14] - h_rate;
  s.d.phi_dot = dyn::Vec4(h_rate, r_rate, h_rate, r_rate);
  return s;
}

Energies energies(const Model& model, const SimConfig& cfg, const SimState& s) {
  Energies e;
  e.kinetic = dyn::kinetic_energy(s.d, model.mass);
  e.gravity = dyn::gravity_potential(s.d, model.mass, gravity_vector(model, cfg));
  e.spring = dyn::coupling_forces(s.d, model.mass, driven_points(model, s.k), model.coupling, false).potential;
  return e;
}

Eigen::Vector3d total_angular_momentum(const Model& model, const SimState& s) {
  return dyn::angular_momentum(s.d, model.mass, dyn::center_of_mass(s.d, model.mass));
}

const std::vector<std::string>& trajectory_columns() {
  static const std::vector<std::string> cols = build_columns();
  return cols;
}

int Trajectory::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  throw ValidationError("trajectory", "no column named '" + name + "'");
}

std::vector<double> Trajectory::series(const std::string& name) const {
  const int c = column(name);
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
  return out;
}

Trajectory run_episode(const Model& model, const SimConfig& cfg, EpisodeFailure* failure) {
  cfg.validate();
  Trajectory traj;
  traj.columns = trajectory_columns();
  traj.dt = cfg.dt * cfg.log_every;
  const int n_steps = cfg.steps();
  traj.steps = n_steps;
  traj.data.reserve(static_cast<std::size_t>(n_steps / cfg.log_every + 1) * traj.columns.size());

  SimState s;
  s.t = 0.0;
  auto fail = [&](const Error& err) {
    if (failure == nullptr) throw;
    failure->failed = true;
    failure->code = err.code();
    failure->time = s.t;
    failure->message = err.what();
  };
  try {
    s = initial_state(model, cfg);
  } catch (const Error& err) {
    fail(err);
    return traj;
  }
  double last_residual = kin::constraint_residual(model.topology.geometry, s.k.q).norm();
  traj.max_closure_residual = last_residual;
  Evaluation e;

  auto log = [&](const SimState& st, const Evaluation& ev) {
    auto push = [&](double v) { traj.data.push_back(v); };
    push(st.t);
    for (int i = 0; i < kin::kCoords; ++i) push(st.k.q[i]);
    for (int i = 0; i < kin::kCoords; ++i) push(st.k.qdot[i]);
    for (int i = 0; i < 3; ++i) push(st.d.p[i]);
    for (int i = 0; i < 4; ++i) push(st.d.phi[i]);
    for (int i = 0; i < 3; ++i) push(st.d.p_dot[i]);
    for (int i = 0; i < 4; ++i) push(st.d.phi_dot[i]);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) push(st.d.R(i, j));
    for (int i = 0; i < 3; ++i) push(st.d.omega[i]);
    push(ev.control.u_g);
    for (int i = 0; i < 4; ++i) push(ev.control.u_p[i]);
    for (int i = 0; i < 4; ++i) push(ev.control.l_ref[i]);
    for (int g = 0; g < 4; ++g) {
      for (int i = 0; i < 3; ++i) push(ev.aero.segment_force[g][i]);
      for (int i = 0; i < 3; ++i) push(ev.aero.segment_moment[g][i]);
    }
    const Energies en = energies(model, cfg, st);
    push(en.kinetic);
    push(en.gravity);
    push(en.spring);
    push(st.w_damp);
    push(st.w_aero);
    push(st.w_drive);
    const Eigen::Vector3d pi = total_angular_momentum(model, st);
    for (int i = 0; i < 3; ++i) push(pi[i]);
    push(ev.theta_y);
    push(last_residual);
    ++traj.rows;
    for (const auto& strip : ev.aero.strips) {
      traj.strips.push_back({st.t, strip.element, strip.alpha, strip.v_r, strip.lift, strip.drag});
    }
  };

  const double h = cfg.dt;
  try {
    e = evaluate(model, cfg, s, cfg.record_strips);
    for (int step = 0;; ++step) {
      if (step % cfg.log_every == 0) log(s, e);
      if (step == n_steps) break;
      const Packed x0 = pack(s);
      const double t0 = s.t;
      const Packed k1 = e.derivative;
      const Packed k2 = evaluate(model, cfg, unpack(x0 + 0.5 * h * k1, t0 + 0.5 * h)).derivative;
      const Packed k3 = evaluate(model, cfg, unpack(x0 + 0.5 * h * k2, t0 + 0.5 * h)).derivative;
      const Packed k4 = evaluate(model, cfg, unpack(x0 + h * k3, t0 + h)).derivative;
      SimState next = unpack(x0 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), (step + 1) * h);
      next.d.R = dyn::orthonormalize(next.d.R);
      last_residual = kin::constraint_residual(model.topology.geometry, next.k.q).norm();
      traj.max_closure_residual = std::max(traj.max_closure_residual, last_residual);
      next.k = kin::project_state(model.topology, next.k);
      check_divergence(next, cfg);
      s = next;
      const bool record = cfg.record_strips && (step + 1) % cfg.log_every == 0;
      e = evaluate(model, cfg, s, record);
    }
  } catch (const Error& err) {
    fail(err);
  }
  return traj;
}

}  // namespace flapsim::sim
