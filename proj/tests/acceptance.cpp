// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "flapsim/analysis.hpp"
#include "flapsim/config.hpp"
#include "flapsim/control.hpp"
#include "flapsim/io.hpp"
#include "flapsim/optimize.hpp"
#include "flapsim/sim.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace flapsim;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

// Pinned tolerances.
constexpr double kCrankRateTol = 0.01;         // relative, criterion 1
constexpr double kCrankSettle = 0.5;           // s
constexpr double kCrankRuntime = 10.0;         // s wall
constexpr double kFixtureTol = 1e-12;          // m, criterion 2
constexpr double kPitchBand = 8.0 * kDeg;      // rad, criterion 3
constexpr double kTransientMax = 4.0;          // s
constexpr double kEpisodeRuntime = 60.0;       // s wall
constexpr double kImprovement = 0.05;          // criterion 4
constexpr double kQuadraticTol = 1e-3;
constexpr int kQuadraticBudget = 500;
constexpr double kClosureTol = 1e-8;           // m, criterion 5
constexpr double kEnergyTol = 1e-6;            // relative per wingbeat
constexpr double kMomentumTol = 1e-8;          // relative per 1000 steps
constexpr double kOrderMin = 3.5;
constexpr double kOracleTol = 1e-6;            // relative FD agreement
constexpr double kRefinementTol = 5e-3;        // criterion 6
constexpr double kPowerTol = 1e-9;
constexpr double kDecouplingTol = 1e-12;       // m, criterion 7

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Line {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

bool report(int n, const char* title, Line& line) {
  std::cout << (line.pass ? "PASS" : "FAIL") << " criterion " << n << " " << title << ":" << line.detail.str()
            << std::endl;
  return line.pass;
}

sim::SimConfig conservative(double dt, double duration) {
  sim::SimConfig c;
  c.dt = dt;
  c.duration = duration;
  c.log_every = 1;
  c.aero = false;
  c.damping = false;
  c.controllers = {false, false, false};
  c.crank_rate = 2.0 * kPi * 10.0;
  return c;
}

bool criterion1(const config::Config& cfg) {
  Line line;
  sim::SimConfig s = cfg.sim;
  s.duration = 1.0;
  s.crank_rate = 0.0;
  s.aero = true;
  const auto t0 = Clock::now();
  const sim::Trajectory tr = sim::run_episode(cfg.model, s);
  const double wall = seconds_since(t0);
  const double omega = cfg.model.control.omega_ref;
  const auto t = tr.series("t"), rate = tr.series("dtheta_1");
  double worst = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= kCrankSettle - 1e-12) worst = std::max(worst, std::abs(rate[i] - omega) / omega);
  }
  line.detail << " max |rate - ref|/ref after " << kCrankSettle << " s = " << worst << " (tol " << kCrankRateTol
              << "), 1 s episode wall " << wall << " s (limit " << kCrankRuntime << ")";
  line.require(worst < kCrankRateTol, "rate");
  line.require(wall < kCrankRuntime, "runtime");
  return report(1, "flapping-rate regulation", line);
}

bool criterion2() {
  Line line;
  ctl::ControllerConfig c;
  const Eigen::Vector4d zp(7.8e-3, 10.5e-3, 6.2e-3, 7.2e-3);
  c.l_ref_zp = zp;
  c.K_c = Eigen::Vector4d(0.42, -0.26, -0.38, -0.097);
  const double zero_err = (ctl::pitch_controller(c.theta_ref, c) - zp).cwiseAbs().maxCoeff();
  // Hand offsets at a 5 degree pitch deficit: K_c [mm/deg] * 5 deg.
  const Eigen::Vector4d hand = zp + Eigen::Vector4d(2.1e-3, -1.3e-3, -1.9e-3, -0.485e-3);
  const double offset_err = (ctl::pitch_law(c.theta_ref - 5.0 * kDeg, c) - hand).cwiseAbs().maxCoeff();
  line.detail << " zero-error deviation " << zero_err << " m, offset deviation " << offset_err << " m (tol "
              << kFixtureTol << ")";
  line.require(zero_err == 0.0, "zero path not exact");
  line.require(offset_err < kFixtureTol, "offsets");
  return report(2, "zero-path controller fixture", line);
}

struct PipelineResult {
  opt::OptimizationResult gain;
  double J_zero = 0.0;
  double J_best = 0.0;
  bool best_penalized = false;
};

bool criterion3(const config::Config& cfg, const PipelineResult& p) {
  Line line;
  Model m = cfg.model;
  m.control.K_c = p.gain.best_x;
  sim::SimConfig s = cfg.sim;
  const auto t0 = Clock::now();
  const sim::Trajectory tr = sim::run_episode(m, s);
  const double wall = seconds_since(t0);
  analysis::LimitCycleReport lc;
  try {
    lc = analysis::detect_limit_cycle(tr, cfg.limit_cycle);
  } catch (const Error& e) {
    line.require(false, e.what());
  }
  double dev = INFINITY;
  if (lc.detected) {
    dev = 0.0;
    const auto t = tr.series("t"), th = tr.series("theta_y");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] >= lc.transient_end) dev = std::max(dev, std::abs(th[i] - m.control.theta_ref));
    }
  }
  line.detail << " K_c = [" << p.gain.best_x.transpose() << "], cycle " << (lc.detected ? "detected" : "not detected")
              << ", transient end " << lc.transient_end << " s (limit " << kTransientMax << "), period " << lc.period
              << " s, max |theta_y - ref| after transient " << dev / kDeg << " deg (band " << kPitchBand / kDeg
              << "), episode wall " << wall << " s (limit " << kEpisodeRuntime << ")";
  line.require(lc.detected, "no limit cycle");
  line.require(lc.detected && lc.transient_end <= kTransientMax, "transient");
  line.require(dev <= kPitchBand, "pitch band");
  line.require(wall < kEpisodeRuntime, "runtime");
  return report(3, "pitch limit cycle with the optimized gain", line);
}

bool criterion4(const PipelineResult& p) {
  Line line;
  const double improvement = (p.J_zero - p.J_best) / p.J_zero;
  line.detail << " J(K_c=0) = " << p.J_zero << ", J(optimized) = " << p.J_best << ", improvement " << improvement
              << " (min " << kImprovement << ") after " << p.gain.evaluations << " evaluations;";
  line.require(!p.best_penalized, "optimized gain penalized");
  line.require(p.J_best <= p.J_zero, "worse than zero gain");
  line.require(improvement >= kImprovement, "improvement");

  Eigen::MatrixXd A(4, 4);
  A << 4, 1, 0, 0.5, 1, 3, 0.2, 0, 0, 0.2, 2, 0.3, 0.5, 0, 0.3, 1;
  Eigen::VectorXd target(4);
  target << 0.3, -0.2, 0.55, -0.7;
  const opt::Objective f = [&](const opt::Vec& x) {
    const opt::Vec d = x - target;
    return opt::Outcome{d.dot(A * d), false};
  };
  const opt::Bounds box{opt::Vec::Constant(4, -1.0), opt::Vec::Constant(4, 1.0)};
  for (opt::Method method : {opt::Method::kNelderMead, opt::Method::kCmaEs}) {
    opt::OptimizerConfig oc;
    oc.method = method;
    oc.budget = kQuadraticBudget;
    oc.x_tolerance = 1e-7;
    oc.f_tolerance = 1e-14;
    const opt::OptimizationResult r = opt::minimize(f, opt::Vec::Zero(4), box, oc);
    const double err = (r.best_x - target).cwiseAbs().maxCoeff();
    line.detail << " quadratic " << opt::method_name(method) << " error " << err << " in " << r.evaluations
                << " evaluations (tol " << kQuadraticTol << ");";
    line.require(err < kQuadraticTol && r.evaluations <= kQuadraticBudget + 1, opt::method_name(method));
  }
  return report(4, "optimization improvement", line);
}

// Finite-difference and consistency oracles for the mass matrix, the bias
// forces, the constraint Jacobian and the kinematic equation of motion.
double oracle_error(const Model& model) {
  double worst = 0.0;
  dyn::DynamicState s;
  s.p = dyn::Vec3(0.1, -0.05, 0.3);
  s.R = Eigen::AngleAxisd(0.4, dyn::Vec3(0.2, 1.0, -0.3).normalized()).toRotationMatrix();
  s.phi = dyn::Vec4(0.3, -0.4, 0.25, -0.35);
  s.p_dot = dyn::Vec3(1.0, 0.2, -0.5);
  s.phi_dot = dyn::Vec4(20.0, -15.0, 18.0, -12.0);
  s.omega = dyn::Vec3(0.5, -1.0, 0.3);
  const dyn::Vec3 g(0.0, 0.0, -model.gravity);
  const dyn::GenVector v = s.velocity();
  const double T = dyn::kinetic_energy(s, model.mass);
  worst = std::max(worst, std::abs(0.5 * v.dot(dyn::mass_matrix(s, model.mass) * v) - T) / T);

  // Unforced motion conserves T + V_g: the central difference of the energy
  // along the flow vanishes relative to its kinetic and potential parts.
  const double h = 1e-6;
  auto advance = [&](const dyn::DynamicState& x, double dt) {
    const dyn::GenVector a = dyn::dynamics_accel(x, model.mass, dyn::GenVector::Zero(), g);
    dyn::DynamicState y = x;
    y.p += dt * x.p_dot;
    y.phi += dt * x.phi_dot;
    y.R = dyn::step_attitude(x.R, x.omega, dt);
    y.set_velocity(x.velocity() + dt * a);
    return y;
  };
  const dyn::DynamicState fwd = advance(s, h), bwd = advance(s, -h);
  const double dT = (dyn::kinetic_energy(fwd, model.mass) - dyn::kinetic_energy(bwd, model.mass)) / (2 * h);
  const double dV =
      (dyn::gravity_potential(fwd, model.mass, g) - dyn::gravity_potential(bwd, model.mass, g)) / (2 * h);
  worst = std::max(worst, std::abs(dT + dV) / (std::abs(dT) + std::abs(dV)));

  // Gravity part of the bias equals the potential gradient in p.
  const dyn::GenVector hg = dyn::bias_forces(s, model.mass, g) - dyn::bias_forces(s, model.mass, dyn::Vec3::Zero());
  for (int i = 0; i < 3; ++i) {
    dyn::DynamicState a = s, b = s;
    a.p[i] += h;
    b.p[i] -= h;
    const double fd = (dyn::gravity_potential(a, model.mass, g) - dyn::gravity_potential(b, model.mass, g)) / (2 * h);
    worst = std::max(worst, std::abs(hg[i] - fd) / (model.mass.total_mass() * model.gravity));
  }

  const auto& geom = model.topology.geometry;
  const kin::KinematicState k = kin::solve_loop_closure(model.topology, 0.7, geom.fdc_nominal);
  const kin::ConstraintJacobian J = kin::constraint_jacobian(geom, k.q);
  const double jscale = J.cwiseAbs().maxCoeff();
  for (int j = 0; j < kin::kCoords; ++j) {
    kin::CoordVector a = k.q, b = k.q;
    a[j] += h;
    b[j] -= h;
    const kin::ConstraintVector fd =
        (kin::constraint_residual(geom, a) - kin::constraint_residual(geom, b)) / (2 * h);
    worst = std::max(worst, (fd - J.col(j)).cwiseAbs().maxCoeff() / jscale);
  }

  // The EOM acceleration honours the inputs and keeps the constraints closed.
  kin::KinematicState ks = k;
  ks.qdot[kin::kTheta1] = 2.0 * kPi * 10.0;
  ks.qdot[kin::kL8b] = 0.01;
  ks = kin::project_state(model.topology, ks);
  kin::KinematicInput u;
  u.crank_accel = 50.0;
  u.fdc_accel = kin::FdcVector(0.1, -0.2, 0.05, 0.3);
  const kin::CoordVector qdd = kin::kinematic_eom(model.topology, ks, u);
  const kin::ConstraintVector acc = kin::constraint_jacobian(geom, ks.q) * qdd + kin::constraint_bias(geom, ks.q, ks.qdot);
  worst = std::max(worst, acc.cwiseAbs().maxCoeff() / (jscale * qdd.cwiseAbs().maxCoeff()));
  worst = std::max(worst, std::abs(qdd[kin::kTheta1] - u.crank_accel) / u.crank_accel);
  worst = std::max(worst, (qdd.segment<4>(kin::kL3b) - u.fdc_accel).cwiseAbs().maxCoeff() / 0.3);
  return worst;
}

bool criterion5(const Model& model) {
  Line line;
  // Ten wingbeats of the full default episode.
  sim::SimConfig full;
  full.duration = 1.0;
  full.crank_rate = model.control.omega_ref;
  const sim::Trajectory tr = sim::run_episode(model, full);
  line.detail << " closure max " << tr.max_closure_residual << " m (tol " << kClosureTol << ");";
  line.require(tr.max_closure_residual < kClosureTol, "closure");

  // Energy drift per wingbeat in the conservative setup.
  sim::SimConfig c = conservative(1e-4, 1.0);
  c.log_every = 10;
  const sim::Trajectory ce = sim::run_episode(model, c);
  const analysis::EnergyLedger L = analysis::energy_audit(ce);
  double per_beat = 0.0;
  const double period = 0.1;
  for (std::size_t i = 0; i < L.t.size(); ++i) {
    for (std::size_t j = i + 1; j < L.t.size() && L.t[j] - L.t[i] <= period + 1e-9; ++j) {
      per_beat = std::max(per_beat, std::abs(L.residual[j] - L.residual[i]) / L.scale);
    }
  }
  line.detail << " energy drift per wingbeat " << per_beat << " (tol " << kEnergyTol << "), over the 1 s record "
              << L.max_rel_residual << ";";
  line.require(per_beat < kEnergyTol, "energy");

  // Free body: no gravity, every external input off.
  sim::SimConfig fb = conservative(1e-4, 0.5);
  fb.gravity = false;
  const sim::Trajectory fr = sim::run_episode(model, fb);
  const auto px = fr.series("Pi_x"), py = fr.series("Pi_y"), pz = fr.series("Pi_z");
  double pmax = 0.0, dev = 0.0;
  const std::size_t window = 1000;
  for (std::size_t i = 0; i < px.size(); ++i) {
    pmax = std::max(pmax, std::sqrt(px[i] * px[i] + py[i] * py[i] + pz[i] * pz[i]));
  }
  for (std::size_t i = 0; i + window < px.size(); i += window) {
    const std::size_t j = i + window;
    dev = std::max(dev, std::sqrt(std::pow(px[j] - px[i], 2) + std::pow(py[j] - py[i], 2) + std::pow(pz[j] - pz[i], 2)));
  }
  const double mom = dev / pmax;
  line.detail << " angular momentum change per 1000 steps " << mom << " relative (tol " << kMomentumTol << ");";
  line.require(mom < kMomentumTol, "momentum");

  auto finals = [&](double dt) {
    const sim::Trajectory r = sim::run_episode(model, conservative(dt, 0.02));
    std::vector<double> v;
    for (const char* n : {"phi_lh", "phi_lr", "x", "z", "dphi_lh"}) v.push_back(r.series(n).back());
    return v;
  };
  const auto ref = finals(1.25e-5);
  auto err = [&](const std::vector<double>& a) {
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - ref[i]) / (std::abs(ref[i]) + 1e-3));
    return e;
  };
  const double order = std::log2(err(finals(2e-4)) / err(finals(1e-4)));
  line.detail << " RK4 observed order " << order << " (min " << kOrderMin << ");";
  line.require(order >= kOrderMin, "order");

  const double oracle = oracle_error(model);
  line.detail << " finite-difference oracles worst " << oracle << " (tol " << kOracleTol << ")";
  line.require(oracle < kOracleTol, "oracles");
  return report(5, "mechanics verification", line);
}

bool criterion6(const Model& model) {
  Line line;
  dyn::DynamicState s;
  s.p = dyn::Vec3(0.1, 0.0, -0.2);
  s.R = Eigen::AngleAxisd(0.2, dyn::Vec3::UnitY()).toRotationMatrix();
  s.phi = dyn::Vec4(0.4, -0.3, 0.35, -0.25);
  s.p_dot = dyn::Vec3(3.0, 0.1, -1.5);
  s.phi_dot = dyn::Vec4(35.0, -20.0, 33.0, -18.0);
  s.omega = dyn::Vec3(0.2, -1.0, 0.1);
  auto segs = model.segments;
  for (auto& w : segs) w.n_strips = 10;
  const aero::AeroResult coarse = aero::aero_forces_serial(s, model.mass, aero::blade_elements(segs), model.air);
  for (auto& w : segs) w.n_strips = 20;
  const aero::AeroResult fine = aero::aero_forces_serial(s, model.mass, aero::blade_elements(segs), model.air);
  const double refine = (fine.Q - coarse.Q).norm() / fine.Q.norm();
  const double power = std::abs(fine.Q.dot(s.velocity()) - fine.power) / std::abs(fine.power);

  const dyn::Mat3 axes = Eigen::AngleAxisd(0.7, dyn::Vec3(1, 2, 3).normalized()).toRotationMatrix();
  const bool still = aero::strip_force(dyn::Vec3::Zero(), axes, 0.05, 0.01, model.air).force_body == dyn::Vec3::Zero();
  const bool span = aero::strip_force(4.0 * axes.col(1), axes, 0.05, 0.01, model.air).force_body == dyn::Vec3::Zero();
  const aero::AeroResult rest =
      aero::aero_forces_serial(dyn::DynamicState{}, model.mass, model.elements(), model.air);
  const bool rest_zero = rest.Q == dyn::GenVector::Zero();
  line.detail << " wrench change on doubling strips " << refine << " (tol " << kRefinementTol
              << "), virtual-work mismatch " << power << " (tol " << kPowerTol << "), zero-velocity force "
              << (still && rest_zero ? "exactly zero" : "nonzero") << ", spanwise-flow force "
              << (span ? "exactly zero" : "nonzero");
  line.require(refine < kRefinementTol, "refinement");
  line.require(power < kPowerTol, "power");
  line.require(still && rest_zero && span, "zero cases");
  return report(6, "aerodynamic correctness", line);
}

bool criterion7(const Model& model) {
  Line line;
  for (const char* p : {"l_8b", "l_10b"}) {
    const kin::SensitivityReport r = kin::sensitivity_analysis(model.topology, p, 1e-4, 72);
    const double dev = r.max_dev_j5 * r.delta;  // absolute metres
    line.detail << " " << p << " joint-5 deviation " << dev << " m;";
    line.require(dev < kDecouplingTol, p);
  }
  line.detail << " (tol " << kDecouplingTol << " m)";
  return report(7, "FDC decoupling", line);
}

bool criterion8(const std::string& cli) {
  Line line;
  const fs::path root = fs::temp_directory_path() / "flapsim_acceptance_repro";
  fs::remove_all(root);
  const std::string quick = " --set sim.duration_s=0.2 --set cost.horizon_s=0.2 --set cost.warmup_s=0.05"
                            " --set optimizer.budget=4 --seed 11";
  for (const char* verb : {"simulate", "audit", "sensitivity", "optimize-gain", "optimize-zero-path"}) {
    std::string text[2];
    bool ran = true;
    for (int k = 0; k < 2; ++k) {
      const fs::path out = root / (std::string(verb) + "_" + std::to_string(k));
      const int status = std::system((cli + " " + verb + quick + " --out " + out.string() + " 2>/dev/null").c_str());
      const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
      ran = ran && (code == 0 || code == static_cast<int>(ErrorCode::kBudgetExhausted)) &&
            fs::exists(out / "summary.json");
      if (ran) text[k] = io::read_text((out / "summary.json").string());
    }
    const bool same = ran && text[0] == text[1];
    line.detail << " " << verb << (same ? " identical;" : " DIFFERENT;");
    line.require(same, verb);
  }
  return report(8, "reproducible command-line runs", line);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : FLAPSIM_CLI_PATH;
  try {
    const config::Config cfg = config::parse_config("");
    bool all = true;
    all &= criterion1(cfg);
    all &= criterion2();

    PipelineResult p;
    const auto t0 = Clock::now();
    p.gain = opt::optimize_pitch_gain(cfg.model, cfg.sim, cfg.cost, cfg.gain_bounds, cfg.optimizer);
    Model zero = cfg.model;
    zero.control.K_c.setZero();
    p.J_zero = cost::evaluate_cost(zero, cfg.sim, cfg.cost).J;
    Model best = cfg.model;
    best.control.K_c = p.gain.best_x;
    const cost::CostResult cb = cost::evaluate_cost(best, cfg.sim, cfg.cost);
    p.J_best = cb.J;
    p.best_penalized = cb.penalized;
    std::cout << "info gain pipeline: " << p.gain.evaluations << " evaluations, " << seconds_since(t0) << " s wall"
              << std::endl;

    all &= criterion3(cfg, p);
    all &= criterion4(p);
    all &= criterion5(cfg.model);
    all &= criterion6(cfg.model);
    all &= criterion7(cfg.model);
    all &= criterion8(cli);
    std::cout << (all ? "ALL PASS" : "SOME CRITERIA FAILED") << std::endl;
    return all ? 0 : 1;
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
}
