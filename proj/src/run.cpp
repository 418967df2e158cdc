#include "flapsim/run.hpp"

#include "flapsim/errors.hpp"
#include "flapsim/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace flapsim::run {

namespace {

namespace fs = std::filesystem;

struct Output {
  fs::path dir;
  io::Json files = io::Json::array();

  void text(const std::string& name, const std::string& content) {
    io::write_text((dir / name).string(), content);
    files.push_back(name);
  }
  void table(const std::string& name, const io::Table& t) { text(name, io::table_to_csv(t)); }
};

io::Json episode_json(const sim::Trajectory& traj) {
  io::Json j;
  j["steps"] = traj.steps;
  j["dt_s"] = traj.dt;
  j["logged_rows"] = traj.rows;
  j["max_closure_residual_m"] = traj.max_closure_residual;
  if (traj.rows > 0) {
    const std::size_t last = traj.rows - 1;
    auto col3 = [&](const char* first) {
      const int c = traj.column(first);
      return io::Json::array({traj.at(last, c), traj.at(last, c + 1), traj.at(last, c + 2)});
    };
    io::Json f;
    f["t_s"] = traj.at(last, traj.column("t"));
    f["position_m"] = col3("x");
    f["velocity_m_per_s"] = col3("dx");
    f["theta_y_rad"] = traj.at(last, traj.column("theta_y"));
    f["crank_rate_rad_per_s"] = traj.at(last, traj.column("dtheta_1"));
    j["final_state"] = f;
  }
  return j;
}

// Limit-cycle report plus the pitch band after the detected transient.
io::Json limit_cycle_section(const sim::Trajectory& traj, const config::Config& cfg) {
  analysis::LimitCycleReport r;
  try {
    r = analysis::detect_limit_cycle(traj, cfg.limit_cycle);
  } catch (const TooShort& e) {
    io::Json j;
    j["detected"] = false;
    j["error"] = error_code_name(e.code());
    j["message"] = e.what();
    return j;
  }
  io::Json j = io::limit_cycle_json(r);
  if (r.detected) {
    const int ct = traj.column("t");
    const int cp = traj.column("theta_y");
    double lo = INFINITY, hi = -INFINITY, sum = 0.0;
    std::size_t n = 0;
    for (std::size_t row = 0; row < traj.rows; ++row) {
      if (traj.at(row, ct) < r.transient_end) continue;
      const double th = traj.at(row, cp);
      lo = std::min(lo, th);
      hi = std::max(hi, th);
      sum += th;
      ++n;
    }
    if (n > 0) {
      io::Json band;
      band["min_rad"] = lo;
      band["max_rad"] = hi;
      band["mean_rad"] = sum / static_cast<double>(n);
      band["max_error_rad"] = std::max(std::abs(hi - cfg.model.control.theta_ref),
                                       std::abs(lo - cfg.model.control.theta_ref));
      j["pitch_after_transient"] = band;
    }
  }
  return j;
}

cost::CostResult episode_cost(const sim::Trajectory& traj, const config::Config& cfg) {
  const double log_dt = cfg.sim.dt * cfg.sim.log_every;
  const bool same_grid = cfg.cost.decimation(cfg.sim.dt) == cfg.sim.log_every;
  if (same_grid && cfg.sim.duration + 0.5 * log_dt >= cfg.cost.horizon) {
    return cost::cost_from_trajectory(traj, cfg.model.control.theta_ref, cfg.cost);
  }
  return cost::evaluate_cost(cfg.model, cfg.sim, cfg.cost);
}

int simulate(const config::Config& cfg, Output& out, io::Json& summary, bool audit_only) {
  const sim::Trajectory traj = sim::run_episode(cfg.model, cfg.sim);
  const analysis::EnergyLedger ledger = analysis::energy_audit(traj);
  if (!audit_only) {
    out.text("trajectory.csv", io::trajectory_to_csv(traj));
    out.text("trajectory.bin", io::trajectory_to_binary(traj));
    out.table("pitch.csv", io::pitch_table(traj));
    out.table("wingtip.csv", io::wingtip_table(cfg.model, traj));
    if (cfg.sim.record_strips) out.table("strips.csv", io::strip_table(traj));
  }
  out.table("energy.csv", io::energy_table(ledger));
  summary["episode"] = episode_json(traj);
  summary["energy_audit"] = io::energy_json(ledger);
  if (!audit_only) {
    summary["cost"] = io::cost_json(episode_cost(traj, cfg));
    summary["limit_cycle"] = limit_cycle_section(traj, cfg);
  }
  return 0;
}

int sensitivity(const config::Config& cfg, Output& out, io::Json& summary) {
  const auto& s = cfg.sensitivity;
  const auto reports = s.parallel
                           ? kin::sensitivity_batch_parallel(cfg.model.topology, s.parameters, s.delta, s.n_samples)
                           : kin::sensitivity_batch_serial(cfg.model.topology, s.parameters, s.delta, s.n_samples);
  out.text("sensitivity.csv", io::sensitivity_to_csv(reports));
  io::Json arr = io::Json::array();
  for (const auto& r : reports) {
    io::Json j;
    j["parameter"] = r.parameter;
    j["delta"] = r.delta;
    j["max_dev_j5"] = r.max_dev_j5;
    j["rms_dev_j5"] = r.rms_dev_j5;
    j["max_dev_j16"] = r.max_dev_j16;
    j["rms_dev_j16"] = r.rms_dev_j16;
    arr.push_back(j);
  }
  summary["sensitivity"] = arr;
  return 0;
}

int optimize(const config::Config& cfg, Output& out, io::Json& summary, bool gain) {
  Model baseline = cfg.model;
  opt::OptimizationResult res;
  if (gain) {
    baseline.control.K_c.setZero();
    res = opt::optimize_pitch_gain(cfg.model, cfg.sim, cfg.cost, cfg.gain_bounds, cfg.optimizer);
  } else {
    res = opt::optimize_zero_path(cfg.model, cfg.sim, cfg.cost, cfg.zero_path_bounds(), cfg.optimizer);
  }
  out.table("trace.csv", io::trace_table(res));
  io::Json j = io::optimization_json(res);
  j["parameter"] = gain ? "control.pitch_gain" : "control.zero_path_m";
  if (gain) {
    const cost::CostResult base = cost::evaluate_cost(baseline, cfg.sim, cfg.cost);
    j["zero_gain_J"] = base.J;
    j["zero_gain_penalized"] = base.penalized;
    j["relative_improvement"] = base.J > 0.0 ? (base.J - res.best_J) / base.J : 0.0;
  }
  summary["optimization"] = j;
  return res.budget_exhausted ? static_cast<int>(ErrorCode::kBudgetExhausted) : 0;
}

}  // namespace

const char* command_name(Command c) {
  switch (c) {
    case Command::kSimulate: return "simulate";
    case Command::kSensitivity: return "sensitivity";
    case Command::kOptimizeGain: return "optimize-gain";
    case Command::kOptimizeZeroPath: return "optimize-zero-path";
    case Command::kAudit: return "audit";
  }
  return "?";
}

Command parse_command(const std::string& name) {
  for (Command c : {Command::kSimulate, Command::kSensitivity, Command::kOptimizeGain, Command::kOptimizeZeroPath,
                    Command::kAudit}) {
    if (name == command_name(c)) return c;
  }
  throw ParseError("unknown command '" + name + "'");
}

config::Config resolve_config(const RunManifest& m) {
  config::Config cfg = m.config_path.empty() ? config::parse_config("") : config::load_config(m.config_path);
  config::apply_overrides(cfg, m.overrides);
  if (m.seed) cfg.optimizer.seed = *m.seed;
  cfg.finalize();
  return cfg;
}

int run_command(const RunManifest& m, std::ostream& log) {
  try {
    const config::Config cfg = resolve_config(m);
    Output out;
    out.dir = m.out_dir;
    std::error_code ec;
    fs::create_directories(out.dir, ec);
    if (ec) throw IoError("cannot create output directory '" + m.out_dir + "': " + ec.message());
    out.text("resolved_config.yaml", config::to_yaml(cfg));

    io::Json summary;
    summary["schema"] = kSummarySchema;
    summary["command"] = command_name(m.command);
    summary["seed"] = cfg.optimizer.seed;
    int status = 0;
    switch (m.command) {
      case Command::kSimulate: status = simulate(cfg, out, summary, false); break;
      case Command::kAudit: status = simulate(cfg, out, summary, true); break;
      case Command::kSensitivity: status = sensitivity(cfg, out, summary); break;
      case Command::kOptimizeGain: status = optimize(cfg, out, summary, true); break;
      case Command::kOptimizeZeroPath: status = optimize(cfg, out, summary, false); break;
    }
    summary["status"] = status == 0 ? "ok" : error_code_name(static_cast<ErrorCode>(status));
    out.files.push_back("summary.json");
    summary["files"] = out.files;
    io::write_text((out.dir / "summary.json").string(), io::dump(summary));
    if (status != 0) log << "flapsim: " << error_code_name(static_cast<ErrorCode>(status)) << "\n";
    return status;
  } catch (const Error& e) {
    log << "flapsim: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return static_cast<int>(e.code());
  }
}

}  // namespace flapsim::run
