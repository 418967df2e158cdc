#pragma once

// The full run configuration: every module's parameters in one nested YAML
// document with SI unit suffixes on physical keys.

#include "flapsim/analysis.hpp"
#include "flapsim/cost.hpp"
#include "flapsim/model.hpp"
#include "flapsim/optimize.hpp"
#include "flapsim/sim.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace flapsim::config {

struct SensitivityConfig {
  std::vector<std::string> parameters{"l_3b", "l_3c", "l_8b", "l_10b"};
  double delta = 1.0e-4;  // perturbation in the parameter's unit (m or rad)
  int n_samples = 72;     // crank angles per revolution
  bool parallel = false;
  void validate() const;
};

struct Config {
  Model model = default_model();
  sim::SimConfig sim;
  cost::CostConfig cost;
  opt::OptimizerConfig optimizer;
  opt::GainBounds gain_bounds;
  // Zero-path search box; the FDC bounds when unset.
  std::optional<Eigen::Vector4d> zero_path_min, zero_path_max;
  analysis::LimitCycleOptions limit_cycle;
  SensitivityConfig sensitivity;

  opt::Bounds zero_path_bounds() const;
  // Rebuilds derived model data and checks every invariant; errors name the key.
  void finalize();
  void validate() const;
};

// Parses YAML text. Absent keys keep their defaults; unknown keys and
// malformed values raise ValidationError naming the key; malformed YAML
// raises ParseError.
Config parse_config(const std::string& yaml_text);
Config load_config(const std::string& path);

// Applies "dotted.key=value" (value in YAML syntax) and re-finalizes.
void apply_override(Config& cfg, const std::string& assignment);
// Applies every assignment in order, then validates once.
void apply_overrides(Config& cfg, const std::vector<std::string>& assignments);

// Serializes every key; parse_config(to_yaml(c)) reproduces c exactly.
std::string to_yaml(const Config& cfg);

// Every accepted dotted key in document order.
std::vector<std::string> config_keys();

}  // namespace flapsim::config
