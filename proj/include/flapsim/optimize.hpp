#pragma once

// Bounded derivative-free minimization (Nelder-Mead with projection, or a
// CMA-ES population search) and the two gain/zero-path pipelines built on it.

#include "flapsim/cost.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace flapsim::opt {

using Vec = Eigen::VectorXd;

struct Bounds {
  Vec lo, hi;
  // Throws ValidationError (key names the bounds) when lo > hi or sizes differ.
  void validate(const std::string& key) const;
  Vec project(const Vec& x) const;
};

enum class Method { kNelderMead, kCmaEs };
const char* method_name(Method m);
Method parse_method(const std::string& name);  // "nelder-mead" | "cma-es"

struct OptimizerConfig {
  Method method = Method::kNelderMead;
  int budget = 60;                // evaluations allowed beyond the initial guess
  double initial_step = 0.25;     // Nelder-Mead simplex size, fraction of each bound width
  double x_tolerance = 1e-4;      // simplex size in unit-box coordinates
  double f_tolerance = 1e-9;      // relative cost spread
  int population = 0;             // CMA-ES lambda; 0 selects 4 + 3 ln(n)
  double sigma0 = 0.3;            // CMA-ES initial step in unit-box coordinates
  std::uint64_t seed = 1;
  bool parallel = false;          // evaluate batches with OpenMP
  void validate() const;
};

struct Outcome {
  double J = 0.0;
  bool penalized = false;
};

using Objective = std::function<Outcome(const Vec&)>;

struct TraceRow {
  int iteration = 0;
  int candidate = 0;
  double J = 0.0;
  bool penalized = false;
  Vec x;
};

struct OptimizationResult {
  Vec best_x;
  double best_J = 0.0;
  bool best_penalized = false;
  int evaluations = 0;       // including the initial guess
  bool converged = false;
  bool budget_exhausted = false;
  std::vector<TraceRow> trace;
  std::string method;
};

// Evaluates candidates in index order (serial) or concurrently (parallel);
// results are identical either way.
std::vector<Outcome> evaluate_batch_serial(const Objective& f, const std::vector<Vec>& xs);
std::vector<Outcome> evaluate_batch_parallel(const Objective& f, const std::vector<Vec>& xs);

// Every candidate is projected onto the bounds before evaluation. The initial
// guess is always evaluated first and is not charged to the budget.
OptimizationResult minimize(const Objective& f, const Vec& x0, const Bounds& bounds, const OptimizerConfig& cfg);

// Cost of one episode for a candidate model; replaceable for stubbed tests.
using EpisodeCost =
    std::function<cost::CostResult(const Model&, const sim::SimConfig&, const cost::CostConfig&)>;

struct GainBounds {
  Eigen::Vector4d K_c_min = Eigen::Vector4d::Constant(-0.04);  // configured gain units
  Eigen::Vector4d K_c_max = Eigen::Vector4d::Constant(0.04);
  // Initial guess; zero gain makes the result no worse than the zero-path controller.
  Eigen::Vector4d K_c_start = Eigen::Vector4d::Zero();
  void validate() const;
};

// Minimizes J over K_c starting from bounds.K_c_start.
OptimizationResult optimize_pitch_gain(const Model& model, const sim::SimConfig& sim, const cost::CostConfig& cost,
                                       const GainBounds& bounds, const OptimizerConfig& cfg,
                                       const EpisodeCost& episode = cost::evaluate_cost);

// Minimizes J over l_ref_zp with the pitch loop off and K_c = 0, starting from
// model.control.l_ref_zp, inside [lo, hi] (defaults: the FDC bounds).
OptimizationResult optimize_zero_path(const Model& model, const sim::SimConfig& sim, const cost::CostConfig& cost,
                                      const Bounds& bounds, const OptimizerConfig& cfg,
                                      const EpisodeCost& episode = cost::evaluate_cost);
Bounds zero_path_bounds(const Model& model);

}  // namespace flapsim::opt
