#pragma once

// Run artifacts: trajectory CSV and binary logs, report tables and the JSON
// summary. CSV dialect: comma-separated, header row, LF line endings, numbers
// in shortest round-trip form.

#include "flapsim/analysis.hpp"
#include "flapsim/cost.hpp"
#include "flapsim/kinematics.hpp"
#include "flapsim/model.hpp"
#include "flapsim/optimize.hpp"
#include "flapsim/sim.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace flapsim::io {

using Json = nlohmann::ordered_json;

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

// Generic numeric table.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
std::string table_to_csv(const Table& table);
Table parse_csv(const std::string& text);
void write_table(const std::string& path, const Table& table);

std::string trajectory_to_csv(const sim::Trajectory& traj);
// Rebuilds columns and data only.
sim::Trajectory trajectory_from_csv(const std::string& text);

// Binary log: magic "FLPTRAJ1", u32 version, u32 column count, u64 row count,
// each column name as u32 length + bytes, then row-major little-endian f64.
inline constexpr std::uint32_t kBinaryVersion = 1;
std::string trajectory_to_binary(const sim::Trajectory& traj);
sim::Trajectory trajectory_from_binary(const std::string& bytes);

// Plot-ready tables.
Table pitch_table(const sim::Trajectory& traj);
Table energy_table(const analysis::EnergyLedger& ledger);
// Left wingtip (radius tip) position in the inertial frame.
Table wingtip_table(const Model& model, const sim::Trajectory& traj);
Table strip_table(const sim::Trajectory& traj);
std::string sensitivity_to_csv(const std::vector<kin::SensitivityReport>& reports);
Table trace_table(const opt::OptimizationResult& result);

// Summary fragments.
Json limit_cycle_json(const analysis::LimitCycleReport& report);
Json energy_json(const analysis::EnergyLedger& ledger);
Json cost_json(const cost::CostResult& cost);
Json optimization_json(const opt::OptimizationResult& result);
Json vector_json(const Eigen::VectorXd& v);

// Two-space indented, key order as inserted, trailing newline.
std::string dump(const Json& j);

}  // namespace flapsim::io
