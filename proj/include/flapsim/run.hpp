#pragma once

// Command execution behind the command-line tool: one output directory per
// run holding the resolved configuration, CSV reports and summary.json.

#include "flapsim/config.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace flapsim::run {

enum class Command { kSimulate, kSensitivity, kOptimizeGain, kOptimizeZeroPath, kAudit };

const char* command_name(Command c);
Command parse_command(const std::string& name);  // throws ParseError

struct RunManifest {
  std::string config_path;  // empty selects the defaults
  Command command = Command::kSimulate;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;  // replaces optimizer.seed when set
  std::vector<std::string> overrides;  // "dotted.key=value"
};

// Loads and resolves the configuration of a manifest.
config::Config resolve_config(const RunManifest& manifest);

// Runs the command and writes its artifacts. Returns the process exit status:
// 0 on success, the numeric ErrorCode on a reported failure (artifacts of an
// optimization that ran out of budget are still written). Diagnostics go to
// `log`.
int run_command(const RunManifest& manifest, std::ostream& log);

inline constexpr const char* kSummarySchema = "flapsim.summary/1";

}  // namespace flapsim::run
