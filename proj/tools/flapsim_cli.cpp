#include "flapsim/errors.hpp"
#include "flapsim/run.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace flapsim;

  CLI::App app{"Flapping-wing robot simulator"};
  app.require_subcommand(1);

  run::RunManifest manifest;
  std::uint64_t seed = 0;
  for (const char* verb : {"simulate", "sensitivity", "optimize-gain", "optimize-zero-path", "audit"}) {
    CLI::App* sub = app.add_subcommand(verb);
    sub->add_option("--config", manifest.config_path, "YAML configuration file (defaults when omitted)");
    sub->add_option("--out", manifest.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Optimizer seed (replaces optimizer.seed)");
    sub->add_option("--set", manifest.overrides, "Override, dotted.key=value (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ErrorCode::kParse);
  }

  CLI::App* sub = app.get_subcommands().front();
  manifest.command = run::parse_command(sub->get_name());
  if (sub->count("--seed") > 0) manifest.seed = seed;
  return run::run_command(manifest, std::cerr);
}
