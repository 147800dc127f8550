#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rlk/config.hpp"

namespace rlk {

struct Invariant {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct RunSummary {
  std::string command;
  std::string run_dir;
  std::vector<Invariant> invariants;                   // asserted; exit status depends on these
  std::vector<std::pair<std::string, double>> measured;  // reported only
  std::vector<std::string> artifacts;                 // paths relative to run_dir
  double wall_seconds = 0.0;
  std::string error;  // set when a solver error stopped the run
  bool passed() const;
};

const std::vector<std::string>& command_names();

// Runs one subcommand into cfg.out (created if needed): config.json, CSV logs,
// snapshots/ and summary.json. Throws ConfigError for an unknown command.
RunSummary run_command(const std::string& command, const RunConfig& cfg);

std::string summary_json(const RunSummary& s);

}  // namespace rlk
