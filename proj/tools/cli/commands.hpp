#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "mshift/report.hpp"
#include "scenario.hpp"

namespace mshift::cli {

// Command-line overrides; unset fields fall back to the scenario.
struct Overrides {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;  // Monte Carlo streams only
  std::optional<std::size_t> threads;
  std::optional<double> tolerance;
  bool to_stdout = false;
};

// What a command produced. `checks` decide the exit status.
struct CommandResult {
  std::string name;
  Json doc = Json::object();
  std::vector<Check> checks;
  std::vector<Curve> curves;

  bool pass() const;
};

const std::vector<std::string>& command_names();

// Runs one analysis; throws mshift::Error or SchemaError on bad input.
CommandResult run_command(const std::string& name, const Scenario& s, const Overrides& o);

// Writes <name>.json plus one CSV per curve into the output directory (or the
// JSON to stdout) and returns the exit status: 0 pass, 2 check failure.
int emit_result(const CommandResult& r, const Scenario& s, const Overrides& o);

// Runs every analysis listed under analysis.checks and writes report.json.
int run_all(const Scenario& s, const Overrides& o);

}  // namespace mshift::cli
