// mshift command-line driver: scenario in, JSON/CSV reports out.
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include "cli/commands.hpp"
#include "cli/scenario.hpp"
#include "mshift/error.hpp"

namespace {

struct Flags {
  std::string scenario;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double tolerance = 0.0;
  bool to_stdout = false;
};

void add_shared(CLI::App* sub, Flags& f) {
  sub->add_option("--scenario", f.scenario, "Scenario JSON file")->required();
  auto* out = sub->add_option("--out", f.out, "Output directory (overrides output.dir)");
  auto* stdout_flag = sub->add_flag("--stdout", f.to_stdout, "Print the JSON report instead of writing files");
  stdout_flag->excludes(out);
  sub->add_option("--seed", f.seed, "Master seed for Monte Carlo streams");
  sub->add_option("--threads", f.threads, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--tolerance", f.tolerance, "Override the primary tolerance of the command")
      ->check(CLI::PositiveNumber);
}

mshift::cli::Overrides overrides(CLI::App* sub, const Flags& f) {
  mshift::cli::Overrides o;
  if (sub->count("--out")) o.out_dir = f.out;
  if (sub->count("--seed")) o.seed = f.seed;
  if (sub->count("--threads")) o.threads = f.threads;
  if (sub->count("--tolerance")) o.tolerance = f.tolerance;
  o.to_stdout = f.to_stdout;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local limit theorem checks for inhomogeneous Markov shifts"};
  app.require_subcommand(1);
  Flags flags;
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const auto& name : mshift::cli::command_names()) {
    auto* sub = app.add_subcommand(name, "Run the " + name + " analysis");
    add_shared(sub, flags);
    subs.emplace_back(name, sub);
  }
  auto* run = app.add_subcommand("run", "Run every analysis listed in the scenario");
  add_shared(run, flags);
  subs.emplace_back("run", run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    for (const auto& [name, sub] : subs) {
      if (!sub->parsed()) continue;
      const auto scenario = mshift::cli::load_scenario(flags.scenario);
      const auto o = overrides(sub, flags);
      if (name == "run") return mshift::cli::run_all(scenario, o);
      return mshift::cli::emit_result(mshift::cli::run_command(name, scenario, o), scenario, o);
    }
  } catch (const mshift::cli::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return 1;
  } catch (const mshift::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
