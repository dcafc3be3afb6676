#include "mforge/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char **argv) {
  CLI::App app{"Membrane-mediated particle interactions: solve, shape derivatives, scans and gradient flow."};
  app.set_version_flag("--version", std::string(MFORGE_VERSION_STRING));

  std::string command;
  std::string scenario_path;
  std::string out_dir = ".";
  int jobs = 1;
  std::vector<int> grid;
  std::optional<double> tau;
  std::optional<int> steps;

  app.add_option("command", command, "solve | derivative | scan | flow | validate")
      ->required()
      ->check(CLI::IsMember({"solve", "derivative", "scan", "flow", "validate"}));
  app.add_option("--scenario", scenario_path, "Scenario TOML file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (created if missing)");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--grid", grid, "Grid override NX NY")->expected(2)->check(CLI::PositiveNumber);
  app.add_option("--tau", tau, "Flow step size override")->check(CLI::PositiveNumber);
  app.add_option("--steps", steps, "Flow step budget override")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  std::string text;
  {
    std::ifstream in(scenario_path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }

  mforge::Scenario scenario;
  try {
    scenario = mforge::parse_scenario(text);
    if (grid.size() == 2) {
      scenario.nx = grid[0];
      scenario.ny = grid[1];
    }
    if (tau) scenario.flow.tau = *tau;
    if (steps) scenario.flow.steps = *steps;
    scenario.validate();
  } catch (const std::exception &e) {
    std::cerr << "membrane-forge: stage 'parse' failed: " << e.what() << "\n";
    return 1;
  }

  mforge::RunOptions options;
  options.out_dir = out_dir;
  options.jobs = jobs;
  options.scenario_path = scenario_path;
  options.scenario_text = text;
  try {
    const auto result = mforge::run_command(scenario, *mforge::parse_command(command), options);
    std::cout << command << ": " << result.summary << "\n";
    for (const auto &p : result.outputs) std::cout << "  wrote " << p.string() << "\n";
    return result.exit_code;
  } catch (const std::exception &e) {
    std::cerr << "membrane-forge: " << e.what() << "\n";
    return 1;
  }
}
