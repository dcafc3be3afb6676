#pragma once

#include "mforge/errors.hpp"
#include "mforge/scenario.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mforge {

enum class Command { Solve, Derivative, Scan, Flow, Validate };

std::optional<Command> parse_command(std::string_view name);
std::string to_string(Command command);

/// Error raised by run_command; names the stage that failed.
class StageError : public Error {
public:
  StageError(const std::string &stage, const std::string &what)
      : Error("stage '" + stage + "' failed: " + what), stage_(stage) {}
  const std::string &stage() const { return stage_; }

private:
  std::string stage_;
};

struct ScanRow {
  double t = 0.0;
  double energy = 0.0;
  /// grad J . q from the derivative formula.
  double formula = 0.0;
  double fd = 0.0;
};

/// Energy, formula derivative and central difference along the scan
/// direction at every sample; samples run on `jobs` threads.
std::vector<ScanRow> run_scan(const ProblemSpec &spec, const Configuration &p0, const ScanBlock &scan,
                              const CutoffFractions &fractions = {}, int jobs = 1);

struct DerivativeRow {
  Eigen::VectorXd direction;
  double formula = 0.0;
  double fd = 0.0;
  /// max(5% |fd|, 1e-3 |J|).
  double tolerance = 0.0;
  bool pass = false;
};

std::vector<DerivativeRow> compare_derivatives(const ProblemSpec &spec, const MembraneSolution &solution,
                                               const std::vector<Eigen::VectorXd> &directions,
                                               std::optional<double> fd_step = std::nullopt,
                                               const CutoffFractions &fractions = {}, int jobs = 1);

struct RunOptions {
  std::filesystem::path out_dir = ".";
  int jobs = 1;
  /// Recorded in the manifest; the file hash is taken from `scenario_text`.
  std::string scenario_path;
  std::string scenario_text;
};

struct RunResult {
  /// 0 on success, 2 when validate finds a failing check.
  int exit_code = 0;
  std::vector<std::filesystem::path> outputs;
  std::string summary;
};

/// Runs one command and writes its CSV/VTK artifacts plus manifest.json into
/// out_dir. Throws StageError; the manifest is still written with status
/// "failed".
RunResult run_command(const Scenario &scenario, Command command, const RunOptions &options = {});

} // namespace mforge
