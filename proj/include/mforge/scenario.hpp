#pragma once

#include "mforge/flow.hpp"
#include "mforge/solve.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mforge {

struct ParticleEntry {
  ParticleShape shape = ParticleShape::circle(1.0);
  RigidPose pose;
  bool freeze_tilt = false;
  bool operator==(const ParticleEntry &) const = default;
};

/// p(t) = p0 + (t - reference) direction, t sampled uniformly over [t0, t1]
/// including both ends; p0 are the particle poses.
struct ScanBlock {
  std::vector<double> direction;
  double t0 = 0.0;
  double t1 = 0.0;
  int samples = 50;
  double reference = 0.0;
  std::optional<double> fd_step;

  double parameter(int k) const;
  bool operator==(const ScanBlock &) const = default;
};

struct DerivativeBlock {
  /// Empty means the 3N canonical directions.
  std::vector<std::vector<double>> directions;
  std::optional<double> fd_step;
  bool operator==(const DerivativeBlock &) const = default;
};

struct FlowBlock {
  double tau = 0.5;
  int steps = 100;
  double tol = 1e-6;
  int max_halvings = 20;
  bool operator==(const FlowBlock &) const = default;
};

struct Scenario {
  std::string name;
  Box box;
  int nx = 128;
  int ny = 128;
  int subdiv = 8;
  int curve_samples = 256;
  double kappa = 1.0;
  double sigma = 0.0;
  double beta0 = 1e-4;
  double beta1 = 1e-2;
  double interior_weight = 1e-6;
  SolverKind solver = SolverKind::Direct;
  double cg_tolerance = 1e-10;
  int cg_max_iterations = 50000;
  CutoffFractions fractions;
  std::vector<ParticleEntry> particles;
  std::optional<ScanBlock> scan;
  DerivativeBlock derivative;
  FlowBlock flow;

  ProblemSpec problem() const;
  Configuration configuration() const;
  FlowOptions flow_options(int jobs = 1) const;
  /// Directions of the derivative command, canonical ones filled in.
  std::vector<Eigen::VectorXd> derivative_directions() const;
  /// Throws ValidationError naming the offending key.
  void validate() const;

  bool operator==(const Scenario &) const = default;
};

/// Parses and validates a TOML scenario. Missing keys take the defaults
/// above; unknown keys are errors. Throws ParseError for malformed TOML and
/// ValidationError for bad content.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path &path);

/// TOML text that parses back to an equal Scenario.
std::string serialize_scenario(const Scenario &scenario);

} // namespace mforge
