#pragma once

#include "mforge/shape_derivative.hpp"
#include "mforge/solve.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mforge {

enum class FlowTermination { Converged, Budget, Blocked };

std::string to_string(FlowTermination reason);

struct FlowOptions {
  double tau = 0.5;
  int max_steps = 100;
  double grad_tol = 1e-6;
  /// Rejections allowed per step before the flow stops as blocked.
  int max_halvings = 20;
  /// An accepted step may raise the energy by at most this times |J|.
  double increase_tol = 1e-10;
  CutoffFractions fractions;
  int jobs = 1;

  /// Throws ValidationError.
  void validate() const;
};

struct FlowState {
  int k = 0;
  Configuration config;
  double energy = 0.0;
  double grad_norm = 0.0;
  /// Step size that produced this state; the initial tau for k = 0.
  double tau = 0.0;
};

struct FlowTrajectory {
  std::vector<FlowState> states;
  FlowTermination reason = FlowTermination::Budget;
  /// Rejected trial steps over the whole run.
  int rejections = 0;
};

/// Explicit Euler p_{k+1} = p_k - tau grad J(p_k). A trial step that leaves
/// the admissible set or raises the energy beyond the tolerance is rejected
/// and tau halved; tau stays reduced afterwards. Throws Infeasible for p0,
/// solver errors propagate.
FlowTrajectory gradient_flow(const ProblemSpec &spec, const Configuration &p0,
                             const FlowOptions &options = {});

/// Header k, x1_0, x2_0, alpha3_0, ..., energy, grad_norm, tau; numbers in
/// %.17g so the text is reproducible bit for bit.
void write_trajectory_csv(std::ostream &out, const FlowTrajectory &trajectory);

} // namespace mforge
