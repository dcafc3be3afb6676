#include "mforge/flow.hpp"

#include "mforge/errors.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace mforge {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Evaluated {
  MembraneSolution solution;
  Eigen::VectorXd gradient;
};

Evaluated evaluate(const ProblemSpec &spec, const Configuration &config, const FlowOptions &options) {
  Evaluated e{minimize_membrane(spec, config), {}};
  e.gradient = gradient(spec, e.solution, options.fractions, options.jobs).gradient;
  return e;
}

} // namespace

std::string to_string(FlowTermination reason) {
  switch (reason) {
  case FlowTermination::Converged:
    return "converged";
  case FlowTermination::Budget:
    return "budget";
  case FlowTermination::Blocked:
    return "blocked";
  }
  return "unknown";
}

void FlowOptions::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("flow tau must be positive");
  if (max_steps < 0) throw ValidationError("flow steps must be non-negative");
  if (!(grad_tol >= 0.0)) throw ValidationError("flow tol must be non-negative");
  if (max_halvings < 0) throw ValidationError("flow max_halvings must be non-negative");
  if (jobs < 1) throw ValidationError("jobs must be at least 1");
}

FlowTrajectory gradient_flow(const ProblemSpec &spec, const Configuration &p0, const FlowOptions &options) {
  options.validate();
  if (p0.size() != spec.shapes.size()) {
    throw MismatchedLengths("configuration has " + std::to_string(p0.size()) + " poses for " +
                            std::to_string(spec.shapes.size()) + " shapes");
  }
  require_feasible(spec, p0);

  FlowTrajectory traj;
  double tau = options.tau;
  Evaluated cur = evaluate(spec, p0, options);
  traj.states.push_back({0, p0, cur.solution.energy, cur.gradient.norm(), tau});

  for (int k = 1;; ++k) {
    const FlowState &last = traj.states.back();
    if (last.grad_norm <= options.grad_tol) {
      traj.reason = FlowTermination::Converged;
      return traj;
    }
    if (k > options.max_steps) {
      traj.reason = FlowTermination::Budget;
      return traj;
    }
    bool accepted = false;
    for (int attempt = 0; attempt <= options.max_halvings; ++attempt) {
      const Configuration trial = last.config.shifted(cur.gradient, -tau);
      try {
        require_feasible(spec, trial);
        Evaluated next = evaluate(spec, trial, options);
        const double limit = last.energy + options.increase_tol * std::abs(last.energy);
        if (std::isfinite(next.solution.energy) && next.solution.energy <= limit) {
          cur = std::move(next);
          accepted = true;
        }
      } catch (const Infeasible &) {
      }
      if (accepted) break;
      ++traj.rejections;
      tau *= 0.5;
    }
    if (!accepted) {
      traj.reason = FlowTermination::Blocked;
      return traj;
    }
    traj.states.push_back({k, cur.solution.config, cur.solution.energy, cur.gradient.norm(), tau});
  }
}

void write_trajectory_csv(std::ostream &out, const FlowTrajectory &trajectory) {
  const std::size_t n = trajectory.states.empty() ? 0 : trajectory.states.front().config.size();
  out << "k";
  for (std::size_t i = 0; i < n; ++i) out << ",x1_" << i << ",x2_" << i << ",alpha3_" << i;
  out << ",energy,grad_norm,tau\r\n";
  for (const auto &s : trajectory.states) {
    out << s.k;
    for (const auto &p : s.config.poses) out << ',' << num(p.x1) << ',' << num(p.x2) << ',' << num(p.alpha3);
    out << ',' << num(s.energy) << ',' << num(s.grad_norm) << ',' << num(s.tau) << "\r\n";
  }
}

} // namespace mforge
