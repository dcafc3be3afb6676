#include "mforge/errors.hpp"
#include "mforge/flow.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace mforge;

namespace {

ProblemSpec two_circles(int n) {
  ProblemSpec spec;
  spec.box = Box(-6, 6, -6, 6);
  spec.nx = spec.ny = n;
  const auto c = ParticleShape::circle(1, Expression("0"), Expression("1"));
  spec.shapes = {c, c};
  return spec;
}

Configuration pair_at(double r) { return Configuration{{RigidPose(-r / 2, 0, 0), RigidPose(r / 2, 0, 0)}}; }

std::string csv(const FlowTrajectory &t) {
  std::ostringstream s;
  write_trajectory_csv(s, t);
  return s.str();
}

} // namespace

TEST(Flow, CenteredCircleConvergesAtStepZero) {
  ProblemSpec spec;
  spec.box = Box(-4, 4, -4, 4);
  spec.nx = spec.ny = 32;
  spec.shapes = {ParticleShape::circle(1, Expression("0"), Expression("1"))};
  // default tol; the cut quadrature breaks the symmetry at the 1e-7 level
  const auto t = gradient_flow(spec, Configuration{{RigidPose()}});
  EXPECT_EQ(t.reason, FlowTermination::Converged);
  ASSERT_EQ(t.states.size(), 1u);
  EXPECT_EQ(t.states[0].k, 0);
}

TEST(Flow, InfeasibleStart) {
  const ProblemSpec spec = two_circles(16);
  EXPECT_THROW(gradient_flow(spec, pair_at(1.5)), Infeasible);
  EXPECT_THROW(gradient_flow(spec, Configuration{{RigidPose()}}), MismatchedLengths);
}

TEST(Flow, BadOptions) {
  const ProblemSpec spec = two_circles(16);
  FlowOptions opt;
  opt.tau = 0.0;
  EXPECT_THROW(gradient_flow(spec, pair_at(3.0), opt), ValidationError);
  opt = FlowOptions{};
  opt.max_steps = -1;
  EXPECT_THROW(gradient_flow(spec, pair_at(3.0), opt), ValidationError);
}

TEST(Flow, BudgetAndConsecutiveSteps) {
  const ProblemSpec spec = two_circles(32);
  FlowOptions opt;
  opt.max_steps = 3;
  opt.tau = 0.5;
  const auto t = gradient_flow(spec, pair_at(3.0), opt);
  EXPECT_EQ(t.reason, FlowTermination::Budget);
  ASSERT_EQ(t.states.size(), 4u);
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    EXPECT_EQ(t.states[k].k, static_cast<int>(k));
    EXPECT_TRUE(std::isfinite(t.states[k].energy));
  }
  // the pair repels at this distance
  EXPECT_GT(t.states.back().config.poses[1].x1, 1.5);
}

TEST(Flow, HalvingKeepsEnergyMonotone) {
  const ProblemSpec spec = two_circles(32);
  for (double tau : {50.0, 5.0, 0.5}) {
    FlowOptions opt;
    opt.max_steps = 4;
    opt.tau = tau;
    const auto t = gradient_flow(spec, pair_at(3.0), opt);
    ASSERT_GE(t.states.size(), 2u);
    for (std::size_t k = 1; k < t.states.size(); ++k) {
      EXPECT_LE(t.states[k].energy, t.states[k - 1].energy + 1e-10 * std::abs(t.states[k - 1].energy));
      EXPECT_LE(t.states[k].tau, t.states[k - 1].tau);
    }
    // a step of 50 pushes the particles through the wall
    if (tau == 50.0) EXPECT_GT(t.rejections, 0);
  }
}

TEST(Flow, BlockedWithoutHalvings) {
  const ProblemSpec spec = two_circles(32);
  FlowOptions opt;
  opt.tau = 50.0;
  opt.max_halvings = 0;
  const auto t = gradient_flow(spec, pair_at(3.0), opt);
  EXPECT_EQ(t.reason, FlowTermination::Blocked);
  EXPECT_EQ(t.states.size(), 1u);
  EXPECT_EQ(t.rejections, 1);
}

TEST(Flow, DeterministicCsv) {
  ProblemSpec spec = two_circles(32);
  spec.freeze_tilt = {true, false};
  FlowOptions opt;
  opt.max_steps = 2;
  opt.jobs = 3;
  const std::string a = csv(gradient_flow(spec, pair_at(3.2), opt));
  opt.jobs = 1;
  const std::string b = csv(gradient_flow(spec, pair_at(3.2), opt));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.substr(0, a.find("\r\n")), "k,x1_0,x2_0,alpha3_0,x1_1,x2_1,alpha3_1,energy,grad_norm,tau");
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 4);
}

TEST(Flow, TerminationNames) {
  EXPECT_EQ(to_string(FlowTermination::Converged), "converged");
  EXPECT_EQ(to_string(FlowTermination::Budget), "budget");
  EXPECT_EQ(to_string(FlowTermination::Blocked), "blocked");
}
