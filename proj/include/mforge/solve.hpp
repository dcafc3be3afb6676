#pragma once

#include "mforge/constraints.hpp"
#include "mforge/curves.hpp"
#include "mforge/fem.hpp"

#include <string>
#include <vector>

namespace mforge {

enum class SolverKind { Direct, ConjugateGradient };

/// Everything that defines the discrete membrane problem except the poses.
struct ProblemSpec {
  Box box;
  std::vector<ParticleShape> shapes;
  double kappa = 1.0;
  double sigma = 0.0;
  int nx = 128;
  int ny = 128;
  double beta0 = 1e-4;
  /// A stiffer normal-derivative penalty locks the trace to the grid: the
  /// energy then wobbles with period h as a particle slides.
  double beta1 = 1e-2;
  /// Stiffness weight of the fictitious region (particle interiors, outside
  /// of a disk domain), relative to the membrane.
  double interior_weight = 1e-6;
  /// Lower bound on the points per particle curve; see effective_curve_samples.
  int curve_samples = 256;
  int subdiv = 8;
  /// Per particle; empty means none frozen.
  std::vector<bool> freeze_tilt;
  SolverKind solver = SolverKind::Direct;
  double cg_tolerance = 1e-10;
  int cg_max_iterations = 50000;

  /// Throws ValidationError.
  void validate() const;
  GridSpace space() const;
};

struct ConstraintResidual {
  /// ||P(Tu - g)|| in L2 of the reference curve.
  double projected = 0.0;
  /// L2 norms of u o phi - g0 - gamma.eta and du/dn o phi - g1 - gamma.deta.
  double value = 0.0;
  double normal = 0.0;
};

struct MembraneSolution {
  Configuration config;
  MembraneField field;
  /// One row (gamma1, gamma2, gamma3) per particle.
  Eigen::MatrixX3d gamma;
  /// Interaction energy: 1/2 int over Omega(p) of kappa (Lap u)^2 + sigma |grad u|^2.
  double energy = 0.0;
  std::vector<ConstraintResidual> residuals;
  CutQuadrature quad;
  int solver_iterations = 0;
};

/// Throws Infeasible when some clearance is within the sampling tolerance,
/// SolverDivergence when the linear solve fails.
MembraneSolution minimize_membrane(const ProblemSpec &spec, const Configuration &config);

/// Shorthand for minimize_membrane(...).energy.
double interaction_energy(const ProblemSpec &spec, const Configuration &config);

/// Throws Infeasible unless the configuration lies in the admissible set.
void require_feasible(const ProblemSpec &spec, const Configuration &config);

/// Name and version of the sparse direct solver compiled in.
std::string linear_solver_backend();

/// Penalty points per grid cell length along a curve.
inline constexpr double kCurvePointsPerCell = 12.0;

/// max(curve_samples, points needed for kCurvePointsPerCell per cell
/// length), rounded up to even. Sparse penalty points let the trace wiggle
/// between them and make the discrete energy rough in the poses.
int effective_curve_samples(const ProblemSpec &spec, const ParticleShape &shape);

/// Curve quadratures of all particles at their effective sample counts.
std::vector<CurveQuadrature> particle_quadratures(const ProblemSpec &spec);

} // namespace mforge
