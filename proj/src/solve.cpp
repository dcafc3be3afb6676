#include "mforge/solve.hpp"

#include "mforge/errors.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#ifdef MFORGE_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

#include <cmath>
#include <numbers>

namespace mforge {

void ProblemSpec::validate() const {
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");
  if (sigma < 0.0) throw ValidationError("sigma must be non-negative");
  if (nx < 4 || ny < 4) throw ValidationError("grid needs nx, ny >= 4");
  if (!(beta0 > 0.0 && beta1 > 0.0)) throw ValidationError("penalty betas must be positive");
  if (!(interior_weight > 0.0)) throw ValidationError("interior_weight must be positive");
  if (curve_samples < 16 || curve_samples % 2 != 0) {
    throw ValidationError("curve_samples must be even and >= 16");
  }
  if (subdiv < 1) throw ValidationError("subdiv must be >= 1");
  if (!freeze_tilt.empty() && freeze_tilt.size() != shapes.size()) {
    throw MismatchedLengths("freeze_tilt needs one flag per particle");
  }
}

std::string linear_solver_backend() {
#ifdef MFORGE_HAVE_CHOLMOD
  return "CHOLMOD " + std::to_string(CHOLMOD_MAIN_VERSION) + "." + std::to_string(CHOLMOD_SUB_VERSION) + "." +
         std::to_string(CHOLMOD_SUBSUB_VERSION);
#else
  return "Eigen SimplicialLDLT";
#endif
}

GridSpace ProblemSpec::space() const { return build_space(box, nx, ny); }

int effective_curve_samples(const ProblemSpec &spec, const ParticleShape &shape) {
  const double length = discretize_shape(shape, 64).length();
  const double h = std::min(spec.box.width() / spec.nx, spec.box.height() / spec.ny);
  int n = 2 * static_cast<int>(std::ceil(0.5 * kCurvePointsPerCell * length / h));
  return std::max(n, spec.curve_samples);
}

std::vector<CurveQuadrature> particle_quadratures(const ProblemSpec &spec) {
  std::vector<CurveQuadrature> q;
  q.reserve(spec.shapes.size());
  for (const auto &s : spec.shapes) q.push_back(discretize_shape(s, effective_curve_samples(spec, s)));
  return q;
}

void require_feasible(const ProblemSpec &spec, const Configuration &config) {
  if (config.size() != spec.shapes.size()) {
    throw MismatchedLengths("configuration has " + std::to_string(config.size()) +
                            " poses for " + std::to_string(spec.shapes.size()) + " shapes");
  }
  if (config.empty()) return;
  const auto c = configuration_clearance(config, spec.shapes, spec.box);
  const double tol = clearance_tolerance(spec.shapes);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!(c[i] > tol)) {
      throw Infeasible("particle " + std::to_string(i) + " has clearance " + std::to_string(c[i]));
    }
  }
}

namespace {

// Rows/columns of the free unknowns: all DOFs of interior grid nodes and
// every gamma entry. The map is monotone, so compressed columns stay sorted.
std::vector<int> free_map(const GridSpace &space, int total, int &nfree) {
  std::vector<int> map(static_cast<std::size_t>(total), -1);
  nfree = 0;
  for (int j = 0; j <= space.ny; ++j) {
    for (int i = 0; i <= space.nx; ++i) {
      if (space.is_boundary_node(i, j)) continue;
      const int n = space.node(i, j);
      for (int k = 0; k < 4; ++k) map[static_cast<std::size_t>(4 * n + k)] = -2;
    }
  }
  for (int g = space.total_dofs(); g < total; ++g) map[static_cast<std::size_t>(g)] = -2;
  for (auto &m : map) {
    if (m == -2) m = nfree++;
  }
  return map;
}

SparseMatrix restrict_matrix(const SparseMatrix &a, const std::vector<int> &map, int nfree) {
  SparseMatrix r(nfree, nfree);
  r.reserve(a.nonZeros());
  for (int col = 0; col < a.outerSize(); ++col) {
    const int fc = map[static_cast<std::size_t>(col)];
    if (fc < 0) continue;
    r.startVec(fc);
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
      const int fr = map[static_cast<std::size_t>(it.row())];
      if (fr >= 0) r.insertBack(fr, fc) = it.value();
    }
  }
  r.finalize();
  return r;
}

Eigen::VectorXd solve_spd(const SparseMatrix &a, const Eigen::VectorXd &b, const ProblemSpec &spec,
                          int &iterations) {
  iterations = 0;
  if (spec.solver == SolverKind::ConjugateGradient) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(spec.cg_tolerance);
    cg.setMaxIterations(spec.cg_max_iterations);
    cg.compute(a);
    Eigen::VectorXd x = cg.solve(b);
    iterations = static_cast<int>(cg.iterations());
    if (cg.info() != Eigen::Success) {
      throw SolverDivergence("conjugate gradient stopped after " + std::to_string(iterations) +
                             " iterations at relative residual " + std::to_string(cg.error()));
    }
    return x;
  }
#ifdef MFORGE_HAVE_CHOLMOD
  {
    Eigen::CholmodSupernodalLLT<SparseMatrix> llt;
    llt.compute(a);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd x = llt.solve(b);
      if (llt.info() == Eigen::Success && x.allFinite()) return x;
    }
  }
#endif
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  ldlt.compute(a);
  if (ldlt.info() != Eigen::Success) throw SolverDivergence("sparse factorization failed");
  Eigen::VectorXd x = ldlt.solve(b);
  if (!x.allFinite()) throw SolverDivergence("sparse solve produced non-finite values");
  return x;
}

} // namespace

MembraneSolution minimize_membrane(const ProblemSpec &spec, const Configuration &config) {
  spec.validate();
  require_feasible(spec, config);
  const GridSpace space = spec.space();
  const int np = static_cast<int>(config.size());
  const int ndofs = space.total_dofs();
  const int total = ndofs + 3 * np;

  MembraneSolution sol;
  sol.config = config;
  sol.field = MembraneField(space);
  sol.gamma = Eigen::MatrixX3d::Zero(np, 3);
  sol.quad = cut_quadrature(space, config, spec.shapes, spec.subdiv);
  if (np == 0 && !spec.box.disk_radius) return sol;

  const auto quads = particle_quadratures(spec);
  const PenaltyWeights eps = penalty_weights(space, spec.beta0, spec.beta1);
  PenaltySystem pen = assemble_penalty(space, config, spec.shapes, quads, eps, spec.freeze_tilt);

  SparseMatrix a = assemble_bending(space, spec.kappa, spec.sigma, sol.quad, spec.interior_weight);
  if (spec.box.disk_radius) {
    const double r = *spec.box.disk_radius;
    int samples = 8 * static_cast<int>(std::ceil(2.0 * std::numbers::pi * r / space.h()));
    samples = std::max(samples + samples % 2, spec.curve_samples);
    a += assemble_clamped_circle(space, spec.box.center(), r, samples, eps);
  }
  a.conservativeResize(total, total);
  a += pen.matrix;

  int nfree = 0;
  const auto map = free_map(space, total, nfree);
  const SparseMatrix af = restrict_matrix(a, map, nfree);
  Eigen::VectorXd bf(nfree);
  for (int g = 0; g < total; ++g) {
    const int f = map[static_cast<std::size_t>(g)];
    if (f >= 0) bf[f] = pen.rhs[g];
  }
  const Eigen::VectorXd xf = solve_spd(af, bf, spec, sol.solver_iterations);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(total);
  for (int g = 0; g < total; ++g) {
    const int f = map[static_cast<std::size_t>(g)];
    if (f >= 0) x[g] = xf[f];
  }
  sol.field.coefficients = x.head(ndofs);
  for (int i = 0; i < np; ++i) sol.gamma.row(i) = x.segment<3>(ndofs + 3 * i).transpose();
  sol.energy = membrane_energy(sol.field, sol.quad, spec.kappa, spec.sigma);

  for (int i = 0; i < np; ++i) {
    const auto &q = quads[static_cast<std::size_t>(i)];
    const RigidModeBasis basis = rigid_modes(q);
    const TraceSamples res = trace_residual(trace(sol.field, config.poses[static_cast<std::size_t>(i)], q),
                                            boundary_data(spec.shapes[static_cast<std::size_t>(i)], q));
    ConstraintResidual cr;
    cr.projected = trace_norm(project(res, basis), basis.weights);
    const Eigen::Vector3d g = sol.gamma.row(i).transpose();
    const Eigen::VectorXd rv = res.value - basis.eta * g;
    const Eigen::VectorXd rn = res.normal - basis.deta * g;
    cr.value = std::sqrt(basis.weights.dot(rv.cwiseAbs2()));
    cr.normal = std::sqrt(basis.weights.dot(rn.cwiseAbs2()));
    sol.residuals.push_back(cr);
  }
  return sol;
}

double interaction_energy(const ProblemSpec &spec, const Configuration &config) {
  return minimize_membrane(spec, config).energy;
}

} // namespace mforge
