#pragma once

#include "mforge/shape_derivative.hpp"
#include "mforge/solve.hpp"
#include "mforge/vectorfield.hpp"

#include <array>
#include <functional>
#include <optional>
#include <vector>

namespace mforge {

// ---- finite differences -------------------------------------------------

using EnergyFunction = std::function<double(const Configuration &)>;

/// Length used to scale default steps: the larger box side.
double configuration_scale(const Box &box);

/// 1e-3 * configuration_scale(box).
double default_fd_step(const Box &box);

/// (J(p + delta e) - J(p - delta e)) / (2 delta) for an arbitrary energy.
double fd_derivative(const EnergyFunction &energy, const Configuration &config,
                     const Eigen::VectorXd &e, double delta);

/// Central difference of the discrete interaction energy with two fresh
/// solves. Throws Infeasible when p +- delta e leaves the admissible set.
double fd_derivative(const ProblemSpec &spec, const Configuration &config, const Eigen::VectorXd &e,
                     std::optional<double> delta = std::nullopt, int jobs = 1);

/// Central differences along all 3N canonical directions, probes run on
/// `jobs` threads.
Eigen::VectorXd fd_gradient(const ProblemSpec &spec, const Configuration &config,
                            std::optional<double> delta = std::nullopt, int jobs = 1);

/// FD values at delta, delta/2, delta/4 and the Richardson extrapolation of
/// the last two. `shrink` = |d(delta) - d(delta/2)| / |d(delta/2) - d(delta/4)|,
/// about 4 for a smooth energy.
struct RichardsonResult {
  std::array<double, 3> values{};
  double extrapolated = 0.0;
  double shrink = 0.0;
};
RichardsonResult fd_richardson(const EnergyFunction &energy, const Configuration &config,
                               const Eigen::VectorXd &e, double delta);

// ---- flow map -----------------------------------------------------------

struct FlowMapResult {
  std::vector<Vec2> points;
  /// D X(q, x) per point; empty unless requested.
  std::vector<Mat2> jacobians;
  /// RK4 steps taken per point.
  std::vector<int> steps;
  /// Max distance of flowed curve samples to the moved curves (flow_curves only).
  double curve_residual = 0.0;
};

/// Classical RK4 for dx/dt = V(t, q, x) on t in [0, 1] with uniform steps,
/// the field rebuilt at p + t q at every stage. With `jacobian`, also
/// integrates dJ/dt = DV J from J(0) = I. Throws Infeasible.
FlowMapResult flow_map(const Configuration &config, const std::vector<ParticleShape> &shapes,
                       const Box &box, const Eigen::VectorXd &q, const std::vector<Vec2> &points,
                       int steps, const CutoffFractions &fractions = {}, bool jacobian = false);

/// Flows `samples` points of every curve Gamma_i(p_i) and measures their
/// distance to Gamma_i(p_i + q_i).
FlowMapResult flow_curves(const Configuration &config, const std::vector<ParticleShape> &shapes,
                          const Box &box, const Eigen::VectorXd &q, int steps, int samples = 128,
                          const CutoffFractions &fractions = {});

/// Distance of a world point to the curve of a placed particle, to first
/// order in the level-set value.
double curve_distance(const ParticleShape &shape, const RigidPose &pose, const Vec2 &x);

/// Max deviation between the traces T(p) u and the traces at p + q of
/// u o X(q)^-1, reconstructed from flowed curve points and flowed Jacobians.
struct TracePreservation {
  double value = 0.0;
  double normal = 0.0;
  double position = 0.0;
};
TracePreservation trace_preservation(const ProblemSpec &spec, const MembraneSolution &solution,
                                     const Eigen::VectorXd &q, int steps, int samples = 128,
                                     const CutoffFractions &fractions = {});

// ---- transformed energy -------------------------------------------------

/// Smooth map with its first and second derivatives; hess[a] = D^2 X_a.
struct SmoothMap {
  std::function<Vec2(const Vec2 &)> value;
  std::function<Mat2(const Vec2 &)> jacobian;
  std::function<std::array<Mat2, 2>(const Vec2 &)> hessian;
};

struct Diffeomorphism {
  SmoothMap forward;
  SmoothMap inverse;

  static Diffeomorphism identity();
  /// x -> m x + b.
  static Diffeomorphism affine(const Mat2 &m, const Vec2 &b);
  static Diffeomorphism rotation(double angle, const Vec2 &center);
  /// (x, y) -> (x + a y^2, y).
  static Diffeomorphism shear(double a);
};

using ScalarField = std::function<FieldSample(const Vec2 &)>;

/// 1/2 int over Omega_1 of kappa div(A grad u)^2 / det DX + sigma grad u^T A grad u,
/// A = det DX DX^-1 DX^-T. Throws DegenerateJacobian when det DX <= 0 at a
/// quadrature point.
double transformed_energy(const ScalarField &u, const Diffeomorphism &x,
                          const std::vector<QuadPoint> &omega1, double kappa, double sigma);

/// 1/2 int over Omega_2 = X(Omega_1) of kappa Lap(u o X^-1)^2 + sigma |grad(u o X^-1)|^2.
double pushed_energy(const ScalarField &u, const Diffeomorphism &x,
                     const std::vector<QuadPoint> &omega2, double kappa, double sigma);

/// Tensor Gauss rule (order points per direction) on the parallelogram
/// origin + s e1 + t e2, s, t in [0, 1], split into cells x cells.
std::vector<QuadPoint> parallelogram_gauss(const Vec2 &origin, const Vec2 &e1, const Vec2 &e2,
                                           int cells, int order);

/// Gauss rule on {(x, y) : y0 <= y <= y1, lo(y) <= x <= hi(y)}.
std::vector<QuadPoint> strip_gauss(double y0, double y1, const std::function<double(double)> &lo,
                                   const std::function<double(double)> &hi, int cells, int order);

// ---- matrix calculus ----------------------------------------------------

struct MatrixPath {
  std::function<Mat2(double)> m;
  std::function<Mat2(double)> dm;
};

/// r1 = |d/dt det M - det M tr(M^-1 M')|, r2 = ||d/dt M^-1 + M^-1 M' M^-1||,
/// r3 = |d/dt tr M - tr M'|, with d/dt by central differences. Throws
/// SingularMatrix when M(t) is not invertible.
std::array<double, 3> matrix_identity_residuals(const MatrixPath &path, double t, double delta);

// ---- error bound --------------------------------------------------------

/// One case of the discrepancy bound between a fine solution u and a coarse
/// one u~ for the same direction and velocity field.
struct ErrorBoundSample {
  double discrepancy = 0.0;
  double velocity_c2 = 0.0;
  double sum_h2 = 0.0;
  double diff_h2 = 0.0;
  /// discrepancy / (velocity_c2 sum_h2 diff_h2).
  double constant = 0.0;
};

/// H2 norms are taken over the membrane part of the fine cut quadrature.
ErrorBoundSample error_bound_sample(const ProblemSpec &fine, const ProblemSpec &coarse,
                                    const Configuration &config, const Eigen::VectorXd &e,
                                    const CutoffFractions &fractions = {});

} // namespace mforge
