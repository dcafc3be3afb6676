#pragma once

#include "mforge/solve.hpp"
#include "mforge/vectorfield.hpp"

#include <vector>

namespace mforge {

/// div(V) I - DV - DV^T.
Mat2 aprime(const Mat2 &dv, double divv);

/// Split of the volume-form derivative into its bending and tension parts.
struct DerivativeTerms {
  double kappa_term = 0.0;
  double sigma_term = 0.0;
  double total() const { return kappa_term + sigma_term; }
};

/// Quadrature of the transition annuli of a velocity field: every element
/// touching an annulus is split into sub-cells no wider than 1/16 of the
/// annulus width (at least 8 per side), each carrying a 3x3 Gauss rule. The
/// integrand has kinks on the circles r1 and r2, so coarser sub-cells leave
/// a quadrature error above the discretization error. Sub-cells that miss
/// the annulus are dropped since the integrand vanishes there.
std::vector<QuadPoint> annulus_quadrature(const GridSpace &space, const VelocityField &field);

/// Integrand of the derivative at one point.
DerivativeTerms derivative_integrand(const FieldSample &u, const VelocitySample &v, double kappa,
                                     double sigma);

DerivativeTerms directional_terms(const MembraneField &field, const VelocityField &v,
                                  const std::vector<QuadPoint> &quad, double kappa, double sigma);

/// d J / d e for the direction encoded in `v`, on the annulus quadrature.
double directional_derivative(const MembraneField &field, const VelocityField &v, double kappa,
                              double sigma);

struct GradientResult {
  /// (dJ/dx1, dJ/dx2, dJ/dalpha3) per particle.
  Eigen::VectorXd gradient;
  /// Per canonical direction 3 i + k.
  std::vector<DerivativeTerms> terms;
  std::vector<double> velocity_c2;

  Eigen::MatrixX3d as_matrix() const;
};

/// Gradient from the 3N canonical directions with single-particle supports,
/// reusing one solution. `jobs` bounds the worker threads.
GradientResult gradient(const ProblemSpec &spec, const MembraneSolution &solution,
                        const CutoffFractions &fractions = {}, int jobs = 1);

} // namespace mforge
