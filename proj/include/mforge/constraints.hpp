#pragma once

#include "mforge/curves.hpp"
#include "mforge/fem.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mforge {

/// u o phi and the normal derivative of u along the world normal R(alpha) nu,
/// sampled at the quadrature points of one reference curve.
struct TraceSamples {
  Eigen::VectorXd value;
  Eigen::VectorXd normal;
};

/// eta = (y1, y2, 1) and its normal derivative (nu1, nu2, 0) at the curve
/// quadrature points, with the quadrature weights.
struct RigidModeBasis {
  Eigen::MatrixX3d eta;
  Eigen::MatrixX3d deta;
  Eigen::VectorXd weights;
};

RigidModeBasis rigid_modes(const CurveQuadrature &quad);

/// Throws OutOfDomain when a mapped curve point leaves the box.
TraceSamples trace(const MembraneField &field, const RigidPose &pose, const CurveQuadrature &quad);

/// Gram matrix <eta_k, eta_l> in L2 of the reference curve. Throws
/// SingularGram when its condition number exceeds 1e12.
Eigen::Matrix3d gram(const CurveQuadrature &quad);
Eigen::Matrix3d gram(const RigidModeBasis &basis);

/// (v1 - C G^-1 C* v1, v2 - C~ G^-1 C* v1).
TraceSamples project(const TraceSamples &v, const RigidModeBasis &basis);

/// gamma = G^-1 C* v1: the rigid-mode coefficients carried by a value trace.
Eigen::Vector3d recover_gamma(const Eigen::VectorXd &v1, const RigidModeBasis &basis);

/// L2 norm of (v1, v2) on the reference curve.
double trace_norm(const TraceSamples &v, const Eigen::VectorXd &weights);

/// Residual T(p)u - g of a field against sampled boundary data.
TraceSamples trace_residual(const TraceSamples &t, const BoundarySamples &g);

/// Penalty scaling epsilon0 = beta0 h^3, epsilon1 = beta1 h.
struct PenaltyWeights {
  double epsilon0 = 0.0;
  double epsilon1 = 0.0;
};
PenaltyWeights penalty_weights(const GridSpace &space, double beta0, double beta1);

/// Quadratic penalty of the parametric boundary conditions.
///
/// Unknowns are the FE coefficients followed by gamma (3 per particle). The
/// penalized objective is x^T A x / 2 - b^T x + const with
///   A = sum_i sum_k w_k [ r0 r0^T / eps0 + r1 r1^T / eps1 ],
/// r0 = (value row of u, -eta), r1 = (normal row of u, -deta).
struct PenaltySystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  /// Index of gamma_{i,0} for particle i is gamma_offset + 3 i.
  int gamma_offset = 0;
  /// sum_k w_k (g0^2 / eps0 + g1^2 / eps1), so the penalty equals
  /// x^T A x - 2 b^T x + constant.
  double constant = 0.0;
};

/// `freeze_tilt[i]` pins gamma_{i,1} = gamma_{i,2} = 0 (only height offset
/// free). An empty vector means no particle is frozen.
PenaltySystem assemble_penalty(const GridSpace &space, const Configuration &config,
                               const std::vector<ParticleShape> &shapes,
                               const std::vector<CurveQuadrature> &quads,
                               const PenaltyWeights &eps,
                               const std::vector<bool> &freeze_tilt = {});

/// Penalty of a clamped circle (u = du/dn = 0, no free modes) of the given
/// radius around `center`; used for disk-shaped membrane domains.
SparseMatrix assemble_clamped_circle(const GridSpace &space, const Vec2 &center, double radius,
                                     int samples, const PenaltyWeights &eps);

} // namespace mforge
