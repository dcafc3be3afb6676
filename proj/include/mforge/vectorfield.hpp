#pragma once

#include "mforge/curves.hpp"
#include "mforge/geometry.hpp"

#include <Eigen/Core>

#include <array>
#include <vector>

namespace mforge {

/// Inner and outer cutoff radius as fractions of the free gap around a
/// particle's bounding circle.
struct CutoffFractions {
  double f1 = 0.25;
  double f2 = 0.75;
  bool operator==(const CutoffFractions &) const = default;
};

/// One blended rigid motion: chi(|x - c|) [(e1, e2) + e3 J (x - c)], with
/// chi = 1 for r <= r1, 0 for r >= r2 and a quintic smoothstep in between.
struct VelocityComponent {
  int particle = 0;
  Eigen::Vector3d e = Eigen::Vector3d::Zero();
  Vec2 center = Vec2::Zero();
  /// Bounding radius of the particle.
  double radius = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
};

struct VelocitySample {
  Vec2 v = Vec2::Zero();
  /// dv(a, j) = d V_a / d x_j.
  Mat2 dv = Mat2::Zero();
  Vec2 laplacian = Vec2::Zero();
  /// hess[a] = second derivatives of V_a.
  std::array<Mat2, 2> hess{Mat2::Zero(), Mat2::Zero()};

  double divergence() const { return dv.trace(); }
};

struct VelocityField {
  std::vector<VelocityComponent> components;

  /// True when x may have a nonzero velocity gradient, i.e. lies in some
  /// transition annulus r1 < |x - c| < r2.
  bool in_annulus(const Vec2 &x) const;
  /// sup |V| + sup ||DV||_F + sup ||D^2 V||_F, sampled on polar grids over
  /// every support.
  double c2_norm() const;
};

/// Cutoff profile 1 - s(t) and its first two derivatives in r.
struct CutoffSample {
  double chi = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};
CutoffSample cutoff(double r, double r1, double r2);

/// Free gap around each particle's bounding circle: distance to the outer
/// boundary and to the other bounding circles; pairs where both particles
/// move share the gap equally. Entries for inactive particles are unused.
std::vector<double> velocity_gaps(const Configuration &config,
                                  const std::vector<ParticleShape> &shapes, const Box &box,
                                  const std::vector<bool> &active);

/// `direction` holds (e1, e2, e3) per particle. Throws Infeasible when a
/// moving particle has no free gap, ValidationError on bad fractions or
/// lengths.
VelocityField build_velocity(const Configuration &config, const std::vector<ParticleShape> &shapes,
                             const Box &box, const Eigen::VectorXd &direction,
                             const CutoffFractions &fractions = {});

VelocitySample eval_velocity(const VelocityField &field, const Vec2 &x);

/// Time-dependent family: the field built at p + t q with direction q.
Vec2 time_velocity(const Configuration &config, const std::vector<ParticleShape> &shapes,
                   const Box &box, const Eigen::VectorXd &q, double t, const Vec2 &x,
                   const CutoffFractions &fractions = {});

} // namespace mforge
