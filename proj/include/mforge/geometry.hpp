#pragma once

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace mforge {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

class ParticleShape;

/// Planar rigid motion of a particle: translation (x1, x2), rotation alpha3.
struct RigidPose {
  double x1 = 0.0;
  double x2 = 0.0;
  double alpha3 = 0.0;

  RigidPose() = default;
  RigidPose(double x1_, double x2_, double alpha3_);

  Vec2 center() const { return {x1, x2}; }
  /// Stored angle wrapped into (-pi, pi].
  static double wrap_angle(double a);
  bool operator==(const RigidPose &) const = default;
};

/// Rotation matrix R(alpha).
Mat2 rotation(double alpha);

/// 90 degree rotation generator [[0,-1],[1,0]].
inline Mat2 rotation_generator() {
  Mat2 j;
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

/// Forward map R(alpha3) y + (x1, x2), or its inverse R(-alpha3)(y - (x1, x2)).
Vec2 rigid_map(const RigidPose &pose, const Vec2 &y, bool inverse = false);

/// Particle poses; the outer boundary (pose 0) is implicit and not stored.
struct Configuration {
  std::vector<RigidPose> poses;

  std::size_t size() const { return poses.size(); }
  bool empty() const { return poses.empty(); }

  /// Flattened (x1, x2, alpha3) per particle.
  Eigen::VectorXd flat() const;
  static Configuration from_flat(const Eigen::VectorXd &v);
  /// p + t q, angles taken literally (no wrapping of the increment).
  Configuration shifted(const Eigen::VectorXd &direction, double t) const;

  bool operator==(const Configuration &) const = default;
};

/// Rectangular computational box, optionally restricted to its inscribed disk.
struct Box {
  double xmin = -10.0;
  double xmax = 10.0;
  double ymin = -10.0;
  double ymax = 10.0;
  /// When set, the membrane domain is the disk of this radius centered in
  /// the box; the clamped outer boundary is then the circle.
  std::optional<double> disk_radius;

  Box() = default;
  Box(double xmin_, double xmax_, double ymin_, double ymax_,
      std::optional<double> disk = std::nullopt);

  Vec2 center() const { return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)}; }
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  bool contains(const Vec2 &x, double slack = 0.0) const;
  /// Signed distance to the membrane outer boundary, positive inside.
  double signed_distance(const Vec2 &x) const;
  double area() const;

  bool operator==(const Box &) const = default;
};

/// Default number of polyline samples per curve for the feasibility gate.
inline constexpr int kClearanceSamples = 512;

/// Per-particle clearance: minimum sampled distance of each curve to every
/// other curve and to the outer boundary. Overlaps are reported negative.
std::vector<double> configuration_clearance(const Configuration &config,
                                            const std::vector<ParticleShape> &shapes,
                                            const Box &box,
                                            int samples = kClearanceSamples);

/// Sampling resolution below which a clearance counts as contact.
double clearance_tolerance(const std::vector<ParticleShape> &shapes,
                           int samples = kClearanceSamples);

bool is_feasible(const Configuration &config, const std::vector<ParticleShape> &shapes,
                 const Box &box, int samples = kClearanceSamples);

} // namespace mforge
