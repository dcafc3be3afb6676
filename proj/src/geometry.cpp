#include "mforge/geometry.hpp"

#include "mforge/curves.hpp"
#include "mforge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mforge {

RigidPose::RigidPose(double x1_, double x2_, double alpha3_)
    : x1(x1_), x2(x2_), alpha3(wrap_angle(alpha3_)) {}

double RigidPose::wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  if (a > -pi && a <= pi) return a;
  double w = std::remainder(a, 2.0 * pi);
  if (w <= -pi) w += 2.0 * pi;
  return w;
}

Mat2 rotation(double alpha) {
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

Vec2 rigid_map(const RigidPose &pose, const Vec2 &y, bool inverse) {
  if (inverse) return rotation(-pose.alpha3) * (y - pose.center());
  return rotation(pose.alpha3) * y + pose.center();
}

Eigen::VectorXd Configuration::flat() const {
  Eigen::VectorXd v(3 * poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    v[3 * i] = poses[i].x1;
    v[3 * i + 1] = poses[i].x2;
    v[3 * i + 2] = poses[i].alpha3;
  }
  return v;
}

Configuration Configuration::from_flat(const Eigen::VectorXd &v) {
  if (v.size() % 3 != 0) throw MismatchedLengths("flat configuration length not divisible by 3");
  Configuration c;
  for (Eigen::Index i = 0; i < v.size() / 3; ++i) {
    c.poses.emplace_back(v[3 * i], v[3 * i + 1], v[3 * i + 2]);
  }
  return c;
}

Configuration Configuration::shifted(const Eigen::VectorXd &direction, double t) const {
  if (direction.size() != static_cast<Eigen::Index>(3 * poses.size())) {
    throw MismatchedLengths("direction has " + std::to_string(direction.size()) +
                            " entries, configuration needs " + std::to_string(3 * poses.size()));
  }
  Configuration c;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    c.poses.emplace_back(poses[i].x1 + t * direction[3 * i], poses[i].x2 + t * direction[3 * i + 1],
                         poses[i].alpha3 + t * direction[3 * i + 2]);
  }
  return c;
}

Box::Box(double xmin_, double xmax_, double ymin_, double ymax_, std::optional<double> disk)
    : xmin(xmin_), xmax(xmax_), ymin(ymin_), ymax(ymax_), disk_radius(disk) {
  if (!(xmax > xmin && ymax > ymin)) throw ValidationError("box must have xmax > xmin, ymax > ymin");
  if (disk_radius) {
    if (!(*disk_radius > 0.0) || *disk_radius > 0.5 * std::min(width(), height()) + 1e-12) {
      throw ValidationError("disk_radius must be positive and fit inside the box");
    }
  }
}

bool Box::contains(const Vec2 &x, double slack) const {
  return x.x() >= xmin - slack && x.x() <= xmax + slack && x.y() >= ymin - slack &&
         x.y() <= ymax + slack;
}

double Box::signed_distance(const Vec2 &x) const {
  if (disk_radius) return *disk_radius - (x - center()).norm();
  const double dx = std::min(x.x() - xmin, xmax - x.x());
  const double dy = std::min(x.y() - ymin, ymax - x.y());
  return std::min(dx, dy);
}

double Box::area() const {
  if (disk_radius) return std::numbers::pi * *disk_radius * *disk_radius;
  return width() * height();
}

namespace {

std::vector<Vec2> world_samples(const ParticleShape &shape, const RigidPose &pose, int samples) {
  const CurveQuadrature q = discretize_shape(shape, samples);
  std::vector<Vec2> out;
  out.reserve(q.size());
  for (const auto &y : q.points) out.push_back(rigid_map(pose, y));
  return out;
}

// Deepest penetration of world points into particle (shape, pose); 0 if none.
double penetration(const std::vector<Vec2> &pts, const ParticleShape &shape, const RigidPose &pose) {
  double depth = 0.0;
  for (const auto &x : pts) {
    const LevelSample ls = shape.level(rigid_map(pose, x, true));
    if (ls.value > 0.0) {
      const double g = ls.grad.norm();
      depth = std::max(depth, g > 0.0 ? ls.value / g : shape.bounding_radius());
    }
  }
  return depth;
}

} // namespace

std::vector<double> configuration_clearance(const Configuration &config,
                                            const std::vector<ParticleShape> &shapes,
                                            const Box &box, int samples) {
  if (config.size() != shapes.size()) {
    throw MismatchedLengths("configuration has " + std::to_string(config.size()) +
                            " poses but " + std::to_string(shapes.size()) + " shapes");
  }
  const std::size_t n = shapes.size();
  std::vector<std::vector<Vec2>> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = world_samples(shapes[i], config.poses[i], samples);

  std::vector<double> clearance(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto &x : pts[i]) clearance[i] = std::min(clearance[i], box.signed_distance(x));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double centers = (config.poses[i].center() - config.poses[j].center()).norm();
      double d;
      if (centers > shapes[i].bounding_radius() + shapes[j].bounding_radius()) {
        // bounding circles apart: no overlap possible, plain sampled distance
        d = std::numeric_limits<double>::infinity();
        for (const auto &a : pts[i]) {
          for (const auto &b : pts[j]) d = std::min(d, (a - b).squaredNorm());
        }
        d = std::sqrt(d);
      } else {
        const double depth = std::max(penetration(pts[i], shapes[j], config.poses[j]),
                                      penetration(pts[j], shapes[i], config.poses[i]));
        if (depth > 0.0) {
          d = -depth;
        } else {
          d = std::numeric_limits<double>::infinity();
          for (const auto &a : pts[i]) {
            for (const auto &b : pts[j]) d = std::min(d, (a - b).squaredNorm());
          }
          d = std::sqrt(d);
        }
      }
      clearance[i] = std::min(clearance[i], d);
      clearance[j] = std::min(clearance[j], d);
    }
  }
  return clearance;
}

double clearance_tolerance(const std::vector<ParticleShape> &shapes, int samples) {
  double rmax = 0.0;
  for (const auto &s : shapes) rmax = std::max(rmax, s.bounding_radius());
  // half the largest chord between neighbouring samples
  return 0.5 * 2.0 * std::numbers::pi * rmax / samples;
}

bool is_feasible(const Configuration &config, const std::vector<ParticleShape> &shapes,
                 const Box &box, int samples) {
  const auto c = configuration_clearance(config, shapes, box, samples);
  const double tol = clearance_tolerance(shapes, samples);
  return std::all_of(c.begin(), c.end(), [tol](double v) { return v > tol; });
}

} // namespace mforge
