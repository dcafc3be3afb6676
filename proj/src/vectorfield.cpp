#include "mforge/vectorfield.hpp"

#include "mforge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mforge {

CutoffSample cutoff(double r, double r1, double r2) {
  if (r <= r1) return {1.0, 0.0, 0.0};
  if (r >= r2) return {0.0, 0.0, 0.0};
  const double w = r2 - r1;
  const double t = (r - r1) / w;
  const double t2 = t * t;
  const double s = t2 * t * (10.0 - 15.0 * t + 6.0 * t2);
  const double ds = 30.0 * t2 * (1.0 - t) * (1.0 - t);
  const double dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
  return {1.0 - s, -ds / w, -dds / (w * w)};
}

std::vector<double> velocity_gaps(const Configuration &config,
                                  const std::vector<ParticleShape> &shapes, const Box &box,
                                  const std::vector<bool> &active) {
  const std::size_t n = shapes.size();
  if (config.size() != n || active.size() != n) {
    throw MismatchedLengths("configuration, shapes and activity flags differ in length");
  }
  std::vector<double> gap(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 c = config.poses[i].center();
    const double rb = shapes[i].bounding_radius();
    double g;
    if (box.disk_radius) {
      g = *box.disk_radius - (c - box.center()).norm();
    } else {
      g = std::min({c.x() - box.xmin, box.xmax - c.x(), c.y() - box.ymin, box.ymax - c.y()});
    }
    gap[i] = g - rb;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double pair = (c - config.poses[j].center()).norm() - rb - shapes[j].bounding_radius();
      if (active[j]) pair *= 0.5;
      gap[i] = std::min(gap[i], pair);
    }
  }
  return gap;
}

VelocityField build_velocity(const Configuration &config, const std::vector<ParticleShape> &shapes,
                             const Box &box, const Eigen::VectorXd &direction,
                             const CutoffFractions &fractions) {
  const std::size_t n = shapes.size();
  if (config.size() != n) throw MismatchedLengths("configuration and shapes differ in length");
  if (direction.size() != static_cast<Eigen::Index>(3 * n)) {
    throw MismatchedLengths("direction needs 3 entries per particle");
  }
  if (!(fractions.f1 > 0.0 && fractions.f1 < fractions.f2 && fractions.f2 < 1.0)) {
    throw ValidationError("cutoff fractions need 0 < f1 < f2 < 1");
  }
  std::vector<bool> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = direction.segment<3>(3 * i).squaredNorm() > 0.0;
  const auto gap = velocity_gaps(config, shapes, box, active);

  VelocityField field;
  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i]) continue;
    if (!(gap[i] > 0.0)) {
      throw Infeasible("no free gap around the bounding circle of particle " + std::to_string(i));
    }
    VelocityComponent c;
    c.particle = static_cast<int>(i);
    c.e = direction.segment<3>(3 * i);
    c.center = config.poses[i].center();
    c.radius = shapes[i].bounding_radius();
    c.r1 = c.radius + fractions.f1 * gap[i];
    c.r2 = c.radius + fractions.f2 * gap[i];
    field.components.push_back(c);
  }
  // supports must not overlap each other
  for (std::size_t a = 0; a < field.components.size(); ++a) {
    for (std::size_t b = a + 1; b < field.components.size(); ++b) {
      const auto &ca = field.components[a];
      const auto &cb = field.components[b];
      if ((ca.center - cb.center).norm() <= ca.r2 + cb.r2) {
        throw Infeasible("velocity supports of particles " + std::to_string(ca.particle) +
                         " and " + std::to_string(cb.particle) + " overlap");
      }
    }
  }
  return field;
}

bool VelocityField::in_annulus(const Vec2 &x) const {
  for (const auto &c : components) {
    const double r = (x - c.center).norm();
    if (r > c.r1 && r < c.r2) return true;
  }
  return false;
}

VelocitySample eval_velocity(const VelocityField &field, const Vec2 &x) {
  VelocitySample s;
  const Mat2 jm = rotation_generator();
  for (const auto &c : field.components) {
    const Vec2 d = x - c.center;
    const double r = d.norm();
    if (r >= c.r2) continue;
    const Vec2 w = c.e.head<2>() + c.e[2] * (jm * d);
    const Mat2 dw = c.e[2] * jm;
    const CutoffSample k = cutoff(r, c.r1, c.r2);
    s.v += k.chi * w;
    s.dv += k.chi * dw;
    if (k.d1 == 0.0 && k.d2 == 0.0) continue;
    // r > r1 > 0 here, so the radial unit vector is defined
    const Vec2 xh = d / r;
    const Vec2 gchi = k.d1 * xh;
    const Mat2 hchi = k.d2 * xh * xh.transpose() +
                      (k.d1 / r) * (Mat2::Identity() - xh * xh.transpose());
    s.dv += w * gchi.transpose();
    for (int a = 0; a < 2; ++a) {
      const Vec2 dwa = dw.row(a).transpose();
      s.hess[a] += w[a] * hchi + dwa * gchi.transpose() + gchi * dwa.transpose();
      s.laplacian[a] += w[a] * hchi.trace() + 2.0 * gchi.dot(dwa);
    }
  }
  return s;
}

double VelocityField::c2_norm() const {
  constexpr int kRadial = 64;
  constexpr int kAngular = 128;
  double v0 = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  for (const auto &c : components) {
    for (int ir = 0; ir <= kRadial; ++ir) {
      // the rigid disk's largest values sit on its rim, so sample [r1, r2]
      const double r = c.r1 + (c.r2 - c.r1) * ir / kRadial;
      for (int ia = 0; ia < kAngular; ++ia) {
        const double th = 2.0 * std::numbers::pi * ia / kAngular;
        const auto s = eval_velocity(*this, c.center + r * Vec2(std::cos(th), std::sin(th)));
        v0 = std::max(v0, s.v.norm());
        v1 = std::max(v1, s.dv.norm());
        v2 = std::max(v2, std::sqrt(s.hess[0].squaredNorm() + s.hess[1].squaredNorm()));
      }
    }
  }
  return v0 + v1 + v2;
}

Vec2 time_velocity(const Configuration &config, const std::vector<ParticleShape> &shapes,
                   const Box &box, const Eigen::VectorXd &q, double t, const Vec2 &x,
                   const CutoffFractions &fractions) {
  if (q.squaredNorm() == 0.0) return Vec2::Zero();
  return eval_velocity(build_velocity(config.shifted(q, t), shapes, box, q, fractions), x).v;
}

} // namespace mforge
