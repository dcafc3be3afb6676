#include "mforge/curves.hpp"

#include "mforge/errors.hpp"

#include <cmath>
#include <numbers>

namespace mforge {

namespace {

double ipow(double base, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= base;
  return r;
}

constexpr int kRadialScanSteps = 400;
constexpr int kBoundingAngles = 1024;

} // namespace

ParticleShape ParticleShape::circle(double radius, Expression g0, Expression g1) {
  if (!(radius > 0.0)) throw ValidationError("circle radius must be positive");
  ParticleShape s;
  s.kind_ = ShapeKind::Circle;
  s.a_ = s.b_ = radius;
  s.g0_ = std::move(g0);
  s.g1_ = std::move(g1);
  s.finalize();
  return s;
}

ParticleShape ParticleShape::ellipse(double a, double b, Expression g0, Expression g1) {
  if (!(a > 0.0 && b > 0.0)) throw ValidationError("ellipse semi-axes must be positive");
  ParticleShape s;
  s.kind_ = ShapeKind::Ellipse;
  s.a_ = a;
  s.b_ = b;
  s.g0_ = std::move(g0);
  s.g1_ = std::move(g1);
  s.finalize();
  return s;
}

ParticleShape ParticleShape::implicit(std::vector<Monomial> terms, Expression g0, Expression g1,
                                      double search_radius) {
  if (terms.empty()) throw ValidationError("implicit shape needs at least one term");
  if (!(search_radius > 0.0)) throw ValidationError("search_radius must be positive");
  ParticleShape s;
  s.kind_ = ShapeKind::Implicit;
  s.terms_ = std::move(terms);
  for (const auto &t : s.terms_) {
    if (t.px < 0 || t.py < 0) throw ValidationError("implicit term exponents must be >= 0");
  }
  s.search_radius_ = search_radius;
  s.g0_ = std::move(g0);
  s.g1_ = std::move(g1);
  double at_origin = 0.0;
  for (const auto &t : s.terms_) {
    if (t.px == 0 && t.py == 0) at_origin += t.coeff;
  }
  if (at_origin == 0.0) {
    throw ValidationError("implicit level set vanishes at the origin; the reference origin "
                          "must lie strictly inside the particle");
  }
  s.sign_ = at_origin > 0.0 ? 1.0 : -1.0;
  s.finalize();
  return s;
}

ParticleShape ParticleShape::with_boundary_data(Expression g0, Expression g1) const {
  ParticleShape s = *this;
  s.g0_ = std::move(g0);
  s.g1_ = std::move(g1);
  return s;
}

void ParticleShape::finalize() {
  switch (kind_) {
  case ShapeKind::Circle:
    bounding_radius_ = a_;
    break;
  case ShapeKind::Ellipse:
    bounding_radius_ = std::max(a_, b_);
    break;
  case ShapeKind::Implicit: {
    double rmax = 0.0;
    for (int k = 0; k < kBoundingAngles; ++k) {
      rmax = std::max(rmax, radius_at(2.0 * std::numbers::pi * k / kBoundingAngles));
    }
    // between sampled angles the radius can exceed the sampled maximum slightly
    bounding_radius_ = rmax * 1.01;
    break;
  }
  }
}

LevelSample ParticleShape::level(const Vec2 &y) const {
  LevelSample s;
  switch (kind_) {
  case ShapeKind::Circle: {
    const double r = y.norm();
    s.value = a_ - r;
    s.grad = r > 0.0 ? Vec2(-y / r) : Vec2::Zero();
    break;
  }
  case ShapeKind::Ellipse: {
    // scaled so that |grad| = 1 on the major vertices
    const double scale = 0.5 * std::max(a_, b_);
    s.value = scale * (1.0 - y.x() * y.x() / (a_ * a_) - y.y() * y.y() / (b_ * b_));
    s.grad = Vec2(-2.0 * scale * y.x() / (a_ * a_), -2.0 * scale * y.y() / (b_ * b_));
    break;
  }
  case ShapeKind::Implicit:
    for (const auto &t : terms_) {
      s.value += t.coeff * ipow(y.x(), t.px) * ipow(y.y(), t.py);
      if (t.px > 0) s.grad.x() += t.coeff * t.px * ipow(y.x(), t.px - 1) * ipow(y.y(), t.py);
      if (t.py > 0) s.grad.y() += t.coeff * t.py * ipow(y.x(), t.px) * ipow(y.y(), t.py - 1);
    }
    s.value *= sign_;
    s.grad *= sign_;
    break;
  }
  return s;
}

double ParticleShape::radius_at(double theta) const {
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  switch (kind_) {
  case ShapeKind::Circle:
    return a_;
  case ShapeKind::Ellipse:
    return 1.0 / std::sqrt(c * c / (a_ * a_) + sn * sn / (b_ * b_));
  case ShapeKind::Implicit:
    break;
  }
  const Vec2 dir(c, sn);
  auto f = [&](double r) { return level(r * dir).value; };
  const double dr = search_radius_ / kRadialScanSteps;
  double lo = 0.0;
  double flo = f(0.0);
  double root = -1.0;
  for (int k = 1; k <= kRadialScanSteps; ++k) {
    const double hi = k * dr;
    const double fhi = f(hi);
    if (root < 0.0) {
      if (fhi <= 0.0) {
        double a = lo;
        double b = hi;
        for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
          const double m = 0.5 * (a + b);
          if (f(m) > 0.0)
            a = m;
          else
            b = m;
        }
        root = 0.5 * (a + b);
      }
    } else if (fhi > 0.0) {
      throw RootFindFailure("level set re-enters the particle along theta=" +
                            std::to_string(theta) + " (shape not star-shaped)");
    }
    lo = hi;
    flo = fhi;
  }
  (void)flo;
  if (root < 0.0) {
    throw RootFindFailure("no radial root within search radius along theta=" +
                          std::to_string(theta));
  }
  return root;
}

bool ParticleShape::operator==(const ParticleShape &other) const {
  return kind_ == other.kind_ && a_ == other.a_ && b_ == other.b_ && terms_ == other.terms_ &&
         search_radius_ == other.search_radius_ && g0_ == other.g0_ && g1_ == other.g1_;
}

const char *shape_kind_name(ShapeKind kind) {
  switch (kind) {
  case ShapeKind::Circle:
    return "circle";
  case ShapeKind::Ellipse:
    return "ellipse";
  case ShapeKind::Implicit:
    return "implicit";
  }
  return "?";
}

double CurveQuadrature::length() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

namespace {

struct CurvePoint {
  Vec2 y;
  Vec2 normal;
  double speed = 0.0; // |d y / d theta|
};

CurvePoint curve_point(const ParticleShape &shape, double theta) {
  const Vec2 e(std::cos(theta), std::sin(theta));
  const Vec2 eperp(-e.y(), e.x());
  const double r = shape.radius_at(theta);
  const Vec2 y = r * e;
  const LevelSample ls = shape.level(y);
  const double radial = ls.grad.dot(e);
  if (radial == 0.0) throw RootFindFailure("curve tangent to a ray (not star-shaped)");
  const double drdtheta = -r * ls.grad.dot(eperp) / radial;
  return {y, ls.grad.normalized(), std::hypot(r, drdtheta)};
}

constexpr int kArcTableSectors = 1024;

// Sector breakpoints in theta holding equal arc length.
std::vector<double> equal_arc_breaks(const ParticleShape &shape, int sectors) {
  const double g = std::sqrt(0.6);
  const double gx[3] = {0.5 * (1.0 - g), 0.5, 0.5 * (1.0 + g)};
  const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  const double dt = 2.0 * std::numbers::pi / kArcTableSectors;
  std::vector<double> cum(kArcTableSectors + 1, 0.0);
  for (int j = 0; j < kArcTableSectors; ++j) {
    double s = 0.0;
    for (int a = 0; a < 3; ++a) s += gw[a] * curve_point(shape, (j + gx[a]) * dt).speed;
    cum[static_cast<std::size_t>(j + 1)] = cum[static_cast<std::size_t>(j)] + s * dt;
  }
  const double total = cum.back();
  std::vector<double> breaks(static_cast<std::size_t>(sectors + 1));
  breaks.front() = 0.0;
  breaks.back() = 2.0 * std::numbers::pi;
  std::size_t j = 0;
  for (int k = 1; k < sectors; ++k) {
    const double target = total * k / sectors;
    while (cum[j + 1] < target) ++j;
    const double frac = (target - cum[j]) / (cum[j + 1] - cum[j]);
    breaks[static_cast<std::size_t>(k)] = (static_cast<double>(j) + frac) * dt;
  }
  return breaks;
}

} // namespace

CurveQuadrature discretize_shape(const ParticleShape &shape, int n) {
  if (n < 16 || n % 2 != 0) {
    throw ValidationError("curve quadrature needs an even point count >= 16, got " +
                          std::to_string(n));
  }
  const int sectors = n / 2;
  std::vector<double> breaks;
  if (shape.kind() == ShapeKind::Circle) {
    breaks.resize(static_cast<std::size_t>(sectors + 1));
    for (int k = 0; k <= sectors; ++k) {
      breaks[static_cast<std::size_t>(k)] = 2.0 * std::numbers::pi * k / sectors;
    }
  } else {
    breaks = equal_arc_breaks(shape, sectors);
  }
  const double offset = 0.5 / std::sqrt(3.0);
  CurveQuadrature q;
  q.points.reserve(n);
  q.weights.reserve(n);
  q.normals.reserve(n);
  q.tangents.reserve(n);
  for (int k = 0; k < sectors; ++k) {
    const double t0 = breaks[static_cast<std::size_t>(k)];
    const double dtheta = breaks[static_cast<std::size_t>(k + 1)] - t0;
    for (double g : {0.5 - offset, 0.5 + offset}) {
      const CurvePoint c = curve_point(shape, t0 + g * dtheta);
      q.points.push_back(c.y);
      q.weights.push_back(0.5 * dtheta * c.speed);
      q.normals.push_back(c.normal);
      q.tangents.emplace_back(-c.normal.y(), c.normal.x());
    }
  }
  return q;
}

BoundarySamples boundary_data(const ParticleShape &shape, const CurveQuadrature &quad) {
  BoundarySamples out;
  out.g0.resize(quad.size());
  out.g1.resize(quad.size());
  for (std::size_t k = 0; k < quad.size(); ++k) {
    const ExpressionVars v{quad.points[k].x(), quad.points[k].y(), quad.normals[k].x(),
                           quad.normals[k].y()};
    out.g0[k] = shape.g0()(v);
    out.g1[k] = shape.g1()(v);
  }
  return out;
}

} // namespace mforge
