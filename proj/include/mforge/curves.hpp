#pragma once

#include "mforge/expression.hpp"
#include "mforge/geometry.hpp"

#include <string>
#include <vector>

namespace mforge {

/// One monomial coeff * x^px * y^py of an implicit level-set polynomial.
struct Monomial {
  double coeff = 0.0;
  int px = 0;
  int py = 0;
  bool operator==(const Monomial &) const = default;
};

/// Level-set value and gradient, normalized so the value is positive inside.
struct LevelSample {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
};

enum class ShapeKind { Circle, Ellipse, Implicit };

/// Reference curve of a particle together with its reference boundary data.
///
/// The curve is the zero level set of a function that is positive in the
/// particle interior and must be star-shaped with respect to the origin.
class ParticleShape {
public:
  static ParticleShape circle(double radius, Expression g0 = Expression("0"),
                              Expression g1 = Expression("0"));
  static ParticleShape ellipse(double a, double b, Expression g0 = Expression("0"),
                               Expression g1 = Expression("0"));
  /// `search_radius` bounds the radial root search used to locate the curve.
  static ParticleShape implicit(std::vector<Monomial> terms, Expression g0 = Expression("0"),
                                Expression g1 = Expression("0"), double search_radius = 10.0);

  ShapeKind kind() const { return kind_; }
  double radius() const { return a_; }
  double semi_axis_a() const { return a_; }
  double semi_axis_b() const { return b_; }
  const std::vector<Monomial> &terms() const { return terms_; }
  double search_radius() const { return search_radius_; }
  const Expression &g0() const { return g0_; }
  const Expression &g1() const { return g1_; }
  double bounding_radius() const { return bounding_radius_; }

  ParticleShape with_boundary_data(Expression g0, Expression g1) const;

  /// Level set in reference coordinates (positive inside).
  LevelSample level(const Vec2 &y) const;
  bool inside(const Vec2 &y) const { return level(y).value > 0.0; }
  /// Radius of the curve along direction theta. Throws RootFindFailure.
  double radius_at(double theta) const;

  bool operator==(const ParticleShape &other) const;

private:
  ParticleShape() = default;
  void finalize();

  ShapeKind kind_ = ShapeKind::Circle;
  double a_ = 1.0;
  double b_ = 1.0;
  std::vector<Monomial> terms_;
  double sign_ = 1.0;
  double search_radius_ = 10.0;
  Expression g0_;
  Expression g1_;
  double bounding_radius_ = 1.0;
};

const char *shape_kind_name(ShapeKind kind);

/// Quadrature on a reference curve. Normals point into the particle, which
/// is the outer normal of the membrane domain.
struct CurveQuadrature {
  std::vector<Vec2> points;
  std::vector<double> weights;
  std::vector<Vec2> normals;
  std::vector<Vec2> tangents;

  std::size_t size() const { return points.size(); }
  double length() const;
};

/// Gauss quadrature with n points over n/2 polar sectors (two points per
/// sector). Circles use equal angles; other shapes place the sector breaks
/// at equal arc length so thin parts of the curve are not under-sampled.
/// Requires n >= 16 and even.
CurveQuadrature discretize_shape(const ParticleShape &shape, int n);

/// Reference boundary data sampled at the quadrature points.
struct BoundarySamples {
  std::vector<double> g0;
  std::vector<double> g1;
};

BoundarySamples boundary_data(const ParticleShape &shape, const CurveQuadrature &quad);

} // namespace mforge
