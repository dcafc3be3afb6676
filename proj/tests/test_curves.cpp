#include "mforge/curves.hpp"
#include "mforge/errors.hpp"
#include "mforge/expression.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace mforge;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<Monomial> peanut_terms() {
  return {{1.0 / 20, 0, 0}, {-1, 4, 0}, {19.0 / 20, 2, 0}, {-2, 2, 2}, {-19.0 / 20, 0, 2},
          {-1, 0, 4}};
}

double polyline_length(const std::function<Vec2(double)> &curve, int n) {
  double s = 0.0;
  Vec2 prev = curve(0.0);
  for (int k = 1; k <= n; ++k) {
    const Vec2 next = curve(2 * pi * k / n);
    s += (next - prev).norm();
    prev = next;
  }
  return s;
}

} // namespace

TEST(Expression, Arithmetic) {
  const ExpressionVars v{2.0, 3.0, 0.6, 0.8};
  EXPECT_DOUBLE_EQ(Expression("x*nu1 + y*nu2")(v), 2 * 0.6 + 3 * 0.8);
  EXPECT_DOUBLE_EQ(Expression("-x^2")(v), -4.0);
  EXPECT_DOUBLE_EQ(Expression("2^3^2")(v), 512.0);
  EXPECT_DOUBLE_EQ(Expression("(x+1)/y - 0.5")(v), 0.5);
  EXPECT_NEAR(Expression("pi")(v), pi, 1e-15);
  EXPECT_DOUBLE_EQ(Expression("1e-2*x")(v), 0.02);
  EXPECT_DOUBLE_EQ(Expression()(v), 0.0);
  EXPECT_TRUE(Expression("3*pi").is_constant());
  EXPECT_FALSE(Expression("3*nu2").is_constant());
}

TEST(Expression, MalformedRejected) {
  EXPECT_THROW(Expression("x +"), ValidationError);
  EXPECT_THROW(Expression("z"), ValidationError);
  EXPECT_THROW(Expression("(x"), ValidationError);
  EXPECT_THROW(Expression("x y"), ValidationError);
  EXPECT_THROW(Expression(""), ValidationError);
}

TEST(Discretize, CircleCircumference) {
  const auto q = discretize_shape(ParticleShape::circle(1), 64);
  EXPECT_EQ(q.size(), 64u);
  EXPECT_NEAR(q.length(), 2 * pi, 1e-10);
}

TEST(Discretize, EllipsePerimeterAgainstPolyline) {
  const auto q = discretize_shape(ParticleShape::ellipse(2, 1), 256);
  const double oracle = polyline_length(
      [](double t) { return Vec2(2 * std::cos(t), std::sin(t)); }, 1000000);
  EXPECT_NEAR(q.length(), oracle, 1e-6);
}

TEST(Discretize, NormalsUnitAndOrthogonal) {
  for (const auto &shape : {ParticleShape::circle(1.5), ParticleShape::ellipse(2, 0.7),
                            ParticleShape::implicit(peanut_terms())}) {
    const auto q = discretize_shape(shape, 128);
    for (std::size_t k = 0; k < q.size(); ++k) {
      EXPECT_NEAR(q.normals[k].norm(), 1.0, 1e-12);
      EXPECT_NEAR(q.normals[k].dot(q.tangents[k]), 0.0, 1e-12);
      // into the particle: moving along the normal increases the level set
      EXPECT_GT(shape.level(q.points[k] + 1e-6 * q.normals[k]).value, 0.0);
      EXPECT_NEAR(shape.level(q.points[k]).value, 0.0, 1e-12);
    }
  }
}

TEST(Discretize, CircleNormalPointsToCenter) {
  const auto q = discretize_shape(ParticleShape::circle(1), 32);
  for (std::size_t k = 0; k < q.size(); ++k) {
    EXPECT_LE((q.normals[k] + q.points[k]).norm(), 1e-14);
  }
}

TEST(Discretize, PeanutRadiusAtZeroAngle) {
  const auto shape = ParticleShape::implicit(peanut_terms());
  // bisection oracle on -r^4 + (19/20) r^2 + 1/20
  double a = 0.1, b = 3.0;
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    const double f = -std::pow(m, 4) + 0.95 * m * m + 0.05;
    (f > 0 ? a : b) = m;
  }
  EXPECT_NEAR(shape.radius_at(0.0), 0.5 * (a + b), 1e-12);
  EXPECT_NEAR(shape.radius_at(pi / 2), std::sqrt(0.05), 1e-12);
  EXPECT_GE(shape.bounding_radius(), 1.0);
  EXPECT_LE(shape.bounding_radius(), 1.02);
}

TEST(Discretize, PeanutLengthConverges) {
  const auto shape = ParticleShape::implicit(peanut_terms());
  const double fine = discretize_shape(shape, 2048).length();
  const double e256 = std::abs(discretize_shape(shape, 256).length() - fine);
  const double e512 = std::abs(discretize_shape(shape, 512).length() - fine);
  EXPECT_LT(e512, 1e-6);
  EXPECT_GT(e256 / e512, 8.0);
}

TEST(Discretize, SpectralMoment) {
  const auto q = discretize_shape(ParticleShape::circle(1), 32);
  double s = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) s += q.weights[k] * q.points[k].x() * q.points[k].x();
  EXPECT_NEAR(s, pi, 1e-13);
}

TEST(Discretize, BadCount) {
  EXPECT_THROW(discretize_shape(ParticleShape::circle(1), 8), ValidationError);
  EXPECT_THROW(discretize_shape(ParticleShape::circle(1), 33), ValidationError);
}

TEST(Shapes, NonStarShapedRejected) {
  // positive for r < 1 and 2 < r < 3
  const std::vector<Monomial> terms{{36, 0, 0}, {-49, 2, 0}, {-49, 0, 2}, {14, 4, 0},
                                    {28, 2, 2}, {14, 0, 4},  {-1, 6, 0},  {-3, 4, 2},
                                    {-3, 2, 4}, {-1, 0, 6}};
  EXPECT_THROW(ParticleShape::implicit(terms), RootFindFailure);
}

TEST(Shapes, InvalidParameters) {
  EXPECT_THROW(ParticleShape::circle(0), ValidationError);
  EXPECT_THROW(ParticleShape::ellipse(1, -1), ValidationError);
  EXPECT_THROW(ParticleShape::implicit({{1, 2, 0}}), ValidationError);
  // no root inside the search radius
  EXPECT_THROW(ParticleShape::implicit({{1, 0, 0}, {-1, 2, 0}, {-1, 0, 2}}, Expression(),
                                       Expression(), 0.5),
               RootFindFailure);
}

TEST(Shapes, NegatedLevelSetNormalized) {
  const auto a = ParticleShape::implicit({{1, 0, 0}, {-1, 2, 0}, {-1, 0, 2}});
  const auto b = ParticleShape::implicit({{-1, 0, 0}, {1, 2, 0}, {1, 0, 2}});
  EXPECT_NEAR(a.radius_at(0.3), 1.0, 1e-12);
  EXPECT_NEAR(b.radius_at(0.3), 1.0, 1e-12);
  EXPECT_GT(b.level(Vec2(0.2, 0.1)).value, 0.0);
}

TEST(BoundaryData, ConstantCircle) {
  const auto shape = ParticleShape::circle(1, Expression("0"), Expression("1"));
  const auto q = discretize_shape(shape, 64);
  const auto d = boundary_data(shape, q);
  for (std::size_t k = 0; k < q.size(); ++k) {
    EXPECT_EQ(d.g0[k], 0.0);
    EXPECT_EQ(d.g1[k], 1.0);
  }
}

TEST(BoundaryData, ZeroData) {
  const auto shape = ParticleShape::ellipse(2, 1);
  const auto d = boundary_data(shape, discretize_shape(shape, 32));
  for (double v : d.g0) EXPECT_EQ(v, 0.0);
  for (double v : d.g1) EXPECT_EQ(v, 0.0);
}

TEST(BoundaryData, PeanutNormalDerivativeOfHalfSquare) {
  const auto shape = ParticleShape::implicit(peanut_terms(), Expression("0.5*(x^2+y^2)"),
                                             Expression("x*nu1 + y*nu2"));
  const auto q = discretize_shape(shape, 128);
  const auto d = boundary_data(shape, q);
  for (std::size_t k = 0; k < q.size(); ++k) {
    EXPECT_NEAR(d.g1[k], q.points[k].dot(q.normals[k]), 1e-14);
    EXPECT_NEAR(d.g0[k], 0.5 * q.points[k].squaredNorm(), 1e-14);
  }
}
