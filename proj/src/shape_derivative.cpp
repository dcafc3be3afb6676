#include "mforge/shape_derivative.hpp"

#include "mforge/errors.hpp"
#include "mforge/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mforge {

Mat2 aprime(const Mat2 &dv, double divv) {
  return divv * Mat2::Identity() - dv - dv.transpose();
}

namespace {

// Distance range from c to the rectangle [lo, hi].
std::pair<double, double> distance_range(const Vec2 &c, const Vec2 &lo, const Vec2 &hi) {
  const Vec2 nearest = c.cwiseMax(lo).cwiseMin(hi);
  const Vec2 far((c.x() - lo.x() > hi.x() - c.x()) ? lo.x() : hi.x(),
                 (c.y() - lo.y() > hi.y() - c.y()) ? lo.y() : hi.y());
  return {(nearest - c).norm(), (far - c).norm()};
}

bool touches_annulus(const VelocityField &v, const Vec2 &lo, const Vec2 &hi) {
  for (const auto &c : v.components) {
    const auto [dmin, dmax] = distance_range(c.center, lo, hi);
    if (dmin < c.r2 && dmax > c.r1) return true;
  }
  return false;
}

} // namespace

std::vector<QuadPoint> annulus_quadrature(const GridSpace &space, const VelocityField &field) {
  const double hx = space.hx();
  const double hy = space.hy();
  // element index -> sub-cells per direction
  std::map<int, int> elements;
  for (const auto &c : field.components) {
    const double width = c.r2 - c.r1;
    const int m = std::clamp(static_cast<int>(std::ceil(16.0 * std::max(hx, hy) / width)), 8, 256);
    const int i0 = std::max(0, static_cast<int>(std::floor((c.center.x() - c.r2 - space.box.xmin) / hx)));
    const int i1 = std::min(space.nx - 1, static_cast<int>(std::floor((c.center.x() + c.r2 - space.box.xmin) / hx)));
    const int j0 = std::max(0, static_cast<int>(std::floor((c.center.y() - c.r2 - space.box.ymin) / hy)));
    const int j1 = std::min(space.ny - 1, static_cast<int>(std::floor((c.center.y() + c.r2 - space.box.ymin) / hy)));
    for (int ej = j0; ej <= j1; ++ej) {
      for (int ei = i0; ei <= i1; ++ei) {
        const Vec2 lo = space.node_position(ei, ej);
        const auto [dmin, dmax] = distance_range(c.center, lo, lo + Vec2(hx, hy));
        if (!(dmin < c.r2 && dmax > c.r1)) continue;
        int &slot = elements[ej * space.nx + ei];
        slot = std::max(slot, m);
      }
    }
  }
  const double g = std::sqrt(0.6);
  const double gx[3] = {0.5 * (1.0 - g), 0.5, 0.5 * (1.0 + g)};
  const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  std::vector<QuadPoint> pts;
  for (const auto &[e, m] : elements) {
    const int ei = e % space.nx;
    const int ej = e / space.nx;
    const Vec2 lo = space.node_position(ei, ej);
    const double sx = hx / m;
    const double sy = hy / m;
    for (int sj = 0; sj < m; ++sj) {
      for (int si = 0; si < m; ++si) {
        const Vec2 c0 = lo + Vec2(si * sx, sj * sy);
        if (!touches_annulus(field, c0, c0 + Vec2(sx, sy))) continue;
        for (int b = 0; b < 3; ++b) {
          for (int a = 0; a < 3; ++a) {
            pts.push_back({c0 + Vec2(gx[a] * sx, gx[b] * sy), gw[a] * gw[b] * sx * sy, false});
          }
        }
      }
    }
  }
  return pts;
}

DerivativeTerms derivative_integrand(const FieldSample &u, const VelocitySample &v, double kappa,
                                     double sigma) {
  const double divv = v.divergence();
  const Mat2 ap = aprime(v.dv, divv);
  const double lap = u.laplacian();
  DerivativeTerms t;
  t.kappa_term =
      kappa * lap * ((ap.cwiseProduct(u.hess)).sum() - v.laplacian.dot(u.grad) - 0.5 * divv * lap);
  if (sigma != 0.0) t.sigma_term = 0.5 * sigma * u.grad.dot(ap * u.grad);
  return t;
}

DerivativeTerms directional_terms(const MembraneField &field, const VelocityField &v,
                                  const std::vector<QuadPoint> &quad, double kappa, double sigma) {
  DerivativeTerms sum;
  for (const auto &p : quad) {
    if (p.fictitious) continue;
    const VelocitySample vs = eval_velocity(v, p.x);
    const DerivativeTerms t = derivative_integrand(evaluate_field(field, p.x), vs, kappa, sigma);
    sum.kappa_term += p.weight * t.kappa_term;
    sum.sigma_term += p.weight * t.sigma_term;
  }
  return sum;
}

double directional_derivative(const MembraneField &field, const VelocityField &v, double kappa,
                              double sigma) {
  return directional_terms(field, v, annulus_quadrature(field.space, v), kappa, sigma).total();
}

Eigen::MatrixX3d GradientResult::as_matrix() const {
  Eigen::MatrixX3d m(gradient.size() / 3, 3);
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) = gradient.segment<3>(3 * i).transpose();
  return m;
}

GradientResult gradient(const ProblemSpec &spec, const MembraneSolution &solution,
                        const CutoffFractions &fractions, int jobs) {
  const int np = static_cast<int>(solution.config.size());
  if (np != static_cast<int>(spec.shapes.size())) {
    throw MismatchedLengths("solution and spec disagree on the particle count");
  }
  GradientResult r;
  r.gradient = Eigen::VectorXd::Zero(3 * np);
  r.terms.resize(static_cast<std::size_t>(3 * np));
  r.velocity_c2.resize(static_cast<std::size_t>(3 * np));
  parallel_for(np, jobs, [&](int i) {
    // the three canonical directions of one particle share supports and
    // quadrature; each point is evaluated once
    std::array<VelocityField, 3> fields;
    for (int k = 0; k < 3; ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(3 * np);
      e[3 * i + k] = 1.0;
      fields[static_cast<std::size_t>(k)] =
          build_velocity(solution.config, spec.shapes, spec.box, e, fractions);
    }
    const auto quad = annulus_quadrature(solution.field.space, fields[0]);
    std::array<DerivativeTerms, 3> sums{};
    for (const auto &p : quad) {
      const FieldSample u = evaluate_field(solution.field, p.x);
      for (int k = 0; k < 3; ++k) {
        const auto t = derivative_integrand(u, eval_velocity(fields[static_cast<std::size_t>(k)], p.x),
                                            spec.kappa, spec.sigma);
        sums[static_cast<std::size_t>(k)].kappa_term += p.weight * t.kappa_term;
        sums[static_cast<std::size_t>(k)].sigma_term += p.weight * t.sigma_term;
      }
    }
    for (int k = 0; k < 3; ++k) {
      const auto idx = static_cast<std::size_t>(3 * i + k);
      r.terms[idx] = sums[static_cast<std::size_t>(k)];
      r.gradient[3 * i + k] = sums[static_cast<std::size_t>(k)].total();
      r.velocity_c2[idx] = fields[static_cast<std::size_t>(k)].c2_norm();
    }
  });
  return r;
}

} // namespace mforge
