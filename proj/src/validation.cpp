#include "mforge/validation.hpp"

#include "mforge/errors.hpp"
#include "mforge/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace mforge {

double configuration_scale(const Box &box) { return std::max(box.width(), box.height()); }

double default_fd_step(const Box &box) { return 1e-3 * configuration_scale(box); }

double fd_derivative(const EnergyFunction &energy, const Configuration &config,
                     const Eigen::VectorXd &e, double delta) {
  if (!(delta > 0.0)) throw ValidationError("finite-difference step must be positive");
  return (energy(config.shifted(e, delta)) - energy(config.shifted(e, -delta))) / (2.0 * delta);
}

double fd_derivative(const ProblemSpec &spec, const Configuration &config, const Eigen::VectorXd &e,
                     std::optional<double> delta, int jobs) {
  const double d = delta.value_or(default_fd_step(spec.box));
  if (!(d > 0.0)) throw ValidationError("finite-difference step must be positive");
  const Configuration plus = config.shifted(e, d);
  const Configuration minus = config.shifted(e, -d);
  require_feasible(spec, plus);
  require_feasible(spec, minus);
  double ep = 0.0, em = 0.0;
  parallel_for(2, jobs, [&](int k) {
    if (k == 0) ep = interaction_energy(spec, plus);
    else em = interaction_energy(spec, minus);
  });
  return (ep - em) / (2.0 * d);
}

Eigen::VectorXd fd_gradient(const ProblemSpec &spec, const Configuration &config,
                            std::optional<double> delta, int jobs) {
  const double d = delta.value_or(default_fd_step(spec.box));
  const int n = 3 * static_cast<int>(config.size());
  std::vector<double> energies(static_cast<std::size_t>(2 * n));
  parallel_for(2 * n, jobs, [&](int k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[k / 2] = 1.0;
    energies[static_cast<std::size_t>(k)] =
        interaction_energy(spec, config.shifted(e, k % 2 == 0 ? d : -d));
  });
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) {
    g[i] = (energies[static_cast<std::size_t>(2 * i)] - energies[static_cast<std::size_t>(2 * i + 1)]) /
           (2.0 * d);
  }
  return g;
}

RichardsonResult fd_richardson(const EnergyFunction &energy, const Configuration &config,
                               const Eigen::VectorXd &e, double delta) {
  RichardsonResult r;
  for (int k = 0; k < 3; ++k) {
    r.values[static_cast<std::size_t>(k)] = fd_derivative(energy, config, e, delta / (1 << k));
  }
  r.extrapolated = (4.0 * r.values[2] - r.values[1]) / 3.0;
  const double a = std::abs(r.values[0] - r.values[1]);
  const double b = std::abs(r.values[1] - r.values[2]);
  r.shrink = b > 0.0 ? a / b : std::numeric_limits<double>::infinity();
  return r;
}

// ---- flow map -----------------------------------------------------------

FlowMapResult flow_map(const Configuration &config, const std::vector<ParticleShape> &shapes,
                       const Box &box, const Eigen::VectorXd &q, const std::vector<Vec2> &points,
                       int steps, const CutoffFractions &fractions, bool jacobian) {
  if (steps < 1) throw ValidationError("flow needs at least one step");
  auto field_at = [&](double t) {
    return build_velocity(config.shifted(q, t), shapes, box, q, fractions);
  };
  FlowMapResult r;
  r.points = points;
  r.steps.assign(points.size(), steps);
  if (jacobian) r.jacobians.assign(points.size(), Mat2::Identity());
  const double h = 1.0 / steps;
  VelocityField f0 = field_at(0.0);
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    const VelocityField fm = field_at(t + 0.5 * h);
    VelocityField f1 = field_at(t + h);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Vec2 x = r.points[i];
      const auto s1 = eval_velocity(f0, x);
      const auto s2 = eval_velocity(fm, x + 0.5 * h * s1.v);
      const auto s3 = eval_velocity(fm, x + 0.5 * h * s2.v);
      const auto s4 = eval_velocity(f1, x + h * s3.v);
      r.points[i] = x + h / 6.0 * (s1.v + 2.0 * s2.v + 2.0 * s3.v + s4.v);
      if (jacobian) {
        const Mat2 j = r.jacobians[i];
        const Mat2 k1 = s1.dv * j;
        const Mat2 k2 = s2.dv * (j + 0.5 * h * k1);
        const Mat2 k3 = s3.dv * (j + 0.5 * h * k2);
        const Mat2 k4 = s4.dv * (j + h * k3);
        r.jacobians[i] = j + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    }
    f0 = std::move(f1);
  }
  return r;
}

double curve_distance(const ParticleShape &shape, const RigidPose &pose, const Vec2 &x) {
  const LevelSample l = shape.level(rigid_map(pose, x, true));
  return std::abs(l.value) / l.grad.norm();
}

FlowMapResult flow_curves(const Configuration &config, const std::vector<ParticleShape> &shapes,
                          const Box &box, const Eigen::VectorXd &q, int steps, int samples,
                          const CutoffFractions &fractions) {
  std::vector<Vec2> pts;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto quad = discretize_shape(shapes[i], samples);
    for (const auto &y : quad.points) {
      pts.push_back(rigid_map(config.poses[i], y));
      owner.push_back(i);
    }
  }
  FlowMapResult r = flow_map(config, shapes, box, q, pts, steps, fractions);
  const Configuration moved = config.shifted(q, 1.0);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    r.curve_residual = std::max(
        r.curve_residual, curve_distance(shapes[owner[k]], moved.poses[owner[k]], r.points[k]));
  }
  return r;
}

TracePreservation trace_preservation(const ProblemSpec &spec, const MembraneSolution &solution,
                                     const Eigen::VectorXd &q, int steps, int samples,
                                     const CutoffFractions &fractions) {
  const Configuration &p = solution.config;
  const Configuration moved = p.shifted(q, 1.0);
  TracePreservation r;
  for (std::size_t i = 0; i < spec.shapes.size(); ++i) {
    const auto quad = discretize_shape(spec.shapes[i], samples);
    std::vector<Vec2> pts;
    for (const auto &y : quad.points) pts.push_back(rigid_map(p.poses[i], y));
    const FlowMapResult f = flow_map(p, spec.shapes, spec.box, q, pts, steps, fractions, true);
    const Mat2 r0 = rotation(p.poses[i].alpha3);
    const Mat2 r1 = rotation(moved.poses[i].alpha3);
    for (std::size_t k = 0; k < quad.size(); ++k) {
      const FieldSample u = evaluate_field(solution.field, pts[k]);
      const Vec2 target = rigid_map(moved.poses[i], quad.points[k]);
      // u~ = u o X^-1: value carried along, gradient pulled back by DX^-T
      const Vec2 grad = f.jacobians[k].transpose().inverse() * u.grad;
      r.position = std::max(r.position, (f.points[k] - target).norm());
      // u~ at the target point, to first order around the flowed point
      const double value = u.value + grad.dot(target - f.points[k]);
      r.value = std::max(r.value, std::abs(value - u.value));
      r.normal = std::max(r.normal,
                          std::abs(grad.dot(r1 * quad.normals[k]) - u.grad.dot(r0 * quad.normals[k])));
    }
  }
  return r;
}

// ---- transformed energy -------------------------------------------------

namespace {

std::array<Mat2, 2> zero_hessian(const Vec2 &) { return {Mat2::Zero(), Mat2::Zero()}; }

SmoothMap affine_map(const Mat2 &m, const Vec2 &b) {
  return {[m, b](const Vec2 &x) -> Vec2 { return m * x + b; },
          [m](const Vec2 &) -> Mat2 { return m; }, zero_hessian};
}

// Gauss-Legendre on [0, 1] by Golub-Welsch.
void gauss_unit(int n, std::vector<double> &x, std::vector<double> &w) {
  if (n < 1) throw ValidationError("Gauss order must be >= 1");
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    t(k, k - 1) = b;
    t(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  x.resize(static_cast<std::size_t>(n));
  w.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    x[static_cast<std::size_t>(k)] = 0.5 * (es.eigenvalues()[k] + 1.0);
    const double v = es.eigenvectors()(0, k);
    w[static_cast<std::size_t>(k)] = v * v;
  }
}

} // namespace

Diffeomorphism Diffeomorphism::identity() {
  return {affine_map(Mat2::Identity(), Vec2::Zero()), affine_map(Mat2::Identity(), Vec2::Zero())};
}

Diffeomorphism Diffeomorphism::affine(const Mat2 &m, const Vec2 &b) {
  if (!(std::abs(m.determinant()) > 0.0)) throw SingularMatrix("affine map is not invertible");
  const Mat2 inv = m.inverse();
  return {affine_map(m, b), affine_map(inv, -inv * b)};
}

Diffeomorphism Diffeomorphism::rotation(double angle, const Vec2 &center) {
  const Mat2 r = mforge::rotation(angle);
  return affine(r, center - r * center);
}

Diffeomorphism Diffeomorphism::shear(double a) {
  auto make = [](double s) {
    return SmoothMap{[s](const Vec2 &x) -> Vec2 { return {x.x() + s * x.y() * x.y(), x.y()}; },
                     [s](const Vec2 &x) -> Mat2 {
                       Mat2 j;
                       j << 1.0, 2.0 * s * x.y(), 0.0, 1.0;
                       return j;
                     },
                     [s](const Vec2 &) -> std::array<Mat2, 2> {
                       Mat2 h = Mat2::Zero();
                       h(1, 1) = 2.0 * s;
                       return {h, Mat2::Zero()};
                     }};
  };
  return {make(a), make(-a)};
}

double transformed_energy(const ScalarField &u, const Diffeomorphism &x,
                          const std::vector<QuadPoint> &omega1, double kappa, double sigma) {
  double sum = 0.0;
  for (const auto &p : omega1) {
    const Mat2 f = x.forward.jacobian(p.x);
    const double det = f.determinant();
    if (!(det > 0.0)) throw DegenerateJacobian("det DX <= 0 at a quadrature point");
    const auto hx = x.forward.hessian(p.x);
    const Mat2 g = f.inverse();
    const Mat2 a = det * g * g.transpose();
    // divergence of the rows of A: sum_i d_i A_ij
    Vec2 div_a = Vec2::Zero();
    for (int k = 0; k < 2; ++k) {
      Mat2 df;
      for (int r = 0; r < 2; ++r) df.row(r) = hx[static_cast<std::size_t>(r)].col(k).transpose();
      const Mat2 dg = -g * df * g;
      const double ddet = det * (g * df).trace();
      const Mat2 da = ddet * g * g.transpose() + det * (dg * g.transpose() + g * dg.transpose());
      div_a += da.row(k).transpose();
    }
    const FieldSample s = u(p.x);
    const double div = div_a.dot(s.grad) + (a.cwiseProduct(s.hess)).sum();
    sum += 0.5 * p.weight * (kappa * div * div / det + sigma * s.grad.dot(a * s.grad));
  }
  return sum;
}

double pushed_energy(const ScalarField &u, const Diffeomorphism &x,
                     const std::vector<QuadPoint> &omega2, double kappa, double sigma) {
  double sum = 0.0;
  for (const auto &p : omega2) {
    const Vec2 y = x.inverse.value(p.x);
    const Mat2 dy = x.inverse.jacobian(p.x);
    const auto hy = x.inverse.hessian(p.x);
    const FieldSample s = u(y);
    const Vec2 grad = dy.transpose() * s.grad;
    Mat2 hess = dy.transpose() * s.hess * dy;
    for (int a = 0; a < 2; ++a) hess += s.grad[a] * hy[static_cast<std::size_t>(a)];
    const double lap = hess.trace();
    sum += 0.5 * p.weight * (kappa * lap * lap + sigma * grad.squaredNorm());
  }
  return sum;
}

std::vector<QuadPoint> parallelogram_gauss(const Vec2 &origin, const Vec2 &e1, const Vec2 &e2,
                                           int cells, int order) {
  std::vector<double> gx, gw;
  gauss_unit(order, gx, gw);
  Mat2 m;
  m << e1, e2;
  const double jac = std::abs(m.determinant()) / (cells * cells);
  std::vector<QuadPoint> pts;
  for (int cj = 0; cj < cells; ++cj) {
    for (int ci = 0; ci < cells; ++ci) {
      for (std::size_t b = 0; b < gx.size(); ++b) {
        for (std::size_t a = 0; a < gx.size(); ++a) {
          const double s = (ci + gx[a]) / cells;
          const double t = (cj + gx[b]) / cells;
          pts.push_back({origin + s * e1 + t * e2, jac * gw[a] * gw[b], false});
        }
      }
    }
  }
  return pts;
}

std::vector<QuadPoint> strip_gauss(double y0, double y1, const std::function<double(double)> &lo,
                                   const std::function<double(double)> &hi, int cells, int order) {
  std::vector<double> gx, gw;
  gauss_unit(order, gx, gw);
  const double hy = (y1 - y0) / cells;
  std::vector<QuadPoint> pts;
  for (int cj = 0; cj < cells; ++cj) {
    for (std::size_t b = 0; b < gx.size(); ++b) {
      const double y = y0 + (cj + gx[b]) * hy;
      const double x0 = lo(y);
      const double hx = (hi(y) - x0) / cells;
      for (int ci = 0; ci < cells; ++ci) {
        for (std::size_t a = 0; a < gx.size(); ++a) {
          pts.push_back({Vec2(x0 + (ci + gx[a]) * hx, y), hx * hy * gw[a] * gw[b], false});
        }
      }
    }
  }
  return pts;
}

// ---- matrix calculus ----------------------------------------------------

std::array<double, 3> matrix_identity_residuals(const MatrixPath &path, double t, double delta) {
  const Mat2 m = path.m(t);
  const Mat2 dm = path.dm(t);
  const double det = m.determinant();
  if (!(std::abs(det) > 1e-14 * std::max(1.0, m.squaredNorm()))) {
    throw SingularMatrix("matrix path is singular at t = " + std::to_string(t));
  }
  const Mat2 mp = path.m(t + delta);
  const Mat2 mm = path.m(t - delta);
  const Mat2 inv = m.inverse();
  const double ddet = (mp.determinant() - mm.determinant()) / (2.0 * delta);
  const Mat2 dinv = (mp.inverse() - mm.inverse()) / (2.0 * delta);
  const double dtr = (mp.trace() - mm.trace()) / (2.0 * delta);
  return {std::abs(ddet - det * (inv * dm).trace()), (dinv + inv * dm * inv).norm(),
          std::abs(dtr - dm.trace())};
}

// ---- error bound --------------------------------------------------------

ErrorBoundSample error_bound_sample(const ProblemSpec &fine, const ProblemSpec &coarse,
                                    const Configuration &config, const Eigen::VectorXd &e,
                                    const CutoffFractions &fractions) {
  const MembraneSolution u = minimize_membrane(fine, config);
  const MembraneSolution uc = minimize_membrane(coarse, config);
  const VelocityField v = build_velocity(config, fine.shapes, fine.box, e, fractions);
  const auto quad = annulus_quadrature(fine.space(), v);
  const double df = directional_terms(u.field, v, quad, fine.kappa, fine.sigma).total();
  const double dc = directional_terms(uc.field, v, quad, fine.kappa, fine.sigma).total();

  double sum2 = 0.0, diff2 = 0.0;
  const GridSpace &space = u.quad.space;
  for (int ej = 0; ej < space.ny; ++ej) {
    for (int ei = 0; ei < space.nx; ++ei) {
      u.quad.for_each_point(ei, ej, [&](const QuadPoint &p) {
        if (p.fictitious) return;
        const FieldSample a = evaluate_field(u.field, p.x);
        const FieldSample b = evaluate_field(uc.field, p.x);
        auto h2 = [](double v, const Vec2 &g, const Mat2 &h) {
          return v * v + g.squaredNorm() + h.squaredNorm();
        };
        sum2 += p.weight * h2(a.value + b.value, a.grad + b.grad, a.hess + b.hess);
        diff2 += p.weight * h2(a.value - b.value, a.grad - b.grad, a.hess - b.hess);
      });
    }
  }
  ErrorBoundSample s;
  s.discrepancy = std::abs(df - dc);
  s.velocity_c2 = v.c2_norm();
  s.sum_h2 = std::sqrt(sum2);
  s.diff_h2 = std::sqrt(diff2);
  s.constant = s.discrepancy / (s.velocity_c2 * s.sum_h2 * s.diff_h2);
  return s;
}

} // namespace mforge
