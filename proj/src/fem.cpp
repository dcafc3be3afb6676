#include "mforge/fem.hpp"

#include "mforge/curves.hpp"
#include "mforge/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <iomanip>
#include <limits>
#include <ostream>

namespace mforge {

namespace {

using Mat16 = Eigen::Matrix<double, 16, 16>;
using Vec16 = Eigen::Matrix<double, 16, 1>;

// 1-D cubic Hermite functions on [0, 1] scaled to an element of length h.
// out[corner][kind][order]: kind 0 = value function, 1 = slope function;
// order = derivative order in physical units.
void hermite_1d(double s, double h, double out[2][2][3]) {
  const double s2 = s * s;
  const double s3 = s2 * s;
  out[0][0][0] = 1.0 - 3.0 * s2 + 2.0 * s3;
  out[0][0][1] = (-6.0 * s + 6.0 * s2) / h;
  out[0][0][2] = (-6.0 + 12.0 * s) / (h * h);
  out[0][1][0] = h * (s - 2.0 * s2 + s3);
  out[0][1][1] = 1.0 - 4.0 * s + 3.0 * s2;
  out[0][1][2] = (-4.0 + 6.0 * s) / h;
  out[1][0][0] = 3.0 * s2 - 2.0 * s3;
  out[1][0][1] = (6.0 * s - 6.0 * s2) / h;
  out[1][0][2] = (6.0 - 12.0 * s) / (h * h);
  out[1][1][0] = h * (-s2 + s3);
  out[1][1][1] = -2.0 * s + 3.0 * s2;
  out[1][1][2] = (-2.0 + 6.0 * s) / h;
}

struct Polygon {
  std::array<Vec2, 8> pts;
  int n = 0;
};

// Part of a convex polygon where phi(x) = d + (x - c).n >= 0.
Polygon clip(const Polygon &poly, const Vec2 &c, const Vec2 &n, double d, bool keep_positive) {
  Polygon out;
  auto phi = [&](const Vec2 &x) {
    const double v = d + (x - c).dot(n);
    return keep_positive ? v : -v;
  };
  for (int k = 0; k < poly.n; ++k) {
    const Vec2 &a = poly.pts[k];
    const Vec2 &b = poly.pts[(k + 1) % poly.n];
    const double fa = phi(a);
    const double fb = phi(b);
    if (fa >= 0.0) out.pts[out.n++] = a;
    if ((fa >= 0.0) != (fb >= 0.0)) out.pts[out.n++] = a + (fa / (fa - fb)) * (b - a);
  }
  return out;
}

// Area and centroid of a simple polygon (shoelace).
std::pair<double, Vec2> area_centroid(const Polygon &poly) {
  if (poly.n < 3) return {0.0, Vec2::Zero()};
  double a2 = 0.0;
  Vec2 c = Vec2::Zero();
  const Vec2 o = poly.pts[0];
  for (int k = 0; k < poly.n; ++k) {
    const Vec2 p = poly.pts[k] - o;
    const Vec2 q = poly.pts[(k + 1) % poly.n] - o;
    const double cross = p.x() * q.y() - p.y() * q.x();
    a2 += cross;
    c += cross * (p + q);
  }
  if (std::abs(a2) < 1e-300) return {0.0, o};
  return {0.5 * std::abs(a2), o + c / (3.0 * a2)};
}

struct Constraint {
  const ParticleShape *shape = nullptr; // null for the outer disk
  RigidPose pose;
  Vec2 center;
  double radius = 0.0; // bounding radius, or disk radius
};

// Signed distance (positive inside the membrane domain) and the unit normal
// pointing into the membrane domain.
std::pair<double, Vec2> domain_distance(const Constraint &c, const Vec2 &x) {
  if (!c.shape) {
    const Vec2 r = x - c.center;
    const double rn = r.norm();
    return {c.radius - rn, rn > 0.0 ? Vec2(-r / rn) : Vec2(1.0, 0.0)};
  }
  const LevelSample ls = c.shape->level(rigid_map(c.pose, x, true));
  const double g = ls.grad.norm();
  if (g < 1e-300) return {-std::numeric_limits<double>::infinity(), Vec2(1.0, 0.0)};
  return {-ls.value / g, rotation(c.pose.alpha3) * Vec2(-ls.grad / g)};
}

Mat16 point_stiffness(const ElementBasis &b, double kappa, double sigma) {
  Vec16 lap;
  Vec16 gx;
  Vec16 gy;
  for (int k = 0; k < 16; ++k) {
    lap[k] = b.dxx[k] + b.dyy[k];
    gx[k] = b.dx[k];
    gy[k] = b.dy[k];
  }
  Mat16 m = kappa * lap * lap.transpose();
  if (sigma != 0.0) m += sigma * (gx * gx.transpose() + gy * gy.transpose());
  return m;
}

Mat16 full_element_matrix(const GridSpace &space, double kappa, double sigma) {
  Mat16 k = Mat16::Zero();
  const Vec2 origin = space.node_position(0, 0);
  const double area = space.hx() * space.hy();
  for (const auto &g : unit_gauss_4x4()) {
    const Vec2 x = origin + Vec2(g[0] * space.hx(), g[1] * space.hy());
    k += g[2] * area * point_stiffness(element_basis(space, 0, 0, x), kappa, sigma);
  }
  return k;
}

void scatter(SparseMatrix &s, const std::array<int, 16> &dofs, const Mat16 &k, double scale) {
  for (int c = 0; c < 16; ++c) {
    for (int r = 0; r < 16; ++r) s.coeffRef(dofs[r], dofs[c]) += scale * k(r, c);
  }
}

constexpr int kChildSplit = 4;

} // namespace

std::array<int, 16> GridSpace::element_dofs(int ei, int ej) const {
  std::array<int, 16> d{};
  const int nodes[4] = {node(ei, ej), node(ei + 1, ej), node(ei, ej + 1), node(ei + 1, ej + 1)};
  for (int c = 0; c < 4; ++c) {
    for (int k = 0; k < 4; ++k) d[4 * c + k] = 4 * nodes[c] + k;
  }
  return d;
}

std::pair<int, int> GridSpace::locate(const Vec2 &x) const {
  const double slack = 1e-10 * std::max(box.width(), box.height());
  if (!box.contains(x, slack)) {
    throw OutOfDomain("point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) +
                      ") outside the box");
  }
  int i = static_cast<int>(std::floor((x.x() - box.xmin) / hx()));
  int j = static_cast<int>(std::floor((x.y() - box.ymin) / hy()));
  i = std::clamp(i, 0, nx - 1);
  j = std::clamp(j, 0, ny - 1);
  return {i, j};
}

GridSpace build_space(const Box &box, int nx, int ny) {
  if (nx < 4 || ny < 4) throw ValidationError("grid needs at least 4 elements per direction");
  GridSpace s;
  s.box = box;
  s.nx = nx;
  s.ny = ny;
  return s;
}

ElementBasis element_basis(const GridSpace &space, int ei, int ej, const Vec2 &x) {
  ElementBasis b;
  b.dofs = space.element_dofs(ei, ej);
  const Vec2 o = space.node_position(ei, ej);
  double fx[2][2][3];
  double fy[2][2][3];
  hermite_1d((x.x() - o.x()) / space.hx(), space.hx(), fx);
  hermite_1d((x.y() - o.y()) / space.hy(), space.hy(), fy);
  for (int ly = 0; ly < 2; ++ly) {
    for (int lx = 0; lx < 2; ++lx) {
      const int c = lx + 2 * ly;
      for (int k = 0; k < 4; ++k) {
        const double *X = fx[lx][k & 1];
        const double *Y = fy[ly][(k >> 1) & 1];
        const int idx = 4 * c + k;
        b.v[idx] = X[0] * Y[0];
        b.dx[idx] = X[1] * Y[0];
        b.dy[idx] = X[0] * Y[1];
        b.dxx[idx] = X[2] * Y[0];
        b.dxy[idx] = X[1] * Y[1];
        b.dyy[idx] = X[0] * Y[2];
      }
    }
  }
  return b;
}

ElementBasis element_basis(const GridSpace &space, const Vec2 &x) {
  const auto [ei, ej] = space.locate(x);
  return element_basis(space, ei, ej, x);
}

FieldSample evaluate_basis(const ElementBasis &b, const Eigen::VectorXd &c) {
  FieldSample s;
  double xy = 0.0;
  for (int k = 0; k < 16; ++k) {
    const double ck = c[b.dofs[k]];
    s.value += ck * b.v[k];
    s.grad.x() += ck * b.dx[k];
    s.grad.y() += ck * b.dy[k];
    s.hess(0, 0) += ck * b.dxx[k];
    xy += ck * b.dxy[k];
    s.hess(1, 1) += ck * b.dyy[k];
  }
  s.hess(0, 1) = s.hess(1, 0) = xy;
  return s;
}

FieldSample evaluate_field(const MembraneField &field, const Vec2 &x) {
  return evaluate_basis(element_basis(field.space, x), field.coefficients);
}

MembraneField interpolate(const GridSpace &space, const NodalFunction &f) {
  MembraneField field(space);
  for (int j = 0; j <= space.ny; ++j) {
    for (int i = 0; i <= space.nx; ++i) {
      const auto d = f(space.node_position(i, j));
      const int n = space.node(i, j);
      for (int k = 0; k < 4; ++k) field.coefficients[4 * n + k] = d[static_cast<std::size_t>(k)];
    }
  }
  return field;
}

const std::array<std::array<double, 3>, 16> &unit_gauss_4x4() {
  static const std::array<std::array<double, 3>, 16> rule = [] {
    const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
    const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
    const double x[4] = {-b, -a, a, b};
    const double w[4] = {wb, wa, wa, wb};
    std::array<std::array<double, 3>, 16> r{};
    for (int j = 0; j < 4; ++j) {
      for (int i = 0; i < 4; ++i) {
        r[static_cast<std::size_t>(4 * j + i)] = {0.5 * (x[i] + 1.0), 0.5 * (x[j] + 1.0),
                                                  0.25 * w[i] * w[j]};
      }
    }
    return r;
  }();
  return rule;
}

void CutQuadrature::for_each_point(int ei, int ej,
                                   const std::function<void(const QuadPoint &)> &fn) const {
  const int e = ej * space.nx + ei;
  const ElementClass cls = element_class(e);
  if (cls == ElementClass::Cut) {
    for (const auto &p : cut_points[static_cast<std::size_t>(e)]) fn(p);
    return;
  }
  const Vec2 o = space.node_position(ei, ej);
  const double area = space.hx() * space.hy();
  for (const auto &g : unit_gauss_4x4()) {
    fn(QuadPoint{o + Vec2(g[0] * space.hx(), g[1] * space.hy()), g[2] * area,
                 cls == ElementClass::Fictitious});
  }
}

double CutQuadrature::membrane_area() const {
  double a = 0.0;
  const double cell = space.hx() * space.hy();
  for (int e = 0; e < space.element_count(); ++e) {
    const ElementClass cls = element_class(e);
    if (cls == ElementClass::Full) {
      a += cell;
    } else if (cls == ElementClass::Cut) {
      for (const auto &p : cut_points[static_cast<std::size_t>(e)]) {
        if (!p.fictitious) a += p.weight;
      }
    }
  }
  return a;
}

double CutQuadrature::integrate(const std::function<double(const Vec2 &)> &f) const {
  double s = 0.0;
  for (int ej = 0; ej < space.ny; ++ej) {
    for (int ei = 0; ei < space.nx; ++ei) {
      for_each_point(ei, ej, [&](const QuadPoint &p) {
        if (!p.fictitious) s += p.weight * f(p.x);
      });
    }
  }
  return s;
}

CutQuadrature full_quadrature(const GridSpace &space) {
  CutQuadrature q;
  q.space = space;
  q.classes.assign(static_cast<std::size_t>(space.element_count()), ElementClass::Full);
  q.cut_points.resize(static_cast<std::size_t>(space.element_count()));
  return q;
}

CutQuadrature cut_quadrature(const GridSpace &space, const Configuration &config,
                             const std::vector<ParticleShape> &shapes, int subdiv) {
  if (config.size() != shapes.size()) {
    throw MismatchedLengths("configuration and shape lists differ in length");
  }
  if (subdiv < 1) throw ValidationError("subdiv must be >= 1");
  CutQuadrature q = full_quadrature(space);

  std::vector<Constraint> constraints;
  if (space.box.disk_radius) {
    constraints.push_back({nullptr, RigidPose{}, space.box.center(), *space.box.disk_radius});
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    constraints.push_back({&shapes[i], config.poses[i], config.poses[i].center(),
                           shapes[i].bounding_radius()});
  }

  const double hx = space.hx();
  const double hy = space.hy();
  const double sx = hx / subdiv;
  const double sy = hy / subdiv;
  const double half_diag = 0.5 * std::hypot(sx, sy);
  const double a = 0.5 / std::sqrt(3.0);
  const double g2[2] = {0.5 - a, 0.5 + a};

  std::vector<const Constraint *> active;
  for (int ej = 0; ej < space.ny; ++ej) {
    for (int ei = 0; ei < space.nx; ++ei) {
      const int e = ej * space.nx + ei;
      const Vec2 lo = space.node_position(ei, ej);
      const Vec2 hi = lo + Vec2(hx, hy);
      active.clear();
      bool fictitious = false;
      for (const auto &c : constraints) {
        const Vec2 nearest = c.center.cwiseMax(lo).cwiseMin(hi);
        const double dmin = (nearest - c.center).norm();
        const Vec2 far((c.center.x() - lo.x() > hi.x() - c.center.x()) ? lo.x() : hi.x(),
                       (c.center.y() - lo.y() > hi.y() - c.center.y()) ? lo.y() : hi.y());
        const double dmax = (far - c.center).norm();
        if (!c.shape) {
          if (dmin >= c.radius + 2.0 * half_diag) fictitious = true;
          else if (dmax > c.radius - 2.0 * half_diag) active.push_back(&c);
        } else if (dmin <= c.radius + 2.0 * half_diag) {
          // the margin lets sub-cells reach the all-inside state before the
          // element switches to the full rule
          active.push_back(&c);
        }
      }
      if (fictitious) {
        q.classes[static_cast<std::size_t>(e)] = ElementClass::Fictitious;
        continue;
      }
      if (active.empty()) continue;
      auto &pts = q.cut_points[static_cast<std::size_t>(e)];
      bool all_inside = true;
      pts.reserve(static_cast<std::size_t>(4 * subdiv * subdiv));
      for (int sj = 0; sj < subdiv; ++sj) {
        for (int si = 0; si < subdiv; ++si) {
          const Vec2 c0 = lo + Vec2(si * sx, sj * sy);
          const Vec2 center = c0 + Vec2(0.5 * sx, 0.5 * sy);
          double d = std::numeric_limits<double>::infinity();
          Vec2 n(1.0, 0.0);
          for (const Constraint *c : active) {
            const auto [dc, nc] = domain_distance(*c, center);
            if (dc < d) {
              d = dc;
              n = nc;
            }
          }
          if (d < half_diag) all_inside = false;
          if (d >= half_diag) {
            for (double gy : g2) {
              for (double gx : g2) {
                pts.push_back({c0 + Vec2(gx * sx, gy * sy), 0.25 * sx * sy, false});
              }
            }
          } else if (d <= -half_diag) {
            pts.push_back({center, sx * sy, true});
          } else {
            // straddling sub-cell: split further, clip each child against the
            // tangent line of its own nearest curve
            const double cx = sx / kChildSplit;
            const double cy = sy / kChildSplit;
            const double child_diag = 0.5 * std::hypot(cx, cy);
            for (int cj = 0; cj < kChildSplit; ++cj) {
              for (int ci = 0; ci < kChildSplit; ++ci) {
                const Vec2 k0 = c0 + Vec2(ci * cx, cj * cy);
                const Vec2 kc = k0 + Vec2(0.5 * cx, 0.5 * cy);
                double dk = std::numeric_limits<double>::infinity();
                Vec2 nk(1.0, 0.0);
                for (const Constraint *c : active) {
                  const auto [dc, nc] = domain_distance(*c, kc);
                  if (dc < dk) {
                    dk = dc;
                    nk = nc;
                  }
                }
                if (dk >= child_diag) {
                  pts.push_back({kc, cx * cy, false});
                } else if (dk <= -child_diag) {
                  pts.push_back({kc, cx * cy, true});
                } else {
                  Polygon cell;
                  cell.n = 4;
                  cell.pts = {k0, k0 + Vec2(cx, 0.0), k0 + Vec2(cx, cy), k0 + Vec2(0.0, cy)};
                  const auto [ain, cin] = area_centroid(clip(cell, kc, nk, dk, true));
                  const auto [aout, cout] = area_centroid(clip(cell, kc, nk, dk, false));
                  if (ain > 0.0) pts.push_back({cin, ain, false});
                  if (aout > 0.0) pts.push_back({cout, aout, true});
                }
              }
            }
          }
        }
      }
      if (all_inside) {
        pts.clear();
        pts.shrink_to_fit();
      } else {
        q.classes[static_cast<std::size_t>(e)] = ElementClass::Cut;
      }
    }
  }
  return q;
}

SparseMatrix assemble_bending(const GridSpace &space, double kappa, double sigma,
                              const CutQuadrature &quad, double fictitious_weight) {
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");
  if (sigma < 0.0) throw ValidationError("sigma must be non-negative");
  const int n = space.total_dofs();
  SparseMatrix s(n, n);
  s.reserve(Eigen::VectorXi::Constant(n, 36));
  const Mat16 kfull = full_element_matrix(space, kappa, sigma);
  for (int ej = 0; ej < space.ny; ++ej) {
    for (int ei = 0; ei < space.nx; ++ei) {
      const int e = ej * space.nx + ei;
      const auto dofs = space.element_dofs(ei, ej);
      switch (quad.element_class(e)) {
      case ElementClass::Full:
        scatter(s, dofs, kfull, 1.0);
        break;
      case ElementClass::Fictitious:
        if (fictitious_weight > 0.0) scatter(s, dofs, kfull, fictitious_weight);
        break;
      case ElementClass::Cut: {
        Mat16 k = Mat16::Zero();
        for (const auto &p : quad.cut_points[static_cast<std::size_t>(e)]) {
          const double w = p.fictitious ? fictitious_weight * p.weight : p.weight;
          if (w == 0.0) continue;
          k += w * point_stiffness(element_basis(space, ei, ej, p.x), kappa, sigma);
        }
        scatter(s, dofs, k, 1.0);
        break;
      }
      }
    }
  }
  s.makeCompressed();
  return s;
}

SparseMatrix assemble_bending(const GridSpace &space, double kappa, double sigma) {
  return assemble_bending(space, kappa, sigma, full_quadrature(space), 0.0);
}

double membrane_energy(const MembraneField &field, const CutQuadrature &quad, double kappa,
                       double sigma) {
  const GridSpace &space = field.space;
  const Mat16 kfull = full_element_matrix(space, kappa, sigma);
  const Eigen::VectorXd &c = field.coefficients;
  double e = 0.0;
  Vec16 ce;
  for (int ej = 0; ej < space.ny; ++ej) {
    for (int ei = 0; ei < space.nx; ++ei) {
      const int el = ej * space.nx + ei;
      const ElementClass cls = quad.element_class(el);
      if (cls == ElementClass::Fictitious) continue;
      const auto dofs = space.element_dofs(ei, ej);
      if (cls == ElementClass::Full) {
        for (int k = 0; k < 16; ++k) ce[k] = c[dofs[static_cast<std::size_t>(k)]];
        e += ce.dot(kfull * ce);
        continue;
      }
      for (const auto &p : quad.cut_points[static_cast<std::size_t>(el)]) {
        if (p.fictitious) continue;
        const FieldSample s = evaluate_basis(element_basis(space, ei, ej, p.x), c);
        e += p.weight * (kappa * s.laplacian() * s.laplacian() + sigma * s.grad.squaredNorm());
      }
    }
  }
  return 0.5 * e;
}

void write_vtk(std::ostream &os, const MembraneField &field, const std::string &title) {
  const GridSpace &sp = field.space;
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET STRUCTURED_GRID\n";
  os << "DIMENSIONS " << sp.nx + 1 << ' ' << sp.ny + 1 << " 1\n";
  os << "POINTS " << sp.node_count() << " double\n";
  os << std::setprecision(12);
  for (int j = 0; j <= sp.ny; ++j) {
    for (int i = 0; i <= sp.nx; ++i) {
      const Vec2 x = sp.node_position(i, j);
      os << x.x() << ' ' << x.y() << " 0\n";
    }
  }
  os << "POINT_DATA " << sp.node_count() << '\n';
  const char *names[3] = {"u", "dudx", "dudy"};
  for (int k = 0; k < 3; ++k) {
    os << "SCALARS " << names[k] << " double 1\nLOOKUP_TABLE default\n";
    for (int nd = 0; nd < sp.node_count(); ++nd) os << field.coefficients[4 * nd + k] << '\n';
  }
}

} // namespace mforge
