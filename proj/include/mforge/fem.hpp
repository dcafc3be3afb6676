#pragma once

#include "mforge/geometry.hpp"

#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <string>
#include <iosfwd>
#include <vector>

namespace mforge {

class ParticleShape;

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Bicubic Hermite (Bogner-Fox-Schmit) space on a uniform nx-by-ny grid.
///
/// Every node carries the four DOFs (u, du/dx, du/dy, d2u/dxdy), numbered
/// DOF-major within a node; nodes are numbered row-major (x fastest).
struct GridSpace {
  Box box;
  int nx = 0;
  int ny = 0;

  double hx() const { return box.width() / nx; }
  double hy() const { return box.height() / ny; }
  /// Element size used for penalty scaling.
  double h() const { return std::max(hx(), hy()); }
  int node_count() const { return (nx + 1) * (ny + 1); }
  int element_count() const { return nx * ny; }
  int total_dofs() const { return 4 * node_count(); }
  int node(int i, int j) const { return j * (nx + 1) + i; }
  Vec2 node_position(int i, int j) const {
    return {box.xmin + i * hx(), box.ymin + j * hy()};
  }
  bool is_boundary_node(int i, int j) const { return i == 0 || j == 0 || i == nx || j == ny; }
  /// Global DOF indices of an element, ordered by local corner
  /// (0,0), (1,0), (0,1), (1,1) and DOF kind within each corner.
  std::array<int, 16> element_dofs(int ei, int ej) const;
  /// Element containing x (points on shared edges go to the upper element,
  /// clamped at the box). Throws OutOfDomain outside the box.
  std::pair<int, int> locate(const Vec2 &x) const;

  bool operator==(const GridSpace &) const = default;
};

/// nx, ny >= 4.
GridSpace build_space(const Box &box, int nx, int ny);

/// Shape functions of one element evaluated at one point.
struct ElementBasis {
  std::array<int, 16> dofs{};
  std::array<double, 16> v{};
  std::array<double, 16> dx{};
  std::array<double, 16> dy{};
  std::array<double, 16> dxx{};
  std::array<double, 16> dxy{};
  std::array<double, 16> dyy{};
};

/// Basis of element (ei, ej) at x; x may lie slightly outside the element.
ElementBasis element_basis(const GridSpace &space, int ei, int ej, const Vec2 &x);
ElementBasis element_basis(const GridSpace &space, const Vec2 &x);

/// Value, gradient and Hessian of a scalar field at one point.
struct FieldSample {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
  double laplacian() const { return hess.trace(); }
};

/// Finite-element function on a GridSpace.
struct MembraneField {
  GridSpace space;
  Eigen::VectorXd coefficients;

  MembraneField() = default;
  explicit MembraneField(GridSpace s)
      : space(s), coefficients(Eigen::VectorXd::Zero(s.total_dofs())) {}
  MembraneField(GridSpace s, Eigen::VectorXd c) : space(s), coefficients(std::move(c)) {}
};

/// Throws OutOfDomain if x is outside the box.
FieldSample evaluate_field(const MembraneField &field, const Vec2 &x);
FieldSample evaluate_basis(const ElementBasis &basis, const Eigen::VectorXd &coefficients);

/// Nodal data (f, f_x, f_y, f_xy) of a smooth function.
using NodalFunction = std::function<std::array<double, 4>(const Vec2 &)>;
MembraneField interpolate(const GridSpace &space, const NodalFunction &f);

struct QuadPoint {
  Vec2 x = Vec2::Zero();
  double weight = 0.0;
  /// Point lies outside the membrane domain (particle interior or beyond the
  /// outer disk); it only carries the fictitious-domain regularization.
  bool fictitious = false;
};

enum class ElementClass : unsigned char { Full, Cut, Fictitious };

/// Quadrature covering the membrane domain Omega(p) = Omega \ B(p).
///
/// Full elements use the tensor 4x4 Gauss rule, fictitious elements lie
/// entirely outside Omega(p), cut elements carry explicit sub-cell points.
struct CutQuadrature {
  GridSpace space;
  std::vector<ElementClass> classes;
  std::vector<std::vector<QuadPoint>> cut_points;

  ElementClass element_class(int e) const { return classes[static_cast<std::size_t>(e)]; }
  /// Calls fn(point) for every point of element (ei, ej), Gauss points of
  /// full and fictitious elements included.
  void for_each_point(int ei, int ej, const std::function<void(const QuadPoint &)> &fn) const;
  /// Sum of non-fictitious weights, i.e. |Omega(p)|.
  double membrane_area() const;
  /// Weighted sum of f over Omega(p).
  double integrate(const std::function<double(const Vec2 &)> &f) const;
};

/// 4x4 Gauss rule on [0,1]^2: (s, t, weight).
const std::array<std::array<double, 3>, 16> &unit_gauss_4x4();

/// Element-wise classification and sub-cell quadrature (subdiv x subdiv cells
/// per cut element). Sub-cells straddling a curve are clipped against the
/// curve's local tangent line, so weights vary continuously with the poses.
CutQuadrature cut_quadrature(const GridSpace &space, const Configuration &config,
                             const std::vector<ParticleShape> &shapes, int subdiv = 8);

/// Quadrature of the full box (no particles, no disk restriction).
CutQuadrature full_quadrature(const GridSpace &space);

/// Stiffness S with v^T S v = int kappa (Lap v)^2 + sigma |grad v|^2 over the
/// quadrature support; fictitious points enter scaled by fictitious_weight.
SparseMatrix assemble_bending(const GridSpace &space, double kappa, double sigma,
                              const CutQuadrature &quad, double fictitious_weight = 0.0);
SparseMatrix assemble_bending(const GridSpace &space, double kappa, double sigma);

/// 1/2 int kappa (Lap u)^2 + sigma |grad u|^2 over the non-fictitious part
/// of the quadrature.
double membrane_energy(const MembraneField &field, const CutQuadrature &quad, double kappa,
                       double sigma);

/// Legacy-VTK ASCII structured grid of nodal u, du/dx, du/dy.
void write_vtk(std::ostream &os, const MembraneField &field, const std::string &title = "membrane");

} // namespace mforge
