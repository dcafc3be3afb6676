#include "mforge/constraints.hpp"

#include "mforge/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace mforge {

RigidModeBasis rigid_modes(const CurveQuadrature &quad) {
  const auto n = static_cast<Eigen::Index>(quad.size());
  RigidModeBasis b;
  b.eta.resize(n, 3);
  b.deta.resize(n, 3);
  b.weights.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto &y = quad.points[static_cast<std::size_t>(k)];
    const auto &nu = quad.normals[static_cast<std::size_t>(k)];
    b.eta.row(k) << y.x(), y.y(), 1.0;
    b.deta.row(k) << nu.x(), nu.y(), 0.0;
    b.weights[k] = quad.weights[static_cast<std::size_t>(k)];
  }
  return b;
}

TraceSamples trace(const MembraneField &field, const RigidPose &pose, const CurveQuadrature &quad) {
  const auto n = static_cast<Eigen::Index>(quad.size());
  TraceSamples t;
  t.value.resize(n);
  t.normal.resize(n);
  const Mat2 r = rotation(pose.alpha3);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    const FieldSample s = evaluate_field(field, rigid_map(pose, quad.points[idx]));
    t.value[k] = s.value;
    t.normal[k] = s.grad.dot(r * quad.normals[idx]);
  }
  return t;
}

Eigen::Matrix3d gram(const RigidModeBasis &basis) {
  const Eigen::Matrix3d g = basis.eta.transpose() * basis.weights.asDiagonal() * basis.eta;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(g);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) {
    throw SingularGram("rigid-mode Gram matrix is singular or badly conditioned");
  }
  return g;
}

Eigen::Matrix3d gram(const CurveQuadrature &quad) { return gram(rigid_modes(quad)); }

Eigen::Vector3d recover_gamma(const Eigen::VectorXd &v1, const RigidModeBasis &basis) {
  if (v1.size() != basis.eta.rows()) throw MismatchedLengths("trace and basis sizes differ");
  const Eigen::Vector3d cstar = basis.eta.transpose() * basis.weights.cwiseProduct(v1);
  return gram(basis).ldlt().solve(cstar);
}

TraceSamples project(const TraceSamples &v, const RigidModeBasis &basis) {
  if (v.normal.size() != v.value.size()) throw MismatchedLengths("trace components differ");
  const Eigen::Vector3d g = recover_gamma(v.value, basis);
  return {v.value - basis.eta * g, v.normal - basis.deta * g};
}

double trace_norm(const TraceSamples &v, const Eigen::VectorXd &weights) {
  if (v.value.size() != weights.size() || v.normal.size() != weights.size()) {
    throw MismatchedLengths("trace and weight sizes differ");
  }
  return std::sqrt(weights.dot(v.value.cwiseAbs2() + v.normal.cwiseAbs2()));
}

TraceSamples trace_residual(const TraceSamples &t, const BoundarySamples &g) {
  const auto n = t.value.size();
  if (static_cast<std::size_t>(n) != g.g0.size() || g.g0.size() != g.g1.size()) {
    throw MismatchedLengths("trace and boundary data sizes differ");
  }
  TraceSamples r = t;
  for (Eigen::Index k = 0; k < n; ++k) {
    r.value[k] -= g.g0[static_cast<std::size_t>(k)];
    r.normal[k] -= g.g1[static_cast<std::size_t>(k)];
  }
  return r;
}

PenaltyWeights penalty_weights(const GridSpace &space, double beta0, double beta1) {
  if (!(beta0 > 0.0 && beta1 > 0.0)) throw ValidationError("penalty betas must be positive");
  const double h = space.h();
  return {beta0 * h * h * h, beta1 * h};
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Adds scale * r r^T for a sparse row r given as (index, value) pairs.
template <std::size_t N>
void add_outer(Triplets &t, const std::array<int, N> &idx, const std::array<double, N> &val,
               int count, double scale) {
  const int n = std::min(count, static_cast<int>(N));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) t.emplace_back(idx[a], idx[b], scale * val[a] * val[b]);
  }
}

} // namespace

PenaltySystem assemble_penalty(const GridSpace &space, const Configuration &config,
                               const std::vector<ParticleShape> &shapes,
                               const std::vector<CurveQuadrature> &quads,
                               const PenaltyWeights &eps, const std::vector<bool> &freeze_tilt) {
  const std::size_t np = shapes.size();
  if (config.size() != np || quads.size() != np) {
    throw MismatchedLengths("configuration, shapes and quadratures differ in length");
  }
  if (!freeze_tilt.empty() && freeze_tilt.size() != np) {
    throw MismatchedLengths("freeze_tilt must be empty or have one flag per particle");
  }
  const int ndofs = space.total_dofs();
  const int total = ndofs + 3 * static_cast<int>(np);
  PenaltySystem sys;
  sys.gamma_offset = ndofs;
  sys.rhs = Eigen::VectorXd::Zero(total);
  Triplets trip;
  std::size_t npts = 0;
  for (const auto &q : quads) npts += q.size();
  trip.reserve(npts * 2 * 19 * 19 + 6 * np);

  std::array<int, 19> idx{};
  std::array<double, 19> r0{};
  std::array<double, 19> r1{};
  for (std::size_t i = 0; i < np; ++i) {
    const bool frozen = !freeze_tilt.empty() && freeze_tilt[i];
    const auto &q = quads[i];
    const BoundarySamples g = boundary_data(shapes[i], q);
    const Mat2 rot = rotation(config.poses[i].alpha3);
    const int goff = ndofs + 3 * static_cast<int>(i);
    for (std::size_t k = 0; k < q.size(); ++k) {
      const Vec2 x = rigid_map(config.poses[i], q.points[k]);
      const Vec2 nw = rot * q.normals[k];
      const ElementBasis b = element_basis(space, x);
      for (int a = 0; a < 16; ++a) {
        idx[a] = b.dofs[a];
        r0[a] = b.v[a];
        r1[a] = b.dx[a] * nw.x() + b.dy[a] * nw.y();
      }
      int count = 16;
      const Vec2 &y = q.points[k];
      const Vec2 &nu = q.normals[k];
      if (!frozen) {
        idx[count] = goff;
        r0[count] = -y.x();
        r1[count++] = -nu.x();
        idx[count] = goff + 1;
        r0[count] = -y.y();
        r1[count++] = -nu.y();
      }
      idx[count] = goff + 2;
      r0[count] = -1.0;
      r1[count++] = 0.0;
      const double w0 = q.weights[k] / eps.epsilon0;
      const double w1 = q.weights[k] / eps.epsilon1;
      add_outer(trip, idx, r0, count, w0);
      add_outer(trip, idx, r1, count, w1);
      for (int a = 0; a < count; ++a) {
        sys.rhs[idx[a]] += w0 * g.g0[k] * r0[a] + w1 * g.g1[k] * r1[a];
      }
      sys.constant += w0 * g.g0[k] * g.g0[k] + w1 * g.g1[k] * g.g1[k];
    }
    if (frozen) {
      // pinned tilt modes keep the system nonsingular
      trip.emplace_back(goff, goff, 1.0);
      trip.emplace_back(goff + 1, goff + 1, 1.0);
    }
  }
  sys.matrix.resize(total, total);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

SparseMatrix assemble_clamped_circle(const GridSpace &space, const Vec2 &center, double radius,
                                     int samples, const PenaltyWeights &eps) {
  const ParticleShape circle = ParticleShape::circle(radius);
  const CurveQuadrature q = discretize_shape(circle, samples);
  Triplets trip;
  trip.reserve(q.size() * 2 * 256);
  std::array<int, 16> idx{};
  std::array<double, 16> r0{};
  std::array<double, 16> r1{};
  for (std::size_t k = 0; k < q.size(); ++k) {
    const ElementBasis b = element_basis(space, center + q.points[k]);
    const Vec2 &nu = q.normals[k];
    for (int a = 0; a < 16; ++a) {
      idx[a] = b.dofs[a];
      r0[a] = b.v[a];
      r1[a] = b.dx[a] * nu.x() + b.dy[a] * nu.y();
    }
    add_outer(trip, idx, r0, 16, q.weights[k] / eps.epsilon0);
    add_outer(trip, idx, r1, 16, q.weights[k] / eps.epsilon1);
  }
  SparseMatrix m(space.total_dofs(), space.total_dofs());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

} // namespace mforge
