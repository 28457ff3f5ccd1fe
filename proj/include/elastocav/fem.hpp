#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "elastocav/mesh.hpp"

namespace elastocav {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Matrix2 = Eigen::Matrix2d;
using TractionFn = std::function<Eigen::Vector2d(double, double)>;

/// Isotropic background material (Lamé pair) and the contrast of the weak
/// ersatz material that fills cavities.
struct ElasticityParams {
  double mu = 1.0;
  double lambda = 1.0;
  double delta = 1e-2;

  void validate() const {
    if (!(mu > 0.0)) throw std::invalid_argument("ElasticityParams: mu must be positive");
    if (!(lambda + mu > 0.0)) throw std::invalid_argument("ElasticityParams: lambda + mu must be positive");
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("ElasticityParams: delta must lie in (0,1]");
  }

  double poisson_ratio() const { return lambda / (2.0 * (lambda + mu)); }
};

/// Interpolated stiffness factor 1 + (delta - 1) v: 1 in the material, delta in the cavity.
inline double ersatz_factor(double delta, double v) { return 1.0 + (delta - 1.0) * v; }

/// Stress for the ersatz tensor at phase value v applied to a symmetric strain.
inline Matrix2 elasticity_tensor_apply(const ElasticityParams& p, double v, const Matrix2& strain) {
  const Matrix2 plain = 2.0 * p.mu * strain + p.lambda * strain.trace() * Matrix2::Identity();
  return ersatz_factor(p.delta, v) * plain;
}

/// Gradients of the three P1 hat functions on a triangle, and its area.
struct P1Element {
  std::array<Eigen::Vector2d, 3> grad;
  double area = 0.0;
};

inline P1Element p1_element(const TriMesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const Point2 p[3] = {mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]};
  P1Element e;
  e.area = signed_area(p[0], p[1], p[2]);
  const double inv = 1.0 / (2.0 * e.area);
  for (int i = 0; i < 3; ++i) {
    const Point2 pj = p[(i + 1) % 3], pk = p[(i + 2) % 3];
    e.grad[i] = Eigen::Vector2d(pj.y - pk.y, pk.x - pj.x) * inv;
  }
  return e;
}

/// Symmetric gradient of a P1 vector field on one element; `u` interleaved.
inline Matrix2 element_strain(const TriMesh& mesh, std::size_t t, const Eigen::VectorXd& u) {
  const auto e = p1_element(mesh, t);
  Matrix2 g = Matrix2::Zero();  // g(a, b) = d u_a / d x_b
  for (int i = 0; i < 3; ++i) {
    const int v = mesh.triangles[t][i];
    g.row(0) += u[2 * v] * e.grad[i].transpose();
    g.row(1) += u[2 * v + 1] * e.grad[i].transpose();
  }
  return 0.5 * (g + g.transpose());
}

/// 6x6 stiffness of the plain background tensor on one triangle; dofs ordered
/// (x0, y0, x1, y1, x2, y2).
inline Eigen::Matrix<double, 6, 6> element_elastic_stiffness(const P1Element& e, double mu, double lambda) {
  Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
  for (int i = 0; i < 3; ++i) {
    B(0, 2 * i) = e.grad[i].x();
    B(1, 2 * i + 1) = e.grad[i].y();
    B(2, 2 * i) = e.grad[i].y();
    B(2, 2 * i + 1) = e.grad[i].x();
  }
  Eigen::Matrix3d D;
  D << lambda + 2.0 * mu, lambda, 0.0, lambda, lambda + 2.0 * mu, 0.0, 0.0, 0.0, mu;
  return e.area * B.transpose() * D * B;
}

/// Centroid value of a nodal scalar on each triangle.
inline Eigen::VectorXd centroid_values(const TriMesh& mesh, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(mesh.num_triangles()));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    out[static_cast<Eigen::Index>(t)] = (v[tri[0]] + v[tri[1]] + v[tri[2]]) / 3.0;
  }
  return out;
}

/// Vector elasticity stiffness with per-triangle scaling of the background tensor.
inline SparseMatrix assemble_elastic_stiffness_scaled(const TriMesh& mesh, double mu, double lambda,
                                                      const Eigen::VectorXd& element_factor) {
  const auto ndof = 2 * static_cast<Eigen::Index>(mesh.num_vertices());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(36 * mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto Ke = element_elastic_stiffness(p1_element(mesh, t), mu, lambda);
    const double f = element_factor[static_cast<Eigen::Index>(t)];
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        trips.emplace_back(2 * tri[i / 2] + i % 2, 2 * tri[j / 2] + j % 2, f * Ke(i, j));
  }
  SparseMatrix K(ndof, ndof);
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

/// Ersatz elasticity stiffness: the background tensor on triangle T is scaled
/// by 1 + (delta - 1) * (centroid value of v on T), so K is affine in v.
inline SparseMatrix assemble_elastic_stiffness(const TriMesh& mesh, const Eigen::VectorXd& v,
                                               const ElasticityParams& params) {
  if (v.size() != static_cast<Eigen::Index>(mesh.num_vertices()))
    throw std::invalid_argument("assemble_elastic_stiffness: phase field size mismatch");
  Eigen::VectorXd factor = centroid_values(mesh, v);
  for (auto& f : factor) f = ersatz_factor(params.delta, f);
  return assemble_elastic_stiffness_scaled(mesh, params.mu, params.lambda, factor);
}

/// Load vector of a traction on the Neumann edges: the P1 interpolant of g is
/// integrated exactly against the P1 test functions.
inline Eigen::VectorXd assemble_traction_load(const TriMesh& mesh, const TractionFn& g) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(mesh.num_vertices()));
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag.kind != BoundaryKind::Neumann) continue;
    const Point2 pa = mesh.vertices[e.a], pb = mesh.vertices[e.b];
    const double len = distance(pa, pb);
    const Eigen::Vector2d ga = g(pa.x, pa.y), gb = g(pb.x, pb.y);
    const Eigen::Vector2d fa = len / 6.0 * (2.0 * ga + gb);
    const Eigen::Vector2d fb = len / 6.0 * (ga + 2.0 * gb);
    f.segment<2>(2 * e.a) += fa;
    f.segment<2>(2 * e.b) += fb;
  }
  return f;
}

/// Neumann load for a traction that depends on the outward unit normal, such
/// as sigma(x) n for a known stress field. Same quadrature as above, per edge.
inline Eigen::VectorXd assemble_normal_traction_load(
    const TriMesh& mesh, const std::function<Eigen::Vector2d(Point2, Eigen::Vector2d)>& g) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(mesh.num_vertices()));
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag.kind != BoundaryKind::Neumann) continue;
    const Point2 pa = mesh.vertices[e.a], pb = mesh.vertices[e.b];
    const double len = distance(pa, pb);
    const Eigen::Vector2d normal((pb.y - pa.y) / len, -(pb.x - pa.x) / len);
    const Eigen::Vector2d ga = g(pa, normal), gb = g(pb, normal);
    f.segment<2>(2 * e.a) += len / 6.0 * (2.0 * ga + gb);
    f.segment<2>(2 * e.b) += len / 6.0 * (ga + 2.0 * gb);
  }
  return f;
}

/// Body-force load by the edge-midpoint rule (exact for linear forces).
inline Eigen::VectorXd assemble_body_force(const TriMesh& mesh, const TractionFn& force) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(mesh.num_vertices()));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double a = mesh.triangle_area(t);
    for (int q = 0; q < 3; ++q) {
      const Point2 m = 0.5 * (mesh.vertices[tri[q]] + mesh.vertices[tri[(q + 1) % 3]]);
      const Eigen::Vector2d fq = force(m.x, m.y) * (a / 3.0);
      // Hat function values at the midpoint of edge (q, q+1): 1/2, 1/2, 0.
      f.segment<2>(2 * tri[q]) += 0.5 * fq;
      f.segment<2>(2 * tri[(q + 1) % 3]) += 0.5 * fq;
    }
  }
  return f;
}

/// Consistent P1 mass matrix.
inline SparseMatrix assemble_scalar_mass(const TriMesh& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double a = mesh.triangle_area(t);
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.emplace_back(tri[i], tri[j], a * (i == j ? 2.0 : 1.0) / 12.0);
  }
  SparseMatrix M(n, n);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

/// P1 Laplace stiffness.
inline SparseMatrix assemble_scalar_stiffness(const TriMesh& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto e = p1_element(mesh, t);
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.emplace_back(tri[i], tri[j], e.area * e.grad[i].dot(e.grad[j]));
  }
  SparseMatrix K(n, n);
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

/// Mass matrix of the interleaved vector field on the Neumann edges, so that
/// d^T B d is the exact squared L2(Sigma_N) norm of a P1 field d.
inline SparseMatrix assemble_neumann_boundary_mass(const TriMesh& mesh) {
  const auto ndof = 2 * static_cast<Eigen::Index>(mesh.num_vertices());
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag.kind != BoundaryKind::Neumann) continue;
    const double len = distance(mesh.vertices[e.a], mesh.vertices[e.b]);
    const int n[2] = {e.a, e.b};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int c = 0; c < 2; ++c) trips.emplace_back(2 * n[i] + c, 2 * n[j] + c, len * (i == j ? 2.0 : 1.0) / 6.0);
  }
  SparseMatrix B(ndof, ndof);
  B.setFromTriplets(trips.begin(), trips.end());
  return B;
}

/// Both components of every Dirichlet vertex, sorted.
inline std::vector<int> dirichlet_dofs(const TriMesh& mesh) {
  std::vector<int> out;
  for (int v : dirichlet_nodes(mesh)) {
    out.push_back(2 * v);
    out.push_back(2 * v + 1);
  }
  return out;
}

/// Elastic energy 1/2 u^T K u.
inline double elastic_energy(const SparseMatrix& K, const Eigen::VectorXd& u) { return 0.5 * u.dot(K * u); }

}  // namespace elastocav
