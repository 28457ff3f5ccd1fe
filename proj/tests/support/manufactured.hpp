#pragma once

// Manufactured elasticity solution u = (x^2, xy) with v = 0, used by the
// unit and acceptance suites. Errors are computed by quadrature that is
// exact for the integrands involved, independent of the assembly code.

#include <array>
#include <cmath>
#include <vector>

#include "elastocav/elasticity.hpp"
#include "elastocav/linear_solver.hpp"

namespace elastocav::testing {

struct ManufacturedErrors {
  double h = 0.0;
  double l2 = 0.0;
  double h1 = 0.0;  // H1 seminorm
};

inline Eigen::Vector2d manufactured_u(Point2 p) { return {p.x * p.x, p.x * p.y}; }

inline Eigen::Matrix2d manufactured_grad(Point2 p) {
  Eigen::Matrix2d g;
  g << 2.0 * p.x, 0.0, p.y, p.x;
  return g;
}

inline Eigen::Matrix2d manufactured_stress(Point2 p, double mu, double lambda) {
  const Eigen::Matrix2d g = manufactured_grad(p);
  const Eigen::Matrix2d e = 0.5 * (g + g.transpose());
  return 2.0 * mu * e + lambda * e.trace() * Eigen::Matrix2d::Identity();
}

/// Solves the manufactured problem on an n x n grid (Dirichlet on the bottom
/// side with the exact values, stress tractions elsewhere, body force
/// f = -div sigma = -(5 mu + 3 lambda, 0)) and returns the errors.
inline ManufacturedErrors manufactured_errors(int n, double mu, double lambda) {
  const TriMesh mesh = build_square_mesh(n);
  const ElasticityParams params{mu, lambda, 0.5};
  const Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  const SparseMatrix K = assemble_elastic_stiffness(mesh, v, params);

  Eigen::VectorXd load = assemble_normal_traction_load(
      mesh, [&](Point2 p, Eigen::Vector2d normal) -> Eigen::Vector2d { return manufactured_stress(p, mu, lambda) * normal; });
  load += assemble_body_force(mesh, [&](double, double) { return Eigen::Vector2d(-(5.0 * mu + 3.0 * lambda), 0.0); });

  SparseSystem system{K, load, dirichlet_dofs(mesh), {}};
  for (int dof : system.constrained_dofs) system.constrained_values.push_back(manufactured_u(mesh.vertices[dof / 2])[dof % 2]);
  const Eigen::VectorXd uh = solve_spd(system);

  // Degree-4 symmetric rule (6 points) for the L2 error; edge midpoints for
  // the H1 seminorm (the gradient error is linear, its square quadratic).
  static constexpr std::array<std::array<double, 4>, 6> rule{{
      {0.445948490915965, 0.445948490915965, 0.108103018168070, 0.223381589678011},
      {0.445948490915965, 0.108103018168070, 0.445948490915965, 0.223381589678011},
      {0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011},
      {0.091576213509771, 0.091576213509771, 0.816847572980459, 0.109951743655322},
      {0.091576213509771, 0.816847572980459, 0.091576213509771, 0.109951743655322},
      {0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322},
  }};
  ManufacturedErrors out;
  out.h = 2.0 / n;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double area = mesh.triangle_area(t);
    const Point2 p[3] = {mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]};
    const Eigen::Vector2d un[3] = {uh.segment<2>(2 * tri[0]), uh.segment<2>(2 * tri[1]), uh.segment<2>(2 * tri[2])};
    for (const auto& q : rule) {
      const Point2 x = q[0] * p[0] + q[1] * p[1] + q[2] * p[2];
      const Eigen::Vector2d diff = q[0] * un[0] + q[1] * un[1] + q[2] * un[2] - manufactured_u(x);
      out.l2 += q[3] * area * diff.squaredNorm();
    }
    // Constant discrete gradient on the triangle.
    const auto e = p1_element(mesh, t);
    Eigen::Matrix2d gh = Eigen::Matrix2d::Zero();
    for (int i = 0; i < 3; ++i) {
      gh.row(0) += un[i].x() * e.grad[i].transpose();
      gh.row(1) += un[i].y() * e.grad[i].transpose();
    }
    for (int k = 0; k < 3; ++k) {
      const Point2 m = 0.5 * (p[k] + p[(k + 1) % 3]);
      out.h1 += area / 3.0 * (gh - manufactured_grad(m)).squaredNorm();
    }
  }
  out.l2 = std::sqrt(out.l2);
  out.h1 = std::sqrt(out.h1);
  return out;
}

/// Observed orders log(e_k / e_{k+1}) / log(h_k / h_{k+1}) over a sequence.
inline std::vector<double> observed_orders(const std::vector<double>& err, const std::vector<double>& h) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < err.size(); ++k) out.push_back(std::log(err[k] / err[k + 1]) / std::log(h[k] / h[k + 1]));
  return out;
}

}  // namespace elastocav::testing
