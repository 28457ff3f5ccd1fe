#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "elastocav/elasticity.hpp"
#include "elastocav/fem.hpp"
#include "elastocav/pdas.hpp"

namespace elastocav {

/// Nodal phase field in [0,1] (1 = cavity) with a frozen band of vertices
/// pinned to 0 near the outer boundary.
struct PhaseField {
  Eigen::VectorXd values;
  std::vector<std::uint8_t> frozen;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// Frozen mask: vertices within `band_width` of the outer boundary. A negative
/// width freezes nothing.
inline std::vector<std::uint8_t> frozen_band(const TriMesh& mesh, double band_width) {
  std::vector<std::uint8_t> frozen(mesh.num_vertices(), 0);
  if (band_width < 0.0) return frozen;
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
    frozen[i] = distance_to_square_boundary(mesh.vertices[i]) <= band_width + 1e-12;
  return frozen;
}

inline PhaseField make_phase_field(const TriMesh& mesh, double band_width) {
  return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices())), frozen_band(mesh, band_width)};
}

/// Throws unless 0 <= v <= 1 everywhere and v = 0 on the frozen band.
inline void check_admissible(const PhaseField& v, double tol = 1e-12) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = v.values[static_cast<Eigen::Index>(i)];
    if (!(x >= -tol && x <= 1.0 + tol)) throw std::domain_error("phase field leaves [0,1]");
    if (v.frozen[i] && x != 0.0) throw std::domain_error("phase field nonzero on the frozen band");
  }
}

/// Numerical value of int_0^1 sqrt(v(1-v)) dv. With v = (1 - cos t)/2 the
/// integrand becomes smooth, and composite Gauss-Legendre on [0, pi] is
/// accurate to round-off.
inline double double_well_integral(int panels = 16) {
  static constexpr double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                  0.9061798459386640};
  static constexpr double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                                  0.2369268850561891};
  const double h = std::numbers::pi / panels;
  double sum = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double mid = (k + 0.5) * h;
    for (int q = 0; q < 5; ++q) {
      const double t = mid + 0.5 * h * x[q];
      const double v = 0.5 * (1.0 - std::cos(t));
      sum += 0.5 * h * w[q] * std::sqrt(v * (1.0 - v)) * 0.5 * std::sin(t);
    }
  }
  return sum;
}

/// Weight of the relaxed perimeter: alpha_tilde = alpha / (2 int_0^1 sqrt(v(1-v)) dv).
inline double alpha_tilde_from_alpha(double alpha) { return alpha / (2.0 * double_well_integral()); }

/// Mass and Laplace matrices of one mesh, shared by every time step on it.
struct ScalarOperators {
  SparseMatrix mass;
  SparseMatrix stiffness;
  Eigen::VectorXd mass_times_one;

  explicit ScalarOperators(const TriMesh& mesh)
      : mass(assemble_scalar_mass(mesh)), stiffness(assemble_scalar_stiffness(mesh)) {
    mass_times_one = mass * Eigen::VectorXd::Ones(mass.rows());
  }
};

/// alpha_tilde * int( eps |grad v|^2 + v(1-v)/eps ), exact for P1 v.
inline double ginzburg_landau_energy(const ScalarOperators& ops, const Eigen::VectorXd& v, double alpha_tilde,
                                     double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("ginzburg_landau_energy: epsilon must be positive");
  const double gradient = v.dot(ops.stiffness * v);
  const double potential = ops.mass_times_one.dot(v) - v.dot(ops.mass * v);
  return alpha_tilde * (epsilon * gradient + potential / epsilon);
}

inline double ginzburg_landau_energy(const TriMesh& mesh, const Eigen::VectorXd& v, double alpha_tilde,
                                     double epsilon) {
  return ginzburg_landau_energy(ScalarOperators(mesh), v, alpha_tilde, epsilon);
}

/// Nodal derivative of the Ginzburg-Landau energy:
/// alpha_tilde (2 eps Ks v + M (1 - 2v) / eps).
inline Eigen::VectorXd ginzburg_landau_gradient(const ScalarOperators& ops, const Eigen::VectorXd& v,
                                                double alpha_tilde, double epsilon) {
  return alpha_tilde * (2.0 * epsilon * (ops.stiffness * v) + (ops.mass_times_one - 2.0 * (ops.mass * v)) / epsilon);
}

/// Misfit part of the discrete derivative:
/// G_i = (1/N) sum_loads int phi_i (1 - delta) C0 e(u) : e(p).
/// The integrand is constant per triangle, so each vertex receives area/3.
inline Eigen::VectorXd assemble_gradient_density(
    const TriMesh& mesh, const ElasticityParams& params,
    std::span<const std::pair<DisplacementField, DisplacementField>> pairs) {
  Eigen::VectorXd G = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  if (pairs.empty()) return G;
  const double weight = (1.0 - params.delta) / static_cast<double>(pairs.size());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.triangle_area(t);
    double density = 0.0;
    for (const auto& [u, p] : pairs) {
      const Matrix2 eu = element_strain(mesh, t, u.values);
      const Matrix2 ep = element_strain(mesh, t, p.values);
      density += 2.0 * params.mu * (eu.array() * ep.array()).sum() + params.lambda * eu.trace() * ep.trace();
    }
    for (int k : mesh.triangles[t]) G[k] += weight * density * area / 3.0;
  }
  return G;
}

struct StepParams {
  double tau = 1e-3;
  double alpha_tilde = 1e-2;
  double epsilon = 1.0 / (16.0 * std::numbers::pi);
};

/// Box-constrained quadratic program of one semi-implicit step, restricted to
/// the free (non-frozen) vertices.
struct ObstacleProblem {
  SparseMatrix A;
  Eigen::VectorXd b;
  std::vector<int> free_vertices;
  Eigen::Index full_size = 0;
  double lower = 0.0;
  double upper = 1.0;

  Eigen::VectorXd expand(const Eigen::VectorXd& free_values) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(full_size);
    for (std::size_t k = 0; k < free_vertices.size(); ++k) out[free_vertices[k]] = free_values[static_cast<Eigen::Index>(k)];
    return out;
  }
};

/// A = M/tau + 2 alpha eps Ks, b = M v_n / tau - G - (alpha/eps) M (1 - 2 v_n).
/// The minimizer of 1/2 v'Av - b'v over the box is the next iterate.
inline ObstacleProblem build_step_problem(const ScalarOperators& ops, const PhaseField& v_n, const Eigen::VectorXd& G,
                                          const StepParams& step) {
  if (!(step.tau > 0.0)) throw std::invalid_argument("build_step_problem: tau must be positive");
  const SparseMatrix A_full = ops.mass / step.tau + (2.0 * step.alpha_tilde * step.epsilon) * ops.stiffness;
  const Eigen::VectorXd Mv = ops.mass * v_n.values;
  const Eigen::VectorXd b_full =
      Mv / step.tau - G - (step.alpha_tilde / step.epsilon) * (ops.mass_times_one - 2.0 * Mv);

  ObstacleProblem problem;
  problem.full_size = v_n.values.size();
  std::vector<int> index(v_n.size(), -1);
  for (std::size_t i = 0; i < v_n.size(); ++i) {
    if (v_n.frozen[i]) continue;
    index[i] = static_cast<int>(problem.free_vertices.size());
    problem.free_vertices.push_back(static_cast<int>(i));
  }
  const auto nf = static_cast<Eigen::Index>(problem.free_vertices.size());
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index col = 0; col < A_full.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(A_full, col); it; ++it) {
      if (index[it.row()] >= 0 && index[it.col()] >= 0) trips.emplace_back(index[it.row()], index[it.col()], it.value());
    }
  }
  problem.A.resize(nf, nf);
  problem.A.setFromTriplets(trips.begin(), trips.end());
  problem.b.resize(nf);
  for (Eigen::Index k = 0; k < nf; ++k) problem.b[k] = b_full[problem.free_vertices[k]];
  return problem;
}

struct StepResult {
  PhaseField next;
  PdasState pdas;
};

/// One semi-implicit gradient-flow step given the misfit gradient density G.
inline StepResult gradient_flow_step(const ScalarOperators& ops, const PhaseField& v_n, const Eigen::VectorXd& G,
                                     const StepParams& step, const PdasState* warm_start = nullptr,
                                     PdasOptions options = {}) {
  const ObstacleProblem problem = build_step_problem(ops, v_n, G, step);
  PdasResult solved = pdas_solve(problem.A, problem.b, problem.lower, problem.upper, warm_start, options);
  StepResult out;
  out.next.values = problem.expand(solved.v);
  out.next.frozen = v_n.frozen;
  out.pdas = std::move(solved.state);
  return out;
}

/// Same step, assembling G from the forward/adjoint pairs at v_n.
inline StepResult gradient_flow_step(const TriMesh& mesh, const ScalarOperators& ops, const PhaseField& v_n,
                                     const ElasticityParams& params,
                                     std::span<const std::pair<DisplacementField, DisplacementField>> pairs,
                                     const StepParams& step, const PdasState* warm_start = nullptr,
                                     PdasOptions options = {}) {
  return gradient_flow_step(ops, v_n, assemble_gradient_density(mesh, params, pairs), step, warm_start, options);
}

/// Left side of the step inequality tested with a competitor omega:
/// [M(v+ - v_n)/tau + G + 2 alpha eps Ks v+ + (alpha/eps) M(1 - 2 v_n)] . (omega - v+).
inline double step_inequality_slack(const ScalarOperators& ops, const Eigen::VectorXd& v_n, const Eigen::VectorXd& v_next,
                                    const Eigen::VectorXd& G, const StepParams& step, const Eigen::VectorXd& omega) {
  const Eigen::VectorXd lhs = ops.mass * (v_next - v_n) / step.tau + G +
                              2.0 * step.alpha_tilde * step.epsilon * (ops.stiffness * v_next) +
                              (step.alpha_tilde / step.epsilon) * (ops.mass_times_one - 2.0 * (ops.mass * v_n));
  return lhs.dot(omega - v_next);
}

/// Discrete first-order condition J'(v)[omega - v] for a competitor omega.
inline double optimality_slack(const ScalarOperators& ops, const Eigen::VectorXd& v, const Eigen::VectorXd& G,
                               double alpha_tilde, double epsilon, const Eigen::VectorXd& omega) {
  return (G + ginzburg_landau_gradient(ops, v, alpha_tilde, epsilon)).dot(omega - v);
}

/// Random element of the discrete admissible set: zero on the frozen band,
/// otherwise uniform in [0,1] or, with probability 1/2 per draw, a 0/1 pattern.
inline Eigen::VectorXd random_admissible(const PhaseField& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool binary = unit(rng) < 0.5;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(shape.values.size());
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape.frozen[i]) continue;
    const double x = unit(rng);
    w[static_cast<Eigen::Index>(i)] = binary ? (x < 0.5 ? 0.0 : 1.0) : x;
  }
  return w;
}

inline double l2_norm(const ScalarOperators& ops, const Eigen::VectorXd& v) { return std::sqrt(v.dot(ops.mass * v)); }

}  // namespace elastocav
