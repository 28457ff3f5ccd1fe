#pragma once

#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "elastocav/fem.hpp"
#include "elastocav/linear_solver.hpp"
#include "elastocav/trace.hpp"

namespace elastocav {

/// Nodal displacement (or adjoint) field, components interleaved (x0, y0, x1, ...).
struct DisplacementField {
  Eigen::VectorXd values;

  Vec2 at(int vertex) const { return values.segment<2>(2 * vertex); }
};

/// One Neumann experiment: a traction on Sigma_N and the boundary
/// measurement it produced. `source` is the data the measurement is sampled
/// from, so that it can be resampled onto refined meshes.
struct LoadCase {
  std::string id;
  std::string traction_text;  // closed-form expression, for provenance
  TractionFn traction;
  BoundaryProfile source;
  BoundaryTrace measurement;  // on the Neumann nodes of the current working mesh

  void resample(const TriMesh& mesh) { measurement = sample_profile(source, mesh); }
};

/// Forward/adjoint operator for one (mesh, phase field) pair. The stiffness
/// is factorized once and reused by every forward and adjoint solve.
class ElasticProblem {
 public:
  ElasticProblem(const TriMesh& mesh, const Eigen::VectorXd& v, const ElasticityParams& params,
                 SolverOptions options = {})
      : mesh_(&mesh),
        params_((params.validate(), params)),
        stiffness_(assemble_elastic_stiffness(mesh, v, params)),
        boundary_mass_(assemble_neumann_boundary_mass(mesh)),
        solver_(stiffness_, dirichlet_dofs(mesh), options) {}

  const TriMesh& mesh() const { return *mesh_; }
  const ElasticityParams& params() const { return params_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  const SparseMatrix& boundary_mass() const { return boundary_mass_; }

  DisplacementField solve_load(const Eigen::VectorXd& load) const { return {solver_.solve(load)}; }

  DisplacementField forward(const TractionFn& g) const {
    return solve_load(assemble_traction_load(*mesh_, g));
  }

  /// Adjoint state: same operator, boundary residual (u - u_meas) as load.
  DisplacementField adjoint(const DisplacementField& u, const BoundaryTrace& measurement) const {
    return solve_load(boundary_mass_ * residual(u, measurement));
  }

  /// u - u_meas on the Neumann nodes, zero elsewhere.
  Eigen::VectorXd residual(const DisplacementField& u, const BoundaryTrace& measurement) const {
    Eigen::VectorXd d = expand_trace(measurement, mesh_->num_vertices());
    Eigen::VectorXd r = Eigen::VectorXd::Zero(u.values.size());
    for (int node : measurement.nodes) r.segment<2>(2 * node) = u.values.segment<2>(2 * node) - d.segment<2>(2 * node);
    return r;
  }

  /// 1/2 ||u - u_meas||^2 in L2(Sigma_N), exact for the P1 difference.
  double misfit(const DisplacementField& u, const BoundaryTrace& measurement) const {
    const Eigen::VectorXd r = residual(u, measurement);
    return 0.5 * r.dot(boundary_mass_ * r);
  }

 private:
  const TriMesh* mesh_;
  ElasticityParams params_;
  SparseMatrix stiffness_;
  SparseMatrix boundary_mass_;
  ConstrainedSolver solver_;
};

inline DisplacementField solve_forward(const TriMesh& mesh, const Eigen::VectorXd& v, const ElasticityParams& params,
                                       const TractionFn& g) {
  return ElasticProblem(mesh, v, params).forward(g);
}

/// Elasticity on a carved mesh: the plain background tensor everywhere and no
/// boundary integral on cavity walls (traction-free).
inline DisplacementField solve_true_cavity(const TriMesh& carved_mesh, const ElasticityParams& params,
                                           const TractionFn& g) {
  const Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(carved_mesh.num_vertices()));
  return ElasticProblem(carved_mesh, v, params).forward(g);
}

inline DisplacementField solve_adjoint(const TriMesh& mesh, const Eigen::VectorXd& v, const ElasticityParams& params,
                                       const DisplacementField& u, const BoundaryTrace& measurement) {
  return ElasticProblem(mesh, v, params).adjoint(u, measurement);
}

/// Half squared L2(Sigma_N) distance between a field's trace and a measurement.
inline double misfit(const TriMesh& mesh, const DisplacementField& u, const BoundaryTrace& measurement) {
  const SparseMatrix B = assemble_neumann_boundary_mass(mesh);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(u.values.size());
  const Eigen::VectorXd d = expand_trace(measurement, mesh.num_vertices());
  for (int node : measurement.nodes) r.segment<2>(2 * node) = u.values.segment<2>(2 * node) - d.segment<2>(2 * node);
  return 0.5 * r.dot(B * r);
}

/// Average of per-load misfits with weight 1/N_g.
inline double average_misfit(std::span<const double> per_load) {
  if (per_load.empty()) return 0.0;
  return std::accumulate(per_load.begin(), per_load.end(), 0.0) / static_cast<double>(per_load.size());
}

}  // namespace elastocav
