#pragma once

#include <span>
#include <utility>
#include <vector>

#include "elastocav/elasticity.hpp"
#include "elastocav/phasefield.hpp"

namespace elastocav {

struct ObjectiveParts {
  double misfit = 0.0;           // (1/N) sum of per-load misfits
  double ginzburg_landau = 0.0;  // alpha_tilde * relaxed perimeter
  double total = 0.0;
  std::vector<double> per_load;
};

/// Forward (and optionally adjoint) states of all loads at one phase field,
/// with the objective and its misfit gradient density.
struct StateEvaluation {
  ObjectiveParts objective;
  std::vector<std::pair<DisplacementField, DisplacementField>> pairs;  // (u, p) per load
  Eigen::VectorXd gradient_density;                                   // empty without adjoints
};

inline StateEvaluation evaluate_state(const TriMesh& mesh, const ScalarOperators& ops, const Eigen::VectorXd& v,
                                      const ElasticityParams& params, std::span<const LoadCase> loads,
                                      double alpha_tilde, double epsilon, bool with_gradient,
                                      SolverOptions solver = {}) {
  if (loads.empty()) throw std::invalid_argument("evaluate_state: no load cases");
  const ElasticProblem problem(mesh, v, params, solver);
  StateEvaluation out;
  for (const auto& load : loads) {
    DisplacementField u = problem.forward(load.traction);
    out.objective.per_load.push_back(problem.misfit(u, load.measurement));
    DisplacementField p;
    if (with_gradient) p = problem.adjoint(u, load.measurement);
    out.pairs.emplace_back(std::move(u), std::move(p));
  }
  out.objective.misfit = average_misfit(out.objective.per_load);
  out.objective.ginzburg_landau = ginzburg_landau_energy(ops, v, alpha_tilde, epsilon);
  out.objective.total = out.objective.misfit + out.objective.ginzburg_landau;
  if (with_gradient) out.gradient_density = assemble_gradient_density(mesh, params, out.pairs);
  return out;
}

/// Discrete reduced objective J(v) = misfit + Ginzburg-Landau energy.
inline double objective_value(const TriMesh& mesh, const ScalarOperators& ops, const Eigen::VectorXd& v,
                              const ElasticityParams& params, std::span<const LoadCase> loads, double alpha_tilde,
                              double epsilon) {
  return evaluate_state(mesh, ops, v, params, loads, alpha_tilde, epsilon, false).objective.total;
}

/// Adjoint-based nodal gradient of J: dJ/dv_i.
inline Eigen::VectorXd objective_gradient(const TriMesh& mesh, const ScalarOperators& ops, const Eigen::VectorXd& v,
                                          const ElasticityParams& params, std::span<const LoadCase> loads,
                                          double alpha_tilde, double epsilon) {
  const auto state = evaluate_state(mesh, ops, v, params, loads, alpha_tilde, epsilon, true);
  return state.gradient_density + ginzburg_landau_gradient(ops, v, alpha_tilde, epsilon);
}

}  // namespace elastocav
