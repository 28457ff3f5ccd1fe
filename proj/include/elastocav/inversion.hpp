#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "elastocav/geometry.hpp"
#include "elastocav/objective.hpp"
#include "elastocav/phasefield.hpp"
#include "elastocav/refine.hpp"
#include "elastocav/synth.hpp"

namespace elastocav {

enum class StopNorm { L2, Max };

inline const char* to_string(StopNorm n) { return n == StopNorm::L2 ? "l2" : "max"; }

inline StopNorm parse_stop_norm(const std::string& s) {
  if (s == "l2" || s == "L2") return StopNorm::L2;
  if (s == "max" || s == "inf") return StopNorm::Max;
  throw std::invalid_argument("unknown stop norm '" + s + "' (expected l2 or max)");
}

/// Steps numbered `iteration` and later use epsilon / divisor.
struct EpsilonSchedule {
  int iteration = 0;
  double divisor = 4.0;
};

struct RunConfig {
  double tol = 1e-5;
  double alpha_tilde = 1e-2;
  double tau = 1e-3;
  double epsilon = 1.0 / (16.0 * std::numbers::pi);
  double delta = 1e-2;
  double mu = 0.5;
  double lambda = 1.0;
  std::vector<LoadDefinition> loads;
  int working_resolution = 32;
  DirichletSides dirichlet;
  int refine_period = 1000;  // 0 disables refinement
  int max_refinements = -1;  // negative: no limit
  double dorfler_fraction = 0.5;
  std::optional<EpsilonSchedule> epsilon_schedule;
  double band_width = 0.1;
  NoiseSpec noise;
  int max_iterations = 50000;
  bool backtracking = false;
  StopNorm stop_norm = StopNorm::L2;
  PdasOptions pdas;

  ElasticityParams elastic() const { return {mu, lambda, delta}; }
  StepParams step() const { return {tau, alpha_tilde, epsilon}; }

  /// Throws on invalid values; returns advisory warnings.
  std::vector<std::string> validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("RunConfig: " + m); };
    if (!(tol > 0.0)) fail("tol must be positive");
    if (!(tau > 0.0)) fail("tau must be positive");
    if (!(epsilon > 0.0)) fail("epsilon must be positive");
    if (!(alpha_tilde >= 0.0)) fail("alpha_tilde must be nonnegative");
    if (!(delta > 0.0 && delta < 1.0)) fail("delta must lie in (0,1)");
    elastic().validate();
    if (refine_period < 0) fail("refine_period must be >= 1 (or 0 to disable refinement)");
    if (!(dorfler_fraction > 0.0 && dorfler_fraction <= 1.0)) fail("dorfler_fraction must lie in (0,1]");
    if (max_iterations < 0) fail("max_iterations must be nonnegative");
    if (working_resolution < 2) fail("working_resolution must be >= 2");
    if (epsilon_schedule && !(epsilon_schedule->divisor > 0.0 && std::isfinite(epsilon_schedule->divisor)))
      fail("epsilon divisor must be positive");
    noise.validate();
    std::vector<std::string> warnings;
    if (!(tau < delta)) warnings.push_back("tau is not smaller than delta");
    return warnings;
  }
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double misfit = 0.0;
  double ginzburg_landau = 0.0;
  double step_norm = 0.0;
  std::size_t active_lower = 0;
  std::size_t active_upper = 0;
  std::size_t inactive = 0;
  int pdas_iterations = 0;
  std::size_t vertices = 0;
  double epsilon = 0.0;
  double tau = 0.0;
  double wall_seconds = 0.0;
};

struct RefinementEvent {
  int iteration = 0;
  std::size_t vertices_before = 0;
  std::size_t vertices_after = 0;
  double misfit_before = 0.0;
  double misfit_after = 0.0;
};

struct EpsilonEvent {
  int iteration = 0;
  double epsilon_before = 0.0;
  double epsilon_after = 0.0;
  double ginzburg_landau_before = 0.0;
  double ginzburg_landau_after = 0.0;
};

struct RunHistory {
  std::vector<IterationRecord> records;
  std::vector<RefinementEvent> refinements;
  std::vector<EpsilonEvent> epsilon_events;
  double initial_objective = 0.0;
  bool converged = false;
  TriMesh mesh;
  PhaseField final_state;
  std::vector<LoadCase> loads;          // measurements on the final mesh
  Eigen::VectorXd final_gradient_density;  // misfit part of J' at the final state
  double final_epsilon = 0.0;
};

class ReconstructionError : public std::runtime_error {
 public:
  ReconstructionError(const std::string& what, RunHistory partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const RunHistory& partial() const { return partial_; }

 private:
  RunHistory partial_;
};

/// Optional hooks, called after each record and after each refinement.
struct RunObserver {
  std::function<void(const IterationRecord&, const TriMesh&, const PhaseField&)> on_iteration;
  std::function<void(const RefinementEvent&, const TriMesh&, const PhaseField&)> on_refinement;
};

/// Per-triangle refinement indicator |grad v| * area.
inline Eigen::VectorXd gradient_indicator(const TriMesh& mesh, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(mesh.num_triangles()));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto e = p1_element(mesh, t);
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    for (int i = 0; i < 3; ++i) g += v[mesh.triangles[t][i]] * e.grad[i];
    out[static_cast<Eigen::Index>(t)] = g.norm() * e.area;
  }
  return out;
}

inline double step_norm(const ScalarOperators& ops, const Eigen::VectorXd& diff, StopNorm norm) {
  if (norm == StopNorm::Max) return diff.size() ? diff.cwiseAbs().maxCoeff() : 0.0;
  return l2_norm(ops, diff);
}

/// Runs the gradient flow from v = 0 on `mesh` until the step norm drops to
/// tol or max_iterations steps have been taken.
inline RunHistory reconstruct(const RunConfig& config, const TriMesh& initial_mesh, std::vector<LoadCase> loads,
                              const RunObserver* observer = nullptr) {
  config.validate();
  if (loads.empty()) throw std::invalid_argument("reconstruct: no measurements");
  const ElasticityParams params = config.elastic();
  const auto clock_start = std::chrono::steady_clock::now();

  RunHistory history;
  TriMesh mesh = initial_mesh;
  for (auto& load : loads) {
    if (load.measurement.nodes != neumann_nodes(mesh))
      throw std::invalid_argument("reconstruct: measurement '" + load.id + "' is not defined on the mesh boundary");
  }
  auto ops = std::make_unique<ScalarOperators>(mesh);
  PhaseField v = make_phase_field(mesh, config.band_width);
  StepParams step = config.step();
  int refinements = 0;

  auto finish = [&](StateEvaluation& state) {
    history.mesh = mesh;
    history.final_state = v;
    history.loads = loads;
    history.final_gradient_density = state.gradient_density;
    history.final_epsilon = step.epsilon;
  };
  auto abort = [&](const std::string& why, StateEvaluation& state) {
    finish(state);
    return ReconstructionError(why, std::move(history));
  };
  auto evaluate = [&](const Eigen::VectorXd& values) {
    return evaluate_state(mesh, *ops, values, params, loads, config.alpha_tilde, step.epsilon, true);
  };
  auto apply_epsilon_schedule = [&](int n, StateEvaluation& state) {
    const auto& s = config.epsilon_schedule;
    if (!s || n != std::max(0, s->iteration - 1)) return;
    EpsilonEvent ev{n, step.epsilon, step.epsilon / s->divisor, state.objective.ginzburg_landau, 0.0};
    step.epsilon = ev.epsilon_after;
    state.objective.ginzburg_landau = ginzburg_landau_energy(*ops, v.values, config.alpha_tilde, step.epsilon);
    state.objective.total = state.objective.misfit + state.objective.ginzburg_landau;
    ev.ginzburg_landau_after = state.objective.ginzburg_landau;
    history.epsilon_events.push_back(ev);
  };

  StateEvaluation state = evaluate(v.values);
  apply_epsilon_schedule(0, state);
  history.initial_objective = state.objective.total;
  PdasState warm;
  bool have_warm = false;

  for (int n = 1; n <= config.max_iterations; ++n) {
    StepResult next;
    StateEvaluation next_state;
    double tau = step.tau;
    try {
      for (int halvings = 0;; ++halvings) {
        StepParams trial = step;
        trial.tau = tau;
        next = gradient_flow_step(*ops, v, state.gradient_density, trial, have_warm ? &warm : nullptr, config.pdas);
        next_state = evaluate(next.next.values);
        const double increase = next_state.objective.total - state.objective.total;
        if (!config.backtracking || halvings == 5 || increase <= 1e-12 * std::abs(state.objective.total)) break;
        tau *= 0.5;
      }
    } catch (const std::exception& e) {
      throw abort(std::string("iteration ") + std::to_string(n) + ": " + e.what(), state);
    }
    if (!std::isfinite(next_state.objective.total)) throw abort("objective is not finite", state);

    const double d = step_norm(*ops, next.next.values - v.values, config.stop_norm);
    v = std::move(next.next);
    state = std::move(next_state);
    warm = std::move(next.pdas);
    have_warm = true;

    IterationRecord rec;
    rec.iteration = n;
    rec.objective = state.objective.total;
    rec.misfit = state.objective.misfit;
    rec.ginzburg_landau = state.objective.ginzburg_landau;
    rec.step_norm = d;
    rec.active_lower = warm.count(BoundStatus::Lower);
    rec.active_upper = warm.count(BoundStatus::Upper);
    rec.inactive = warm.count(BoundStatus::Inactive);
    rec.pdas_iterations = warm.iterations;
    rec.vertices = mesh.num_vertices();
    rec.epsilon = step.epsilon;
    rec.tau = tau;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    history.records.push_back(rec);
    if (observer && observer->on_iteration) observer->on_iteration(rec, mesh, v);

    if (d <= config.tol) {
      history.converged = true;
      break;
    }
    if (n == config.max_iterations) break;

    if (config.refine_period > 0 && n % config.refine_period == 0 &&
        (config.max_refinements < 0 || refinements < config.max_refinements)) {
      const Eigen::VectorXd indicator = gradient_indicator(mesh, v.values);
      RefinementResult r = refine_by_indicator(mesh, std::span<const double>(indicator.data(), indicator.size()),
                                               config.dorfler_fraction);
      if (r.changed()) {
        RefinementEvent ev{n, mesh.num_vertices(), r.mesh.num_vertices(), state.objective.misfit, 0.0};
        Eigen::VectorXd values = transfer_field(r, v.values, 1);
        mesh = std::move(r.mesh);
        v.frozen = frozen_band(mesh, config.band_width);
        for (std::size_t i = 0; i < v.frozen.size(); ++i)
          if (v.frozen[i]) values[static_cast<Eigen::Index>(i)] = 0.0;
        v.values = std::move(values);
        ops = std::make_unique<ScalarOperators>(mesh);
        try {
          for (auto& load : loads) load.resample(mesh);
          state = evaluate(v.values);
        } catch (const std::exception& e) {
          throw abort(std::string("after refinement: ") + e.what(), state);
        }
        ev.misfit_after = state.objective.misfit;
        history.refinements.push_back(ev);
        have_warm = false;
        ++refinements;
        if (observer && observer->on_refinement) observer->on_refinement(ev, mesh, v);
      }
    }
    apply_epsilon_schedule(n, state);
  }
  finish(state);
  return history;
}

/// Smallest value of the discrete first-order condition J'(v)[omega - v]
/// over `count` random admissible competitors omega.
inline double vi_certificate(const TriMesh& mesh, const PhaseField& v, const Eigen::VectorXd& gradient_density,
                             double alpha_tilde, double epsilon, int count, std::uint64_t seed) {
  const ScalarOperators ops(mesh);
  std::mt19937_64 rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < count; ++k) {
    const Eigen::VectorXd omega = random_admissible(v, rng);
    worst = std::min(worst, optimality_slack(ops, v.values, gradient_density, alpha_tilde, epsilon, omega));
  }
  return worst;
}

struct ShapeMetrics {
  bool empty = true;
  double area = 0.0;
  double target_area = 0.0;
  Point2 centroid{0.0, 0.0};
  double centroid_distance = std::numeric_limits<double>::infinity();
  double jaccard = 0.0;
  int components = 0;
};

/// Compares the region {centroid value of v > level} with the target shape.
/// Overlap areas are integrated on a `subdivision`^2 split of each triangle.
inline ShapeMetrics threshold_and_compare(const TriMesh& mesh, const Eigen::VectorXd& v, double level,
                                          const CavityShape& target, int subdivision = 8) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("threshold_and_compare: level must lie in (0,1)");
  const Eigen::VectorXd c = centroid_values(mesh, v);
  std::vector<std::uint8_t> in(mesh.num_triangles(), 0);
  ShapeMetrics m;
  double cx = 0.0, cy = 0.0, both = 0.0, target_area = 0.0;
  const int k = subdivision;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Point2 a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]], d = mesh.vertices[tri[2]];
    const double area = mesh.triangle_area(t);
    in[t] = c[static_cast<Eigen::Index>(t)] > level;
    if (in[t]) {
      const Point2 g = mesh.triangle_centroid(t);
      m.area += area;
      cx += area * g.x;
      cy += area * g.y;
    }
    // k^2 congruent sub-triangles: centroids at barycentric (i+1/3, j+1/3)/k
    // and (i+2/3, j+2/3)/k.
    const double sub = area / (k * k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; i + j < k; ++j) {
        for (int flip = 0; flip < (i + j + 1 < k ? 2 : 1); ++flip) {
          const double s = (i + (flip ? 2.0 : 1.0) / 3.0) / k;
          const double r = (j + (flip ? 2.0 : 1.0) / 3.0) / k;
          const Point2 p = (1.0 - s - r) * a + s * b + r * d;
          if (contains(target, p)) {
            target_area += sub;
            if (in[t]) both += sub;
          }
        }
      }
    }
  }
  m.target_area = target_area;
  m.empty = !(m.area > 0.0);
  if (!m.empty) {
    m.centroid = {cx / m.area, cy / m.area};
    const Point2 tc = elastocav::centroid(target);
    m.centroid_distance = std::hypot(m.centroid.x - tc.x, m.centroid.y - tc.y);
    m.components = count_triangle_components(mesh, in);
  }
  const double uni = m.area + target_area - both;
  m.jaccard = uni > 0.0 ? both / uni : 0.0;
  return m;
}

}  // namespace elastocav
