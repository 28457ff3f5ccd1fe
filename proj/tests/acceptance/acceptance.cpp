// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if
// every selected criterion passes. `acceptance 1 4 8` runs a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "elastocav/inversion.hpp"
#include "elastocav/presets.hpp"
#include "support/box_qp.hpp"
#include "support/cavity.hpp"
#include "support/loads.hpp"
#include "support/manufactured.hpp"
#include "support/meshes.hpp"

using namespace elastocav;
namespace t = elastocav::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Eigen::VectorXd masked(Eigen::VectorXd v, const std::vector<std::uint8_t>& frozen) {
  for (std::size_t i = 0; i < frozen.size(); ++i)
    if (frozen[i]) v[static_cast<Eigen::Index>(i)] = 0.0;
  return v;
}

// 1. Adjoint gradient against central differences.
Outcome gradient_check() {
  const auto start = std::chrono::steady_clock::now();
  const TriMesh mesh = build_square_mesh(10);
  const ScalarOperators ops(mesh);
  const ElasticityParams params{0.2, 1.0, 1e-2};
  const double eps = 1.0 / (16.0 * std::numbers::pi);
  const auto loads = t::loads_from_phase(mesh, t::disk_indicator(mesh, 0.2, 0.2, 0.4), params);
  const auto frozen = frozen_band(mesh, 0.1);
  std::mt19937_64 rng(2024);
  const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
  const Eigen::VectorXd v = masked(t::random_vector(n, rng, 0.05, 0.95), frozen);
  const Eigen::VectorXd grad = objective_gradient(mesh, ops, v, params, loads, 1e-2, eps);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Eigen::VectorXd d = masked(t::random_vector(n, rng), frozen);
    const double h = 1e-5;
    const double fd = (objective_value(mesh, ops, v + h * d, params, loads, 1e-2, eps) -
                       objective_value(mesh, ops, v - h * d, params, loads, 1e-2, eps)) /
                      (2.0 * h);
    const double exact = grad.dot(d);
    worst = std::max(worst, std::abs(fd - exact) / std::abs(exact));
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-5 && secs < 10.0, fmt("max relative error %.2e over 5 directions, %.2f s", worst, secs)};
}

// 2. Primal-dual active set against exhaustive enumeration.
Outcome pdas_check() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> size(1, 12);
  double worst_diff = 0.0, worst_comp = 0.0;
  int mismatched = 0;
  for (int k = 0; k < 200; ++k) {
    const t::BoxQp qp = t::random_box_qp(size(rng), rng);
    const auto ref = t::enumerate_box_qp(qp);
    if (!ref) {
      ++mismatched;
      continue;
    }
    const PdasResult r = pdas_solve(qp.sparse(), qp.rhs(), qp.lower, qp.upper);
    for (std::size_t i = 0; i < ref->v.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      worst_diff = std::max(worst_diff, std::abs(r.v[ii] - ref->v[i]));
      worst_comp = std::max({worst_comp, std::abs(r.state.lambda_lower[ii] * (r.v[ii] - qp.lower)),
                             std::abs(r.state.lambda_upper[ii] * (qp.upper - r.v[ii]))});
    }
  }
  const double secs = seconds_since(start);
  return {mismatched == 0 && worst_diff <= 1e-10 && worst_comp <= 1e-12 && secs < 30.0,
          fmt("200 problems, max |v - v_enum| %.2e, max complementarity %.2e, %d without reference, %.2f s",
              worst_diff, worst_comp, mismatched, secs)};
}

struct DeskRun {
  ExperimentConfig config;
  RunHistory history;
  double seconds = 0.0;
};

DeskRun desk_run(ExperimentConfig c, int working, int generator) {
  c.run.working_resolution = working;
  c.generator_resolution = generator;
  const auto start = std::chrono::steady_clock::now();
  const TriMesh mesh = build_square_mesh(working, c.run.dirichlet);
  auto loads = generate_measurements(*c.target, c.run.loads, generator, mesh, c.run.elastic(), c.run.dirichlet);
  apply_noise(loads, mesh, c.run.noise);
  RunHistory h = reconstruct(c.run, mesh, std::move(loads));
  return {std::move(c), std::move(h), seconds_since(start)};
}

// 3. Energy decrease of the semi-implicit scheme.
Outcome monotonicity_check() {
  ExperimentConfig c = find_preset("test1").config;
  c.run.max_iterations = 500;
  c.run.tol = 1e-300;
  const DeskRun run = desk_run(c, 24, 48);
  double worst = -std::numeric_limits<double>::infinity();
  double previous = run.history.initial_objective;
  for (const auto& r : run.history.records) {
    worst = std::max(worst, r.objective - previous);
    previous = r.objective;
  }
  const bool pass = run.history.records.size() == 500 && worst <= 1e-12;
  return {pass, fmt("%zu steps, largest increase J(n+1)-J(n) = %.2e, J %.4e -> %.4e, %.1f s", run.history.records.size(),
                    worst, run.history.initial_objective, previous, run.seconds)};
}

// 4. Manufactured solution convergence orders.
Outcome fem_orders_check() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> l2, h1, h;
  for (int n : {8, 16, 32, 64}) {
    const auto e = t::manufactured_errors(n, 0.5, 1.0);
    l2.push_back(e.l2);
    h1.push_back(e.h1);
    h.push_back(e.h);
  }
  const auto ol2 = t::observed_orders(l2, h), oh1 = t::observed_orders(h1, h);
  bool pass = true;
  std::string orders;
  for (std::size_t i = 0; i < ol2.size(); ++i) {
    pass = pass && std::abs(ol2[i] - 2.0) <= 0.2 && std::abs(oh1[i] - 1.0) <= 0.2;
    orders += fmt(" (%.3f, %.3f)", ol2[i], oh1[i]);
  }
  const double secs = seconds_since(start);
  return {pass && secs < 60.0, "observed (L2, H1) orders:" + orders + fmt(", %.2f s", secs)};
}

// 5. Ersatz material converges to the carved cavity as delta decreases.
Outcome ersatz_check() {
  const TriMesh mesh = build_square_mesh(32);
  const CavityShape disk = make_disk(0.2, 0.2, 0.35);
  const ElasticityParams params{0.2, 1.0, 1e-2};
  std::vector<double> gaps;
  for (double delta : {1e-1, 1e-2, 1e-3}) gaps.push_back(t::ersatz_trace_error(mesh, disk, params, delta, t::traction_b()));
  const bool pass = gaps[1] < gaps[0] && gaps[2] < gaps[1];
  return {pass, fmt("trace gap %.3e, %.3e, %.3e for delta 1e-1, 1e-2, 1e-3", gaps[0], gaps[1], gaps[2])};
}

std::optional<DeskRun> g_clean_run;

const DeskRun& clean_desk_run() {
  if (!g_clean_run) g_clean_run = desk_run(find_preset("test1").config, 32, 64);
  return *g_clean_run;
}

std::string describe_run(const DeskRun& run, const ShapeMetrics& m) {
  const auto& h = run.history;
  return fmt("%s after %zu iterations (%zu vertices), centroid distance %.3f, Jaccard %.3f, %d component(s), %.1f s",
             h.converged ? "converged" : "stopped", h.records.size(), h.mesh.num_vertices(), m.centroid_distance,
             m.jaccard, m.components, run.seconds);
}

// 6. Desk-scale reconstruction of the circular cavity.
Outcome desk_test1_check() {
  const DeskRun& run = clean_desk_run();
  const ShapeMetrics m = threshold_and_compare(run.history.mesh, run.history.final_state.values, 0.5, *run.config.target);
  const bool pass = !m.empty && m.centroid_distance <= 0.1 && m.jaccard >= 0.5 && run.seconds < 600.0;
  return {pass, describe_run(run, m)};
}

std::optional<DeskRun> g_noisy_run;

// 7. The noisy circular-cavity experiment against the same run on clean data.
Outcome noise_check() {
  const ExperimentConfig noisy = find_preset("test6a").config;
  ExperimentConfig clean = noisy;
  clean.run.noise.level = 0.0;
  g_noisy_run = desk_run(noisy, 32, 64);
  const DeskRun reference = desk_run(clean, 32, 64);
  const ShapeMetrics m =
      threshold_and_compare(g_noisy_run->history.mesh, g_noisy_run->history.final_state.values, 0.5, *noisy.target);
  const double noisy_misfit = g_noisy_run->history.records.back().misfit;
  const double clean_misfit = reference.history.records.back().misfit;
  const bool pass = !m.empty && m.jaccard >= 0.4 && noisy_misfit > clean_misfit;
  return {pass, describe_run(*g_noisy_run, m) + fmt("; final misfit %.3e with noise vs %.3e without (%.1f s)",
                                                    noisy_misfit, clean_misfit, reference.seconds)};
}

// 8. Rescaling constant of the double-well term.
Outcome double_well_check() {
  const double value = double_well_integral();
  const double err = std::abs(value - std::numbers::pi / 8.0);
  return {err <= 1e-10, fmt("integral %.15f, |error| %.2e", value, err)};
}

// 9. Discrete variational inequality at converged states.
Outcome vi_check() {
  std::vector<const DeskRun*> runs{&clean_desk_run()};
  if (!g_noisy_run) noise_check();
  runs.push_back(&*g_noisy_run);
  std::string detail;
  int converged = 0;
  bool pass = true;
  for (const DeskRun* run : runs) {
    const auto& h = run->history;
    if (!h.converged) continue;
    ++converged;
    const double slack = vi_certificate(h.mesh, h.final_state, h.final_gradient_density, run->config.run.alpha_tilde,
                                        h.final_epsilon, 100, 99);
    pass = pass && slack >= -1e-8;
    detail += fmt("%s%s noise %g%%: min slack %.3e", detail.empty() ? "" : "; ", run->config.name.c_str(),
                  run->config.run.noise.level, slack);
  }
  if (converged == 0) return {false, "no converged run to certify"};
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient finite-difference check", gradient_check},
      {"active set solver matches enumeration", pdas_check},
      {"energy monotonicity, first 500 steps", monotonicity_check},
      {"finite element convergence orders", fem_orders_check},
      {"ersatz trace gap decreases with delta", ersatz_check},
      {"desk reconstruction of the circular cavity", desk_test1_check},
      {"reconstruction with 2% noise", noise_check},
      {"double-well integral equals pi/8", double_well_check},
      {"variational inequality certificate", vi_check},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s  %d. %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
