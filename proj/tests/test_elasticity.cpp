#include <gtest/gtest.h>

#include <random>

#include "elastocav/elasticity.hpp"
#include "support/cavity.hpp"
#include "support/meshes.hpp"

using namespace elastocav;
using elastocav::testing::random_vector;

namespace {

const ElasticityParams kParams{0.2, 1.0, 1e-2};

Vec2 g_linear(double, double y) { return {0.0, 0.1 - 0.3 * y}; }
Vec2 g_quadratic(double x, double y) { return {-0.5 * x * x, y * y}; }

Eigen::VectorXd random_phase(const TriMesh& m, std::mt19937_64& rng) {
  return random_vector(static_cast<Eigen::Index>(m.num_vertices()), rng, 0.0, 1.0);
}

}  // namespace

TEST(Forward, ZeroTractionGivesZeroDisplacement) {
  const TriMesh m = build_square_mesh(8);
  const auto u = solve_forward(m, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.num_vertices())), kParams,
                               [](double, double) { return Vec2::Zero(); });
  EXPECT_EQ(u.values.norm(), 0.0);
}

TEST(Forward, DirichletNodesStayFixed) {
  const TriMesh m = build_square_mesh(8);
  std::mt19937_64 rng(1);
  const auto u = solve_forward(m, random_phase(m, rng), kParams, g_quadratic);
  for (int d : dirichlet_dofs(m)) EXPECT_EQ(u.values[d], 0.0);
  EXPECT_GT(u.values.norm(), 0.0);
}

TEST(Forward, LinearInTraction) {
  const TriMesh m = build_square_mesh(10);
  std::mt19937_64 rng(2);
  const ElasticProblem problem(m, random_phase(m, rng), kParams);
  const auto u1 = problem.forward(g_linear);
  const auto u2 = problem.forward(g_quadratic);
  const auto u12 = problem.forward([](double x, double y) -> Vec2 { return 2.0 * g_linear(x, y) - 3.0 * g_quadratic(x, y); });
  EXPECT_LE((u12.values - (2.0 * u1.values - 3.0 * u2.values)).norm(), 1e-10 * u12.values.norm());
}

TEST(Forward, WorkEqualsTwiceStrainEnergy) {
  const TriMesh m = build_square_mesh(12);
  std::mt19937_64 rng(3);
  const ElasticProblem problem(m, random_phase(m, rng), kParams);
  const Eigen::VectorXd f = assemble_traction_load(m, g_quadratic);
  const auto u = problem.solve_load(f);
  EXPECT_NEAR(f.dot(u.values), 2.0 * elastic_energy(problem.stiffness(), u.values), 1e-10 * f.dot(u.values));
}

TEST(Forward, BettiReciprocity) {
  const TriMesh m = build_square_mesh(10);
  std::mt19937_64 rng(4);
  const ElasticProblem problem(m, random_phase(m, rng), kParams);
  const Eigen::VectorXd f1 = assemble_traction_load(m, g_linear);
  const Eigen::VectorXd f2 = assemble_traction_load(m, g_quadratic);
  const double a = f2.dot(problem.solve_load(f1).values);
  const double b = f1.dot(problem.solve_load(f2).values);
  EXPECT_NEAR(a, b, 1e-10 * std::abs(a));
}

TEST(Forward, SolverIsReusedAcrossLoads) {
  const TriMesh m = build_square_mesh(10);
  std::mt19937_64 rng(5);
  const Eigen::VectorXd v = random_phase(m, rng);
  const ElasticProblem problem(m, v, kParams);
  for (const TractionFn& g : {TractionFn(g_linear), TractionFn(g_quadratic)}) {
    const auto reused = problem.forward(g);
    const auto fresh = solve_forward(m, v, kParams, g);
    EXPECT_LE((reused.values - fresh.values).norm(), 1e-12 * fresh.values.norm());
  }
}

TEST(Forward, RejectsInvalidParameters) {
  const TriMesh m = build_square_mesh(4);
  const Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.num_vertices()));
  EXPECT_THROW(ElasticProblem(m, v, {0.2, 1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(ElasticProblem(m, Eigen::VectorXd::Zero(3), kParams), std::invalid_argument);
}

TEST(TrueCavity, WithoutCavityMatchesHomogeneousErsatz) {
  const TriMesh m = build_square_mesh(8);
  const auto plain = solve_true_cavity(m, kParams, g_linear);
  const auto ersatz =
      solve_forward(m, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.num_vertices())), kParams, g_linear);
  EXPECT_LE((plain.values - ersatz.values).norm(), 1e-12 * plain.values.norm());
}

TEST(TrueCavity, CavityChangesTheTrace) {
  const TriMesh m = build_square_mesh(24);
  const TriMesh carved = carve_cavity(m, make_disk(0.2, 0.2, 0.35));
  const auto hole = solve_true_cavity(carved, kParams, g_linear);
  const auto plain = solve_true_cavity(m, kParams, g_linear);
  const BoundaryTrace hole_on_m = sample_profile(boundary_profile(carved, hole.values), m);
  EXPECT_GT(std::sqrt(2.0 * misfit(m, plain, hole_on_m)), 1e-4);
}

TEST(TrueCavity, CavityWallIsTractionFree) {
  // With no traction on the wall the residual K u - f vanishes at every
  // free node, including the wall nodes.
  const TriMesh m = build_square_mesh(16);
  const TriMesh carved = carve_cavity(m, make_square(0.0, 0.1, 0.25));
  const Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(carved.num_vertices()));
  const ElasticProblem problem(carved, v, kParams);
  const Eigen::VectorXd f = assemble_traction_load(carved, g_quadratic);
  const auto u = problem.solve_load(f);
  const Eigen::VectorXd r = problem.stiffness() * u.values - f;
  const auto wall = vertices_with_tag(carved, BoundaryKind::CavityWall);
  int count = 0;
  for (std::size_t node = 0; node < wall.size(); ++node) {
    if (!wall[node]) continue;
    ++count;
    EXPECT_LE(r.segment<2>(2 * node).norm(), 1e-10 * f.norm());
  }
  EXPECT_GT(count, 0);
}

TEST(Misfit, ExactDataGivesZeroMisfitAndAdjoint) {
  const TriMesh m = build_square_mesh(10);
  std::mt19937_64 rng(6);
  const ElasticProblem problem(m, random_phase(m, rng), kParams);
  const auto u = problem.forward(g_linear);
  const BoundaryTrace data = neumann_trace(m, u.values);
  EXPECT_EQ(problem.misfit(u, data), 0.0);
  EXPECT_EQ(problem.adjoint(u, data).values.norm(), 0.0);
}

TEST(Misfit, ConstantOffsetOnWholeNeumannBoundary) {
  // Sigma_N is right + top + left, total length 6: offset (a, b) gives
  // 1/2 * 6 * (a^2 + b^2).
  const TriMesh m = build_square_mesh(6);
  const DisplacementField zero{Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(m.num_vertices()))};
  BoundaryTrace data = neumann_trace(m, zero.values);
  for (auto& val : data.values) val = Vec2(0.3, -0.4);
  EXPECT_NEAR(misfit(m, zero, data), 0.5 * 6.0 * 0.25, 1e-13);
}

TEST(Misfit, LinearDifferenceIntegratedExactly) {
  // u - m = (x, 0) on Sigma_N: right side contributes 2, top 2/3, left 2.
  const TriMesh m = build_square_mesh(5);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(m.num_vertices()));
  for (std::size_t i = 0; i < m.num_vertices(); ++i) u[2 * i] = m.vertices[i].x;
  const BoundaryTrace data = neumann_trace(m, Eigen::VectorXd::Zero(u.size()));
  EXPECT_NEAR(misfit(m, {u}, data), 0.5 * (2.0 + 2.0 / 3.0 + 2.0), 1e-13);
}

TEST(Misfit, AverageOverLoads) {
  const std::vector<double> per_load{1.0, 2.0, 6.0};
  EXPECT_DOUBLE_EQ(average_misfit(per_load), 3.0);
  EXPECT_EQ(average_misfit({}), 0.0);
}

TEST(Adjoint, DualityWithForwardOperator) {
  // For any load w: (K^{-1} w)^T B (u - m) = w^T p.
  const TriMesh m = build_square_mesh(10);
  std::mt19937_64 rng(7);
  const ElasticProblem problem(m, random_phase(m, rng), kParams);
  const auto u = problem.forward(g_quadratic);
  BoundaryTrace data = neumann_trace(m, u.values);
  for (auto& val : data.values) val += Vec2(0.01, -0.02);
  const auto p = problem.adjoint(u, data);
  const Eigen::VectorXd Br = problem.boundary_mass() * problem.residual(u, data);
  const auto fixed = dirichlet_dofs(m);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd w = random_vector(u.values.size(), rng);
    for (int d : fixed) w[d] = 0.0;
    const double lhs = problem.solve_load(w).values.dot(Br);
    const double rhs = w.dot(p.values);
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Adjoint, FreeFunctionMatchesProblemMethod) {
  const TriMesh m = build_square_mesh(8);
  std::mt19937_64 rng(8);
  const Eigen::VectorXd v = random_phase(m, rng);
  const ElasticProblem problem(m, v, kParams);
  const auto u = problem.forward(g_linear);
  BoundaryTrace data = neumann_trace(m, Eigen::VectorXd::Zero(u.values.size()));
  const auto p1 = problem.adjoint(u, data);
  const auto p2 = solve_adjoint(m, v, kParams, u, data);
  EXPECT_LE((p1.values - p2.values).norm(), 1e-12 * p1.values.norm());
}

TEST(Ersatz, TraceErrorDecreasesWithContrast) {
  const TriMesh m = build_square_mesh(24);
  const CavityShape disk = make_disk(0.2, 0.2, 0.35);
  double previous = std::numeric_limits<double>::infinity();
  for (double delta : {1e-1, 1e-2, 1e-3}) {
    const double err = elastocav::testing::ersatz_trace_error(m, disk, kParams, delta, g_linear);
    EXPECT_LT(err, previous) << "delta = " << delta;
    previous = err;
  }
}

TEST(LoadCase, ResampleFollowsTheMesh) {
  const TriMesh coarse = build_square_mesh(4);
  const TriMesh fine = build_square_mesh(8);
  Eigen::VectorXd field(2 * static_cast<Eigen::Index>(coarse.num_vertices()));
  for (std::size_t i = 0; i < coarse.num_vertices(); ++i)
    field.segment<2>(2 * i) = Vec2(coarse.vertices[i].x, 2.0 * coarse.vertices[i].y);
  LoadCase load{"g1", "(0, 1)", [](double, double) { return Vec2(0.0, 1.0); }, boundary_profile(coarse, field), {}};
  load.resample(fine);
  EXPECT_EQ(load.measurement.nodes, neumann_nodes(fine));
  for (std::size_t k = 0; k < load.measurement.nodes.size(); ++k) {
    const Point2 p = fine.vertices[load.measurement.nodes[k]];
    EXPECT_NEAR((load.measurement.values[k] - Vec2(p.x, 2.0 * p.y)).norm(), 0.0, 1e-14);
  }
}
