#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "elastocav/mesh.hpp"

namespace elastocav {

using Vec2 = Eigen::Vector2d;

/// Values attached to specific boundary vertices of one mesh.
struct BoundaryTrace {
  std::vector<int> nodes;
  std::vector<Vec2> values;
};

/// Boundary data detached from any mesh: samples at points on the boundary
/// of (-1,1)^2, interpreted as piecewise linear along the boundary.
struct BoundaryProfile {
  std::vector<Point2> points;
  std::vector<Vec2> values;
};

inline constexpr double kBoundaryTolerance = 1e-10;
inline constexpr double kPerimeter = 8.0;

/// Arc-length coordinate in [0, 8) counterclockwise from (-1,-1), or nullopt
/// if the point is farther than the tolerance from the square's boundary.
inline std::optional<double> perimeter_coordinate(Point2 p, double tol = kBoundaryTolerance) {
  if (p.x < -1.0 - tol || p.x > 1.0 + tol || p.y < -1.0 - tol || p.y > 1.0 + tol) return std::nullopt;
  if (std::abs(p.y + 1.0) <= tol && p.x < 1.0 - tol) return std::max(0.0, p.x + 1.0);
  if (std::abs(p.x - 1.0) <= tol && p.y < 1.0 - tol) return 2.0 + (p.y + 1.0);
  if (std::abs(p.y - 1.0) <= tol && p.x > -1.0 + tol) return 4.0 + (1.0 - p.x);
  if (std::abs(p.x + 1.0) <= tol) {
    const double s = 6.0 + (1.0 - p.y);
    return s >= kPerimeter - tol ? 0.0 : s;
  }
  return std::nullopt;
}

/// Samples a nodal vector field (interleaved x,y components) at every vertex
/// on the outer boundary of the mesh (cavity walls excluded).
inline BoundaryProfile boundary_profile(const TriMesh& mesh, const Eigen::VectorXd& field) {
  if (field.size() != 2 * static_cast<Eigen::Index>(mesh.num_vertices()))
    throw std::invalid_argument("boundary_profile: field size mismatch");
  std::vector<std::uint8_t> on(mesh.num_vertices(), 0);
  for (const auto& e : mesh.boundary_edges)
    if (e.tag.kind != BoundaryKind::CavityWall) on[e.a] = on[e.b] = 1;
  BoundaryProfile out;
  for (std::size_t i = 0; i < on.size(); ++i) {
    if (!on[i]) continue;
    out.points.push_back(mesh.vertices[i]);
    out.values.emplace_back(field[2 * i], field[2 * i + 1]);
  }
  return out;
}

inline BoundaryProfile profile_from_trace(const TriMesh& mesh, const BoundaryTrace& trace) {
  BoundaryProfile out;
  for (std::size_t k = 0; k < trace.nodes.size(); ++k) {
    out.points.push_back(mesh.vertices[trace.nodes[k]]);
    out.values.push_back(trace.values[k]);
  }
  return out;
}

/// Evaluates a boundary profile at every Neumann node of the target mesh by
/// linear interpolation along the boundary. Throws MeshError when a point is
/// off the boundary.
inline BoundaryTrace sample_profile(const BoundaryProfile& profile, const TriMesh& target) {
  struct Sample {
    double s;
    Vec2 value;
  };
  std::vector<Sample> samples;
  samples.reserve(profile.points.size());
  for (std::size_t k = 0; k < profile.points.size(); ++k) {
    const auto s = perimeter_coordinate(profile.points[k]);
    if (!s) throw MeshError("boundary profile point is not on the domain boundary");
    samples.push_back({*s, profile.values[k]});
  }
  if (samples.empty()) throw MeshError("empty boundary profile");
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.s < b.s; });

  BoundaryTrace out;
  out.nodes = neumann_nodes(target);
  out.values.reserve(out.nodes.size());
  for (int node : out.nodes) {
    const auto s_opt = perimeter_coordinate(target.vertices[node]);
    if (!s_opt) throw MeshError("target Neumann node is not on the domain boundary");
    const double s = *s_opt;
    auto hi = std::lower_bound(samples.begin(), samples.end(), s,
                               [](const Sample& a, double x) { return a.s < x; });
    // Periodic neighbours.
    const Sample& right = hi == samples.end() ? samples.front() : *hi;
    const Sample& left = hi == samples.begin() ? samples.back() : *(hi - 1);
    const double s_right = hi == samples.end() ? right.s + kPerimeter : right.s;
    const double s_left = hi == samples.begin() ? left.s - kPerimeter : left.s;
    if (std::abs(s_right - s) <= kBoundaryTolerance) {
      out.values.push_back(right.value);
    } else if (std::abs(s - s_left) <= kBoundaryTolerance) {
      out.values.push_back(left.value);
    } else {
      const double span = s_right - s_left;
      if (!(span > 0.0)) throw MeshError("degenerate boundary profile");
      const double w = (s - s_left) / span;
      out.values.push_back((1.0 - w) * left.value + w * right.value);
    }
  }
  return out;
}

/// Transfers the boundary trace of a source-mesh field onto the Neumann
/// nodes of a target mesh sharing the same outer boundary.
inline BoundaryTrace interpolate_boundary_trace(const TriMesh& source_mesh, const Eigen::VectorXd& field,
                                                const TriMesh& target_mesh) {
  return sample_profile(boundary_profile(source_mesh, field), target_mesh);
}

/// Expands a trace to a full interleaved nodal vector (zero off the trace).
inline Eigen::VectorXd expand_trace(const BoundaryTrace& trace, std::size_t num_vertices) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(num_vertices));
  for (std::size_t k = 0; k < trace.nodes.size(); ++k) {
    out[2 * trace.nodes[k]] = trace.values[k].x();
    out[2 * trace.nodes[k] + 1] = trace.values[k].y();
  }
  return out;
}

/// Restricts a nodal vector field to the Neumann nodes of its mesh.
inline BoundaryTrace neumann_trace(const TriMesh& mesh, const Eigen::VectorXd& field) {
  BoundaryTrace out;
  out.nodes = neumann_nodes(mesh);
  for (int i : out.nodes) out.values.emplace_back(field[2 * i], field[2 * i + 1]);
  return out;
}

}  // namespace elastocav
