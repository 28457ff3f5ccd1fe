#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "elastocav/mesh.hpp"

namespace elastocav {

/// Result of a refinement pass. Old vertices keep their indices; vertex
/// `old_vertex_count + k` is the midpoint of `new_vertex_parents[k]`.
struct RefinementResult {
  TriMesh mesh;
  std::size_t old_vertex_count = 0;
  std::vector<std::array<int, 2>> new_vertex_parents;
  std::vector<int> marked;  // triangles selected by the marking step

  bool changed() const { return !new_vertex_parents.empty(); }
};

/// Smallest set of triangles (largest indicators first, ties by index)
/// whose indicator sum reaches `fraction` of the total.
inline std::vector<int> dorfler_mark(std::span<const double> indicator, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("dorfler_mark: fraction must lie in (0,1]");
  const double total = std::accumulate(indicator.begin(), indicator.end(), 0.0);
  std::vector<int> order(indicator.size());
  std::iota(order.begin(), order.end(), 0);
  if (!(total > 0.0)) return {};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return indicator[a] > indicator[b]; });
  std::vector<int> marked;
  double acc = 0.0;
  for (int t : order) {
    if (acc >= fraction * total * (1.0 - 1e-14) || !(indicator[t] > 0.0)) break;
    marked.push_back(t);
    acc += indicator[t];
  }
  return marked;
}

/// Newest-vertex bisection of the given triangles with conforming closure.
inline RefinementResult bisect_marked(const TriMesh& mesh, std::span<const int> marked) {
  RefinementResult result;
  result.old_vertex_count = mesh.num_vertices();
  result.marked.assign(marked.begin(), marked.end());

  std::unordered_map<std::uint64_t, int> midpoint;  // marked edge -> new vertex (or -1)
  for (int t : marked) {
    const auto& tri = mesh.triangles.at(static_cast<std::size_t>(t));
    midpoint.emplace(detail::edge_key(tri[1], tri[2]), -1);
  }
  // Closure: a triangle with any marked edge must also bisect its refinement edge.
  for (bool changed = !midpoint.empty(); changed;) {
    changed = false;
    for (const auto& tri : mesh.triangles) {
      const auto ref = detail::edge_key(tri[1], tri[2]);
      if (midpoint.contains(ref)) continue;
      if (midpoint.contains(detail::edge_key(tri[0], tri[1])) ||
          midpoint.contains(detail::edge_key(tri[2], tri[0]))) {
        midpoint.emplace(ref, -1);
        changed = true;
      }
    }
  }

  TriMesh& out = result.mesh;
  out.vertices = mesh.vertices;
  out.refinement_level = mesh.refinement_level + (midpoint.empty() ? 0 : 1);
  auto mid = [&](int a, int b) -> int {
    auto it = midpoint.find(detail::edge_key(a, b));
    if (it == midpoint.end()) return -1;
    if (it->second < 0) {
      it->second = static_cast<int>(out.vertices.size());
      out.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
      result.new_vertex_parents.push_back({std::min(a, b), std::max(a, b)});
    }
    return it->second;
  };

  // Each triangle is bisected on its refinement edge, then each child on its
  // own refinement edge (an edge of the parent) if that edge is marked too.
  auto bisect = [&](auto&& self, const std::array<int, 3>& tri, int depth) -> void {
    const int m = depth < 2 ? mid(tri[1], tri[2]) : -1;
    if (m < 0) {
      out.triangles.push_back(tri);
      return;
    }
    self(self, {m, tri[0], tri[1]}, depth + 1);
    self(self, {m, tri[2], tri[0]}, depth + 1);
  };
  for (const auto& tri : mesh.triangles) bisect(bisect, tri, 0);

  for (const auto& e : mesh.boundary_edges) {
    const int m = mid(e.a, e.b);
    if (m < 0) {
      out.boundary_edges.push_back(e);
    } else {
      out.boundary_edges.push_back({e.a, m, e.tag});
      out.boundary_edges.push_back({m, e.b, e.tag});
    }
  }
  check_mesh(out);
  return result;
}

/// Dörfler marking followed by newest-vertex bisection with closure.
inline RefinementResult refine_by_indicator(const TriMesh& mesh, std::span<const double> indicator,
                                            double fraction = 0.5) {
  if (indicator.size() != mesh.num_triangles())
    throw std::invalid_argument("refine_by_indicator: indicator length differs from triangle count");
  for (double x : indicator)
    if (!(x >= 0.0)) throw std::invalid_argument("refine_by_indicator: negative or NaN indicator");
  const auto marked = dorfler_mark(indicator, fraction);
  return bisect_marked(mesh, marked);
}

/// Linear interpolation of a nodal field with `components` values per vertex
/// onto the refined mesh.
inline Eigen::VectorXd transfer_field(const RefinementResult& r, const Eigen::VectorXd& field,
                                      int components = 1) {
  const auto old_n = static_cast<Eigen::Index>(r.old_vertex_count);
  if (field.size() != components * old_n) throw std::invalid_argument("transfer_field: size mismatch");
  Eigen::VectorXd out(components * static_cast<Eigen::Index>(r.mesh.num_vertices()));
  out.head(field.size()) = field;
  for (std::size_t k = 0; k < r.new_vertex_parents.size(); ++k) {
    const auto [a, b] = r.new_vertex_parents[k];
    const auto v = old_n + static_cast<Eigen::Index>(k);
    for (int c = 0; c < components; ++c)
      out[components * v + c] = 0.5 * (field[components * a + c] + field[components * b + c]);
  }
  return out;
}

}  // namespace elastocav
