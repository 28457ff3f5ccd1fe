#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "elastocav/geometry.hpp"

namespace elastocav {

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BoundaryKind : std::uint8_t { Dirichlet, Neumann, CavityWall };

/// Sides of the computational square, numbered counterclockwise from the bottom.
enum class Side : int { Bottom = 0, Right = 1, Top = 2, Left = 3 };

struct BoundaryTag {
  BoundaryKind kind = BoundaryKind::Neumann;
  int segment = 0;  // Side index for outer edges, loop id (or 0) for cavity walls

  friend bool operator==(const BoundaryTag&, const BoundaryTag&) = default;
};

/// Oriented boundary edge a -> b with the domain on its left.
struct BoundaryEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag;
};

/// Conforming triangulation. Triangles are counterclockwise and stored as
/// (newest vertex, v1, v2): the refinement edge is v1-v2.
struct TriMesh {
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  int refinement_level = 0;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }

  double triangle_area(std::size_t t) const {
    const auto& tri = triangles[t];
    return signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
  }

  Point2 triangle_centroid(std::size_t t) const {
    const auto& tri = triangles[t];
    return (1.0 / 3.0) * (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]);
  }

  double triangle_diameter(std::size_t t) const {
    const auto& tri = triangles[t];
    return std::max({distance(vertices[tri[0]], vertices[tri[1]]),
                     distance(vertices[tri[1]], vertices[tri[2]]),
                     distance(vertices[tri[2]], vertices[tri[0]])});
  }
};

/// Which sides of the square carry homogeneous Dirichlet data.
struct DirichletSides {
  std::array<bool, 4> side{true, false, false, false};

  bool operator[](Side s) const { return side[static_cast<int>(s)]; }
  int count() const { return std::accumulate(side.begin(), side.end(), 0); }

  friend bool operator==(const DirichletSides&, const DirichletSides&) = default;
};

inline std::string side_name(int s) {
  static constexpr const char* names[] = {"bottom", "right", "top", "left"};
  return names[s];
}

inline DirichletSides parse_dirichlet_sides(const std::string& text) {
  DirichletSides out;
  out.side = {false, false, false, false};
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    bool found = false;
    for (int s = 0; s < 4; ++s) {
      if (item == side_name(s)) {
        out.side[s] = true;
        found = true;
      }
    }
    if (!found) throw std::invalid_argument("unknown boundary side '" + item + "'");
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::string format_dirichlet_sides(const DirichletSides& sides) {
  std::string out;
  for (int s = 0; s < 4; ++s) {
    if (!sides.side[s]) continue;
    if (!out.empty()) out += ",";
    out += side_name(s);
  }
  return out;
}

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

/// Maps each undirected edge to the triangles containing it (second = -1 if none).
inline std::map<std::uint64_t, std::array<int, 2>> edge_triangles(const TriMesh& mesh) {
  std::map<std::uint64_t, std::array<int, 2>> out;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      auto [it, inserted] = out.try_emplace(edge_key(tri[k], tri[(k + 1) % 3]),
                                            std::array<int, 2>{static_cast<int>(t), -1});
      if (!inserted) {
        if (it->second[1] != -1) throw MeshError("edge shared by more than two triangles");
        it->second[1] = static_cast<int>(t);
      }
    }
  }
  return out;
}

}  // namespace detail

/// Throws MeshError unless every triangle is positively oriented, the mesh
/// is conforming and each boundary edge carries exactly one tag.
inline void check_mesh(const TriMesh& mesh) {
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int k : mesh.triangles[t]) {
      if (k < 0 || static_cast<std::size_t>(k) >= mesh.vertices.size())
        throw MeshError("triangle references a missing vertex");
    }
    if (!(mesh.triangle_area(t) > 0.0)) throw MeshError("triangle with non-positive area");
  }
  const auto edges = detail::edge_triangles(mesh);
  std::map<std::uint64_t, int> tagged;
  for (const auto& e : mesh.boundary_edges) {
    if (++tagged[detail::edge_key(e.a, e.b)] > 1) throw MeshError("boundary edge tagged twice");
  }
  std::size_t boundary_count = 0;
  for (const auto& [key, tris] : edges) {
    if (tris[1] == -1) {
      ++boundary_count;
      if (!tagged.contains(key)) throw MeshError("untagged boundary edge");
    } else if (tagged.contains(key)) {
      throw MeshError("interior edge carries a boundary tag");
    }
  }
  if (boundary_count != mesh.boundary_edges.size())
    throw MeshError("boundary tag on an edge that is not in the mesh");
}

/// Structured triangulation of (-1,1)^2 with n cells per side, each cell split
/// along alternating diagonals (the right-angle vertex is the newest vertex).
inline TriMesh build_square_mesh(int n_per_side, const DirichletSides& dirichlet = {}) {
  if (n_per_side < 2) throw std::invalid_argument("build_square_mesh: n_per_side must be >= 2");
  if (dirichlet.count() == 0) throw std::invalid_argument("build_square_mesh: empty Dirichlet set");
  if (dirichlet.count() == 4) throw std::invalid_argument("build_square_mesh: empty Neumann set");

  const int n = n_per_side;
  TriMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      mesh.vertices.push_back({-1.0 + 2.0 * i / n, -1.0 + 2.0 * j / n});

  auto id = [n](int i, int j) { return i + j * (n + 1); };
  mesh.triangles.reserve(static_cast<std::size_t>(2 * n * n));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({b, c, a});
        mesh.triangles.push_back({d, a, c});
      } else {
        mesh.triangles.push_back({a, b, d});
        mesh.triangles.push_back({c, d, b});
      }
    }
  }

  auto tag_for = [&](Side s) {
    const int k = static_cast<int>(s);
    return BoundaryTag{dirichlet.side[k] ? BoundaryKind::Dirichlet : BoundaryKind::Neumann, k};
  };
  for (int i = 0; i < n; ++i) mesh.boundary_edges.push_back({id(i, 0), id(i + 1, 0), tag_for(Side::Bottom)});
  for (int j = 0; j < n; ++j) mesh.boundary_edges.push_back({id(n, j), id(n, j + 1), tag_for(Side::Right)});
  for (int i = n; i > 0; --i) mesh.boundary_edges.push_back({id(i, n), id(i - 1, n), tag_for(Side::Top)});
  for (int j = n; j > 0; --j) mesh.boundary_edges.push_back({id(0, j), id(0, j - 1), tag_for(Side::Left)});
  return mesh;
}

inline double total_area(const TriMesh& mesh) {
  double a = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) a += mesh.triangle_area(t);
  return a;
}

inline double max_diameter(const TriMesh& mesh) {
  double d = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) d = std::max(d, mesh.triangle_diameter(t));
  return d;
}

/// Smallest interior angle over the mesh, in degrees.
inline double min_angle_degrees(const TriMesh& mesh) {
  double best = 180.0;
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const Point2 p = mesh.vertices[tri[k]];
      const Point2 u = mesh.vertices[tri[(k + 1) % 3]] - p;
      const Point2 w = mesh.vertices[tri[(k + 2) % 3]] - p;
      const double c = (u.x * w.x + u.y * w.y) / (norm(u) * norm(w));
      best = std::min(best, std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi);
    }
  }
  return best;
}

/// Per-vertex flag: vertex lies on an edge of the given kind.
inline std::vector<std::uint8_t> vertices_with_tag(const TriMesh& mesh, BoundaryKind kind) {
  std::vector<std::uint8_t> on(mesh.num_vertices(), 0);
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag.kind == kind) on[e.a] = on[e.b] = 1;
  }
  return on;
}

/// Sorted indices of vertices lying on a Neumann edge (closed set, corners included).
inline std::vector<int> neumann_nodes(const TriMesh& mesh) {
  const auto on = vertices_with_tag(mesh, BoundaryKind::Neumann);
  std::vector<int> out;
  for (std::size_t i = 0; i < on.size(); ++i)
    if (on[i]) out.push_back(static_cast<int>(i));
  return out;
}

inline std::vector<int> dirichlet_nodes(const TriMesh& mesh) {
  const auto on = vertices_with_tag(mesh, BoundaryKind::Dirichlet);
  std::vector<int> out;
  for (std::size_t i = 0; i < on.size(); ++i)
    if (on[i]) out.push_back(static_cast<int>(i));
  return out;
}

namespace detail {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace detail

/// Number of edge-connected components among the selected triangles.
inline int count_triangle_components(const TriMesh& mesh, const std::vector<std::uint8_t>& selected) {
  detail::DisjointSets sets(mesh.num_triangles());
  for (const auto& [key, tris] : detail::edge_triangles(mesh)) {
    if (tris[1] >= 0 && selected[tris[0]] && selected[tris[1]]) sets.unite(tris[0], tris[1]);
  }
  int count = 0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
    if (selected[t] && sets.find(static_cast<int>(t)) == static_cast<int>(t)) ++count;
  return count;
}

/// Number of connected chains formed by cavity-wall edges.
inline int count_cavity_loops(const TriMesh& mesh) {
  detail::DisjointSets sets(mesh.num_vertices());
  std::vector<std::uint8_t> used(mesh.num_vertices(), 0);
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag.kind != BoundaryKind::CavityWall) continue;
    sets.unite(e.a, e.b);
    used[e.a] = used[e.b] = 1;
  }
  int count = 0;
  for (std::size_t i = 0; i < used.size(); ++i)
    if (used[i] && sets.find(static_cast<int>(i)) == static_cast<int>(i)) ++count;
  return count;
}

/// Removes every triangle whose centroid lies in the shape. Newly exposed
/// edges become traction-free cavity walls; unused vertices are dropped.
inline TriMesh carve_cavity(const TriMesh& mesh, const CavityShape& shape, double margin = 0.0) {
  if (!(clearance_from_square_boundary(shape) > margin))
    throw std::invalid_argument("carve_cavity: shape is not strictly inside the domain margin");

  std::vector<std::uint8_t> keep(mesh.num_triangles(), 1);
  std::size_t removed = 0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    if (contains(shape, mesh.triangle_centroid(t))) {
      keep[t] = 0;
      ++removed;
    }
  }
  if (removed == 0) throw MeshError("carve_cavity: no triangle centroid inside the shape");
  if (removed == mesh.num_triangles()) throw MeshError("carve_cavity: shape removes the whole mesh");
  if (count_triangle_components(mesh, keep) != 1)
    throw MeshError("carve_cavity: removal disconnects the domain");

  TriMesh out;
  out.refinement_level = mesh.refinement_level;
  std::vector<int> new_id(mesh.num_vertices(), -1);
  auto map_vertex = [&](int v) {
    if (new_id[v] < 0) {
      new_id[v] = static_cast<int>(out.vertices.size());
      out.vertices.push_back(mesh.vertices[v]);
    }
    return new_id[v];
  };
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    if (!keep[t]) continue;
    const auto& tri = mesh.triangles[t];
    out.triangles.push_back({map_vertex(tri[0]), map_vertex(tri[1]), map_vertex(tri[2])});
  }
  for (const auto& e : mesh.boundary_edges) {
    if (new_id[e.a] >= 0 && new_id[e.b] >= 0) out.boundary_edges.push_back({new_id[e.a], new_id[e.b], e.tag});
  }
  for (const auto& [key, tris] : detail::edge_triangles(mesh)) {
    if (tris[1] < 0 || keep[tris[0]] == keep[tris[1]]) continue;
    const int kept = keep[tris[0]] ? tris[0] : tris[1];
    const auto& tri = mesh.triangles[kept];
    const int lo = static_cast<int>(key >> 32), hi = static_cast<int>(key & 0xffffffffu);
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      if ((a == lo && b == hi) || (a == hi && b == lo)) {
        out.boundary_edges.push_back({new_id[a], new_id[b], {BoundaryKind::CavityWall, 0}});
      }
    }
  }
  check_mesh(out);
  return out;
}

}  // namespace elastocav
