#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

namespace elastocav {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }

inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Signed area, positive for counterclockwise (a, b, c).
inline double signed_area(Point2 a, Point2 b, Point2 c) {
  return 0.5 * cross(b - a, c - a);
}

/// Distance from p to the boundary of the square (-1,1)^2, for p inside it.
inline double distance_to_square_boundary(Point2 p) {
  return std::min({1.0 - p.x, p.x + 1.0, 1.0 - p.y, p.y + 1.0});
}

struct BoundingBox {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
};

// Cavity shapes used as synthetic targets. Union members are assumed disjoint
// when areas and centroids are evaluated analytically.
struct Disk {
  Point2 center;
  double radius = 0.0;
};

struct AxisSquare {
  Point2 center;
  double half_side = 0.0;
};

struct Polygon {
  std::vector<Point2> vertices;  // simple polygon, either orientation
};

struct CavityShape;

struct ShapeUnion {
  std::vector<CavityShape> parts;
};

struct CavityShape {
  std::variant<Disk, AxisSquare, Polygon, ShapeUnion> kind;
};

namespace detail {

inline bool polygon_contains(const Polygon& poly, Point2 p) {
  bool inside = false;
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((v[i].y > p.y) != (v[j].y > p.y)) {
      const double xc = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
      if (p.x < xc) inside = !inside;
    }
  }
  return inside;
}

inline double polygon_signed_area(const Polygon& poly) {
  double a = 0.0;
  const auto& v = poly.vertices;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) a += cross(v[j], v[i]);
  return 0.5 * a;
}

}  // namespace detail

inline bool contains(const CavityShape& shape, Point2 p) {
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) {
          return distance(p, s.center) < s.radius;
        } else if constexpr (std::is_same_v<T, AxisSquare>) {
          return std::abs(p.x - s.center.x) < s.half_side && std::abs(p.y - s.center.y) < s.half_side;
        } else if constexpr (std::is_same_v<T, Polygon>) {
          return detail::polygon_contains(s, p);
        } else {
          return std::any_of(s.parts.begin(), s.parts.end(),
                             [&](const CavityShape& part) { return contains(part, p); });
        }
      },
      shape.kind);
}

inline double area(const CavityShape& shape) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) {
          return std::numbers::pi * s.radius * s.radius;
        } else if constexpr (std::is_same_v<T, AxisSquare>) {
          return 4.0 * s.half_side * s.half_side;
        } else if constexpr (std::is_same_v<T, Polygon>) {
          return std::abs(detail::polygon_signed_area(s));
        } else {
          double a = 0.0;
          for (const auto& part : s.parts) a += area(part);
          return a;
        }
      },
      shape.kind);
}

inline Point2 centroid(const CavityShape& shape) {
  return std::visit(
      [](const auto& s) -> Point2 {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) {
          return s.center;
        } else if constexpr (std::is_same_v<T, AxisSquare>) {
          return s.center;
        } else if constexpr (std::is_same_v<T, Polygon>) {
          const auto& v = s.vertices;
          double cx = 0.0, cy = 0.0;
          for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
            const double w = cross(v[j], v[i]);
            cx += (v[j].x + v[i].x) * w;
            cy += (v[j].y + v[i].y) * w;
          }
          const double a6 = 6.0 * detail::polygon_signed_area(s);
          return {cx / a6, cy / a6};
        } else {
          double a = 0.0;
          Point2 c;
          for (const auto& part : s.parts) {
            const double ap = area(part);
            c = c + ap * centroid(part);
            a += ap;
          }
          return (1.0 / a) * c;
        }
      },
      shape.kind);
}

inline BoundingBox bounding_box(const CavityShape& shape) {
  return std::visit(
      [](const auto& s) -> BoundingBox {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) {
          return {s.center.x - s.radius, s.center.x + s.radius, s.center.y - s.radius,
                  s.center.y + s.radius};
        } else if constexpr (std::is_same_v<T, AxisSquare>) {
          return {s.center.x - s.half_side, s.center.x + s.half_side, s.center.y - s.half_side,
                  s.center.y + s.half_side};
        } else if constexpr (std::is_same_v<T, Polygon>) {
          if (s.vertices.empty()) throw std::invalid_argument("empty polygon");
          BoundingBox b{s.vertices[0].x, s.vertices[0].x, s.vertices[0].y, s.vertices[0].y};
          for (const auto& p : s.vertices) {
            b.xmin = std::min(b.xmin, p.x);
            b.xmax = std::max(b.xmax, p.x);
            b.ymin = std::min(b.ymin, p.y);
            b.ymax = std::max(b.ymax, p.y);
          }
          return b;
        } else {
          if (s.parts.empty()) throw std::invalid_argument("empty shape union");
          BoundingBox b = bounding_box(s.parts.front());
          for (const auto& part : s.parts) {
            const BoundingBox q = bounding_box(part);
            b.xmin = std::min(b.xmin, q.xmin);
            b.xmax = std::max(b.xmax, q.xmax);
            b.ymin = std::min(b.ymin, q.ymin);
            b.ymax = std::max(b.ymax, q.ymax);
          }
          return b;
        }
      },
      shape.kind);
}

/// Smallest distance between the shape's bounding box and the boundary of
/// (-1,1)^2; negative when the box leaves the square.
inline double clearance_from_square_boundary(const CavityShape& shape) {
  const BoundingBox b = bounding_box(shape);
  return std::min({b.xmin + 1.0, 1.0 - b.xmax, b.ymin + 1.0, 1.0 - b.ymax});
}

inline std::string describe(const CavityShape& shape);

namespace detail {
// Shortest text that reads back to the same double.
inline std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}
}  // namespace detail

inline std::string describe(const CavityShape& shape) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        using detail::num;
        if constexpr (std::is_same_v<T, Disk>) {
          return "disk(" + num(s.center.x) + "," + num(s.center.y) + "," + num(s.radius) + ")";
        } else if constexpr (std::is_same_v<T, AxisSquare>) {
          return "square(" + num(s.center.x) + "," + num(s.center.y) + "," + num(s.half_side) +
                 ")";
        } else if constexpr (std::is_same_v<T, Polygon>) {
          std::string out = "polygon(";
          for (std::size_t i = 0; i < s.vertices.size(); ++i) {
            if (i) out += ";";
            out += num(s.vertices[i].x) + "," + num(s.vertices[i].y);
          }
          return out + ")";
        } else {
          std::string out = "union(";
          for (std::size_t i = 0; i < s.parts.size(); ++i) {
            if (i) out += "|";
            out += describe(s.parts[i]);
          }
          return out + ")";
        }
      },
      shape.kind);
}

inline CavityShape make_disk(double cx, double cy, double r) { return {Disk{{cx, cy}, r}}; }
inline CavityShape make_square(double cx, double cy, double h) {
  return {AxisSquare{{cx, cy}, h}};
}
inline CavityShape make_polygon(std::vector<Point2> v) { return {Polygon{std::move(v)}}; }
inline CavityShape make_union(std::vector<CavityShape> parts) {
  return {ShapeUnion{std::move(parts)}};
}

namespace detail {

inline std::vector<double> parse_numbers(const std::string& text, char sep, const std::string& context) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(sep, pos);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(pos, end - pos);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size())
      throw std::invalid_argument("malformed number '" + item + "' in " + context);
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

}  // namespace detail

/// Inverse of describe(): "disk(cx,cy,r)", "square(cx,cy,half)",
/// "polygon(x,y;x,y;...)" or "union(a|b|...)".
inline CavityShape parse_shape(const std::string& raw) {
  std::string text = raw;
  text.erase(0, text.find_first_not_of(" \t"));
  text.erase(text.find_last_not_of(" \t") + 1);
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') throw std::invalid_argument("malformed shape '" + raw + "'");
  const std::string kind = text.substr(0, open);
  const std::string body = text.substr(open + 1, text.size() - open - 2);
  if (kind == "disk" || kind == "square") {
    const auto v = detail::parse_numbers(body, ',', kind);
    if (v.size() != 3) throw std::invalid_argument(kind + " needs three numbers");
    if (!(v[2] > 0.0)) throw std::invalid_argument(kind + " size must be positive");
    return kind == "disk" ? make_disk(v[0], v[1], v[2]) : make_square(v[0], v[1], v[2]);
  }
  if (kind == "polygon") {
    std::vector<Point2> pts;
    std::size_t pos = 0;
    while (pos <= body.size()) {
      std::size_t end = body.find(';', pos);
      if (end == std::string::npos) end = body.size();
      const auto v = detail::parse_numbers(body.substr(pos, end - pos), ',', "polygon");
      if (v.size() != 2) throw std::invalid_argument("polygon vertex needs two numbers");
      pts.push_back({v[0], v[1]});
      pos = end + 1;
    }
    if (pts.size() < 3) throw std::invalid_argument("polygon needs at least three vertices");
    return make_polygon(std::move(pts));
  }
  if (kind == "union") {
    std::vector<CavityShape> parts;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
      if (i < body.size() && body[i] == '(') ++depth;
      if (i < body.size() && body[i] == ')') --depth;
      if (i == body.size() || (body[i] == '|' && depth == 0)) {
        parts.push_back(parse_shape(body.substr(start, i - start)));
        start = i + 1;
      }
    }
    return make_union(std::move(parts));
  }
  throw std::invalid_argument("unknown shape kind '" + kind + "'");
}

}  // namespace elastocav
