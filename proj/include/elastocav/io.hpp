#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "elastocav/config.hpp"
#include "elastocav/elasticity.hpp"
#include "elastocav/inversion.hpp"

namespace elastocav {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One load case on disk. Rows tagged "w" are the working-mesh measurement
/// (node, x, y, u1, u2); rows tagged "g" are the clean generator boundary
/// profile (x, y, u1, u2), present only for noise-free data.
struct MeasurementFile {
  std::string load_id;
  std::string traction;
  std::string config_hash;
  std::map<std::string, std::string> header;  // further provenance fields
  BoundaryTrace trace;
  std::vector<Point2> points;  // coordinates of trace.nodes
  BoundaryProfile generator;
};

namespace detail {

inline std::string fmt(double v) { return format_number(v); }

inline double read_double(const std::string& tok, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw IoError(where + ": malformed number '" + tok + "'");
  return v;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace detail

inline void write_measurement(const std::filesystem::path& path, const MeasurementFile& m) {
  if (m.trace.nodes.size() != m.trace.values.size() || m.points.size() != m.trace.nodes.size())
    throw IoError("write_measurement: inconsistent trace");
  auto out = detail::open_output(path);
  out << "# elastocav measurement\n";
  out << "# config_hash: " << m.config_hash << '\n';
  out << "# load_id: " << m.load_id << '\n';
  out << "# traction: " << m.traction << '\n';
  for (const auto& [k, v] : m.header) out << "# " << k << ": " << v << '\n';
  out << "# columns: w node x y u1 u2 | g x y u1 u2\n";
  for (std::size_t i = 0; i < m.trace.nodes.size(); ++i) {
    out << "w " << m.trace.nodes[i] << ' ' << detail::fmt(m.points[i].x) << ' ' << detail::fmt(m.points[i].y) << ' '
        << detail::fmt(m.trace.values[i][0]) << ' ' << detail::fmt(m.trace.values[i][1]) << '\n';
  }
  for (std::size_t i = 0; i < m.generator.points.size(); ++i) {
    out << "g " << detail::fmt(m.generator.points[i].x) << ' ' << detail::fmt(m.generator.points[i].y) << ' '
        << detail::fmt(m.generator.values[i][0]) << ' ' << detail::fmt(m.generator.values[i][1]) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline MeasurementFile read_measurement(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open measurement file '" + path.string() + "'");
  MeasurementFile m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(": ");
      if (colon == std::string::npos) continue;
      const std::string key = line.substr(2, colon - 2), value = line.substr(colon + 2);
      if (key == "config_hash") m.config_hash = value;
      else if (key == "load_id") m.load_id = value;
      else if (key == "traction") m.traction = value;
      else if (key != "columns") m.header[key] = value;
      continue;
    }
    std::istringstream row(line);
    std::string tag;
    std::vector<std::string> tok;
    row >> tag;
    for (std::string t; row >> t;) tok.push_back(t);
    if (tag == "w" && tok.size() == 5) {
      int node = 0;
      const auto res = std::from_chars(tok[0].data(), tok[0].data() + tok[0].size(), node);
      if (res.ec != std::errc() || node < 0) throw IoError(where + ": malformed node index");
      m.trace.nodes.push_back(node);
      m.points.push_back({detail::read_double(tok[1], where), detail::read_double(tok[2], where)});
      m.trace.values.push_back({detail::read_double(tok[3], where), detail::read_double(tok[4], where)});
    } else if (tag == "g" && tok.size() == 4) {
      m.generator.points.push_back({detail::read_double(tok[0], where), detail::read_double(tok[1], where)});
      m.generator.values.push_back({detail::read_double(tok[2], where), detail::read_double(tok[3], where)});
    } else {
      throw IoError(where + ": unrecognised row");
    }
  }
  if (m.load_id.empty()) throw IoError(path.string() + ": missing load_id");
  if (m.trace.nodes.empty()) throw IoError(path.string() + ": no measurement rows");
  return m;
}

/// Measurement file for a load case on `mesh`.
inline MeasurementFile to_measurement_file(const LoadCase& load, const TriMesh& mesh, const std::string& hash,
                                           bool with_generator) {
  MeasurementFile m;
  m.load_id = load.id;
  m.traction = load.traction_text;
  m.config_hash = hash;
  m.trace = load.measurement;
  for (int n : load.measurement.nodes) m.points.push_back(mesh.vertices[static_cast<std::size_t>(n)]);
  if (with_generator) m.generator = load.source;
  return m;
}

/// Rebuilds a load case on `mesh`; the boundary nodes must coincide.
inline LoadCase to_load_case(const MeasurementFile& m, const TriMesh& mesh) {
  const auto nodes = neumann_nodes(mesh);
  if (m.trace.nodes != nodes) throw IoError("measurement '" + m.load_id + "' does not match the working mesh boundary");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Point2 p = mesh.vertices[static_cast<std::size_t>(nodes[i])];
    if (std::abs(p.x - m.points[i].x) > 1e-12 || std::abs(p.y - m.points[i].y) > 1e-12)
      throw IoError("measurement '" + m.load_id + "': node coordinates differ from the working mesh");
  }
  LoadCase load;
  load.id = m.load_id;
  load.traction_text = m.traction;
  load.traction = TractionFn(parse_traction_expression(m.traction));
  load.measurement = m.trace;
  load.source = m.generator.points.empty() ? profile_from_trace(mesh, m.trace) : m.generator;
  return load;
}

/// Legacy VTK unstructured grid with the point scalar "v".
inline void write_vtk(const std::filesystem::path& path, const TriMesh& mesh, const Eigen::VectorXd& v,
                      const std::string& hash) {
  if (static_cast<std::size_t>(v.size()) != mesh.num_vertices()) throw IoError("write_vtk: field size mismatch");
  auto out = detail::open_output(path);
  out << "# vtk DataFile Version 3.0\n";
  out << "elastocav phase field config_hash=" << hash << '\n';
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& p : mesh.vertices) out << detail::fmt(p.x) << ' ' << detail::fmt(p.y) << " 0\n";
  out << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << mesh.num_triangles() << '\n';
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) out << "5\n";
  out << "POINT_DATA " << mesh.num_vertices() << "\nSCALARS v double 1\nLOOKUP_TABLE default\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) out << detail::fmt(v[i]) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void write_csv(const std::filesystem::path& path, const TriMesh& mesh, const Eigen::VectorXd& v,
                      const std::string& hash) {
  if (static_cast<std::size_t>(v.size()) != mesh.num_vertices()) throw IoError("write_csv: field size mismatch");
  auto out = detail::open_output(path);
  out << "# config_hash=" << hash << '\n';
  out << "vertex,x,y,v\n";
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    out << i << ',' << detail::fmt(mesh.vertices[i].x) << ',' << detail::fmt(mesh.vertices[i].y) << ','
        << detail::fmt(v[static_cast<Eigen::Index>(i)]) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline nlohmann::json to_json(const IterationRecord& r) {
  return {{"type", "iteration"},        {"n", r.iteration},
          {"objective", r.objective},   {"misfit", r.misfit},
          {"ginzburg_landau", r.ginzburg_landau}, {"step_norm", r.step_norm},
          {"active_lower", r.active_lower}, {"active_upper", r.active_upper},
          {"inactive", r.inactive},     {"pdas_iterations", r.pdas_iterations},
          {"vertices", r.vertices},     {"epsilon", r.epsilon},
          {"tau", r.tau}};
}

inline nlohmann::json to_json(const ShapeMetrics& m) {
  nlohmann::json j = {{"empty", m.empty}, {"area", m.area}, {"target_area", m.target_area},
                      {"jaccard", m.jaccard}, {"components", m.components}};
  if (!m.empty) {
    j["centroid"] = {m.centroid.x, m.centroid.y};
    j["centroid_distance"] = m.centroid_distance;
  }
  return j;
}

/// JSON lines: a header, one line per iteration with refinement and epsilon
/// events interleaved after the iteration that triggered them, then `summary`.
/// Wall-clock times are left out so identical runs give identical files.
inline void write_history_jsonl(const std::filesystem::path& path, const RunHistory& h, const std::string& hash,
                                const std::string& name, nlohmann::json summary = nlohmann::json::object()) {
  auto out = detail::open_output(path);
  out << nlohmann::json{{"type", "header"}, {"config_hash", hash}, {"experiment", name},
                        {"initial_objective", h.initial_objective}}
             .dump()
      << '\n';
  std::size_t ri = 0, ei = 0;
  auto flush_events = [&](int n) {
    for (; ei < h.epsilon_events.size() && h.epsilon_events[ei].iteration <= n; ++ei) {
      const auto& e = h.epsilon_events[ei];
      out << nlohmann::json{{"type", "epsilon"}, {"n", e.iteration}, {"epsilon_before", e.epsilon_before},
                            {"epsilon_after", e.epsilon_after}, {"ginzburg_landau_before", e.ginzburg_landau_before},
                            {"ginzburg_landau_after", e.ginzburg_landau_after}}
                 .dump()
          << '\n';
    }
    for (; ri < h.refinements.size() && h.refinements[ri].iteration <= n; ++ri) {
      const auto& e = h.refinements[ri];
      out << nlohmann::json{{"type", "refinement"}, {"n", e.iteration}, {"vertices_before", e.vertices_before},
                            {"vertices_after", e.vertices_after}, {"misfit_before", e.misfit_before},
                            {"misfit_after", e.misfit_after}}
                 .dump()
          << '\n';
    }
  };
  flush_events(0);
  for (const auto& r : h.records) {
    out << to_json(r).dump() << '\n';
    flush_events(r.iteration);
  }
  flush_events(std::numeric_limits<int>::max());
  summary["type"] = "summary";
  summary["config_hash"] = hash;
  summary["converged"] = h.converged;
  summary["iterations"] = h.records.empty() ? 0 : h.records.back().iteration;
  if (!h.records.empty()) summary["final_objective"] = h.records.back().objective;
  out << summary.dump() << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace elastocav
