#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "elastocav/io.hpp"

using namespace elastocav;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("elastocav_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<LoadCase> sample_loads(const TriMesh& working) {
  return generate_measurements(make_disk(0.2, 0.2, 0.35), {{"g1", "(0, 1/10 - 3/10y)"}, {"g2", "(-1/2x^2, y^2)"}}, 24,
                               working, {0.2, 1.0, 1e-2});
}

}  // namespace

TEST(Measurement, RoundTripIsExact) {
  const fs::path dir = scratch_dir("roundtrip");
  const TriMesh working = build_square_mesh(12);
  const auto loads = sample_loads(working);
  for (const auto& load : loads) {
    MeasurementFile m = to_measurement_file(load, working, "0123456789abcdef", true);
    m.header["target"] = "disk(0.2,0.2,0.35)";
    write_measurement(dir / (load.id + ".txt"), m);
    const MeasurementFile back = read_measurement(dir / (load.id + ".txt"));
    EXPECT_EQ(back.load_id, load.id);
    EXPECT_EQ(back.traction, load.traction_text);
    EXPECT_EQ(back.config_hash, "0123456789abcdef");
    EXPECT_EQ(back.header.at("target"), "disk(0.2,0.2,0.35)");
    EXPECT_EQ(back.trace.nodes, load.measurement.nodes);
    for (std::size_t i = 0; i < back.trace.values.size(); ++i) EXPECT_EQ(back.trace.values[i], load.measurement.values[i]);
    ASSERT_EQ(back.generator.points.size(), load.source.points.size());
    for (std::size_t i = 0; i < back.generator.values.size(); ++i) EXPECT_EQ(back.generator.values[i], load.source.values[i]);

    const LoadCase rebuilt = to_load_case(back, working);
    EXPECT_EQ(rebuilt.traction(0.0, 1.0), load.traction(0.0, 1.0));
    const TriMesh finer = build_square_mesh(18);
    LoadCase a = rebuilt, b = load;
    a.resample(finer);
    b.resample(finer);
    for (std::size_t i = 0; i < a.measurement.values.size(); ++i) EXPECT_EQ(a.measurement.values[i], b.measurement.values[i]);
  }
}

TEST(Measurement, RejectsMismatchAndGarbage) {
  const fs::path dir = scratch_dir("mismatch");
  const TriMesh working = build_square_mesh(12);
  const auto loads = sample_loads(working);
  write_measurement(dir / "m.txt", to_measurement_file(loads[0], working, "h", false));
  const MeasurementFile m = read_measurement(dir / "m.txt");
  EXPECT_TRUE(m.generator.points.empty());
  EXPECT_THROW(to_load_case(m, build_square_mesh(10)), IoError);
  EXPECT_THROW(to_load_case(m, build_square_mesh(12, parse_dirichlet_sides("left"))), IoError);
  {
    std::ofstream out(dir / "bad.txt");
    out << "# load_id: g1\n# traction: (x, y)\nw 0 1 2 oops 4\n";
  }
  EXPECT_THROW(read_measurement(dir / "bad.txt"), IoError);
  EXPECT_THROW(read_measurement(dir / "missing.txt"), IoError);
}

TEST(Export, VtkAndCsvLayout) {
  const fs::path dir = scratch_dir("export");
  const TriMesh mesh = build_square_mesh(3);
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(mesh.num_vertices()), 0.0, 1.0);
  write_vtk(dir / "v.vtk", mesh, v, "abc");
  write_csv(dir / "v.csv", mesh, v, "abc");
  std::istringstream vtk(slurp(dir / "v.vtk"));
  std::string line;
  std::getline(vtk, line);
  EXPECT_EQ(line, "# vtk DataFile Version 3.0");
  std::getline(vtk, line);
  EXPECT_NE(line.find("config_hash=abc"), std::string::npos);
  const std::string text = slurp(dir / "v.vtk");
  EXPECT_NE(text.find("POINTS 16 double"), std::string::npos);
  EXPECT_NE(text.find("CELLS 18 72"), std::string::npos);
  EXPECT_NE(text.find("SCALARS v double 1"), std::string::npos);

  std::istringstream csv(slurp(dir / "v.csv"));
  std::getline(csv, line);
  EXPECT_EQ(line, "# config_hash=abc");
  std::getline(csv, line);
  EXPECT_EQ(line, "vertex,x,y,v");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 16);
  EXPECT_THROW(write_csv(dir / "x.csv", mesh, Eigen::VectorXd::Zero(3), "abc"), IoError);
}

TEST(Export, HistoryJsonLines) {
  const fs::path dir = scratch_dir("history");
  RunHistory h;
  h.initial_objective = 2.0;
  for (int n = 1; n <= 3; ++n) {
    IterationRecord r;
    r.iteration = n;
    r.objective = 2.0 - 0.5 * n;
    h.records.push_back(r);
  }
  h.refinements.push_back({2, 10, 14, 0.5, 0.51});
  h.epsilon_events.push_back({0, 0.1, 0.025, 1.0, 2.0});
  h.converged = true;
  write_history_jsonl(dir / "h.jsonl", h, "abc", "demo");
  std::istringstream in(slurp(dir / "h.jsonl"));
  std::vector<nlohmann::json> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(lines.size(), 7u);
  EXPECT_EQ(lines[0]["type"], "header");
  EXPECT_EQ(lines[0]["config_hash"], "abc");
  EXPECT_EQ(lines[1]["type"], "epsilon");
  EXPECT_EQ(lines[2]["n"], 1);
  EXPECT_EQ(lines[3]["n"], 2);
  EXPECT_EQ(lines[4]["type"], "refinement");
  EXPECT_EQ(lines[5]["objective"], 0.5);
  EXPECT_EQ(lines[6]["type"], "summary");
  EXPECT_EQ(lines[6]["iterations"], 3);
  EXPECT_EQ(lines[6]["converged"], true);
}
