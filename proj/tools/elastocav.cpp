#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "elastocav/io.hpp"
#include "elastocav/presets.hpp"

namespace fs = std::filesystem;
using namespace elastocav;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRunFailed = 3;

std::mutex g_log_mutex;

template <class... T>
void log_line(const T&... parts) {
  std::lock_guard lock(g_log_mutex);
  ((std::cout << parts), ...);
  std::cout << std::endl;
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Options shared by generate and reconstruct.
struct ExperimentArgs {
  std::vector<std::string> presets;
  std::string config_file;
  std::optional<int> working_n;
  std::optional<int> generator_n;
  std::optional<double> noise;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> noise_scaling;
  std::optional<std::string> dirichlet;

  void add_to(CLI::App* app) {
    app->add_option("--preset", presets, "Preset name(s); see 'presets'")->delimiter(',');
    app->add_option("--config", config_file, "Configuration file, applied on top of the preset if both are given");
    app->add_option("--working-n", working_n, "Working mesh cells per side");
    app->add_option("--generator-n", generator_n, "Data generator mesh cells per side");
    app->add_option("--noise", noise, "Noise level in percent");
    app->add_option("--seed", seed, "Noise seed");
    app->add_option("--noise-scaling", noise_scaling, "relative-to-max or relative-to-pointwise");
    app->add_option("--dirichlet", dirichlet, "Comma separated Dirichlet sides (bottom,right,top,left)");
  }

  std::vector<ExperimentConfig> resolve() const {
    std::vector<ExperimentConfig> out;
    std::vector<std::string> names = presets;
    if (names.empty() && config_file.empty()) throw UsageError("give --preset or --config");
    if (names.empty()) names.push_back("");
    for (const auto& name : names) {
      ExperimentConfig c;
      if (!name.empty()) {
        try {
          c = find_preset(name).config;
        } catch (const std::out_of_range& e) {
          throw UsageError(e.what());
        }
      }
      if (!config_file.empty()) c = load_config_file(config_file, c);
      if (working_n) c.run.working_resolution = *working_n;
      if (generator_n) c.generator_resolution = *generator_n;
      if (noise) c.run.noise.level = *noise;
      if (seed) c.run.noise.seed = *seed;
      if (noise_scaling) c.run.noise.scaling = parse_noise_scaling(*noise_scaling);
      if (dirichlet) c.run.dirichlet = parse_dirichlet_sides(*dirichlet);
      if (c.run.loads.empty()) throw UsageError(c.name + ": no load cases configured");
      for (const auto& w : c.run.validate()) log_line("warning: ", c.name, ": ", w);
      out.push_back(std::move(c));
    }
    return out;
  }
};

int default_jobs() {
  if (const char* env = std::getenv("ELASTOCAV_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

std::string measurement_name(const std::string& id) { return "meas_" + id + ".txt"; }

std::vector<LoadCase> synthesize(const ExperimentConfig& c, const TriMesh& working) {
  if (!c.target) throw UsageError(c.name + ": synthetic data needs a [target] shape");
  auto loads = generate_measurements(*c.target, c.run.loads, c.generator_resolution, working, c.run.elastic(),
                                     c.run.dirichlet);
  apply_noise(loads, working, c.run.noise);
  return loads;
}

void generate_one(const ExperimentConfig& c, const fs::path& out) {
  const TriMesh working = build_square_mesh(c.run.working_resolution, c.run.dirichlet);
  const auto loads = synthesize(c, working);
  const std::string hash = config_hash(c);
  for (const auto& load : loads) {
    MeasurementFile m = to_measurement_file(load, working, hash, c.run.noise.level == 0.0);
    m.header["experiment"] = c.name;
    m.header["working_resolution"] = std::to_string(c.run.working_resolution);
    m.header["generator_resolution"] = std::to_string(c.generator_resolution);
    m.header["dirichlet"] = format_dirichlet_sides(c.run.dirichlet);
    m.header["target"] = describe(*c.target);
    m.header["noise_level"] = format_number(c.run.noise.level);
    m.header["noise_scaling"] = to_string(c.run.noise.scaling);
    m.header["noise_seed"] = std::to_string(c.run.noise.seed);
    write_measurement(out / measurement_name(load.id), m);
  }
  log_line(c.name, ": wrote ", loads.size(), " measurement files to ", out.string(), " (config ", hash, ")");
}

struct ReconstructArgs {
  fs::path data;
  fs::path out = "runs";
  std::optional<int> max_iter;
  std::optional<double> tol;
  std::optional<std::string> stop_norm;
  int snapshot_every = 0;
  std::vector<int> snapshot_at{20, 200, 1000, 2000};
  int jobs = default_jobs();
  int progress_every = 500;
};

std::vector<LoadCase> load_measurements(const ExperimentConfig& c, const fs::path& dir, const TriMesh& working,
                                        const std::string& hash) {
  std::vector<LoadCase> loads;
  for (const auto& def : c.run.loads) {
    const MeasurementFile m = read_measurement(dir / measurement_name(def.id));
    if (m.traction != def.expression)
      throw IoError(measurement_name(def.id) + ": traction '" + m.traction + "' differs from configured '" +
                    def.expression + "'");
    if (m.config_hash != hash) log_line("note: ", c.name, ": ", measurement_name(def.id), " was generated with config ",
                                        m.config_hash);
    loads.push_back(to_load_case(m, working));
  }
  return loads;
}

int reconstruct_one(ExperimentConfig c, const ReconstructArgs& a) {
  const std::string data_hash = config_hash(c);
  if (a.max_iter) c.run.max_iterations = *a.max_iter;
  if (a.tol) c.run.tol = *a.tol;
  if (a.stop_norm) c.run.stop_norm = parse_stop_norm(*a.stop_norm);
  const std::string hash = config_hash(c);
  const fs::path out = a.out / c.name;
  fs::create_directories(out);
  {
    std::ofstream cfg(out / "config.ini");
    cfg << "; config_hash " << hash << '\n' << serialize_config(c);
  }

  const TriMesh working = build_square_mesh(c.run.working_resolution, c.run.dirichlet);
  const auto loads = a.data.empty() ? synthesize(c, working) : load_measurements(c, a.data, working, data_hash);

  const std::set<int> marks(a.snapshot_at.begin(), a.snapshot_at.end());
  RunObserver obs;
  obs.on_iteration = [&](const IterationRecord& r, const TriMesh& mesh, const PhaseField& v) {
    if ((a.snapshot_every > 0 && r.iteration % a.snapshot_every == 0) || marks.count(r.iteration)) {
      const std::string stem = "snapshot_" + std::to_string(r.iteration);
      write_vtk(out / (stem + ".vtk"), mesh, v.values, hash);
      write_csv(out / (stem + ".csv"), mesh, v.values, hash);
    }
    if (a.progress_every > 0 && r.iteration % a.progress_every == 0)
      log_line(c.name, ": n=", r.iteration, " J=", r.objective, " |dv|=", r.step_norm, " vertices=", r.vertices);
  };
  obs.on_refinement = [&](const RefinementEvent& e, const TriMesh& mesh, const PhaseField& v) {
    write_vtk(out / ("mesh_refined_" + std::to_string(e.iteration) + ".vtk"), mesh, v.values, hash);
  };

  auto finish = [&](const RunHistory& h, bool failed, const std::string& why) {
    nlohmann::json summary;
    summary["failed"] = failed;
    if (failed) summary["error"] = why;
    if (h.final_state.values.size() > 0) {
      write_vtk(out / "final.vtk", h.mesh, h.final_state.values, hash);
      write_csv(out / "final.csv", h.mesh, h.final_state.values, hash);
      if (c.target) summary["metrics"] = to_json(threshold_and_compare(h.mesh, h.final_state.values, 0.5, *c.target));
      if (h.converged)
        summary["vi_certificate_min"] = vi_certificate(h.mesh, h.final_state, h.final_gradient_density,
                                                       c.run.alpha_tilde, h.final_epsilon, 100, c.run.noise.seed);
    }
    write_history_jsonl(out / "history.jsonl", h, hash, c.name, summary);
    const int n = h.records.empty() ? 0 : h.records.back().iteration;
    log_line(c.name, failed ? ": FAILED after " : (h.converged ? ": converged after " : ": stopped after "), n,
             " iterations", summary.contains("metrics") ? ", jaccard " + summary["metrics"]["jaccard"].dump() : "",
             " -> ", out.string());
  };

  try {
    finish(reconstruct(c.run, working, loads, &obs), false, "");
  } catch (const ReconstructionError& e) {
    log_line("error: ", c.name, ": ", e.what());
    finish(e.partial(), true, e.what());
    return kExitRunFailed;
  }
  return 0;
}

int run_parallel(std::size_t count, int jobs, const std::function<int(std::size_t)>& task) {
  std::atomic<std::size_t> next{0};
  std::atomic<int> status{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < count;) {
      int s = 0;
      try {
        s = task(i);
      } catch (const std::exception& e) {
        log_line("error: ", e.what());
        s = kExitRunFailed;
      }
      int expected = 0;
      if (s != 0) status.compare_exchange_strong(expected, s);
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-field reconstruction of cavities in a linear elastic body"};
  app.require_subcommand(1);

  auto* presets_cmd = app.add_subcommand("presets", "List the built-in experiments");

  ExperimentArgs gen_args;
  fs::path gen_out = "data";
  auto* gen_cmd = app.add_subcommand("generate", "Write synthetic boundary measurements");
  gen_args.add_to(gen_cmd);
  gen_cmd->add_option("--out", gen_out, "Output directory");
  int gen_jobs = default_jobs();
  gen_cmd->add_option("--jobs", gen_jobs, "Experiments to run concurrently");

  ExperimentArgs rec_args;
  ReconstructArgs rec;
  auto* rec_cmd = app.add_subcommand("reconstruct", "Run the phase-field reconstruction");
  rec_args.add_to(rec_cmd);
  rec_cmd->add_option("--data", rec.data, "Directory with measurement files (default: synthesize in memory)");
  rec_cmd->add_option("--out", rec.out, "Output root; each experiment writes to <out>/<name>");
  rec_cmd->add_option("--max-iter", rec.max_iter, "Iteration limit");
  rec_cmd->add_option("--tol", rec.tol, "Stopping tolerance on the step norm");
  rec_cmd->add_option("--stop-norm", rec.stop_norm, "l2 or max");
  rec_cmd->add_option("--snapshot-every", rec.snapshot_every, "Write VTK/CSV snapshots every k iterations");
  rec_cmd->add_option("--snapshot-at", rec.snapshot_at, "Iterations with snapshots")->delimiter(',');
  rec_cmd->add_option("--progress-every", rec.progress_every, "Progress line every k iterations (0: off)");
  rec_cmd->add_option("--jobs", rec.jobs, "Experiments to run concurrently");

  std::vector<std::string> verify_args;
  auto* verify_cmd = app.add_subcommand("verify", "Run the acceptance suite");
  verify_cmd->add_option("args", verify_args, "Arguments passed to the acceptance binary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*presets_cmd) {
      for (const auto& p : presets()) {
        std::cout << p.name << "  " << p.summary << "  (published n=" << p.reference_iterations
                  << ", config " << config_hash(p.config) << ")\n";
      }
      return 0;
    }
    if (*gen_cmd) {
      const auto configs = gen_args.resolve();
      return run_parallel(configs.size(), gen_jobs, [&](std::size_t i) {
        generate_one(configs[i], configs.size() > 1 ? gen_out / configs[i].name : gen_out);
        return 0;
      });
    }
    if (*rec_cmd) {
      const auto configs = rec_args.resolve();
      if (configs.size() > 1 && !rec.data.empty()) throw UsageError("--data can only be used with one experiment");
      return run_parallel(configs.size(), rec.jobs,
                          [&](std::size_t i) { return reconstruct_one(configs[i], rec); });
    }
    if (*verify_cmd) {
      std::string cmd = ELASTOCAV_ACCEPTANCE_PATH;
      for (const auto& a : verify_args) cmd += " '" + a + "'";
      const int rc = std::system(cmd.c_str());
      return rc == 0 ? 0 : 1;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRunFailed;
  }
  return 0;
}
