#pragma once

#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "elastocav/config.hpp"

namespace elastocav {

struct ExperimentPreset {
  std::string name;
  std::string summary;
  ExperimentConfig config;
  int reference_iterations = 0;  // step count reported for the published run
};

namespace detail {

inline constexpr double pi = std::numbers::pi;

inline CavityShape circle_target() { return make_disk(0.2, 0.2, 0.35); }
inline CavityShape square_target() { return make_square(0.1, 0.1, 0.3); }
inline CavityShape two_cavity_target() {
  return make_union({make_square(-0.4, 0.3, 0.2), make_disk(0.35, -0.3, 0.25)});
}
inline CavityShape l_shaped_target() {
  return make_polygon({{-0.4, -0.4}, {0.4, -0.4}, {0.4, -0.1}, {-0.1, -0.1}, {-0.1, 0.4}, {-0.4, 0.4}});
}

inline ExperimentPreset make_preset(std::string name, std::string summary, double mu, double lambda,
                                    std::string g1, std::string g2, double epsilon, int refine_period,
                                    CavityShape target, int reference) {
  ExperimentPreset p;
  p.name = name;
  p.summary = std::move(summary);
  p.reference_iterations = reference;
  p.config.name = std::move(name);
  p.config.target = std::move(target);
  RunConfig& r = p.config.run;
  r.mu = mu;
  r.lambda = lambda;
  r.loads = {{"g1", std::move(g1)}, {"g2", std::move(g2)}};
  r.epsilon = epsilon;
  r.refine_period = refine_period;
  return p;
}

inline std::vector<ExperimentPreset> build_presets() {
  const double eps16 = 1.0 / (16.0 * pi), eps8 = 1.0 / (8.0 * pi), eps4 = 1.0 / (4.0 * pi);
  const std::string quad = "(-1/2x^2, y^2)";
  std::vector<ExperimentPreset> out;

  out.push_back(make_preset("test1", "circular cavity", 0.2, 1.0, "(0, 1/10 - 3/10y)", quad, eps16, 1000,
                            circle_target(), 3544));
  out.push_back(make_preset("test2a", "circular cavity, nu = 1/4", 1.0, 1.0, "(2, 0)", quad, eps16, 1500,
                            circle_target(), 4308));
  out.push_back(make_preset("test2b", "circular cavity, nu = 1/3", 0.5, 1.0, "(x, y)", "(-y, -x)", eps16, 1000,
                            circle_target(), 5375));
  out.push_back(make_preset("test2c", "circular cavity, auxetic nu = -1/18", 2.0, -0.2, "(5x, 4y)", "(-3y, -3x)",
                            eps16, 2000, circle_target(), 3362));
  out.push_back(make_preset("test3a", "square cavity", 0.5, 1.0, "(1/10, 0)", quad, eps8, 6000, square_target(), 7957));
  auto t3b = make_preset("test3b", "square cavity, larger alpha", 0.5, 1.0, "(1/10, 0)", quad, eps8, 6000,
                         square_target(), 16346);
  t3b.config.run.alpha_tilde = 5e-2;
  out.push_back(t3b);
  out.push_back(make_preset("test3c", "square cavity, sheared load", 0.5, 1.0, "(0, 2/5x - 3/10y)", quad, eps16, 3000,
                            square_target(), 10931));
  out.push_back(make_preset("test4a", "two cavities", 0.5, 1.0, "(x, y)", "(-y, -x)", eps16, 5000,
                            two_cavity_target(), 8531));
  auto t4b = make_preset("test4b", "two cavities, epsilon continuation", 0.5, 1.0, "(x, y)", "(-y, -x)", eps4, 5000,
                         two_cavity_target(), 10852);
  t4b.config.run.delta = 7.5e-2;
  t4b.config.run.epsilon_schedule = EpsilonSchedule{8000, 4.0};
  out.push_back(t4b);
  auto t5 = make_preset("test5", "non-convex cavity", 0.5, 1.0, "(x, y)", "(-y, -x)", eps16, 5000, l_shaped_target(),
                        6825);
  t5.config.run.tau = 5e-4;
  out.push_back(t5);

  auto noisy = [&](const ExperimentPreset& base, std::string name, std::string summary, int period, double tau,
                   double level, int reference) {
    ExperimentPreset p = base;
    p.name = name;
    p.summary = std::move(summary);
    p.config.name = std::move(name);
    p.config.run.refine_period = period;
    p.config.run.tau = tau;
    p.config.run.noise.level = level;
    p.config.run.noise.seed = 1;
    p.reference_iterations = reference;
    return p;
  };
  const ExperimentPreset& t1 = out[0];
  const ExperimentPreset& t3c = out[6];
  const ExperimentPreset t4c = out[8];
  out.push_back(noisy(t1, "test6a", "circular cavity, 2% noise", 2000, 5e-4, 2.0, 11071));
  auto t6b = noisy(t1, "test6b", "circular cavity, 5% noise", 2500, 5e-4, 5.0, 14361);
  t6b.config.run.alpha_tilde = 5e-2;
  out.push_back(t6b);
  out.push_back(noisy(t3c, "test6c", "square cavity, 2% noise", 3000, 5e-4, 2.0, 23652));
  out.push_back(noisy(t3c, "test6d", "square cavity, 5% noise", 10000, 5e-4, 5.0, 15854));
  auto t6e = noisy(t4c, "test6e", "two cavities, 2% noise", 5000, 1e-3, 2.0, 11776);
  t6e.config.run.epsilon_schedule = EpsilonSchedule{8000, 4.0};
  out.push_back(t6e);
  auto t6f = noisy(t4c, "test6f", "two cavities, 5% noise", 8000, 5e-4, 5.0, 25480);
  t6f.config.run.epsilon_schedule = EpsilonSchedule{10000, 4.0};
  out.push_back(t6f);
  return out;
}

}  // namespace detail

inline const std::vector<ExperimentPreset>& presets() {
  static const std::vector<ExperimentPreset> table = detail::build_presets();
  return table;
}

inline std::string preset_names() {
  std::string out;
  for (const auto& p : presets()) out += (out.empty() ? "" : ", ") + p.name;
  return out;
}

inline const ExperimentPreset& find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  throw std::out_of_range("unknown preset '" + name + "'; available: " + preset_names());
}

}  // namespace elastocav
