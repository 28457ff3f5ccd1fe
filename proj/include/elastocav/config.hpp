#pragma once

// Experiment configuration as sectioned key-value text:
//
//   [experiment]  name
//   [run]         tol, alpha_tilde, tau, max_iterations, stop_norm, backtracking, pdas_max_iterations
//   [phase]       epsilon, epsilon_switch, epsilon_divisor, band_width
//   [material]    mu, lambda, delta
//   [mesh]        working_resolution, generator_resolution, dirichlet, refine_period,
//                 max_refinements, dorfler_fraction
//   [loads]       <id> = (e1, e2)
//   [target]      shape
//   [noise]       level, seed, scaling
//
// Numeric values may be expressions such as 1/(16pi). Missing keys keep
// their defaults.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "elastocav/expr.hpp"
#include "elastocav/geometry.hpp"
#include "elastocav/inversion.hpp"

namespace elastocav {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string name = "custom";
  RunConfig run;
  std::optional<CavityShape> target;
  int generator_resolution = 64;
};

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Canonical text: fixed key order, shortest round-trip numbers.
inline std::string serialize_config(const ExperimentConfig& c) {
  const RunConfig& r = c.run;
  std::ostringstream out;
  auto kv = [&](const std::string& k, const std::string& v) { out << k << " = " << v << '\n'; };
  auto num = [&](const std::string& k, double v) { kv(k, format_number(v)); };
  out << "[experiment]\n";
  kv("name", c.name);
  out << "\n[run]\n";
  num("tol", r.tol);
  num("alpha_tilde", r.alpha_tilde);
  num("tau", r.tau);
  kv("max_iterations", std::to_string(r.max_iterations));
  kv("stop_norm", to_string(r.stop_norm));
  kv("backtracking", r.backtracking ? "true" : "false");
  kv("pdas_max_iterations", std::to_string(r.pdas.max_iterations));
  out << "\n[phase]\n";
  num("epsilon", r.epsilon);
  kv("epsilon_switch", r.epsilon_schedule ? std::to_string(r.epsilon_schedule->iteration) : "none");
  num("epsilon_divisor", r.epsilon_schedule ? r.epsilon_schedule->divisor : 4.0);
  num("band_width", r.band_width);
  out << "\n[material]\n";
  num("mu", r.mu);
  num("lambda", r.lambda);
  num("delta", r.delta);
  out << "\n[mesh]\n";
  kv("working_resolution", std::to_string(r.working_resolution));
  kv("generator_resolution", std::to_string(c.generator_resolution));
  kv("dirichlet", format_dirichlet_sides(r.dirichlet));
  kv("refine_period", std::to_string(r.refine_period));
  kv("max_refinements", std::to_string(r.max_refinements));
  num("dorfler_fraction", r.dorfler_fraction);
  out << "\n[loads]\n";
  for (const auto& l : r.loads) kv(l.id, l.expression);
  out << "\n[target]\n";
  kv("shape", c.target ? describe(*c.target) : "none");
  out << "\n[noise]\n";
  num("level", r.noise.level);
  kv("seed", std::to_string(r.noise.seed));
  kv("scaling", to_string(r.noise.scaling));
  return out.str();
}

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

inline double config_number(const std::string& key, const std::string& text) {
  try {
    const double v = evaluate_scalar_expression(text);
    if (!std::isfinite(v)) throw ConfigError(key + ": value is not finite");
    return v;
  } catch (const ExpressionError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

inline long long config_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return v;
}

inline bool config_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

}  // namespace detail

/// Parses configuration text on top of `base`. Unknown sections or keys are errors.
inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig c = std::move(base);
  RunConfig& r = c.run;
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) throw ConfigError("config: key '" + section + "' outside a section");
    if (section == "loads") {
      r.loads.clear();
      for (const auto& [id, node] : entries) {
        const std::string expr = node.data();
        try {
          parse_traction_expression(expr);
        } catch (const ExpressionError& e) {
          throw ConfigError("loads." + id + ": " + e.what());
        }
        r.loads.push_back({id, expr});
      }
      continue;
    }
    for (const auto& [key, node] : entries) {
      const std::string full = section + "." + key;
      const std::string v = node.data();
      auto number = [&] { return detail::config_number(full, v); };
      auto integer = [&] { return static_cast<int>(detail::config_integer(full, v)); };
      try {
        if (full == "experiment.name") c.name = v;
        else if (full == "run.tol") r.tol = number();
        else if (full == "run.alpha_tilde") r.alpha_tilde = number();
        else if (full == "run.tau") r.tau = number();
        else if (full == "run.max_iterations") r.max_iterations = integer();
        else if (full == "run.stop_norm") r.stop_norm = parse_stop_norm(v);
        else if (full == "run.backtracking") r.backtracking = detail::config_bool(full, v);
        else if (full == "run.pdas_max_iterations") r.pdas.max_iterations = integer();
        else if (full == "phase.epsilon") r.epsilon = number();
        else if (full == "phase.epsilon_switch") {
          if (v == "none") {
            r.epsilon_schedule.reset();
          } else {
            const double divisor = r.epsilon_schedule ? r.epsilon_schedule->divisor : 4.0;
            r.epsilon_schedule = EpsilonSchedule{integer(), divisor};
          }
        } else if (full == "phase.epsilon_divisor") {
          if (r.epsilon_schedule) r.epsilon_schedule->divisor = number();
        } else if (full == "phase.band_width") r.band_width = number();
        else if (full == "material.mu") r.mu = number();
        else if (full == "material.lambda") r.lambda = number();
        else if (full == "material.delta") r.delta = number();
        else if (full == "mesh.working_resolution") r.working_resolution = integer();
        else if (full == "mesh.generator_resolution") c.generator_resolution = integer();
        else if (full == "mesh.dirichlet") r.dirichlet = parse_dirichlet_sides(v);
        else if (full == "mesh.refine_period") r.refine_period = integer();
        else if (full == "mesh.max_refinements") r.max_refinements = integer();
        else if (full == "mesh.dorfler_fraction") r.dorfler_fraction = number();
        else if (full == "target.shape") {
          if (v == "none") c.target.reset();
          else c.target = parse_shape(v);
        } else if (full == "noise.level") r.noise.level = number();
        else if (full == "noise.seed") r.noise.seed = static_cast<std::uint64_t>(detail::config_integer(full, v));
        else if (full == "noise.scaling") r.noise.scaling = parse_noise_scaling(v);
        else throw ConfigError("config: unknown key '" + full + "'");
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw ConfigError(full + ": " + e.what());
      }
    }
  }
  return c;
}

inline ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::move(base));
}

}  // namespace elastocav
