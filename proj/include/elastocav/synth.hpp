#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "elastocav/elasticity.hpp"
#include "elastocav/expr.hpp"
#include "elastocav/geometry.hpp"

namespace elastocav {

enum class NoiseScaling { RelativeToMax, RelativeToPointwise };

inline const char* to_string(NoiseScaling s) {
  return s == NoiseScaling::RelativeToMax ? "relative-to-max" : "relative-to-pointwise";
}

inline NoiseScaling parse_noise_scaling(const std::string& s) {
  if (s == "relative-to-max" || s == "max") return NoiseScaling::RelativeToMax;
  if (s == "relative-to-pointwise" || s == "pointwise") return NoiseScaling::RelativeToPointwise;
  throw std::invalid_argument("unknown noise scaling '" + s + "'");
}

/// Gaussian measurement noise: level in percent, amplitude scaled by the
/// largest displacement component on Sigma_N or by the local one.
struct NoiseSpec {
  double level = 0.0;
  std::uint64_t seed = 0;
  NoiseScaling scaling = NoiseScaling::RelativeToMax;

  void validate() const {
    if (!(level >= 0.0) || !std::isfinite(level)) throw std::invalid_argument("noise level must be finite and >= 0");
  }
};

/// A traction given in closed form.
struct LoadDefinition {
  std::string id;
  std::string expression;
};

inline TractionFn traction_from(const LoadDefinition& def) {
  return TractionFn(parse_traction_expression(def.expression));
}

/// Adds level% noise to every component of every node. The draws follow the
/// node order of the trace, x before y, from one generator seeded by spec.seed.
inline BoundaryTrace add_noise(const BoundaryTrace& measurement, const NoiseSpec& spec) {
  spec.validate();
  for (const auto& val : measurement.values)
    if (!val.allFinite()) throw std::domain_error("add_noise: measurement is not finite");
  if (spec.level == 0.0) return measurement;
  double scale = 0.0;
  for (const auto& val : measurement.values) scale = std::max(scale, val.cwiseAbs().maxCoeff());
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> eta(0.0, 1.0);
  BoundaryTrace out = measurement;
  for (auto& val : out.values) {
    for (int c = 0; c < 2; ++c) {
      const double s = spec.scaling == NoiseScaling::RelativeToMax ? scale : std::abs(val[c]);
      val[c] += spec.level / 100.0 * s * eta(rng);
    }
  }
  return out;
}

/// Synthetic data: for each load, the genuinely carved problem is solved on
/// a generator mesh finer than the working mesh and its boundary trace is
/// interpolated onto the Neumann nodes of the working mesh.
inline std::vector<LoadCase> generate_measurements(const CavityShape& target, const std::vector<LoadDefinition>& loads,
                                                   int generator_resolution, const TriMesh& working_mesh,
                                                   const ElasticityParams& params,
                                                   DirichletSides sides = {}) {
  if (loads.empty()) throw std::invalid_argument("generate_measurements: no load cases");
  const TriMesh generator = build_square_mesh(generator_resolution, sides);
  if (!(max_diameter(generator) < max_diameter(working_mesh)))
    throw std::invalid_argument("generate_measurements: generator mesh must be finer than the working mesh");
  const TriMesh carved = carve_cavity(generator, target);
  const ElasticProblem problem(carved, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(carved.num_vertices())), params);

  std::vector<LoadCase> out;
  for (const auto& def : loads) {
    LoadCase load;
    load.id = def.id;
    load.traction_text = def.expression;
    load.traction = traction_from(def);
    const DisplacementField u = problem.forward(load.traction);
    load.source = boundary_profile(carved, u.values);
    load.resample(working_mesh);
    out.push_back(std::move(load));
  }
  return out;
}

/// Replaces each measurement by a noisy copy. The noisy working trace also
/// becomes the resampling source, so refinement interpolates the data that
/// was observed instead of the clean generator trace. Load k uses seed + k.
inline void apply_noise(std::vector<LoadCase>& loads, const TriMesh& working_mesh, const NoiseSpec& spec) {
  spec.validate();
  if (spec.level == 0.0) return;
  for (std::size_t k = 0; k < loads.size(); ++k) {
    NoiseSpec per_load = spec;
    per_load.seed = spec.seed + k;
    loads[k].measurement = add_noise(loads[k].measurement, per_load);
    loads[k].source = profile_from_trace(working_mesh, loads[k].measurement);
  }
}

}  // namespace elastocav
