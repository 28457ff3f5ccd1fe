#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "elastocav/linear_solver.hpp"

namespace elastocav {

class PdasError : public std::runtime_error {
 public:
  PdasError(const std::string& what, double last_residual)
      : std::runtime_error(what + " (last KKT residual " + std::to_string(last_residual) + ")"),
        last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

enum class BoundStatus : std::int8_t { Lower = -1, Inactive = 0, Upper = 1 };

/// Active-set partition and multipliers of a bilateral box-constrained QP.
struct PdasState {
  std::vector<BoundStatus> status;
  Eigen::VectorXd lambda_lower;  // >= 0, nonzero only on the lower-active set
  Eigen::VectorXd lambda_upper;  // >= 0, nonzero only on the upper-active set
  int iterations = 0;

  std::size_t count(BoundStatus s) const {
    std::size_t n = 0;
    for (auto x : status) n += (x == s);
    return n;
  }
};

struct PdasOptions {
  int max_iterations = 50;
  double coupling = 1.0;  // the constant c of the primal-dual indicator
};

struct PdasResult {
  Eigen::VectorXd v;
  PdasState state;
};

/// KKT violation of (v, state) for min 1/2 v'Av - b'v on [lower, upper]^n:
/// largest of stationarity, bound, sign and complementarity defects.
inline double kkt_residual(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b, double lower, double upper,
                           const Eigen::VectorXd& v, const PdasState& state) {
  const Eigen::VectorXd r = A * v - b - state.lambda_lower + state.lambda_upper;
  double res = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    res = std::max({res, lower - v[i], v[i] - upper, -state.lambda_lower[i], -state.lambda_upper[i],
                    std::abs(state.lambda_lower[i] * (v[i] - lower)),
                    std::abs(state.lambda_upper[i] * (upper - v[i]))});
  }
  return res;
}

/// Primal-dual active set method for min 1/2 v'Av - b'v subject to
/// lower <= v <= upper, with A symmetric positive definite. Each iteration
/// fixes the active components at their bounds, solves for the inactive
/// ones, and re-partitions with the indicators lambda_lower + c(lower - v)
/// and lambda_upper + c(v - upper). Stops when the partition repeats.
inline PdasResult pdas_solve(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b, double lower,
                             double upper, const PdasState* warm_start = nullptr, PdasOptions options = {}) {
  const Eigen::Index n = b.size();
  if (A.rows() != n || A.cols() != n) throw std::invalid_argument("pdas_solve: dimension mismatch");
  if (!(lower < upper)) throw std::invalid_argument("pdas_solve: empty box");

  std::vector<BoundStatus> status(static_cast<std::size_t>(n), BoundStatus::Inactive);
  if (warm_start && warm_start->status.size() == status.size()) status = warm_start->status;

  std::set<std::vector<BoundStatus>> seen;
  PdasResult result;
  double last_residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= options.max_iterations; ++it) {
    std::vector<int> active;
    std::vector<double> values;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (status[i] == BoundStatus::Inactive) continue;
      active.push_back(static_cast<int>(i));
      values.push_back(status[i] == BoundStatus::Lower ? lower : upper);
    }
    ConstrainedSolver solver(A, active, SolverOptions{SolverMethod::Direct});
    Eigen::VectorXd v = solver.solve(b, values);
    const Eigen::VectorXd r = A * v - b;

    PdasState state;
    state.iterations = it;
    state.lambda_lower = Eigen::VectorXd::Zero(n);
    state.lambda_upper = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (status[i] == BoundStatus::Lower) state.lambda_lower[i] = r[i];
      if (status[i] == BoundStatus::Upper) state.lambda_upper[i] = -r[i];
    }
    std::vector<BoundStatus> next(status.size(), BoundStatus::Inactive);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (state.lambda_lower[i] + options.coupling * (lower - v[i]) > 0.0) {
        next[i] = BoundStatus::Lower;
      } else if (state.lambda_upper[i] + options.coupling * (v[i] - upper) > 0.0) {
        next[i] = BoundStatus::Upper;
      }
    }
    state.status = status;
    last_residual = kkt_residual(A, b, lower, upper, v, state);
    if (next == status) {
      // Inactive components satisfy the bounds up to round-off; clamp them.
      for (Eigen::Index i = 0; i < n; ++i) v[i] = std::clamp(v[i], lower, upper);
      result.v = std::move(v);
      result.state = std::move(state);
      return result;
    }
    if (seen.contains(next)) throw PdasError("pdas_solve: active sets cycle", last_residual);
    seen.insert(status);
    status = std::move(next);
  }
  throw PdasError("pdas_solve: maximum number of iterations exceeded", last_residual);
}

}  // namespace elastocav
