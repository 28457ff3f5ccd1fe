#pragma once

#include <algorithm>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace elastocav {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SolverMethod { Direct, ConjugateGradient, Automatic };

struct SolverOptions {
  SolverMethod method = SolverMethod::Automatic;
  double cg_tolerance = 1e-10;
  double residual_tolerance = 1e-10;
  Eigen::Index direct_limit = 400000;  // Automatic switches to CG above this many free dofs
};

/// Symmetric system with prescribed values on a subset of the unknowns.
struct SparseSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  std::vector<int> constrained_dofs;
  std::vector<double> constrained_values;  // empty means homogeneous
};

/// Factorization of a symmetric matrix restricted to its unconstrained dofs.
/// Constraints are eliminated (rows and columns), not penalized, so
/// constrained entries of every solution equal their prescribed values.
class ConstrainedSolver {
 public:
  using Sparse = Eigen::SparseMatrix<double>;

  ConstrainedSolver(const Sparse& matrix, std::span<const int> constrained, SolverOptions options = {})
      : options_(options), n_(matrix.rows()), free_index_(static_cast<std::size_t>(matrix.rows()), 0) {
    if (matrix.rows() != matrix.cols()) throw std::invalid_argument("ConstrainedSolver: matrix must be square");
    for (int c : constrained) {
      if (c < 0 || c >= n_) throw std::invalid_argument("ConstrainedSolver: constrained dof out of range");
      free_index_[c] = -1;
    }
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (free_index_[i] >= 0) {
        free_index_[i] = static_cast<int>(free_dofs_.size());
        free_dofs_.push_back(static_cast<int>(i));
      } else {
        constrained_.push_back(static_cast<int>(i));
      }
    }
    const auto nf = static_cast<Eigen::Index>(free_dofs_.size());
    std::vector<Eigen::Triplet<double>> ff;
    std::vector<Eigen::Triplet<double>> fc;
    std::vector<int> constrained_index(static_cast<std::size_t>(n_), -1);
    for (std::size_t k = 0; k < constrained_.size(); ++k) constrained_index[constrained_[k]] = static_cast<int>(k);
    for (Eigen::Index col = 0; col < matrix.outerSize(); ++col) {
      for (Sparse::InnerIterator it(matrix, col); it; ++it) {
        const int r = free_index_[it.row()];
        if (r < 0) continue;
        if (free_index_[it.col()] >= 0) {
          ff.emplace_back(r, free_index_[it.col()], it.value());
        } else {
          fc.emplace_back(r, constrained_index[it.col()], it.value());
        }
      }
    }
    reduced_.resize(nf, nf);
    reduced_.setFromTriplets(ff.begin(), ff.end());
    coupling_.resize(nf, static_cast<Eigen::Index>(constrained_.size()));
    coupling_.setFromTriplets(fc.begin(), fc.end());

    use_cg_ = options_.method == SolverMethod::ConjugateGradient ||
              (options_.method == SolverMethod::Automatic && nf > options_.direct_limit);
    if (nf == 0) return;
    if (use_cg_) {
      cg_ = std::make_unique<CG>();
      cg_->setTolerance(options_.cg_tolerance);
      cg_->setMaxIterations(std::max<Eigen::Index>(1000, 10 * nf));
      cg_->compute(reduced_);
      if (cg_->info() != Eigen::Success) throw SolverError("conjugate gradient setup failed");
    } else {
      ldlt_ = std::make_unique<LDLT>();
      ldlt_->compute(reduced_);
      if (ldlt_->info() != Eigen::Success) throw SolverError("sparse factorization failed");
      const Eigen::VectorXd d = ldlt_->vectorD();
      const double dmax = d.cwiseAbs().maxCoeff();
      if (!(d.minCoeff() > 1e-11 * dmax))
        throw SolverError("matrix is singular or indefinite on the unconstrained dofs");
    }
  }

  Eigen::Index size() const { return n_; }
  const std::vector<int>& free_dofs() const { return free_dofs_; }
  const std::vector<int>& constrained_dofs() const { return constrained_; }
  const Sparse& reduced_matrix() const { return reduced_; }

  /// Solves with prescribed values (one per constrained dof, in sorted dof
  /// order); an empty span means homogeneous constraints.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, std::span<const double> prescribed = {}) const {
    if (rhs.size() != n_) throw std::invalid_argument("ConstrainedSolver::solve: rhs size mismatch");
    if (!prescribed.empty() && prescribed.size() != constrained_.size())
      throw std::invalid_argument("ConstrainedSolver::solve: prescribed value count mismatch");
    const auto nf = static_cast<Eigen::Index>(free_dofs_.size());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(constrained_.size()));
    for (std::size_t k = 0; k < prescribed.size(); ++k) g[static_cast<Eigen::Index>(k)] = prescribed[k];
    for (std::size_t k = 0; k < constrained_.size(); ++k) out[constrained_[k]] = g[static_cast<Eigen::Index>(k)];
    if (nf == 0) return out;

    Eigen::VectorXd b(nf);
    for (Eigen::Index i = 0; i < nf; ++i) b[i] = rhs[free_dofs_[i]];
    if (g.size() > 0) b -= coupling_ * g;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(nf);
    const double bnorm = b.norm();
    if (bnorm > 0.0) {
      x = apply_inverse(b);
      double rel = (reduced_ * x - b).norm() / bnorm;
      if (rel > options_.residual_tolerance) {
        x += apply_inverse(b - reduced_ * x);
        rel = (reduced_ * x - b).norm() / bnorm;
      }
      if (!(rel <= options_.residual_tolerance))
        throw SolverError("linear solve did not reach the residual tolerance (relative residual " +
                          std::to_string(rel) + ")");
    }
    for (Eigen::Index i = 0; i < nf; ++i) out[free_dofs_[i]] = x[i];
    return out;
  }

 private:
  using LDLT = Eigen::SimplicialLDLT<Sparse, Eigen::Lower, Eigen::AMDOrdering<int>>;
  using CG = Eigen::ConjugateGradient<Sparse, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>>;

  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& b) const {
    if (use_cg_) {
      Eigen::VectorXd x = cg_->solve(b);
      if (cg_->info() != Eigen::Success) throw SolverError("conjugate gradient did not converge");
      return x;
    }
    return ldlt_->solve(b);
  }

  SolverOptions options_;
  Eigen::Index n_ = 0;
  std::vector<int> free_index_;
  std::vector<int> free_dofs_;
  std::vector<int> constrained_;
  Sparse reduced_;
  Sparse coupling_;
  bool use_cg_ = false;
  std::unique_ptr<LDLT> ldlt_;
  std::unique_ptr<CG> cg_;
};

/// One-shot solve of a constrained SPD system.
inline Eigen::VectorXd solve_spd(const SparseSystem& system, SolverOptions options = {}) {
  std::vector<int> dofs = system.constrained_dofs;
  std::vector<double> values = system.constrained_values;
  if (!values.empty() && values.size() != dofs.size())
    throw std::invalid_argument("solve_spd: constrained value count mismatch");
  // Sort constraints by dof so values line up with the solver's ordering.
  std::vector<std::size_t> order(dofs.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dofs[a] < dofs[b]; });
  std::vector<int> sorted_dofs;
  std::vector<double> sorted_values;
  for (std::size_t k : order) {
    if (!sorted_dofs.empty() && sorted_dofs.back() == dofs[k]) continue;
    sorted_dofs.push_back(dofs[k]);
    if (!values.empty()) sorted_values.push_back(values[k]);
  }
  ConstrainedSolver solver(system.matrix, sorted_dofs, options);
  return solver.solve(system.rhs, sorted_values);
}

}  // namespace elastocav
