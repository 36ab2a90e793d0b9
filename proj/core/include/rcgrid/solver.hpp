#pragma once

// Least squares over the probability simplex, optionally intersected with a
// linear subspace {theta : eq * theta = 0}.
//
// Every solution carries a KKT certificate computed independently of the
// algorithm that produced it: the largest violation of stationarity, dual
// feasibility, or primal feasibility over the best-fitting multipliers.

#include <optional>

#include "rcgrid/types.hpp"

namespace rcgrid {

struct SimplexLsProblem {
  Matrix design;             // R x D
  Vector target;             // R
  std::optional<Matrix> eq;  // C x D; rows to annihilate

  void validate() const;
};

/// Probability vector. Entries in [-1e-10, 0) are clamped to zero and the
/// vector renormalized; anything further outside the simplex is rejected.
class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(Vector theta);

  const Vector& values() const noexcept { return theta_; }
  Index size() const noexcept { return theta_.size(); }
  double operator[](Index d) const { return theta_[d]; }

 private:
  Vector theta_;
};

struct SolveCertificate {
  double objective = 0.0;     // (1/R) * ||target - design * theta||^2
  double kkt_residual = 0.0;  // >= 0
  int iterations = 0;
  bool feasible = false;
  int restarts = 0;
};

struct SolveOptions {
  double tol = 1e-8;
  int max_iterations = 0;  // 0 selects 100 * D
};

struct SolveResult {
  WeightVector weights;
  SolveCertificate certificate;
};

/// Normal-equation form of (1/R) ||y - Z theta||^2 = theta' H theta - 2 c' theta + s
/// with H = Z'Z / R, c = Z'y / R, s = y'y / R.
struct QuadraticModel {
  Matrix hessian;
  Vector linear;
  double constant = 0.0;

  static QuadraticModel from_least_squares(const Eigen::Ref<const Matrix>& design,
                                           const Eigen::Ref<const Vector>& target);

  Index dim() const noexcept { return linear.size(); }
  double objective(const Eigen::Ref<const Vector>& theta) const;
  Vector gradient(const Eigen::Ref<const Vector>& theta) const;
};

/// Minimizes over the simplex (and the eq nullspace, when present).
/// Throws InfeasibleError when the constraints miss the simplex and
/// NonConvergenceError when the iteration budget (with one restart) runs out.
SolveResult solve(const SimplexLsProblem& problem, const SolveOptions& options = {});

/// Same problem given its quadratic model. `eq` may be null.
SolveResult solve(const QuadraticModel& model, const Matrix* eq, const SolveOptions& options = {});

/// Minimizes over simplex-weights restricted to span(basis). `basis` is D x q
/// with orthonormal columns; this is the eq-constrained problem with the
/// nullspace of eq supplied directly.
SolveResult solve_on_subspace(const QuadraticModel& model, const Matrix& basis, const SolveOptions& options = {});

/// min over the simplex of ||eq * theta||_2. Zero (within 1e-10) iff the
/// constraints are feasible.
double feasibility_gap(const Matrix& eq, Index D);

/// KKT violation of `theta` for the model; `basis` (nullable) spans the
/// admissible subspace as in solve_on_subspace.
double kkt_residual(const QuadraticModel& model, const Matrix* basis, const Eigen::Ref<const Vector>& theta);

/// Orthonormal basis of {v : eq v = 0}.
Matrix nullspace_basis(const Matrix& eq);

}  // namespace rcgrid
