#pragma once

// Fixed-grid least-squares estimator of a mixing distribution and the
// functionals (CDF, marginal quantiles) of the fitted discrete measure.

#include <optional>

#include "rcgrid/dataset.hpp"
#include "rcgrid/grid.hpp"
#include "rcgrid/solver.hpp"
#include "rcgrid/types.hpp"

namespace rcgrid {

/// Which outcomes contribute regression rows for each individual.
enum class OutcomeRows {
  all,    // j = 0..J
  inside  // j = 1..J; the outside-good row is implied by the others
};

/// Stacked regression: row i*(J+1)+j (or i*J+j-1 for inside rows only) holds
/// P(j | x_i, alpha_d) in column d, and the target holds the indicator that
/// individual i chose j.
struct Regression {
  Matrix design;
  Vector target;
  Index J = 0;
  OutcomeRows rows = OutcomeRows::all;
};

Regression build_design(const ChoiceDataset& data, const Grid& grid, OutcomeRows rows = OutcomeRows::all);

struct FitResult {
  WeightVector weights;
  Grid grid;
  Vector residuals;  // target - design * weights
  SolveCertificate certificate;
  std::optional<Index> effective_p;  // set by fit_pcr only
};

FitResult fit_fixed_grid(const ChoiceDataset& data, const Grid& grid, const SolveOptions& options = {});

/// `model`, when given, must be QuadraticModel::from_least_squares of `reg`;
/// passing it lets several fits share one Gram matrix.
FitResult fit_fixed_grid(const Regression& reg, const Grid& grid, const SolveOptions& options = {},
                         const QuadraticModel* model = nullptr);

/// Principal-component variant: weights restricted to the span of the top-p
/// right singular vectors of the design. If that span misses the simplex, p is
/// raised until it does and the order used is recorded in effective_p.
FitResult fit_pcr(const ChoiceDataset& data, const Grid& grid, Index p, const SolveOptions& options = {});

FitResult fit_pcr(const Regression& reg, const Grid& grid, Index p, const SolveOptions& options = {},
                  const QuadraticModel* model = nullptr);

/// Sum of weights on atoms alpha_d <= a (componentwise, boundary inclusive).
double cdf_at(const FitResult& fit, const Eigen::Ref<const Vector>& a);

/// Smallest atom value v on coordinate `coord` (1-based) whose marginal CDF
/// reaches tau.
double marginal_quantile(const FitResult& fit, int coord, double tau);

}  // namespace rcgrid
