#include "rcgrid/estimator.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "rcgrid/errors.hpp"

namespace rcgrid {

namespace {

FitResult make_fit(const Regression& reg, const Grid& grid, SolveResult solved, std::optional<Index> effective_p) {
  FitResult fit{std::move(solved.weights), grid, Vector(), solved.certificate, effective_p};
  fit.residuals = reg.target - reg.design * fit.weights.values();
  fit.certificate.objective = fit.residuals.squaredNorm() / static_cast<double>(reg.design.rows());
  return fit;
}

void check_regression(const Regression& reg, const Grid& grid) {
  if (reg.design.cols() != grid.size()) throw DimensionError("design has one column per grid point");
  if (reg.design.rows() != reg.target.size() || reg.design.rows() < 1) {
    throw DimensionError("design rows and target length differ");
  }
}

}  // namespace

Regression build_design(const ChoiceDataset& data, const Grid& grid, OutcomeRows rows) {
  data.validate();
  if (grid.dim() != data.K) {
    throw DimensionError("grid dimension " + std::to_string(grid.dim()) + " differs from K = " + std::to_string(data.K));
  }
  const Index n = data.size();
  const Index J = data.J;
  const Index D = grid.size();
  const RowMatrix alphas = grid.points();

  const Index skip = rows == OutcomeRows::all ? 0 : 1;
  const Index block = J + 1 - skip;

  Regression reg;
  reg.J = J;
  reg.rows = rows;
  reg.design.resize(n * block, D);
  reg.target = Vector::Zero(n * block);
  Vector prob(J + 1);
  for (Index i = 0; i < n; ++i) {
    const auto x = data.covariates(i);
    for (Index d = 0; d < D; ++d) {
      logit_choice_prob_into(x, alphas.row(d).data(), prob);
      reg.design.col(d).segment(i * block, block) = prob.tail(block);
    }
    const Index chosen = data.choice[static_cast<std::size_t>(i)];
    if (chosen >= skip) reg.target[i * block + chosen - skip] = 1.0;
  }
  return reg;
}

FitResult fit_fixed_grid(const Regression& reg, const Grid& grid, const SolveOptions& options,
                         const QuadraticModel* model) {
  check_regression(reg, grid);
  if (model != nullptr) return make_fit(reg, grid, solve(*model, nullptr, options), std::nullopt);
  const QuadraticModel own = QuadraticModel::from_least_squares(reg.design, reg.target);
  return make_fit(reg, grid, solve(own, nullptr, options), std::nullopt);
}

FitResult fit_fixed_grid(const ChoiceDataset& data, const Grid& grid, const SolveOptions& options) {
  return fit_fixed_grid(build_design(data, grid), grid, options);
}

FitResult fit_pcr(const Regression& reg, const Grid& grid, Index p, const SolveOptions& options,
                  const QuadraticModel* model) {
  check_regression(reg, grid);
  const Index D = grid.size();
  if (p < 1 || p > D) throw InvalidArgument("fit_pcr: p must lie in 1..D");
  QuadraticModel own;
  if (model == nullptr) {
    own = QuadraticModel::from_least_squares(reg.design, reg.target);
    model = &own;
  }
  if (p == D) return make_fit(reg, grid, solve(*model, nullptr, options), D);

  // Right singular vectors of the design are the eigenvectors of Z'Z / R;
  // eigenvalues come back ascending, so the top-p block is the last p columns.
  Eigen::SelfAdjointEigenSolver<Matrix> es(model->hessian);
  if (es.info() != Eigen::Success) throw Error("fit_pcr: eigendecomposition failed");
  for (Index q = p; q < D; ++q) {
    const Matrix basis = es.eigenvectors().rightCols(q);
    try {
      return make_fit(reg, grid, solve_on_subspace(*model, basis, options), q);
    } catch (const InfeasibleError&) {
    }
  }
  return make_fit(reg, grid, solve(*model, nullptr, options), D);
}

FitResult fit_pcr(const ChoiceDataset& data, const Grid& grid, Index p, const SolveOptions& options) {
  return fit_pcr(build_design(data, grid), grid, p, options);
}

double cdf_at(const FitResult& fit, const Eigen::Ref<const Vector>& a) {
  const Matrix& pts = fit.grid.points();
  if (a.size() != pts.cols()) throw DimensionError("cdf_at: point has wrong dimension");
  double total = 0.0;
  for (Index d = 0; d < pts.rows(); ++d) {
    bool below = true;
    for (Index k = 0; k < pts.cols() && below; ++k) below = pts(d, k) <= a[k];
    if (below) total += fit.weights[d];
  }
  return std::clamp(total, 0.0, 1.0);
}

double marginal_quantile(const FitResult& fit, int coord, double tau) {
  const Matrix& pts = fit.grid.points();
  if (coord < 1 || coord > pts.cols()) throw InvalidArgument("marginal_quantile: coordinate out of range");
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("marginal_quantile: tau must lie in (0, 1)");
  const Index k = coord - 1;
  std::vector<Index> order(static_cast<std::size_t>(pts.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index l, Index r) { return pts(l, k) < pts(r, k); });

  // Weights sum to 1 up to rounding; allow that much slack at the crossing.
  constexpr double kSlack = 1e-12;
  double cum = 0.0;
  for (std::size_t s = 0; s < order.size(); ++s) {
    const double v = pts(order[s], k);
    cum += fit.weights[order[s]];
    const bool last_of_tie = s + 1 == order.size() || pts(order[s + 1], k) != v;
    if (last_of_tie && cum >= tau - kSlack) return v;
  }
  return pts(order.back(), k);
}

}  // namespace rcgrid
