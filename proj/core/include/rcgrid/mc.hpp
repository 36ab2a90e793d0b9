#pragma once

// Monte Carlo harness: repeated simulate-fit-evaluate cycles for the plain and
// principal-component fixed-grid estimators, with CDF and quantile losses.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rcgrid/estimator.hpp"
#include "rcgrid/grid.hpp"
#include "rcgrid/types.hpp"

namespace rcgrid {

struct McCell {
  Index n = 0;
  Index D = 0;
  Index p = 5;
  Index M = 0;
  std::uint64_t seed = 0;
  std::vector<double> quantile_levels{0.25, 0.5, 0.75};
  Index J = 3;
  double grid_lo = -5.0;
  double grid_hi = 5.0;
  Index lattice_per_dim = 11;
  OutcomeRows rows = OutcomeRows::inside;

  void validate() const;
};

/// Lexicographic lattice (first coordinate slowest) with `per_dim` equally
/// spaced values per dimension, endpoints included.
Matrix eval_lattice(const std::vector<Interval>& bounds, Index per_dim);

/// (1 / (M L)) sum_m sum_l |F_m(l) - F0(l)|.
double integrated_abs_bias(const Matrix& per_rep_cdfs, const Vector& truth);

/// (1 / L) sum_l |(1 / M) sum_m F_m(l) - F0(l)|: bias of the pointwise mean.
double integrated_mean_bias(const Matrix& per_rep_cdfs, const Vector& truth);

/// sqrt((1 / (M L)) sum_m sum_l (F_m(l) - F0(l))^2).
double integrated_rmse(const Matrix& per_rep_cdfs, const Vector& truth);

/// sqrt((1 / M) sum_m (q_m - q0)^2).
double quantile_rmse(const Vector& per_rep_quantiles, double truth);

enum class Estimator { plain, pcr };

std::string to_string(Estimator e);

struct QuantileRmse {
  Estimator estimator;
  int coord;  // 1-based
  double tau;
  double rmse;
};

struct ReplicationRecord {
  Index m = 0;
  bool ok = false;
  std::string error;
  double objective_plain = 0.0;
  double objective_pcr = 0.0;
  double kkt_plain = 0.0;
  double kkt_pcr = 0.0;
  Index effective_p = 0;
  // Filled only with RunOptions::keep_estimates: CDFs on the lattice and
  // quantiles ordered coordinate-major, then by tau.
  Vector cdf_plain;
  Vector cdf_pcr;
  Vector q_plain;
  Vector q_pcr;
};

struct CellResult {
  McCell cell;
  double bias_plain = 0.0;
  double bias_pcr = 0.0;
  double rmse_plain = 0.0;
  double rmse_pcr = 0.0;
  double mean_bias_plain = 0.0;
  double mean_bias_pcr = 0.0;
  std::vector<QuantileRmse> quantile_rmse;  // plain then pcr; coord; tau in cell order
  std::vector<ReplicationRecord> replications;  // indexed by m
  Index failures = 0;

  /// More than 1% of replications failed.
  bool failed() const noexcept;
  double quantile(Estimator e, int coord, double tau) const;
};

struct RunOptions {
  unsigned workers = 1;
  /// Execution order of replications (a permutation of 0..M-1). Empty means
  /// ascending. Results never depend on it.
  std::vector<Index> order;
  bool keep_estimates = false;
};

CellResult run_cell(const McCell& cell, const RunOptions& options = {});

std::vector<CellResult> run_table(const std::vector<McCell>& cells, const RunOptions& options = {});

enum class TableLayout { cdf, quantile };

/// Summary table: cdf -> n, D, bias and RMSE of both CDF estimators;
/// quantile -> one row per (tau, cell) with coordinate-wise RMSEs, with a
/// leading tau column when the cells carry more than one level.
void write_table_csv(std::ostream& out, const std::vector<CellResult>& results, TableLayout layout);
void write_table_text(std::ostream& out, const std::vector<CellResult>& results, TableLayout layout);

/// Full machine-readable results: cell parameters, CDF metrics, then one
/// column per (estimator, coordinate, tau), then the failure count and the
/// bias of the pointwise mean CDF for each estimator.
void write_results_csv(std::ostream& out, const std::vector<CellResult>& results);

}  // namespace rcgrid
