#include "rcgrid/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <thread>

#include "rcgrid/dataset.hpp"
#include "rcgrid/errors.hpp"
#include "rcgrid/estimator.hpp"
#include "rcgrid/kernels.hpp"
#include "rcgrid/rng.hpp"

namespace rcgrid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Replication {
  ReplicationRecord record;
  Vector cdf_plain;
  Vector cdf_pcr;
  Vector q_plain;  // coord-major: index (coord-1) * levels + t
  Vector q_pcr;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fmt_tau(double tau) { return fmt("%g", tau); }

void check_shapes(const Matrix& per_rep, const Vector& truth) {
  if (per_rep.cols() != truth.size()) throw DimensionError("per-replication CDFs and truth differ in length");
  if (per_rep.size() == 0) throw DimensionError("no replications");
}

}  // namespace

void McCell::validate() const {
  if (n < 1 || D < 1 || M < 1 || p < 1 || J < 1) throw InvalidArgument("McCell: n, D, p, M and J must be positive");
  if (p > D) throw InvalidArgument("McCell: p must not exceed D");
  if (!(grid_lo < grid_hi)) throw InvalidArgument("McCell: grid bounds must satisfy lo < hi");
  if (lattice_per_dim < 2) throw InvalidArgument("McCell: lattice needs at least 2 points per dimension");
  if (quantile_levels.empty()) throw InvalidArgument("McCell: at least one quantile level is required");
  for (double tau : quantile_levels) {
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("McCell: quantile levels must lie in (0, 1)");
  }
}

Matrix eval_lattice(const std::vector<Interval>& bounds, Index per_dim) {
  if (per_dim < 2) throw InvalidArgument("eval_lattice: per_dim must be >= 2");
  if (bounds.empty()) throw InvalidArgument("eval_lattice: no dimensions");
  const Index K = static_cast<Index>(bounds.size());
  Index L = 1;
  for (Index k = 0; k < K; ++k) L *= per_dim;
  Matrix points(L, K);
  for (Index l = 0; l < L; ++l) {
    Index rest = l;
    for (Index k = K - 1; k >= 0; --k) {
      const Index idx = rest % per_dim;
      rest /= per_dim;
      const auto [lo, hi] = bounds[static_cast<std::size_t>(k)];
      points(l, k) = idx == per_dim - 1 ? hi : lo + (hi - lo) * static_cast<double>(idx) / static_cast<double>(per_dim - 1);
    }
  }
  return points;
}

double integrated_abs_bias(const Matrix& per_rep_cdfs, const Vector& truth) {
  check_shapes(per_rep_cdfs, truth);
  double total = 0.0;
  for (Index m = 0; m < per_rep_cdfs.rows(); ++m) {
    for (Index l = 0; l < truth.size(); ++l) total += std::abs(per_rep_cdfs(m, l) - truth[l]);
  }
  return total / static_cast<double>(per_rep_cdfs.size());
}

double integrated_mean_bias(const Matrix& per_rep_cdfs, const Vector& truth) {
  check_shapes(per_rep_cdfs, truth);
  double total = 0.0;
  for (Index l = 0; l < truth.size(); ++l) {
    double mean = 0.0;
    for (Index m = 0; m < per_rep_cdfs.rows(); ++m) mean += per_rep_cdfs(m, l);
    total += std::abs(mean / static_cast<double>(per_rep_cdfs.rows()) - truth[l]);
  }
  return total / static_cast<double>(truth.size());
}

double integrated_rmse(const Matrix& per_rep_cdfs, const Vector& truth) {
  check_shapes(per_rep_cdfs, truth);
  double total = 0.0;
  for (Index m = 0; m < per_rep_cdfs.rows(); ++m) {
    for (Index l = 0; l < truth.size(); ++l) {
      const double e = per_rep_cdfs(m, l) - truth[l];
      total += e * e;
    }
  }
  return std::sqrt(total / static_cast<double>(per_rep_cdfs.size()));
}

double quantile_rmse(const Vector& per_rep_quantiles, double truth) {
  if (per_rep_quantiles.size() < 1) throw DimensionError("quantile_rmse: no replications");
  double total = 0.0;
  for (Index m = 0; m < per_rep_quantiles.size(); ++m) {
    const double e = per_rep_quantiles[m] - truth;
    total += e * e;
  }
  return std::sqrt(total / static_cast<double>(per_rep_quantiles.size()));
}

std::string to_string(Estimator e) { return e == Estimator::plain ? "plain" : "pcr"; }

bool CellResult::failed() const noexcept {
  return static_cast<double>(failures) > 0.01 * static_cast<double>(cell.M);
}

double CellResult::quantile(Estimator e, int coord, double tau) const {
  for (const auto& q : quantile_rmse) {
    if (q.estimator == e && q.coord == coord && q.tau == tau) return q.rmse;
  }
  throw InvalidArgument("CellResult: no quantile RMSE for " + to_string(e) + " coord " + std::to_string(coord) +
                        " tau " + fmt_tau(tau));
}

CellResult run_cell(const McCell& cell, const RunOptions& options) {
  cell.validate();
  constexpr Index K = 2;
  const auto dgp = GaussianMixtureDGP::two_component_default();
  const GridSpec spec = GridSpec::box(cell.D, K, cell.grid_lo, cell.grid_hi);
  const Grid grid = halton_grid(spec);
  const Matrix lattice = eval_lattice(spec.bounds, cell.lattice_per_dim);
  const Index L = lattice.rows();
  Vector truth(L);
  for (Index l = 0; l < L; ++l) truth[l] = dgp.cdf(lattice.row(l).transpose());
  const Index T = static_cast<Index>(cell.quantile_levels.size());

  std::vector<Index> order = options.order;
  if (order.empty()) {
    order.resize(static_cast<std::size_t>(cell.M));
    for (Index m = 0; m < cell.M; ++m) order[static_cast<std::size_t>(m)] = m;
  }
  {
    std::vector<Index> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (Index m = 0; m < cell.M; ++m) {
      if (static_cast<Index>(sorted.size()) != cell.M || sorted[static_cast<std::size_t>(m)] != m) {
        throw InvalidArgument("run_cell: execution order must be a permutation of 0..M-1");
      }
    }
  }

  std::vector<Replication> reps(static_cast<std::size_t>(cell.M));
  auto run_one = [&](Index m) {
    Replication& rep = reps[static_cast<std::size_t>(m)];
    rep.record.m = m + 1;
    try {
      Rng rng = make_stream(cell.seed, static_cast<std::uint64_t>(m + 1));
      const ChoiceDataset data = simulate_dataset(dgp, cell.n, cell.J, K, rng);
      const Regression reg = build_design(data, grid, cell.rows);
      const QuadraticModel model = QuadraticModel::from_least_squares(reg.design, reg.target);
      const FitResult plain = fit_fixed_grid(reg, grid, {}, &model);
      const FitResult pcr = fit_pcr(reg, grid, cell.p, {}, &model);
      rep.cdf_plain.resize(L);
      rep.cdf_pcr.resize(L);
      for (Index l = 0; l < L; ++l) {
        const Vector a = lattice.row(l).transpose();
        rep.cdf_plain[l] = cdf_at(plain, a);
        rep.cdf_pcr[l] = cdf_at(pcr, a);
      }
      rep.q_plain.resize(K * T);
      rep.q_pcr.resize(K * T);
      for (Index k = 0; k < K; ++k) {
        for (Index t = 0; t < T; ++t) {
          const double tau = cell.quantile_levels[static_cast<std::size_t>(t)];
          rep.q_plain[k * T + t] = marginal_quantile(plain, static_cast<int>(k + 1), tau);
          rep.q_pcr[k * T + t] = marginal_quantile(pcr, static_cast<int>(k + 1), tau);
        }
      }
      rep.record.objective_plain = plain.certificate.objective;
      rep.record.objective_pcr = pcr.certificate.objective;
      rep.record.kkt_plain = plain.certificate.kkt_residual;
      rep.record.kkt_pcr = pcr.certificate.kkt_residual;
      rep.record.effective_p = pcr.effective_p.value_or(cell.p);
      rep.record.ok = true;
    } catch (const std::exception& e) {
      rep.record.ok = false;
      rep.record.error = e.what();
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(cell.M)));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < order.size(); i = next++) run_one(order[i]);
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  // Aggregate in replication order so the sums do not depend on scheduling.
  CellResult result;
  result.cell = cell;
  std::vector<Index> ok;
  for (Index m = 0; m < cell.M; ++m) {
    const auto& rep = reps[static_cast<std::size_t>(m)];
    result.replications.push_back(rep.record);
    if (options.keep_estimates && rep.record.ok) {
      auto& kept = result.replications.back();
      kept.cdf_plain = rep.cdf_plain;
      kept.cdf_pcr = rep.cdf_pcr;
      kept.q_plain = rep.q_plain;
      kept.q_pcr = rep.q_pcr;
    }
    if (rep.record.ok) {
      ok.push_back(m);
    } else {
      ++result.failures;
    }
  }
  const Index n_ok = static_cast<Index>(ok.size());
  Matrix cdf_plain(n_ok, L), cdf_pcr(n_ok, L), q_plain(n_ok, K * T), q_pcr(n_ok, K * T);
  for (Index r = 0; r < n_ok; ++r) {
    const auto& rep = reps[static_cast<std::size_t>(ok[static_cast<std::size_t>(r)])];
    cdf_plain.row(r) = rep.cdf_plain.transpose();
    cdf_pcr.row(r) = rep.cdf_pcr.transpose();
    q_plain.row(r) = rep.q_plain.transpose();
    q_pcr.row(r) = rep.q_pcr.transpose();
  }
  const bool any = n_ok > 0;
  result.bias_plain = any ? integrated_abs_bias(cdf_plain, truth) : kNaN;
  result.bias_pcr = any ? integrated_abs_bias(cdf_pcr, truth) : kNaN;
  result.rmse_plain = any ? integrated_rmse(cdf_plain, truth) : kNaN;
  result.rmse_pcr = any ? integrated_rmse(cdf_pcr, truth) : kNaN;
  result.mean_bias_plain = any ? integrated_mean_bias(cdf_plain, truth) : kNaN;
  result.mean_bias_pcr = any ? integrated_mean_bias(cdf_pcr, truth) : kNaN;
  for (Estimator e : {Estimator::plain, Estimator::pcr}) {
    const Matrix& q = e == Estimator::plain ? q_plain : q_pcr;
    for (Index k = 0; k < K; ++k) {
      for (Index t = 0; t < T; ++t) {
        const double tau = cell.quantile_levels[static_cast<std::size_t>(t)];
        const double q0 = dgp.marginal_quantile(static_cast<int>(k + 1), tau);
        const double rmse = any ? quantile_rmse(q.col(k * T + t), q0) : kNaN;
        result.quantile_rmse.push_back({e, static_cast<int>(k + 1), tau, rmse});
      }
    }
  }
  return result;
}

std::vector<CellResult> run_table(const std::vector<McCell>& cells, const RunOptions& options) {
  std::vector<CellResult> results;
  results.reserve(cells.size());
  for (const auto& cell : cells) {
    RunOptions per_cell = options;
    if (!per_cell.order.empty() && static_cast<Index>(per_cell.order.size()) != cell.M) per_cell.order.clear();
    results.push_back(run_cell(cell, per_cell));
  }
  return results;
}

namespace {

using Row = std::vector<std::string>;

std::vector<double> table_levels(const std::vector<CellResult>& results) {
  if (results.empty()) return {};
  return results.front().cell.quantile_levels;
}

Row table_header(const std::vector<CellResult>& results, TableLayout layout) {
  if (layout == TableLayout::cdf) {
    return {"n", "D", "Bias(F_hat)", "Bias(F_tilde)", "RMSE(F_hat)", "RMSE(F_tilde)"};
  }
  Row h;
  if (table_levels(results).size() > 1) h.push_back("tau");
  for (const char* c : {"n", "D", "RMSEQ1", "RMSEQ1-PCR", "RMSEQ2", "RMSEQ2-PCR"}) h.push_back(c);
  return h;
}

std::vector<Row> table_rows(const std::vector<CellResult>& results, TableLayout layout) {
  std::vector<Row> rows;
  if (layout == TableLayout::cdf) {
    for (const auto& r : results) {
      rows.push_back({std::to_string(r.cell.n), std::to_string(r.cell.D), fmt("%.4f", r.bias_plain),
                      fmt("%.4f", r.bias_pcr), fmt("%.4f", r.rmse_plain), fmt("%.4f", r.rmse_pcr)});
    }
    return rows;
  }
  const auto levels = table_levels(results);
  for (double tau : levels) {
    for (const auto& r : results) {
      Row row;
      if (levels.size() > 1) row.push_back(fmt_tau(tau));
      row.push_back(std::to_string(r.cell.n));
      row.push_back(std::to_string(r.cell.D));
      for (int coord : {1, 2}) {
        row.push_back(fmt("%.4f", r.quantile(Estimator::plain, coord, tau)));
        row.push_back(fmt("%.4f", r.quantile(Estimator::pcr, coord, tau)));
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_csv_row(std::ostream& out, const Row& row) {
  for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
  out << '\n';
}

}  // namespace

void write_table_csv(std::ostream& out, const std::vector<CellResult>& results, TableLayout layout) {
  write_csv_row(out, table_header(results, layout));
  for (const auto& row : table_rows(results, layout)) write_csv_row(out, row);
}

void write_table_text(std::ostream& out, const std::vector<CellResult>& results, TableLayout layout) {
  const Row header = table_header(results, layout);
  const auto rows = table_rows(results, layout);
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto emit = [&](const Row& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << "  ";
      out << std::string(width[c] - row[c].size(), ' ') << row[c];
    }
    out << '\n';
  };
  emit(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& row : rows) emit(row);
}

void write_results_csv(std::ostream& out, const std::vector<CellResult>& results) {
  const auto levels = table_levels(results);
  Row header{"n", "D", "p", "M", "seed", "bias_plain", "bias_pcr", "rmse_plain", "rmse_pcr"};
  for (Estimator e : {Estimator::plain, Estimator::pcr}) {
    for (int coord : {1, 2}) {
      for (double tau : levels) header.push_back("q_" + to_string(e) + "_c" + std::to_string(coord) + "_t" + fmt_tau(tau));
    }
  }
  header.push_back("failures");
  header.push_back("mean_bias_plain");
  header.push_back("mean_bias_pcr");
  write_csv_row(out, header);
  for (const auto& r : results) {
    Row row{std::to_string(r.cell.n),        std::to_string(r.cell.D),    std::to_string(r.cell.p),
            std::to_string(r.cell.M),        std::to_string(r.cell.seed), fmt("%.17g", r.bias_plain),
            fmt("%.17g", r.bias_pcr),        fmt("%.17g", r.rmse_plain),  fmt("%.17g", r.rmse_pcr)};
    for (Estimator e : {Estimator::plain, Estimator::pcr}) {
      for (int coord : {1, 2}) {
        for (double tau : levels) row.push_back(fmt("%.17g", r.quantile(e, coord, tau)));
      }
    }
    row.push_back(std::to_string(r.failures));
    row.push_back(fmt("%.17g", r.mean_bias_plain));
    row.push_back(fmt("%.17g", r.mean_bias_pcr));
    write_csv_row(out, row);
  }
}

}  // namespace rcgrid
