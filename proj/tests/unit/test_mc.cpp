#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "rcgrid/errors.hpp"
#include "rcgrid/mc.hpp"
#include "rcgrid/rng.hpp"

using namespace rcgrid;

namespace {

McCell small_cell(Index M, std::uint64_t seed = 17) {
  McCell cell;
  cell.n = 80;
  cell.D = 20;
  cell.M = M;
  cell.seed = seed;
  return cell;
}

std::string results_csv(const std::vector<CellResult>& results) {
  std::ostringstream out;
  write_results_csv(out, results);
  return out.str();
}

}  // namespace

TEST(EvalLattice, LexicographicWithEndpoints) {
  const Matrix l = eval_lattice({{-5, 5}, {-5, 5}}, 11);
  ASSERT_EQ(l.rows(), 121);
  ASSERT_EQ(l.cols(), 2);
  EXPECT_EQ(l(0, 0), -5.0);
  EXPECT_EQ(l(0, 1), -5.0);
  EXPECT_EQ(l(1, 0), -5.0);
  EXPECT_EQ(l(1, 1), -4.0);
  EXPECT_EQ(l(11, 0), -4.0);
  EXPECT_EQ(l(120, 0), 5.0);
  EXPECT_EQ(l(120, 1), 5.0);
  EXPECT_EQ(l(60, 0), 0.0);
  const Matrix one = eval_lattice({{0, 1}}, 3);
  EXPECT_TRUE(one == Eigen::Vector3d(0, 0.5, 1));
  EXPECT_THROW(eval_lattice({{0, 1}}, 1), InvalidArgument);
}

TEST(Metrics, HandComputedExamples) {
  Matrix f(2, 2);
  f << 0.5, 1.0, 0.1, 0.6;
  const Eigen::Vector2d truth(0.3, 0.8);
  EXPECT_NEAR(integrated_abs_bias(f, truth), (0.2 + 0.2 + 0.2 + 0.2) / 4, 1e-15);
  EXPECT_NEAR(integrated_mean_bias(f, truth), 0.0, 1e-15);
  EXPECT_NEAR(integrated_rmse(f, truth), 0.2, 1e-15);
  EXPECT_NEAR(quantile_rmse(Eigen::Vector3d(1, 2, 3), 2), std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_THROW(integrated_rmse(f, Eigen::Vector3d::Zero()), DimensionError);
}

TEST(Metrics, AgreeWithDirectLoops) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix f(3, 4);
    Vector truth(4);
    for (Index l = 0; l < 4; ++l) {
      truth[l] = u(rng);
      for (Index m = 0; m < 3; ++m) f(m, l) = u(rng);
    }
    double abs = 0, sq = 0, mean_abs = 0;
    for (Index l = 0; l < 4; ++l) {
      double mean = 0;
      for (Index m = 0; m < 3; ++m) {
        abs += std::fabs(f(m, l) - truth[l]);
        sq += (f(m, l) - truth[l]) * (f(m, l) - truth[l]);
        mean += f(m, l) / 3;
      }
      mean_abs += std::fabs(mean - truth[l]) / 4;
    }
    EXPECT_NEAR(integrated_abs_bias(f, truth), abs / 12, 1e-14);
    EXPECT_NEAR(integrated_rmse(f, truth), std::sqrt(sq / 12), 1e-14);
    EXPECT_NEAR(integrated_mean_bias(f, truth), mean_abs, 1e-14);
    EXPECT_LE(integrated_mean_bias(f, truth), integrated_abs_bias(f, truth) + 1e-15);
    EXPECT_LE(integrated_abs_bias(f, truth), integrated_rmse(f, truth) + 1e-15);
  }
}

TEST(McCell, Validation) {
  McCell cell = small_cell(1);
  EXPECT_NO_THROW(cell.validate());
  cell.p = 21;
  EXPECT_THROW(cell.validate(), InvalidArgument);
  cell = small_cell(0);
  EXPECT_THROW(cell.validate(), InvalidArgument);
  cell = small_cell(1);
  cell.quantile_levels = {0.5, 1.0};
  EXPECT_THROW(cell.validate(), InvalidArgument);
}

TEST(RunCell, SingleReplicationProducesFiniteMetrics) {
  const auto r = run_cell(small_cell(1));
  ASSERT_EQ(r.replications.size(), 1u);
  EXPECT_TRUE(r.replications[0].ok);
  EXPECT_EQ(r.replications[0].m, 1);
  EXPECT_EQ(r.failures, 0);
  EXPECT_FALSE(r.failed());
  for (double v : {r.bias_plain, r.bias_pcr, r.rmse_plain, r.rmse_pcr}) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(r.quantile_rmse.size(), 12u);
  EXPECT_TRUE(std::isfinite(r.quantile(Estimator::pcr, 2, 0.75)));
  EXPECT_THROW(r.quantile(Estimator::pcr, 2, 0.6), InvalidArgument);
}

TEST(RunCell, ResultsIndependentOfOrderAndWorkers) {
  const McCell cell = small_cell(12);
  const auto base = results_csv({run_cell(cell)});
  RunOptions shuffled;
  shuffled.order.resize(12);
  std::iota(shuffled.order.begin(), shuffled.order.end(), Index{0});
  std::shuffle(shuffled.order.begin(), shuffled.order.end(), std::mt19937_64(5));
  EXPECT_EQ(results_csv({run_cell(cell, shuffled)}), base);
  RunOptions parallel;
  parallel.workers = 4;
  EXPECT_EQ(results_csv({run_cell(cell, parallel)}), base);
  shuffled.workers = 3;
  EXPECT_EQ(results_csv({run_cell(cell, shuffled)}), base);
}

TEST(RunCell, RejectsBadOrder) {
  RunOptions opts;
  opts.order = {0, 0, 1};
  EXPECT_THROW(run_cell(small_cell(3), opts), InvalidArgument);
}

TEST(RunCell, ConstrainedFitNeverBeatsPlainObjective) {
  const auto r = run_cell(small_cell(10, 23));
  for (const auto& rep : r.replications) {
    ASSERT_TRUE(rep.ok) << rep.error;
    EXPECT_GE(rep.objective_pcr, rep.objective_plain - 1e-12);
    EXPECT_LE(rep.kkt_plain, 1e-8);
    EXPECT_LE(rep.kkt_pcr, 1e-8);
    EXPECT_GE(rep.effective_p, 5);
  }
}

TEST(RunCell, KeptEstimatesAreValid) {
  RunOptions opts;
  opts.keep_estimates = true;
  const auto r = run_cell(small_cell(4, 31), opts);
  for (const auto& rep : r.replications) {
    ASSERT_EQ(rep.cdf_plain.size(), 121);
    ASSERT_EQ(rep.q_pcr.size(), 6);
    for (const Vector* v : {&rep.cdf_plain, &rep.cdf_pcr}) {
      EXPECT_GE(v->minCoeff(), 0.0);
      EXPECT_LE(v->maxCoeff(), 1.0);
    }
    for (const Vector* v : {&rep.q_plain, &rep.q_pcr}) {
      EXPECT_GE(v->minCoeff(), -5.0);
      EXPECT_LE(v->maxCoeff(), 5.0);
      // Quantiles per coordinate are nondecreasing in tau.
      for (Index c = 0; c < 2; ++c) {
        EXPECT_LE((*v)[3 * c], (*v)[3 * c + 1]);
        EXPECT_LE((*v)[3 * c + 1], (*v)[3 * c + 2]);
      }
    }
  }
  const auto lean = run_cell(small_cell(4, 31));
  EXPECT_EQ(lean.replications[0].cdf_plain.size(), 0);
  EXPECT_EQ(results_csv({lean}), results_csv({r}));
}

TEST(Tables, ShapeAndDeterminism) {
  std::vector<McCell> cells;
  for (Index D : {10, 20, 30}) {
    for (Index n : {40, 60, 80}) {
      McCell c = small_cell(2);
      c.n = n;
      c.D = D;
      cells.push_back(c);
    }
  }
  const auto a = run_table(cells);
  ASSERT_EQ(a.size(), 9u);
  std::ostringstream cdf, text;
  write_table_csv(cdf, a, TableLayout::cdf);
  write_table_text(text, a, TableLayout::cdf);
  std::istringstream lines(cdf.str());
  std::string line;
  int rows = 0;
  std::getline(lines, line);
  EXPECT_EQ(line, "n,D,Bias(F_hat),Bias(F_tilde),RMSE(F_hat),RMSE(F_tilde)");
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 9);
  EXPECT_FALSE(text.str().empty());

  std::ostringstream q;
  write_table_csv(q, a, TableLayout::quantile);
  std::istringstream qlines(q.str());
  std::getline(qlines, line);
  EXPECT_EQ(line, "tau,n,D,RMSEQ1,RMSEQ1-PCR,RMSEQ2,RMSEQ2-PCR");
  rows = 0;
  while (std::getline(qlines, line)) ++rows;
  EXPECT_EQ(rows, 27);

  EXPECT_EQ(results_csv(run_table(cells)), results_csv(a));
}

TEST(Tables, EmptyInputGivesHeaderOnly) {
  std::ostringstream out;
  write_table_csv(out, {}, TableLayout::cdf);
  EXPECT_EQ(out.str(), "n,D,Bias(F_hat),Bias(F_tilde),RMSE(F_hat),RMSE(F_tilde)\n");
  std::ostringstream res;
  write_results_csv(res, {});
  const std::string text = res.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
}
