#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "rcgrid/errors.hpp"
#include "rcgrid/rng.hpp"
#include "rcgrid/solver.hpp"

using namespace rcgrid;

namespace {

double ls_objective(const Matrix& z, const Vector& y, const Vector& theta) {
  return (y - z * theta).squaredNorm() / static_cast<double>(z.rows());
}

// Exhaustive search over the simplex lattice with the given number of steps.
// Along the innermost coordinate the objective is an exact quadratic, which
// is evaluated at every lattice point.
double lattice_minimum(const Matrix& z, const Vector& y, int steps) {
  const Index D = z.cols();
  const double h = 1.0 / steps;
  const double inv_r = 1.0 / static_cast<double>(z.rows());
  if (D == 1) return ls_objective(z, y, Vector::Ones(1));
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> k(static_cast<std::size_t>(D - 2), 0);
  while (true) {
    int used = std::accumulate(k.begin(), k.end(), 0);
    if (used <= steps) {
      // Remaining mass m split as t on coordinate D-2 and m - t on D-1.
      Vector base = Vector::Zero(z.rows());
      for (Index d = 0; d + 2 < D; ++d) base += (k[static_cast<std::size_t>(d)] * h) * z.col(d);
      const double m = (steps - used) * h;
      const Vector r0 = y - base - m * z.col(D - 1);
      const Vector dz = z.col(D - 2) - z.col(D - 1);
      const double a = dz.squaredNorm() * inv_r, b = -2.0 * r0.dot(dz) * inv_r, c = r0.squaredNorm() * inv_r;
      for (int t = 0; t <= steps - used; ++t) {
        const double s = t * h;
        best = std::min(best, (a * s + b) * s + c);
      }
    }
    std::size_t pos = 0;
    while (pos < k.size()) {
      if (++k[pos] <= steps) break;
      k[pos] = 0;
      ++pos;
    }
    if (pos == k.size()) break;
  }
  return best;
}

void project_to_simplex(Vector& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, shift = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) shift = t;
  }
  v = (v.array() - shift).cwiseMax(0.0);
}

// Accelerated projected gradient: an independent reference for larger problems.
Vector fista_reference(const Matrix& z, const Vector& y, int iters) {
  const Index D = z.cols();
  const Matrix h = z.transpose() * z / static_cast<double>(z.rows());
  const Vector c = z.transpose() * y / static_cast<double>(z.rows());
  const double lip = 2.0 * Eigen::SelfAdjointEigenSolver<Matrix>(h).eigenvalues().maxCoeff();
  Vector x = Vector::Constant(D, 1.0 / D), yk = x;
  double t = 1.0;
  for (int i = 0; i < iters; ++i) {
    Vector next = yk - (2.0 * (h * yk - c)) / lip;
    project_to_simplex(next);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    yk = next + ((t - 1.0) / t_next) * (next - x);
    x = next;
    t = t_next;
  }
  return x;
}

Matrix random_matrix(Index r, Index c, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) m(i, j) = n(rng);
  }
  return m;
}

}  // namespace

TEST(Solve, TargetOnVertex) {
  SimplexLsProblem p{Matrix::Identity(2, 2), Eigen::Vector2d(1, 0), std::nullopt};
  const auto r = solve(p);
  EXPECT_NEAR(r.weights[0], 1.0, 1e-12);
  EXPECT_NEAR(r.weights[1], 0.0, 1e-12);
  EXPECT_NEAR(r.certificate.objective, 0.0, 1e-15);
  EXPECT_TRUE(r.certificate.feasible);
}

TEST(Solve, SingleColumnForcesUnitWeight) {
  SimplexLsProblem p{Matrix::Ones(5, 1), Vector::LinSpaced(5, -1, 3), std::nullopt};
  const auto r = solve(p);
  EXPECT_EQ(r.weights.size(), 1);
  EXPECT_DOUBLE_EQ(r.weights[0], 1.0);
}

TEST(Solve, InteriorSolutionOfIdentityDesign) {
  // Objective is (1/R)||y - Z theta||^2 with R = 2: ((0.05)^2 + (0.05)^2) / 2.
  SimplexLsProblem p{Matrix::Identity(2, 2), Eigen::Vector2d(0.8, 0.1), std::nullopt};
  const auto r = solve(p);
  EXPECT_NEAR(r.weights[0], 0.85, 1e-12);
  EXPECT_NEAR(r.weights[1], 0.15, 1e-12);
  EXPECT_NEAR(r.certificate.objective, 0.0025, 1e-14);
  double scan = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100000; ++i) {
    const double t = i * 1e-5;
    scan = std::min(scan, ls_objective(p.design, p.target, Eigen::Vector2d(t, 1 - t)));
  }
  EXPECT_LE(r.certificate.objective, scan + 1e-15);
}

TEST(Solve, NoWorseThanSimplexLatticeSearch) {
  Rng rng = make_stream(606, 0);
  std::uniform_int_distribution<int> dd(1, 4), rr(1, 8);
  for (int trial = 0; trial < 40; ++trial) {
    const Index D = dd(rng), R = rr(rng);
    const Matrix z = random_matrix(R, D, rng);
    const Vector y = random_matrix(R, 1, rng);
    const auto r = solve(SimplexLsProblem{z, y, std::nullopt});
    const int steps = D == 4 ? 250 : 1000;
    EXPECT_LE(r.certificate.objective, lattice_minimum(z, y, steps) + 1e-6) << "trial " << trial;
    EXPECT_LE(r.certificate.kkt_residual, 1e-8);
  }
}

TEST(Solve, MatchesProjectedGradientOnLargerProblems) {
  Rng rng = make_stream(77, 0);
  for (Index D : {10, 40, 120}) {
    const Matrix z = random_matrix(3 * D, D, rng).cwiseAbs();
    const Vector y = random_matrix(3 * D, 1, rng).cwiseAbs();
    const auto r = solve(SimplexLsProblem{z, y, std::nullopt});
    const Vector ref = fista_reference(z, y, 20000);
    EXPECT_LE(r.certificate.objective, ls_objective(z, y, ref) + 1e-12) << "D = " << D;
    EXPECT_LE((r.weights.values() - ref).cwiseAbs().maxCoeff(), 1e-4);
    EXPECT_LE(r.certificate.kkt_residual, 1e-8);
  }
}

TEST(Solve, RankDeficientDesignStillCertified) {
  Rng rng = make_stream(5, 0);
  const Matrix base = random_matrix(30, 3, rng);
  Matrix z(30, 12);
  for (Index d = 0; d < 12; ++d) z.col(d) = base.col(d % 3) * (1.0 + 0.1 * (d / 3));
  const Vector y = random_matrix(30, 1, rng);
  const auto r = solve(SimplexLsProblem{z, y, std::nullopt});
  EXPECT_LE(r.certificate.kkt_residual, 1e-8);
  EXPECT_LE(r.certificate.objective, ls_objective(z, y, fista_reference(z, y, 20000)) + 1e-12);
}

TEST(Solve, RelaxingEqualityNeverIncreasesObjective) {
  Rng rng = make_stream(31, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix z = random_matrix(15, 6, rng);
    const Vector y = random_matrix(15, 1, rng);
    Matrix eq(1, 6);
    eq << 1, -1, 0, 0, 0, 0;
    const auto free = solve(SimplexLsProblem{z, y, std::nullopt});
    const auto tied = solve(SimplexLsProblem{z, y, eq});
    EXPECT_LE(free.certificate.objective, tied.certificate.objective + 1e-12);
    EXPECT_NEAR(tied.weights[0], tied.weights[1], 1e-8);
    EXPECT_LE(tied.certificate.kkt_residual, 1e-8);
  }
}

TEST(Solve, EqualityConstrainedMatchesSubspaceSolve) {
  Rng rng = make_stream(8, 8);
  const Index D = 20;
  const Matrix z = random_matrix(50, D, rng).cwiseAbs();
  const Vector y = random_matrix(50, 1, rng).cwiseAbs();
  // Constraints annihilated by a positive vector keep the problem feasible.
  Matrix eq = random_matrix(6, D, rng);
  const Vector ones = Vector::Ones(D);
  for (Index c = 0; c < eq.rows(); ++c) eq.row(c) -= (eq.row(c).dot(ones) / D) * ones.transpose();
  const auto direct = solve(SimplexLsProblem{z, y, eq});
  EXPECT_LE((eq * direct.weights.values()).cwiseAbs().maxCoeff(), 1e-8);
  const auto model = QuadraticModel::from_least_squares(z, y);
  const auto sub = solve_on_subspace(model, nullspace_basis(eq));
  EXPECT_LE((direct.weights.values() - sub.weights.values()).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_LE(sub.certificate.kkt_residual, 1e-8);
}

TEST(Solve, ScalingRowsLeavesArgminUnchanged) {
  Rng rng = make_stream(12, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix z = random_matrix(12, 5, rng);
    const Vector y = random_matrix(12, 1, rng);
    const auto a = solve(SimplexLsProblem{z, y, std::nullopt});
    const auto b = solve(SimplexLsProblem{7.5 * z, 7.5 * y, std::nullopt});
    EXPECT_LE((a.weights.values() - b.weights.values()).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR(b.certificate.objective, 56.25 * a.certificate.objective, 1e-9 * (1 + b.certificate.objective));
  }
}

TEST(Solve, Deterministic) {
  Rng rng = make_stream(4, 0);
  const Matrix z = random_matrix(40, 25, rng);
  const Vector y = random_matrix(40, 1, rng);
  const auto a = solve(SimplexLsProblem{z, y, std::nullopt});
  const auto b = solve(SimplexLsProblem{z, y, std::nullopt});
  EXPECT_TRUE(a.weights.values() == b.weights.values());
  EXPECT_EQ(a.certificate.objective, b.certificate.objective);
  EXPECT_EQ(a.certificate.iterations, b.certificate.iterations);
}

TEST(Solve, InfeasibleConstraintsReportGap) {
  Matrix eq(1, 2);
  eq << 1, 1;
  try {
    solve(SimplexLsProblem{Matrix::Identity(2, 2), Eigen::Vector2d(0.5, 0.5), eq});
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_NEAR(e.gap(), 1.0, 1e-10);
  }
  Matrix eq3(2, 3);
  eq3 << 1, 0, 0, 0, 1, -2;
  EXPECT_NO_THROW(solve(SimplexLsProblem{Matrix::Identity(3, 3), Eigen::Vector3d(0.2, 0.3, 0.5), eq3}));
  Matrix positive(1, 3);
  positive << 1, 2, 3;
  EXPECT_THROW(solve(SimplexLsProblem{Matrix::Identity(3, 3), Eigen::Vector3d(0.2, 0.3, 0.5), positive}),
               InfeasibleError);
}

TEST(Solve, RejectsMalformedProblems) {
  EXPECT_THROW(solve(SimplexLsProblem{Matrix::Identity(2, 2), Vector::Zero(3), std::nullopt}), DimensionError);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(solve(SimplexLsProblem{bad, Vector::Zero(2), std::nullopt}), InvalidArgument);
  EXPECT_THROW(solve(SimplexLsProblem{Matrix::Identity(2, 2), Vector::Zero(2), Matrix::Ones(1, 3)}), DimensionError);
  SolveOptions opt;
  opt.tol = 0.0;
  EXPECT_THROW(solve(SimplexLsProblem{Matrix::Identity(2, 2), Vector::Zero(2), std::nullopt}, opt), InvalidArgument);
}

TEST(Solve, ImpossibleToleranceIsNonConvergence) {
  Rng rng = make_stream(9, 0);
  const Matrix z = random_matrix(20, 8, rng);
  const Vector y = random_matrix(20, 1, rng);
  SolveOptions opt;
  opt.tol = 1e-300;
  EXPECT_THROW(solve(SimplexLsProblem{z, y, std::nullopt}, opt), NonConvergenceError);
}

TEST(FeasibilityGap, BasicCases) {
  EXPECT_NEAR(feasibility_gap(Matrix::Zero(2, 3), 3), 0.0, 1e-15);
  Matrix sum(1, 2);
  sum << 1, 1;
  EXPECT_NEAR(feasibility_gap(sum, 2), 1.0, 1e-12);
  Matrix diff(1, 2);
  diff << 1, -1;
  EXPECT_NEAR(feasibility_gap(diff, 2), 0.0, 1e-10);
  EXPECT_THROW(feasibility_gap(diff, 3), DimensionError);
}

TEST(NullspaceBasis, OrthonormalAndAnnihilated) {
  Rng rng = make_stream(1, 2);
  Matrix eq = random_matrix(3, 7, rng);
  eq.row(2) = eq.row(0) + 2 * eq.row(1);  // rank 2
  const Matrix n = nullspace_basis(eq);
  EXPECT_EQ(n.cols(), 5);
  EXPECT_LE((n.transpose() * n - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((eq * n).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WeightVector, ClampsTinyNegativesAndRejectsLargeOnes) {
  const WeightVector w(Eigen::Vector3d(0.5, 0.5 + 5e-11, -5e-11));
  EXPECT_EQ(w[2], 0.0);
  EXPECT_NEAR(w.values().sum(), 1.0, 1e-15);
  EXPECT_THROW(WeightVector(Eigen::Vector2d(1.1, -0.1)), InvalidArgument);
  EXPECT_THROW(WeightVector(Eigen::Vector2d(0.5, 0.4)), InvalidArgument);
}

TEST(KktResidual, DetectsSuboptimalPoints) {
  SimplexLsProblem p{Matrix::Identity(2, 2), Eigen::Vector2d(0.8, 0.1), std::nullopt};
  const auto model = QuadraticModel::from_least_squares(p.design, p.target);
  EXPECT_LE(kkt_residual(model, nullptr, Eigen::Vector2d(0.85, 0.15)), 1e-15);
  EXPECT_GT(kkt_residual(model, nullptr, Eigen::Vector2d(0.5, 0.5)), 0.1);
  EXPECT_GT(kkt_residual(model, nullptr, Eigen::Vector2d(0.0, 1.0)), 0.1);
}
