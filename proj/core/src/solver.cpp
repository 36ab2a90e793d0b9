#include "rcgrid/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rcgrid/errors.hpp"

namespace rcgrid {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kInf = std::numeric_limits<double>::infinity();
// Entries at or below this are treated as sitting on their bound.
constexpr double kZeroWeight = 1e-12;
// Phase-one margin below which the constraint set is declared empty.
constexpr double kFeasibilityTol = 1e-12;

struct EngineResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
};

// Direction for min_z  gr'z + z'Hr z  (the objective restricted to an affine
// subspace, Hessian 2*Hr). Curvature below the rounding floor of Hr counts as
// zero; if the gradient has weight there, return the steepest-descent ray in
// that flat subspace instead of a Newton step.
struct ReducedStep {
  Vector z;
  bool newton = true;
};

ReducedStep reduced_step(const Matrix& hr, const Vector& gr, double grad_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hr);
  const Vector& lambda = es.eigenvalues();
  const Matrix& v = es.eigenvectors();
  const double lam_max = std::max(lambda.maxCoeff(), 0.0);
  const double floor = 100.0 * kEps * std::max(1.0, std::sqrt(static_cast<double>(hr.rows()))) * lam_max;
  const Vector gamma = v.transpose() * gr;

  ReducedStep step;
  step.z = Vector::Zero(hr.rows());
  double flat_grad = 0.0;
  for (Index k = 0; k < lambda.size(); ++k) {
    if (lambda[k] <= floor) flat_grad = std::max(flat_grad, std::abs(gamma[k]));
  }
  if (flat_grad > grad_tol) {
    step.newton = false;
    for (Index k = 0; k < lambda.size(); ++k) {
      if (lambda[k] <= floor) step.z -= gamma[k] * v.col(k);
    }
    return step;
  }
  for (Index k = 0; k < lambda.size(); ++k) {
    if (lambda[k] > floor) step.z -= (gamma[k] / (2.0 * lambda[k])) * v.col(k);
  }
  return step;
}

// Step length along a ray: exact line minimizer when there is curvature.
double ray_length(double slope, double curvature) {
  if (curvature <= 0.0) return kInf;
  return -slope / (2.0 * curvature);
}

// Orthonormal basis (m x m-1) of {v in R^m : sum(v) = 0}, from the Householder
// reflection that swaps e_1 and 1/sqrt(m).
Matrix sum_zero_basis(Index m) {
  Vector w = Vector::Constant(m, 1.0 / std::sqrt(static_cast<double>(m)));
  w[0] -= 1.0;
  const double ww = w.squaredNorm();
  Matrix q(m, m - 1);
  for (Index k = 1; k < m; ++k) {
    q.col(k - 1) = -(2.0 * w[k] / ww) * w;
    q(k, k - 1) += 1.0;
  }
  return q;
}

// Primal active-set method for  min theta'H theta - 2c'theta  over the simplex.
// `free_set` lists the coordinates allowed to move; the others are held at 0.
EngineResult run_simplex_engine(const QuadraticModel& model, Vector theta, std::vector<Index> free_set, int budget,
                                double dual_tol, double grad_tol) {
  const Matrix& h = model.hessian;
  const Vector& c = model.linear;
  const Index D = model.dim();

  std::vector<char> is_free(static_cast<std::size_t>(D), 0);
  for (Index f : free_set) is_free[static_cast<std::size_t>(f)] = 1;
  std::vector<char> tabu(static_cast<std::size_t>(D), 0);
  Index just_entered = -1;
  bool at_min = free_set.size() <= 1;

  auto full_gradient = [&]() {
    Vector g = -2.0 * c;
    for (Index f : free_set) g.noalias() += (2.0 * theta[f]) * h.col(f);
    return g;
  };

  EngineResult out;
  while (out.iterations < budget) {
    ++out.iterations;
    const Index m = static_cast<Index>(free_set.size());
    if (!at_min) {
      Matrix h_ff(m, m);
      Vector g_f(m);
      for (Index a = 0; a < m; ++a) {
        const Index fa = free_set[static_cast<std::size_t>(a)];
        double s = -c[fa];
        for (Index b = 0; b < m; ++b) {
          const Index fb = free_set[static_cast<std::size_t>(b)];
          h_ff(a, b) = h(fa, fb);
          s += h(fa, fb) * theta[fb];
        }
        g_f[a] = 2.0 * s;
      }
      const Matrix q = sum_zero_basis(m);
      const Matrix hr = q.transpose() * h_ff * q;
      const ReducedStep step = reduced_step(hr, q.transpose() * g_f, grad_tol);
      const Vector delta = q * step.z;

      double alpha_max = kInf;
      Index blocking = -1;
      for (Index a = 0; a < m; ++a) {
        if (delta[a] < 0.0) {
          const Index fa = free_set[static_cast<std::size_t>(a)];
          const double ratio = std::max(theta[fa], 0.0) / -delta[a];
          if (ratio < alpha_max) {
            alpha_max = ratio;
            blocking = a;
          }
        }
      }
      double alpha = step.newton ? 1.0 : ray_length(g_f.dot(delta), delta.dot(h_ff * delta));
      bool blocked = false;
      if (alpha >= alpha_max) {
        alpha = alpha_max;
        blocked = true;
      }
      if (!std::isfinite(alpha)) break;  // flat unbounded ray: cannot happen on the simplex

      for (Index a = 0; a < m; ++a) theta[free_set[static_cast<std::size_t>(a)]] += alpha * delta[a];
      if (alpha > 0.0) std::fill(tabu.begin(), tabu.end(), 0);
      if (blocked) {
        const Index fb = free_set[static_cast<std::size_t>(blocking)];
        theta[fb] = 0.0;
        is_free[static_cast<std::size_t>(fb)] = 0;
        free_set.erase(free_set.begin() + blocking);
        if (alpha == 0.0 && fb == just_entered) tabu[static_cast<std::size_t>(fb)] = 1;
      }
      at_min = (step.newton && !blocked) || free_set.size() <= 1;
      continue;
    }

    const Vector g = full_gradient();
    double lambda = 0.0;
    for (Index f : free_set) lambda += g[f];
    lambda /= static_cast<double>(m);
    Index entering = -1;
    double most_negative = -dual_tol;
    for (Index j = 0; j < D; ++j) {
      if (is_free[static_cast<std::size_t>(j)] || tabu[static_cast<std::size_t>(j)]) continue;
      const double mu = g[j] - lambda;
      if (mu < most_negative) {
        most_negative = mu;
        entering = j;
      }
    }
    if (entering < 0) {
      out.converged = true;
      break;
    }
    free_set.push_back(entering);
    is_free[static_cast<std::size_t>(entering)] = 1;
    just_entered = entering;
    at_min = false;
  }
  out.x = std::move(theta);
  return out;
}

// Primal active-set method for  min x'G x - 2 b'x  s.t.  a'x = 1,  C x >= 0.
// `x` must be feasible (up to rounding); `working` indexes rows of C held active.
EngineResult run_polytope_engine(const Matrix& g_mat, const Vector& b, const Vector& a, const Matrix& cons, Vector x,
                                 std::vector<Index> working, int budget, double dual_tol, double grad_tol) {
  const Index q = x.size();
  const Index n_cons = cons.rows();
  std::vector<char> in_working(static_cast<std::size_t>(n_cons), 0);
  for (Index w : working) in_working[static_cast<std::size_t>(w)] = 1;
  const Vector row_norms = cons.rowwise().norm();
  bool at_min = false;

  EngineResult out;
  while (out.iterations < budget) {
    ++out.iterations;
    const Index k = 1 + static_cast<Index>(working.size());
    Matrix active_t(q, k);
    active_t.col(0) = a;
    for (Index i = 1; i < k; ++i) active_t.col(i) = cons.row(working[static_cast<std::size_t>(i - 1)]).transpose();
    Eigen::HouseholderQR<Matrix> qr(active_t);
    const Vector grad = 2.0 * (g_mat * x - b);

    if (!at_min && k < q) {
      const Matrix basis = qr.householderQ() * Matrix::Identity(q, q).rightCols(q - k);
      const Matrix hr = basis.transpose() * g_mat * basis;
      const ReducedStep step = reduced_step(hr, basis.transpose() * grad, grad_tol);
      const Vector delta = basis * step.z;
      const double delta_norm = delta.norm();

      double alpha_max = kInf;
      Index blocking = -1;
      if (delta_norm > 0.0) {
        for (Index i = 0; i < n_cons; ++i) {
          if (in_working[static_cast<std::size_t>(i)]) continue;
          const double slope = cons.row(i).dot(delta);
          if (slope < -1e-12 * row_norms[i] * delta_norm) {
            const double ratio = std::max(cons.row(i).dot(x), 0.0) / -slope;
            if (ratio < alpha_max) {
              alpha_max = ratio;
              blocking = i;
            }
          }
        }
      }
      double alpha = step.newton ? 1.0 : ray_length(grad.dot(delta), delta.dot(g_mat * delta));
      bool blocked = false;
      if (alpha >= alpha_max) {
        alpha = alpha_max;
        blocked = true;
      }
      if (!std::isfinite(alpha)) break;
      x += alpha * delta;
      if (blocked) {
        working.push_back(blocking);
        in_working[static_cast<std::size_t>(blocking)] = 1;
      }
      at_min = step.newton && !blocked;
      continue;
    }

    // Multipliers: grad = lambda_0 a + sum_{w} lambda_w c_w, need lambda_w >= 0.
    const Vector lambda = qr.solve(grad);
    Index leaving = -1;
    double most_negative = -dual_tol;
    for (Index i = 1; i < k; ++i) {
      if (lambda[i] < most_negative) {
        most_negative = lambda[i];
        leaving = i - 1;
      }
    }
    if (leaving < 0) {
      out.converged = true;
      break;
    }
    in_working[static_cast<std::size_t>(working[static_cast<std::size_t>(leaving)])] = 0;
    working.erase(working.begin() + leaving);
    at_min = false;
  }
  out.x = std::move(x);
  return out;
}

int default_budget(const SolveOptions& options, Index D) {
  return options.max_iterations > 0 ? options.max_iterations : static_cast<int>(100 * std::max<Index>(D, 1));
}

void check_options(const SolveOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("solve: tol must be positive");
}

SolveResult certify(const QuadraticModel& model, const Matrix* basis, Vector theta, int iterations, int restarts,
                    double tol) {
  SolveResult result;
  result.weights = WeightVector(std::move(theta));
  auto& cert = result.certificate;
  cert.iterations = iterations;
  cert.restarts = restarts;
  cert.objective = std::max(0.0, model.objective(result.weights.values()));
  cert.kkt_residual = kkt_residual(model, basis, result.weights.values());
  cert.feasible = true;
  if (cert.kkt_residual > tol) {
    throw NonConvergenceError("solver stopped with KKT residual " + std::to_string(cert.kkt_residual) +
                                  " above tolerance",
                              cert.kkt_residual, iterations);
  }
  return result;
}

SolveResult solve_simplex(const QuadraticModel& model, const SolveOptions& options) {
  const Index D = model.dim();
  const double dual_tol = 1e-3 * options.tol;
  const double grad_tol = 1e-3 * options.tol;
  const int budget = default_budget(options, D);

  // Start from the best vertex.
  Index start = 0;
  double best = kInf;
  for (Index d = 0; d < D; ++d) {
    const double f = model.hessian(d, d) - 2.0 * model.linear[d];
    if (f < best) {
      best = f;
      start = d;
    }
  }
  Vector theta = Vector::Zero(D);
  theta[start] = 1.0;
  EngineResult run = run_simplex_engine(model, std::move(theta), {start}, budget, dual_tol, grad_tol);
  int iterations = run.iterations;
  int restarts = 0;
  if (!run.converged) {
    restarts = 1;
    std::vector<Index> support;
    for (Index d = 0; d < D; ++d) {
      if (run.x[d] > 0.0) support.push_back(d);
    }
    run = run_simplex_engine(model, std::move(run.x), std::move(support), budget, dual_tol, grad_tol);
    iterations += run.iterations;
  }
  if (!run.converged) {
    const double kkt = kkt_residual(model, nullptr, run.x);
    if (kkt > options.tol) {
      throw NonConvergenceError("iteration budget exhausted", kkt, iterations);
    }
  }
  return certify(model, nullptr, std::move(run.x), iterations, restarts, options.tol);
}

}  // namespace

void SimplexLsProblem::validate() const {
  if (design.rows() < 1 || design.cols() < 1) throw DimensionError("SimplexLsProblem: empty design");
  if (target.size() != design.rows()) throw DimensionError("SimplexLsProblem: target length differs from design rows");
  if (!design.allFinite() || !target.allFinite()) throw InvalidArgument("SimplexLsProblem: non-finite entries");
  if (eq) {
    if (eq->rows() > 0 && eq->cols() != design.cols()) {
      throw DimensionError("SimplexLsProblem: eq must have one column per design column");
    }
    if (!eq->allFinite()) throw InvalidArgument("SimplexLsProblem: non-finite constraint entries");
  }
}

WeightVector::WeightVector(Vector theta) : theta_(std::move(theta)) {
  if (theta_.size() < 1) throw InvalidArgument("WeightVector: empty");
  if (!theta_.allFinite()) throw InvalidArgument("WeightVector: non-finite weight");
  if (theta_.minCoeff() < -1e-10) {
    throw InvalidArgument("WeightVector: weight " + std::to_string(theta_.minCoeff()) + " below the simplex");
  }
  theta_ = theta_.cwiseMax(0.0);
  const double total = theta_.sum();
  if (std::abs(total - 1.0) > 1e-8) {
    throw InvalidArgument("WeightVector: weights sum to " + std::to_string(total));
  }
  theta_ /= total;
}

QuadraticModel QuadraticModel::from_least_squares(const Eigen::Ref<const Matrix>& design,
                                                  const Eigen::Ref<const Vector>& target) {
  if (target.size() != design.rows()) throw DimensionError("QuadraticModel: target length differs from design rows");
  const double inv_r = 1.0 / static_cast<double>(design.rows());
  QuadraticModel m;
  const Index D = design.cols();
  m.hessian = Matrix::Zero(D, D);
  m.hessian.selfadjointView<Eigen::Lower>().rankUpdate(design.transpose(), inv_r);
  m.hessian.triangularView<Eigen::StrictlyUpper>() = m.hessian.transpose();
  m.linear = inv_r * (design.transpose() * target);
  m.constant = inv_r * target.squaredNorm();
  return m;
}

double QuadraticModel::objective(const Eigen::Ref<const Vector>& theta) const {
  return theta.dot(hessian * theta) - 2.0 * linear.dot(theta) + constant;
}

Vector QuadraticModel::gradient(const Eigen::Ref<const Vector>& theta) const {
  return 2.0 * (hessian * theta - linear);
}

Matrix nullspace_basis(const Matrix& eq) {
  const Index D = eq.cols();
  if (eq.rows() == 0) return Matrix::Identity(D, D);
  Eigen::ColPivHouseholderQR<Matrix> qr(eq.transpose());
  qr.setThreshold(1e-12);
  const Index rank = qr.rank();
  if (rank == D) return Matrix(D, 0);
  Matrix basis = Matrix::Identity(D, D).rightCols(D - rank);
  basis.applyOnTheLeft(qr.householderQ());
  return basis;
}

double kkt_residual(const QuadraticModel& model, const Matrix* basis, const Eigen::Ref<const Vector>& theta) {
  const Index D = model.dim();
  if (theta.size() != D) throw DimensionError("kkt_residual: weight vector has wrong length");
  const Vector g = model.gradient(theta);
  std::vector<Index> zero_set;
  std::vector<Index> support;
  for (Index i = 0; i < D; ++i) (theta[i] <= kZeroWeight ? zero_set : support).push_back(i);

  double primal = std::max(std::abs(theta.sum() - 1.0), std::max(0.0, -theta.minCoeff()));
  double stationarity = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;

  if (basis == nullptr) {
    if (support.empty()) return kInf;
    double lambda = 0.0;
    for (Index i : support) lambda += g[i];
    lambda /= static_cast<double>(support.size());
    for (Index i : support) stationarity = std::max(stationarity, std::abs(g[i] - lambda));
    for (Index i : zero_set) {
      const double mu = g[i] - lambda;
      dual = std::max(dual, -mu);
      complementarity = std::max(complementarity, std::abs(mu * theta[i]));
    }
  } else {
    // Stationarity modulo the constraint rows: N'(g - lambda 1 - mu) = 0.
    const Matrix& n = *basis;
    if (n.rows() != D) throw DimensionError("kkt_residual: basis has wrong row count");
    const Index nz = static_cast<Index>(zero_set.size());
    Matrix lhs(n.cols(), 1 + nz);
    lhs.col(0) = n.transpose() * Vector::Ones(D);
    for (Index j = 0; j < nz; ++j) lhs.col(1 + j) = n.row(zero_set[static_cast<std::size_t>(j)]).transpose();
    const Vector rhs = n.transpose() * g;
    const Vector mult = lhs.completeOrthogonalDecomposition().solve(rhs);
    const Vector r = n * (rhs - lhs * mult);
    stationarity = r.cwiseAbs().maxCoeff();
    for (Index j = 0; j < nz; ++j) {
      const double mu = mult[1 + j];
      dual = std::max(dual, -mu);
      complementarity = std::max(complementarity, std::abs(mu * theta[zero_set[static_cast<std::size_t>(j)]]));
    }
    primal = std::max(primal, (theta - n * (n.transpose() * theta)).cwiseAbs().maxCoeff());
  }
  return std::max({stationarity, dual, complementarity, primal});
}

SolveResult solve_on_subspace(const QuadraticModel& model, const Matrix& basis, const SolveOptions& options) {
  check_options(options);
  const Index D = model.dim();
  if (basis.rows() != D) throw DimensionError("solve_on_subspace: basis has wrong row count");
  const Index q = basis.cols();
  if (q == 0) throw InfeasibleError("constraints admit only theta = 0", 1.0 / std::sqrt(static_cast<double>(D)));
  const int budget = default_budget(options, D);
  const double dual_tol = 1e-3 * options.tol;
  const double grad_tol = 1e-3 * options.tol;

  const Vector s = basis.transpose() * Vector::Ones(D);
  if (s.norm() <= 1e-14) {
    throw InfeasibleError("subspace is orthogonal to the all-ones vector", 1.0);
  }

  // Phase one: maximize t subject to basis*beta >= t, sum(basis*beta) = 1,
  // as the least-squares problem min (t - 1)^2 over the same polytope.
  Matrix cons1(D, q + 1);
  cons1.leftCols(q) = basis;
  cons1.col(q).setConstant(-1.0);
  Vector a1 = Vector::Zero(q + 1);
  a1.head(q) = s;
  Matrix g1 = Matrix::Zero(q + 1, q + 1);
  g1(q, q) = 1.0;
  Vector b1 = Vector::Zero(q + 1);
  b1[q] = 1.0;
  Vector x1(q + 1);
  x1.head(q) = s / s.squaredNorm();
  Index argmin = 0;
  x1[q] = (basis * x1.head(q)).minCoeff(&argmin);
  EngineResult phase1 = run_polytope_engine(g1, b1, a1, cons1, x1, {argmin}, budget, 1e-14, 1e-14);
  int iterations = phase1.iterations;
  const double margin = phase1.x[q];
  if (margin < -kFeasibilityTol) {
    if (!phase1.converged) {
      throw NonConvergenceError("feasibility phase did not converge", kInf, iterations);
    }
    const Matrix p_perp = Matrix::Identity(D, D) - basis * basis.transpose();
    throw InfeasibleError("equality constraints do not intersect the simplex", feasibility_gap(p_perp, D));
  }

  const Matrix g2 = basis.transpose() * model.hessian * basis;
  const Vector b2 = basis.transpose() * model.linear;
  EngineResult run = run_polytope_engine(g2, b2, s, basis, phase1.x.head(q), {}, budget, dual_tol, grad_tol);
  iterations += run.iterations;
  int restarts = 0;
  if (!run.converged) {
    restarts = 1;
    run = run_polytope_engine(g2, b2, s, basis, run.x, {}, budget, dual_tol, grad_tol);
    iterations += run.iterations;
  }
  Vector theta = basis * run.x;
  if (!run.converged) {
    const double kkt = kkt_residual(model, &basis, theta);
    if (kkt > options.tol) throw NonConvergenceError("iteration budget exhausted", kkt, iterations);
  }
  return certify(model, &basis, std::move(theta), iterations, restarts, options.tol);
}

SolveResult solve(const QuadraticModel& model, const Matrix* eq, const SolveOptions& options) {
  check_options(options);
  const Index D = model.dim();
  if (D < 1) throw DimensionError("solve: empty problem");
  if (eq == nullptr || eq->rows() == 0) return solve_simplex(model, options);
  if (eq->cols() != D) throw DimensionError("solve: eq must have one column per weight");
  const Matrix basis = nullspace_basis(*eq);
  if (basis.cols() == 0) throw InfeasibleError("equality constraints force theta = 0", feasibility_gap(*eq, D));
  try {
    return solve_on_subspace(model, basis, options);
  } catch (const InfeasibleError&) {
    throw InfeasibleError("equality constraints do not intersect the simplex", feasibility_gap(*eq, D));
  }
}

SolveResult solve(const SimplexLsProblem& problem, const SolveOptions& options) {
  problem.validate();
  const QuadraticModel model = QuadraticModel::from_least_squares(problem.design, problem.target);
  const Matrix* eq = problem.eq ? &*problem.eq : nullptr;
  SolveResult result = solve(model, eq, options);
  const double r = static_cast<double>(problem.design.rows());
  result.certificate.objective = (problem.target - problem.design * result.weights.values()).squaredNorm() / r;
  return result;
}

double feasibility_gap(const Matrix& eq, Index D) {
  if (eq.rows() > 0 && eq.cols() != D) throw DimensionError("feasibility_gap: eq must have D columns");
  if (D < 1) throw InvalidArgument("feasibility_gap: D must be >= 1");
  if (eq.rows() == 0) return 0.0;
  QuadraticModel model;
  model.hessian = eq.transpose() * eq;
  model.linear = Vector::Zero(D);
  model.constant = 0.0;
  SolveOptions options;
  options.tol = 1e-12;
  const SolveResult r = solve_simplex(model, options);
  return std::sqrt(std::max(0.0, model.objective(r.weights.values())));
}

}  // namespace rcgrid
