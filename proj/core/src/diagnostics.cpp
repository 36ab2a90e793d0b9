#include "rcgrid/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "rcgrid/errors.hpp"
#include "rcgrid/kernels.hpp"

namespace rcgrid {

namespace {

constexpr double kTimeLo = 1e-3;
constexpr double kTimeHi = 1e3;

double fixed_order_dot(const double* a, const double* b, Index n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  Index i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace

std::string to_string(KernelTag tag) { return tag == KernelTag::logit ? "logit" : "duration"; }

KernelTag parse_kernel_tag(const std::string& name) {
  if (name == "logit") return KernelTag::logit;
  if (name == "duration") return KernelTag::duration;
  throw InvalidArgument("unknown kernel '" + name + "' (expected logit or duration)");
}

Matrix sample_design(const Grid& grid, KernelTag kernel, Index draws, Rng& rng, Index J) {
  if (draws < 1) throw InvalidArgument("sample_design: draws must be >= 1");
  const Index D = grid.size();
  const Index K = grid.dim();
  const RowMatrix alphas = grid.points();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(draws));

  if (kernel == KernelTag::logit) {
    if (J < 1) throw InvalidArgument("sample_design: J must be >= 1");
    RowMatrix x(draws, J * K);
    for (Index r = 0; r < draws; ++r) {
      for (Index c = 0; c < J * K; ++c) x(r, c) = unif(rng);
    }
    Matrix s(draws * (J + 1), D);
    Vector prob(J + 1);
    for (Index r = 0; r < draws; ++r) {
      const Eigen::Map<const RowMatrix> xr(x.row(r).data(), J, K);
      for (Index d = 0; d < D; ++d) {
        logit_choice_prob_into(xr, alphas.row(d).data(), prob);
        s.col(d).segment(r * (J + 1), J + 1) = scale * prob;
      }
    }
    return s;
  }

  if (K != 2) throw DimensionError("sample_design: duration grid points are (alpha1, alpha2)");
  for (Index d = 0; d < D; ++d) {
    if (!(alphas(d, 1) > 0.0)) throw InvalidArgument("sample_design: duration barrier alpha2 must be positive");
  }
  // t = lo * (hi/lo)^u has density 1 / (t log(hi/lo)).
  const double log_range = std::log(kTimeHi / kTimeLo);
  Matrix t(draws, 2);
  for (Index r = 0; r < draws; ++r) {
    for (Index c = 0; c < 2; ++c) t(r, c) = kTimeLo * std::exp(log_range * unif(rng));
  }
  Matrix s(draws, D);
  for (Index r = 0; r < draws; ++r) {
    const double q = 1.0 / (t(r, 0) * log_range) / (t(r, 1) * log_range);
    const double w = scale / std::sqrt(q);
    for (Index d = 0; d < D; ++d) {
      s(r, d) = w * duration_kernel(t(r, 0), t(r, 1), DurationPoint{alphas(d, 0), alphas(d, 1)});
    }
  }
  return s;
}

Matrix gram_from_design(const Matrix& design) {
  const Index D = design.cols();
  const Index rows = design.rows();
  Matrix psi(D, D);
  for (Index a = 0; a < D; ++a) {
    for (Index b = 0; b <= a; ++b) {
      psi(a, b) = fixed_order_dot(design.col(a).data(), design.col(b).data(), rows);
      psi(b, a) = psi(a, b);
    }
  }
  return psi;
}

Matrix gram_matrix(const Grid& grid, KernelTag kernel, Index draws, Rng& rng, Index J) {
  return gram_from_design(sample_design(grid, kernel, draws, rng, J));
}

double min_eigenvalue(const Matrix& psi) {
  if (psi.rows() != psi.cols() || psi.rows() == 0) throw DimensionError("min_eigenvalue: matrix must be square");
  if ((psi - psi.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidArgument("min_eigenvalue: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(psi, Eigen::EigenvaluesOnly);
  const double xi = es.eigenvalues().minCoeff();
  return (xi < 0.0 && xi >= -1e-12) ? 0.0 : xi;
}

double ill_posedness(const Matrix& psi) {
  const double xi = min_eigenvalue(psi);
  if (xi <= 1e-300) return std::numeric_limits<double>::infinity();
  return 1.0 / std::sqrt(xi);
}

Vector singular_spectrum(const Matrix& design) {
  if (design.size() == 0) return Vector();
  // Tall designs are reduced to their D x D triangular factor first.
  if (design.rows() > design.cols()) {
    Eigen::HouseholderQR<Matrix> qr(design);
    const Matrix r = qr.matrixQR().topRows(design.cols()).triangularView<Eigen::Upper>();
    return Eigen::BDCSVD<Matrix>(r).singularValues();
  }
  return Eigen::BDCSVD<Matrix>(design).singularValues();
}

double log_spectrum_slope(const Vector& spectrum) {
  if (spectrum.size() == 0 || !(spectrum[0] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double floor = 1e-13 * spectrum[0];
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  Index count = 0;
  for (Index k = 0; k < spectrum.size(); ++k) {
    if (!(spectrum[k] > floor)) continue;
    const double x = static_cast<double>(k + 1);
    const double y = std::log(spectrum[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) return std::numeric_limits<double>::quiet_NaN();
  const double c = static_cast<double>(count);
  return (c * sxy - sx * sy) / (c * sxx - sx * sx);
}

bool DiagnosticsReport::tau_infinite() const noexcept { return std::isinf(tau_D); }

DiagnosticsReport diagnose(const Grid& grid, KernelTag kernel, Index draws, Rng& rng, Index J) {
  return diagnose_design(sample_design(grid, kernel, draws, rng, J), kernel, draws);
}

DiagnosticsReport diagnose_design(const Matrix& s, KernelTag kernel, Index draws) {
  DiagnosticsReport report;
  report.psi = gram_from_design(s);
  report.xi_min = std::max(0.0, min_eigenvalue(report.psi));
  report.tau_D = report.xi_min <= 1e-300 ? std::numeric_limits<double>::infinity() : 1.0 / std::sqrt(report.xi_min);
  report.spectrum = singular_spectrum(s);
  report.kernel = kernel;
  report.mc_draws = draws;
  report.log_slope = log_spectrum_slope(report.spectrum);
  return report;
}

}  // namespace rcgrid
