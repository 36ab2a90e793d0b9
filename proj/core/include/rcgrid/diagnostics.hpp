#pragma once

// Conditioning of the fixed-grid design: the Gram matrix of kernel columns,
// its smallest eigenvalue, and singular-value spectra.

#include <string>

#include "rcgrid/grid.hpp"
#include "rcgrid/rng.hpp"
#include "rcgrid/types.hpp"

namespace rcgrid {

enum class KernelTag { logit, duration };

std::string to_string(KernelTag tag);

/// Throws InvalidArgument for anything other than "logit" or "duration".
KernelTag parse_kernel_tag(const std::string& name);

/// Monte Carlo design S whose Gram matrix S'S estimates Psi.
///
/// logit: x ~ Uniform[0,1]^{J x K}; one row per (draw, outcome j = 0..J)
/// holding P(j | x, alpha_d) / sqrt(draws).
/// duration: (t1, t2) log-uniform on [1e-3, 1e3]^2; one row per draw holding
/// the two-spell density importance-weighted against Lebesgue measure. Grid
/// points are (alpha1, alpha2) with alpha2 > 0.
///
/// All covariate draws are taken before any kernel evaluation, so grids that
/// share a prefix get identical leading columns from the same stream state.
Matrix sample_design(const Grid& grid, KernelTag kernel, Index draws, Rng& rng, Index J = 3);

/// Psi(a, b) = <S_a, S_b> with a fixed summation order: a principal
/// submatrix of the result is bit-identical to the result for the leading
/// columns alone.
Matrix gram_from_design(const Matrix& design);

Matrix gram_matrix(const Grid& grid, KernelTag kernel, Index draws, Rng& rng, Index J = 3);

/// Smallest eigenvalue of a symmetric matrix; values in [-1e-12, 0) read as 0.
double min_eigenvalue(const Matrix& psi);

/// xi_min^{-1/2}; +infinity when xi_min <= 1e-300.
double ill_posedness(const Matrix& psi);

/// Singular values, nonincreasing.
Vector singular_spectrum(const Matrix& design);

/// Least-squares slope of log(sigma_k) against k = 1, 2, ..., over values
/// above 1e-13 * sigma_1. NaN with fewer than two such values.
double log_spectrum_slope(const Vector& spectrum);

struct DiagnosticsReport {
  Matrix psi;
  double xi_min = 0.0;
  double tau_D = 0.0;  // may be +infinity
  Vector spectrum;     // singular values of the sample design
  KernelTag kernel = KernelTag::logit;
  Index mc_draws = 0;
  double log_slope = 0.0;

  bool tau_infinite() const noexcept;
};

/// Report for a sample design produced by sample_design (or its leading
/// columns, for a nested sub-grid).
DiagnosticsReport diagnose_design(const Matrix& design, KernelTag kernel, Index draws);

DiagnosticsReport diagnose(const Grid& grid, KernelTag kernel, Index draws, Rng& rng, Index J = 3);

}  // namespace rcgrid
