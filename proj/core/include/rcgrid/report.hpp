#pragma once

#include <iosfwd>
#include <string>

#include "rcgrid/diagnostics.hpp"
#include "rcgrid/estimator.hpp"

namespace rcgrid {

/// JSON object with grid, weights, objective, kkt_residual, iterations and
/// effective_p (null for plain fits).
std::string fit_to_json(const FitResult& fit);

/// JSON object with kernel, mc_draws, xi_min, tau_D (null when infinite),
/// log_spectrum_slope, spectrum and, optionally, the Gram matrix.
std::string diagnostics_to_json(const DiagnosticsReport& report, bool include_psi = true);

/// Two columns: k (1-based), sigma_k.
void write_spectrum_csv(std::ostream& out, const Vector& spectrum);

}  // namespace rcgrid
