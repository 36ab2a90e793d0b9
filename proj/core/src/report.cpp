#include "rcgrid/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <vector>

#include "json.hpp"

namespace rcgrid {

namespace {

using nlohmann::json;

json to_json_array(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string fit_to_json(const FitResult& fit) {
  json grid = json::array();
  const Matrix& pts = fit.grid.points();
  for (Index d = 0; d < pts.rows(); ++d) grid.push_back(to_json_array(pts.row(d).transpose()));
  json j;
  j["D"] = fit.grid.size();
  j["grid"] = std::move(grid);
  j["weights"] = to_json_array(fit.weights.values());
  j["objective"] = fit.certificate.objective;
  j["kkt_residual"] = fit.certificate.kkt_residual;
  j["iterations"] = fit.certificate.iterations;
  j["restarts"] = fit.certificate.restarts;
  j["effective_p"] = fit.effective_p ? json(*fit.effective_p) : json(nullptr);
  return j.dump(2);
}

std::string diagnostics_to_json(const DiagnosticsReport& report, bool include_psi) {
  json j;
  j["kernel"] = to_string(report.kernel);
  j["D"] = report.psi.rows();
  j["mc_draws"] = report.mc_draws;
  j["xi_min"] = report.xi_min;
  j["tau_D"] = finite_or_null(report.tau_D);
  j["tau_D_infinite"] = report.tau_infinite();
  j["log_spectrum_slope"] = finite_or_null(report.log_slope);
  j["spectrum"] = to_json_array(report.spectrum);
  if (include_psi) {
    json psi = json::array();
    for (Index r = 0; r < report.psi.rows(); ++r) psi.push_back(to_json_array(report.psi.row(r).transpose()));
    j["psi"] = std::move(psi);
  }
  return j.dump(2);
}

void write_spectrum_csv(std::ostream& out, const Vector& spectrum) {
  out << "k,sigma_k\n";
  char buf[32];
  for (Index k = 0; k < spectrum.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", spectrum[k]);
    out << (k + 1) << ',' << buf << '\n';
  }
}

}  // namespace rcgrid
