#include "rcgrid/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "rcgrid/errors.hpp"

namespace rcgrid {

namespace {

void softmax_with_outside(const double* utilities, Index J, double* out) {
  double shift = 0.0;  // outside good utility
  for (Index j = 0; j < J; ++j) shift = std::max(shift, utilities[j]);
  double denom = std::exp(-shift);
  out[0] = denom;
  for (Index j = 0; j < J; ++j) {
    out[j + 1] = std::exp(utilities[j] - shift);
    denom += out[j + 1];
  }
  for (Index j = 0; j <= J; ++j) out[j] /= denom;
}

}  // namespace

Vector logit_choice_prob(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& alpha,
                         const Eigen::Ref<const Vector>& intercepts) {
  const Index J = x.rows();
  if (J < 1 || x.cols() < 1) throw DimensionError("logit_choice_prob: covariate block must be J x K with J, K >= 1");
  if (alpha.size() != x.cols()) {
    throw DimensionError("logit_choice_prob: alpha has " + std::to_string(alpha.size()) +
                         " entries, covariates have K = " + std::to_string(x.cols()));
  }
  if (intercepts.size() != 0 && intercepts.size() != J) {
    throw DimensionError("logit_choice_prob: intercept vector must have J entries");
  }
  Vector u = x * alpha;
  if (intercepts.size() != 0) u += intercepts;
  Vector out(J + 1);
  softmax_with_outside(u.data(), J, out.data());
  return out;
}

void logit_choice_prob_into(const Eigen::Ref<const RowMatrix>& x, const double* alpha, Eigen::Ref<Vector> out) {
  const Index J = x.rows();
  const Index K = x.cols();
  // J is small (a handful of products); a stack buffer avoids allocation.
  constexpr Index kStack = 64;
  double stack_u[kStack] = {};
  std::vector<double> heap_u;
  double* u = stack_u;
  if (J > kStack) {
    heap_u.resize(static_cast<std::size_t>(J));
    u = heap_u.data();
  }
  for (Index j = 0; j < J; ++j) {
    double s = 0.0;
    for (Index k = 0; k < K; ++k) s += x(j, k) * alpha[k];
    u[j] = s;
  }
  softmax_with_outside(u, J, out.data());
}

double std_normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double bvn_cdf(double h, double k, double rho) {
  if (!(std::abs(rho) < 1.0)) throw InvalidArgument("bvn_cdf: correlation must satisfy |rho| < 1");
  if (std::isnan(h) || std::isnan(k)) throw InvalidArgument("bvn_cdf: NaN limit");
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (h == -inf || k == -inf) return 0.0;
  if (h == inf) return std_normal_cdf(k);
  if (k == inf) return std_normal_cdf(h);

  const double base = std_normal_cdf(h) * std_normal_cdf(k);
  if (rho == 0.0) return base;

  // d/dr Phi2(h,k;r) is the bivariate density; substituting r = sin(phi)
  // removes the 1/sqrt(1-r^2) factor and leaves a smooth integrand.
  const double hh_kk = h * h + k * k;
  const double hk = h * k;
  auto integrand = [hh_kk, hk](double phi) {
    const double s = std::sin(phi);
    const double c2 = 1.0 - s * s;
    return std::exp(-(hh_kk - 2.0 * hk * s) / (2.0 * c2));
  };
  double err = 0.0;
  const double upper = std::asin(rho);
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, upper, 12, 1e-13, &err);
  const double p = base + integral / (2.0 * std::numbers::pi);
  return std::clamp(p, 0.0, 1.0);
}

GaussianMixtureDGP::GaussianMixtureDGP(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw InvalidArgument("GaussianMixtureDGP: no components");
  dim_ = components_.front().mean.size();
  if (dim_ < 1) throw InvalidArgument("GaussianMixtureDGP: empty mean vector");
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.mean.size() != dim_ || c.covariance.rows() != dim_ || c.covariance.cols() != dim_) {
      throw DimensionError("GaussianMixtureDGP: inconsistent component dimensions");
    }
    if (!(c.weight >= 0.0)) throw InvalidArgument("GaussianMixtureDGP: negative weight");
    if ((c.covariance - c.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw InvalidArgument("GaussianMixtureDGP: covariance not symmetric");
    }
    Eigen::LLT<Matrix> llt(c.covariance);
    if (llt.info() != Eigen::Success) {
      throw InvalidArgument("GaussianMixtureDGP: covariance not positive definite");
    }
    chol_.push_back(llt.matrixL());
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("GaussianMixtureDGP: weights must sum to 1");
}

GaussianMixtureDGP GaussianMixtureDGP::two_component_default() {
  Matrix sigma(2, 2);
  sigma << 0.8, 0.15, 0.15, 0.8;
  return GaussianMixtureDGP({
      {0.5, Vector::Constant(2, -2.2), sigma},
      {0.5, Vector::Constant(2, 1.3), sigma},
  });
}

Vector GaussianMixtureDGP::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double u = unif(rng);
  std::size_t c = 0;
  double cum = components_[0].weight;
  while (c + 1 < components_.size() && u >= cum) {
    ++c;
    cum += components_[c].weight;
  }
  Vector z(dim_);
  for (Index k = 0; k < dim_; ++k) z[k] = normal(rng);
  return components_[c].mean + chol_[c] * z;
}

double GaussianMixtureDGP::cdf(const Eigen::Ref<const Vector>& a) const {
  if (a.size() != dim_) throw DimensionError("GaussianMixtureDGP::cdf: point has wrong dimension");
  if (dim_ > 2) throw InvalidArgument("GaussianMixtureDGP::cdf: only K <= 2 is supported");
  double total = 0.0;
  for (const auto& c : components_) {
    if (dim_ == 1) {
      total += c.weight * std_normal_cdf((a[0] - c.mean[0]) / std::sqrt(c.covariance(0, 0)));
    } else {
      const double s1 = std::sqrt(c.covariance(0, 0));
      const double s2 = std::sqrt(c.covariance(1, 1));
      const double rho = c.covariance(0, 1) / (s1 * s2);
      total += c.weight * bvn_cdf((a[0] - c.mean[0]) / s1, (a[1] - c.mean[1]) / s2, rho);
    }
  }
  return std::clamp(total, 0.0, 1.0);
}

double GaussianMixtureDGP::marginal_cdf(int coord, double q) const {
  if (coord < 1 || coord > dim_) throw InvalidArgument("marginal_cdf: coordinate out of range");
  const Index k = coord - 1;
  double total = 0.0;
  for (const auto& c : components_) {
    total += c.weight * std_normal_cdf((q - c.mean[k]) / std::sqrt(c.covariance(k, k)));
  }
  return total;
}

double GaussianMixtureDGP::marginal_quantile(int coord, double tau) const {
  if (coord < 1 || coord > dim_) throw InvalidArgument("marginal_quantile: coordinate out of range");
  if (!(tau >= 1e-6 && tau <= 1.0 - 1e-6)) {
    throw InvalidArgument("marginal_quantile: tau must lie in [1e-6, 1 - 1e-6]");
  }
  const Index k = coord - 1;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& c : components_) {
    const double s = std::sqrt(c.covariance(k, k));
    lo = std::min(lo, c.mean[k] - 10.0 * s);
    hi = std::max(hi, c.mean[k] + 10.0 * s);
  }
  auto f = [this, coord, tau](double q) { return marginal_cdf(coord, q) - tau; };
  std::uintmax_t max_iter = 200;
  const auto [a, b] =
      boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), max_iter);
  // Return whichever bracket end has the smaller residual.
  return std::abs(f(a)) <= std::abs(f(b)) ? a : b;
}

double duration_spell_density(double t, const DurationPoint& p) {
  if (!(t > 0.0)) throw InvalidArgument("duration_spell_density: spell length must be positive");
  if (!(p.alpha2 > 0.0)) throw InvalidArgument("duration_spell_density: barrier alpha2 must be positive");
  const double dev = p.alpha1 * t - p.alpha2;
  const double log_density =
      std::log(p.alpha2) - 0.5 * std::log(2.0 * std::numbers::pi) - 1.5 * std::log(t) - dev * dev / (2.0 * t);
  return std::exp(log_density);
}

double duration_kernel(double t1, double t2, const DurationPoint& p) {
  return duration_spell_density(t1, p) * duration_spell_density(t2, p);
}

}  // namespace rcgrid
