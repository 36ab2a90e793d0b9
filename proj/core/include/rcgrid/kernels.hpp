#pragma once

// Conditional choice-probability and density kernels, plus the Gaussian
// mixture law used to generate random coefficients in simulations.

#include <optional>
#include <vector>

#include "rcgrid/rng.hpp"
#include "rcgrid/types.hpp"

namespace rcgrid {

/// Multinomial logit probabilities over the outside good (index 0) and J
/// inside goods.
///
/// `x` holds one row of characteristics per inside good (J x K); the outside
/// good has characteristics and intercept fixed at zero. `intercepts`, when
/// non-empty, adds a per-inside-good constant to each utility. Utilities are
/// shifted by their maximum before exponentiation, so any finite input is
/// safe.
Vector logit_choice_prob(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& alpha,
                         const Eigen::Ref<const Vector>& intercepts = Vector());

/// Allocation-free variant for hot loops; `out` must have size J + 1.
void logit_choice_prob_into(const Eigen::Ref<const RowMatrix>& x, const double* alpha,
                            Eigen::Ref<Vector> out);

double std_normal_cdf(double x) noexcept;

/// P(Z1 <= h, Z2 <= k) for a standard bivariate normal with correlation rho.
/// Infinite limits are allowed. Throws InvalidArgument unless |rho| < 1.
double bvn_cdf(double h, double k, double rho);

struct MixtureComponent {
  double weight;
  Vector mean;
  Matrix covariance;
};

/// Finite mixture of multivariate normals for the random coefficients.
class GaussianMixtureDGP {
 public:
  explicit GaussianMixtureDGP(std::vector<MixtureComponent> components);

  /// Two equally weighted bivariate normals with means (-2.2,-2.2) and
  /// (1.3,1.3) and common covariance [[0.8, 0.15], [0.15, 0.8]].
  static GaussianMixtureDGP two_component_default();

  Index dim() const noexcept { return dim_; }
  const std::vector<MixtureComponent>& components() const noexcept { return components_; }

  Vector sample(Rng& rng) const;

  /// Joint CDF at `a`. Supported for K = 1 and K = 2.
  double cdf(const Eigen::Ref<const Vector>& a) const;

  /// CDF of coordinate `coord` (1-based).
  double marginal_cdf(int coord, double q) const;

  /// Generalized inverse of marginal_cdf. tau must lie in [1e-6, 1 - 1e-6].
  double marginal_quantile(int coord, double tau) const;

 private:
  std::vector<MixtureComponent> components_;
  std::vector<Matrix> chol_;
  Index dim_ = 0;
};

/// Parameters (drift, barrier) of one first-passage-time law.
struct DurationPoint {
  double alpha1;
  double alpha2;
};

/// Inverse-Gaussian first-passage density of one unemployment spell:
/// alpha2 / (sqrt(2 pi) t^{3/2}) * exp(-(alpha1 t - alpha2)^2 / (2 t)).
double duration_spell_density(double t, const DurationPoint& p);

/// Two-spell kernel: product of the per-spell densities.
double duration_kernel(double t1, double t2, const DurationPoint& p);

}  // namespace rcgrid
