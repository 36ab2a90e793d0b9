#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "rcgrid/kernels.hpp"
#include "rcgrid/rng.hpp"
#include "rcgrid/types.hpp"

namespace rcgrid {

/// Observed choices of n individuals among an outside good and J products,
/// together with each individual's J x K product characteristics.
struct ChoiceDataset {
  Index J = 0;
  Index K = 0;
  std::vector<int> choice;  // 0 = outside good, 1..J inside goods
  RowMatrix x;              // n x (J*K); row i = x_1_1, ..., x_1_K, x_2_1, ..., x_J_K

  Index size() const noexcept { return static_cast<Index>(choice.size()); }

  /// Characteristics of individual i as a J x K row-major view.
  Eigen::Map<const RowMatrix> covariates(Index i) const { return {x.row(i).data(), J, K}; }

  /// n x (J+1) indicator matrix Y(i, j) = 1{choice_i == j}.
  Matrix one_hot() const;

  /// Throws InvalidArgument if shapes disagree or a choice is out of range.
  void validate() const;
};

using AlphaSampler = std::function<Vector(Rng&)>;

/// Draws n individuals: characteristics i.i.d. Uniform[0,1], a coefficient
/// vector from `sample_alpha`, then a choice from the logit probabilities.
ChoiceDataset simulate_dataset(const AlphaSampler& sample_alpha, Index n, Index J, Index K, Rng& rng);

ChoiceDataset simulate_dataset(const GaussianMixtureDGP& dgp, Index n, Index J, Index K, Rng& rng);

/// CSV with header `id,y,x_1_1,...,x_J_K`; values written with 17 significant digits.
void write_dataset_csv(std::ostream& out, const ChoiceDataset& data);

/// Parses the format written by write_dataset_csv. J and K are inferred from
/// the header. Throws ParseError naming the offending line.
ChoiceDataset read_dataset_csv(std::istream& in);

}  // namespace rcgrid
