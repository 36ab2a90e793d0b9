#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "rcgrid/types.hpp"

namespace rcgrid {

using Interval = std::pair<double, double>;

struct GridSpec {
  Index D = 0;
  std::vector<Interval> bounds;  // one (lo, hi) per dimension

  Index dim() const noexcept { return static_cast<Index>(bounds.size()); }

  /// Same interval in every dimension; defaults to [-5, 5]^K.
  static GridSpec box(Index D, Index K, double lo = -5.0, double hi = 5.0);

  void validate() const;
};

/// Support points of a discrete mixing distribution, one row per atom.
class Grid {
 public:
  /// Wraps explicit points. Points must be finite and lie inside `bounds`;
  /// repeated points are accepted (useful for degenerate diagnostics).
  static Grid from_points(Matrix points, std::vector<Interval> bounds);

  /// Bounds default to the bounding box of the points.
  static Grid from_points(Matrix points);

  const Matrix& points() const noexcept { return points_; }
  const GridSpec& spec() const noexcept { return spec_; }
  Index size() const noexcept { return points_.rows(); }
  Index dim() const noexcept { return points_.cols(); }

 private:
  Grid(Matrix points, GridSpec spec) : points_(std::move(points)), spec_(std::move(spec)) {}
  friend Grid halton_grid(const GridSpec& spec);

  Matrix points_;
  GridSpec spec_;
};

/// Van der Corput digit reversal of `index` (>= 1) in `base` (>= 2).
double radical_inverse(unsigned long long index, unsigned base);

/// Unscrambled Halton points d = 1..D, dimension k using the k-th prime,
/// mapped affinely onto the box. Supports K <= 8. Grids with the same bounds
/// are nested: the first D' rows do not depend on D.
Grid halton_grid(const GridSpec& spec);

/// CSV with header `d,alpha_1,...,alpha_K`.
void write_grid_csv(std::ostream& out, const Grid& grid);

}  // namespace rcgrid
