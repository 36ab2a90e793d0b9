#include "rcgrid/grid.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "rcgrid/errors.hpp"

namespace rcgrid {

namespace {
constexpr std::array<unsigned, 8> kPrimes{2, 3, 5, 7, 11, 13, 17, 19};
}

GridSpec GridSpec::box(Index D, Index K, double lo, double hi) {
  GridSpec spec;
  spec.D = D;
  spec.bounds.assign(static_cast<std::size_t>(K), Interval{lo, hi});
  return spec;
}

void GridSpec::validate() const {
  if (D < 1) throw InvalidArgument("GridSpec: D must be >= 1");
  if (bounds.empty()) throw InvalidArgument("GridSpec: at least one dimension required");
  for (const auto& [lo, hi] : bounds) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw InvalidArgument("GridSpec: each interval needs finite lo < hi");
    }
  }
}

Grid Grid::from_points(Matrix points, std::vector<Interval> bounds) {
  if (points.rows() < 1 || points.cols() < 1) throw InvalidArgument("Grid: need at least one point");
  if (static_cast<Index>(bounds.size()) != points.cols()) throw DimensionError("Grid: bounds/points dimension mismatch");
  if (!points.allFinite()) throw InvalidArgument("Grid: non-finite point");
  for (Index k = 0; k < points.cols(); ++k) {
    const auto [lo, hi] = bounds[static_cast<std::size_t>(k)];
    if (!(lo <= hi)) throw InvalidArgument("Grid: empty interval");
    if (points.col(k).minCoeff() < lo || points.col(k).maxCoeff() > hi) {
      throw InvalidArgument("Grid: point outside bounds in dimension " + std::to_string(k + 1));
    }
  }
  GridSpec spec{points.rows(), std::move(bounds)};
  return Grid(std::move(points), std::move(spec));
}

Grid Grid::from_points(Matrix points) {
  std::vector<Interval> bounds;
  for (Index k = 0; k < points.cols(); ++k) bounds.emplace_back(points.col(k).minCoeff(), points.col(k).maxCoeff());
  return from_points(std::move(points), std::move(bounds));
}

double radical_inverse(unsigned long long index, unsigned base) {
  if (index == 0) throw InvalidArgument("radical_inverse: index must be >= 1");
  if (base < 2) throw InvalidArgument("radical_inverse: base must be >= 2");
  const double inv_base = 1.0 / base;
  double scale = inv_base;
  double value = 0.0;
  while (index > 0) {
    value += static_cast<double>(index % base) * scale;
    index /= base;
    scale *= inv_base;
  }
  return value;
}

Grid halton_grid(const GridSpec& spec) {
  spec.validate();
  if (spec.dim() > static_cast<Index>(kPrimes.size())) {
    throw InvalidArgument("halton_grid: at most " + std::to_string(kPrimes.size()) + " dimensions supported");
  }
  Matrix points(spec.D, spec.dim());
  for (Index d = 0; d < spec.D; ++d) {
    for (Index k = 0; k < spec.dim(); ++k) {
      const auto [lo, hi] = spec.bounds[static_cast<std::size_t>(k)];
      const double u = radical_inverse(static_cast<unsigned long long>(d + 1), kPrimes[static_cast<std::size_t>(k)]);
      points(d, k) = lo + u * (hi - lo);
    }
  }
  return Grid(std::move(points), spec);
}

void write_grid_csv(std::ostream& out, const Grid& grid) {
  out << "d";
  for (Index k = 1; k <= grid.dim(); ++k) out << ",alpha_" << k;
  out << '\n';
  char buf[32];
  for (Index d = 0; d < grid.size(); ++d) {
    out << (d + 1);
    for (Index k = 0; k < grid.dim(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", grid.points()(d, k));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace rcgrid
