#include <gtest/gtest.h>

#include <sstream>

#include "rcgrid/errors.hpp"
#include "rcgrid/grid.hpp"

using namespace rcgrid;

TEST(RadicalInverse, BaseTwoAndThree) {
  EXPECT_DOUBLE_EQ(radical_inverse(1, 2), 0.5);
  EXPECT_DOUBLE_EQ(radical_inverse(2, 2), 0.25);
  EXPECT_DOUBLE_EQ(radical_inverse(3, 2), 0.75);
  EXPECT_DOUBLE_EQ(radical_inverse(5, 2), 0.625);
  EXPECT_NEAR(radical_inverse(1, 3), 1.0 / 3.0, 1e-16);
}

TEST(RadicalInverse, RejectsIndexZeroAndBaseOne) {
  EXPECT_THROW(radical_inverse(0, 2), InvalidArgument);
  EXPECT_THROW(radical_inverse(3, 1), InvalidArgument);
}

TEST(HaltonGrid, FirstPoint) {
  const Grid g = halton_grid(GridSpec::box(1, 2));
  ASSERT_EQ(g.size(), 1);
  EXPECT_NEAR(g.points()(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(g.points()(0, 1), -5.0 + 10.0 / 3.0, 1e-15);
}

TEST(HaltonGrid, SmallerGridIsPrefix) {
  const Grid big = halton_grid(GridSpec::box(500, 2));
  for (Index D : {1, 25, 100, 499}) {
    const Grid small = halton_grid(GridSpec::box(D, 2));
    EXPECT_TRUE(small.points() == big.points().topRows(D)) << "D = " << D;
  }
}

TEST(HaltonGrid, PointsInsideBoxAndDistinct) {
  const Grid g = halton_grid(GridSpec::box(500, 2));
  EXPECT_GT(g.points().minCoeff(), -5.0);
  EXPECT_LT(g.points().maxCoeff(), 5.0);
  for (Index a = 0; a < g.size(); ++a) {
    for (Index b = a + 1; b < g.size(); ++b) ASSERT_NE(g.points().row(a), g.points().row(b));
  }
}

TEST(HaltonGrid, PerDimensionBounds) {
  GridSpec spec{50, {{0.5, 2.0}, {-1.0, 1.0}, {10.0, 20.0}}};
  const Grid g = halton_grid(spec);
  EXPECT_EQ(g.dim(), 3);
  EXPECT_GE(g.points().col(0).minCoeff(), 0.5);
  EXPECT_LE(g.points().col(2).maxCoeff(), 20.0);
  EXPECT_NEAR(g.points()(0, 2), 10.0 + 10.0 * 0.2, 1e-12);  // base 5
}

TEST(HaltonGrid, DeterministicAndRejectsTooManyDimensions) {
  EXPECT_TRUE(halton_grid(GridSpec::box(64, 4)).points() == halton_grid(GridSpec::box(64, 4)).points());
  EXPECT_NO_THROW(halton_grid(GridSpec::box(5, 8)));
  EXPECT_THROW(halton_grid(GridSpec::box(5, 9)), InvalidArgument);
  EXPECT_THROW(halton_grid(GridSpec::box(0, 2)), InvalidArgument);
  EXPECT_THROW(halton_grid(GridSpec{3, {{1.0, 1.0}}}), InvalidArgument);
}

TEST(Grid, FromPointsValidatesBounds) {
  Matrix pts(2, 2);
  pts << 0, 0, 1, 1;
  EXPECT_NO_THROW(Grid::from_points(pts, {{-1, 1}, {-1, 1}}));
  EXPECT_THROW(Grid::from_points(pts, {{-1, 0.5}, {-1, 1}}), InvalidArgument);
  EXPECT_THROW(Grid::from_points(pts, {{-1, 1}}), DimensionError);
  const Grid g = Grid::from_points(pts);
  EXPECT_EQ(g.spec().bounds[0], Interval(0.0, 1.0));
}

TEST(Grid, CsvExport) {
  const Grid g = halton_grid(GridSpec::box(2, 2));
  std::ostringstream out;
  write_grid_csv(out, g);
  EXPECT_EQ(out.str().substr(0, 18), "d,alpha_1,alpha_2\n");
  EXPECT_NE(out.str().find("\n2,"), std::string::npos);
}
