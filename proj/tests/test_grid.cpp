#include <cmath>

#include <doctest.h>

#include "codedp/errors.hpp"
#include "codedp/grid.hpp"

using namespace codedp;

TEST_SUITE("grid") {

TEST_CASE("storage is row-major with (row, col) indexing") {
  Grid g(2, 3);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) g(r, c) = 10.0 * r + c;
  CHECK(g[0] == 0.0);
  CHECK(g[2] == 2.0);
  CHECK(g[3] == 10.0);
  CHECK(g[5] == 12.0);
  CHECK(g.size() == 6);
  CHECK(g.rows() == 2);
  CHECK(g.cols() == 3);
  CHECK(Grid(2, 2, 7.0)(1, 1) == 7.0);
  CHECK(Grid().empty());
}

TEST_CASE("reductions") {
  Grid g(2, 2);
  g(0, 0) = 1.0;
  g(0, 1) = -2.0;
  g(1, 0) = 3.0;
  g(1, 1) = 6.0;
  CHECK(grid_sum(g) == 8.0);
  CHECK(grid_min(g) == -2.0);
  CHECK(grid_max(g) == 6.0);
  CHECK(grid_mean(g) == 2.0);
  CHECK(grid_finite(g));
  g(1, 1) = std::nan("");
  CHECK(!grid_finite(g));
}

TEST_CASE("difference measures") {
  Grid a(1, 2), b(1, 2);
  a[0] = 3.0;
  a[1] = 4.0;
  b[0] = 3.0;
  b[1] = 1.0;
  CHECK(max_abs_diff(a, b) == 3.0);
  // ||a - b|| / ||b|| = 3 / sqrt(10)
  CHECK(rel_l2_diff(a, b) == doctest::Approx(3.0 / std::sqrt(10.0)).epsilon(1e-14));
  CHECK(max_abs_diff(a, a) == 0.0);
}

TEST_CASE("mirror and flip") {
  Grid g(2, 3);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>(i);
  Grid m = mirror_horizontal(g);
  CHECK(m(0, 0) == 2.0);
  CHECK(m(0, 2) == 0.0);
  CHECK(m(1, 0) == 5.0);
  Grid f = flip_both(g);
  CHECK(f(0, 0) == 5.0);
  CHECK(f(1, 2) == 0.0);
  // Both are involutions.
  CHECK(max_abs_diff(mirror_horizontal(m), g) == 0.0);
  CHECK(max_abs_diff(flip_both(f), g) == 0.0);
  CHECK(max_abs_diff(scaled(g, 2.0), g) == 5.0);  // largest entry doubles from 5 to 10
}

TEST_CASE("interior statistics drop the border") {
  Grid g(4, 4, 1.0);
  // Poison the border; the interior 2x2 stays at one.
  for (int i = 0; i < 4; ++i) {
    g(0, i) = g(3, i) = g(i, 0) = g(i, 3) = 100.0;
  }
  CHECK(interior_mean(g, 1) == 1.0);
  Grid h = g;
  h(1, 1) = 2.0;
  h(0, 0) = -500.0;  // border difference must be ignored
  CHECK(interior_max_abs_diff(g, h, 1) == 1.0);
}

TEST_CASE("median filter handles borders by clipping the window") {
  Grid g(3, 3);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>(i);
  Grid m = median_filter(g, 3);
  // Center sees all nine values 0..8.
  CHECK(m(1, 1) == 4.0);
  // Corner window is the 2x2 block {0,1,3,4}: even count averages the middle two.
  CHECK(m(0, 0) == 2.0);
  // Edge window is the 2x3 block {0,1,2,3,4,5}.
  CHECK(m(0, 1) == 2.5);
  CHECK_THROWS_AS(median_filter(g, 2), ValidationError);
  CHECK(max_abs_diff(median_filter(g, 1), g) == 0.0);

  // A single outlier in constant surroundings disappears.
  Grid flat(5, 5, 1.0);
  flat(2, 2) = 50.0;
  CHECK(max_abs_diff(median_filter(flat, 3), Grid(5, 5, 1.0)) == 0.0);
}

TEST_CASE("image shape helpers") {
  Image img(4, 5, 3, 0.25);
  CHECK(img.rows() == 4);
  CHECK(img.cols() == 5);
  CHECK(img.num_channels() == 3);
  CHECK(image_max(img) == 0.25);
  Image other(4, 5, 3, 0.25);
  other.channels[2](3, 4) = 1.0;
  CHECK(img.same_shape(other));
  CHECK(image_max_abs_diff(img, other) == 0.75);
  CHECK(!img.same_shape(Image(4, 5, 1)));
}

}  // TEST_SUITE
