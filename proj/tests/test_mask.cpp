#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>

#include <doctest.h>

#include "codedp/errors.hpp"
#include "codedp/grid.hpp"
#include "codedp/image_io.hpp"
#include "codedp/mask.hpp"

using namespace codedp;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "codedp_mask_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("mask") {

TEST_CASE("m-sequence has full period and near-perfect balance") {
  const std::vector<int> seq = mls_sequence_31();
  REQUIRE(seq.size() == 31);

  std::string s;
  for (int v : seq) {
    CHECK((v == 0 || v == 1));
    s += static_cast<char>('0' + v);
  }
  CHECK(s == "1111100011011101010000100101100");

  // 2^5 - 1 period, so 16 ones and 15 zeros.
  CHECK(std::count(seq.begin(), seq.end(), 1) == 16);

  // No cyclic shift reproduces the sequence, so the period is exactly 31.
  for (int shift = 1; shift < 31; ++shift) {
    bool same = true;
    for (int i = 0; i < 31 && same; ++i) same = seq[i] == seq[(i + shift) % 31];
    CHECK(!same);
  }

  // The register recurrence holds: s[n+5] = s[n+2] xor s[n].
  for (int n = 0; n < 31; ++n) CHECK(seq[(n + 5) % 31] == (seq[(n + 2) % 31] ^ seq[n]));
}

TEST_CASE("open disc counts") {
  CHECK(grid_sum(open_disc_grid(21)) == 349.0);
  CHECK(grid_sum(open_disc_grid(5)) == 21.0);
  CHECK(grid_sum(open_disc_grid(31)) == 749.0);
  Grid d = open_disc_grid(21);
  CHECK(d(10, 10) == 1.0);
  CHECK(d(0, 0) == 0.0);
  CHECK(d(0, 10) == 1.0);  // the disc reaches the edge midpoints
  // Radially symmetric by construction.
  CHECK(max_abs_diff(d, flip_both(d)) == 0.0);
}

TEST_CASE("open mask transmits everything") {
  MaskPattern open = builtin_mask("open", 21);
  CHECK(open.size() == 21);
  CHECK(open.binary);
  CHECK(transmission(open) == 1.0);
  CHECK(mask_regularizer(open) == 0.0);
  CHECK(max_abs_diff(open.grid, open_disc_grid(21)) == 0.0);
}

TEST_CASE("half-area mask is the best concentric disc") {
  MaskPattern half = builtin_mask("open_half_area", 21);
  const double open_count = 349.0;
  const double got = grid_sum(half.grid);

  // No other concentric disc gets closer to half the open count.
  double best = 1e18;
  for (int rad2 = 0; rad2 <= 2 * 10 * 10 + 1; ++rad2) {
    double count = 0.0;
    for (int r = 0; r < 21; ++r)
      for (int c = 0; c < 21; ++c) {
        const int dr = r - 10, dc = c - 10;
        if (dr * dr + dc * dc <= rad2 && open_disc_grid(21)(r, c) == 1.0) count += 1.0;
      }
    best = std::min(best, std::fabs(count - open_count / 2.0));
  }
  CHECK(std::fabs(got - open_count / 2.0) == best);
  CHECK(transmission(half) == doctest::Approx(0.5).epsilon(0.02));

  // Concentric: no open cell sits farther from center than a closed cell.
  double max_open = 0.0, min_closed = 1e18;
  for (int r = 0; r < 21; ++r)
    for (int c = 0; c < 21; ++c) {
      const double d2 = (r - 10.0) * (r - 10.0) + (c - 10.0) * (c - 10.0);
      if (half.grid(r, c) == 1.0)
        max_open = std::max(max_open, d2);
      else if (open_disc_grid(21)(r, c) == 1.0)
        min_closed = std::min(min_closed, d2);
    }
  CHECK(max_open < min_closed);
}

TEST_CASE("separable code is the outer product of the m-sequence") {
  MaskPattern mls = builtin_mask("mls_separable", 21);  // requested size is ignored
  REQUIRE(mls.size() == 31);
  const std::vector<int> seq = mls_sequence_31();
  const Grid disc = open_disc_grid(31);
  for (int r = 0; r < 31; ++r)
    for (int c = 0; c < 31; ++c) {
      const double want = disc(r, c) * seq[r] * seq[c];
      CHECK(mls.grid(r, c) == want);
    }
  CHECK(transmission(mls) == doctest::Approx(0.2443257677).epsilon(1e-9));
}

TEST_CASE("sigmoid relaxation") {
  Grid latent(3, 3, 0.0);
  latent(0, 0) = 2.0;
  latent(2, 2) = -2.0;

  // Zero temperature flattens everything to one half.
  MaskPattern gray = mask_from_params(latent, 0.0);
  CHECK(max_abs_diff(gray.grid, Grid(3, 3, 0.5)) == 0.0);
  CHECK(gray.temperature == 0.0);
  CHECK(!gray.binary);
  REQUIRE(gray.latent_params.has_value());
  CHECK(max_abs_diff(*gray.latent_params, latent) == 0.0);

  MaskPattern warm = mask_from_params(latent, 1.5);
  CHECK(warm.grid(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))).epsilon(1e-14));
  CHECK(warm.grid(1, 1) == 0.5);
  CHECK(warm.grid(2, 2) == doctest::Approx(1.0 / (1.0 + std::exp(3.0))).epsilon(1e-14));

  CHECK_THROWS_AS(mask_from_params(latent, -1.0), ValidationError);
  Grid bad = latent;
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(mask_from_params(bad, 1.0), ValidationError);
}

TEST_CASE("binarize thresholds and keeps provenance") {
  Grid latent(3, 3, 0.0);
  latent(0, 0) = 4.0;
  latent(0, 1) = -4.0;
  MaskPattern soft = mask_from_params(latent, 1.0);
  MaskPattern hard = binarize(soft);
  CHECK(hard.binary);
  CHECK(hard.grid(0, 0) == 1.0);
  CHECK(hard.grid(0, 1) == 0.0);
  CHECK(hard.grid(1, 1) == 1.0);  // exactly at the threshold opens
  CHECK(hard.temperature == soft.temperature);
  REQUIRE(hard.latent_params.has_value());
  // Thresholding twice changes nothing.
  CHECK(max_abs_diff(binarize(hard).grid, hard.grid) == 0.0);
}

TEST_CASE("transmission hinge") {
  MaskPattern dim;
  dim.grid = Grid(21, 21, 0.0);
  dim.binary = true;
  // Open a quarter of the disc cells.
  const Grid disc = open_disc_grid(21);
  int opened = 0;
  for (std::size_t i = 0; i < disc.size() && opened < 87; ++i) {
    if (disc[i] == 1.0) {
      dim.grid[i] = 1.0;
      ++opened;
    }
  }
  const double t = 87.0 / 349.0;
  CHECK(transmission(dim) == doctest::Approx(t).epsilon(1e-14));
  CHECK(mask_regularizer(dim) == doctest::Approx(1e3 * (0.5 - t)).epsilon(1e-12));
  CHECK(mask_regularizer(dim, 10.0) == doctest::Approx(10.0 * (0.5 - t)).epsilon(1e-12));
}

TEST_CASE("file round trip preserves flags and values") {
  const auto dir = temp_dir();
  const std::string path = (dir / "mask.pgm").string();

  MaskPattern half = builtin_mask("open_half_area", 21);
  save_mask(path, half);
  MaskPattern loaded = load_mask(path);
  CHECK(loaded.binary);
  CHECK(loaded.size() == 21);
  CHECK(max_abs_diff(loaded.grid, half.grid) == 0.0);

  // Continuous masks survive up to 8-bit quantization.
  Grid latent(5, 5, 0.0);
  latent(2, 2) = 1.0;
  latent(0, 0) = -2.5;
  MaskPattern soft = mask_from_params(latent, 0.7);
  const std::string soft_path = (dir / "soft.pgm").string();
  save_mask(soft_path, soft);
  MaskPattern soft_loaded = load_mask(soft_path);
  CHECK(!soft_loaded.binary);
  CHECK(soft_loaded.temperature == soft.temperature);
  CHECK(max_abs_diff(soft_loaded.grid, soft.grid) < 1.0 / 255.0);

  std::filesystem::remove_all(dir);
}

TEST_CASE("image files load thresholded") {
  const auto dir = temp_dir();
  const std::string path = (dir / "gray.pgm").string();
  Grid g(4, 4, 0.4);
  g(0, 0) = 0.9;
  g(3, 3) = 0.6;
  save_pgm8(path, g);
  MaskPattern m = mask_from_file(path);
  CHECK(m.binary);
  CHECK(m.grid(0, 0) == 1.0);
  CHECK(m.grid(3, 3) == 1.0);
  CHECK(m.grid(1, 1) == 0.0);

  // builtin_mask falls back to the file path for unknown names.
  MaskPattern via_builtin = builtin_mask(path, 4);
  CHECK(max_abs_diff(via_builtin.grid, m.grid) == 0.0);
  CHECK_THROWS_AS(builtin_mask("no_such_pattern", 21), IoError);

  std::filesystem::remove_all(dir);
}

TEST_CASE("validate rejects malformed patterns") {
  MaskPattern bad;
  bad.grid = Grid(4, 6, 0.5);  // not square
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad.grid = Grid(5, 5, 1.5);  // out of range transmission
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad.grid = Grid();
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

}  // TEST_SUITE
