#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "codedp/errors.hpp"
#include "codedp/grid.hpp"
#include "codedp/mask.hpp"
#include "codedp/metrics.hpp"

using namespace codedp;

namespace {

Grid random_grid(int rows, int cols, std::uint64_t seed, double lo = 0.1, double hi = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(lo, hi);
  Grid g(rows, cols);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = uni(rng);
  return g;
}

// L2 residual after fitting gt ~ p * pred + q for explicit (p, q).
double affine_rmse(const Grid& pred, const Grid& gt, double p, double q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = p * pred[i] + q - gt[i];
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("depth metrics closed form") {
  Grid pred(1, 2), gt(1, 2);
  pred(0, 0) = 2.0;
  pred(0, 1) = 4.0;
  gt(0, 0) = 1.0;
  gt(0, 1) = 4.0;
  DepthMetrics m = depth_metrics(pred, gt, 1.05);
  CHECK(m.mae == 0.5);
  CHECK(m.rmse == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  // Ratios are 2.0 and 1.0; only the second clears the 1.05 threshold.
  CHECK(m.delta1 == 0.5);

  DepthMetrics exact = depth_metrics(gt, gt, 1.05);
  CHECK(exact.rmse == 0.0);
  CHECK(exact.mae == 0.0);
  CHECK(exact.delta1 == 1.0);

  Grid bad = gt;
  bad(0, 0) = 0.0;  // ratios need positive depths
  CHECK_THROWS_AS(depth_metrics(pred, bad), ValidationError);
  CHECK_THROWS_AS(depth_metrics(pred, gt, 1.0), ValidationError);
}

TEST_CASE("psnr hits the textbook value and the identity sentinel") {
  const double peak = 1.0;
  // Constant error of peak/10 makes MSE = peak^2 / 100, i.e. exactly 20 dB.
  Image gt_big(16, 16, 1, 0.5), pred_big(16, 16, 1, 0.5 + peak / 10.0);
  ImageMetrics m = image_metrics(pred_big, gt_big, peak);
  CHECK(m.psnr_db == doctest::Approx(20.0).epsilon(1e-12));

  ImageMetrics same = image_metrics(gt_big, gt_big, peak);
  CHECK(std::isinf(same.psnr_db));
  CHECK(same.psnr_db > 0.0);
  CHECK(same.ssim == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim penalizes structural damage more than psnr alone") {
  // A smooth base: local structure is gentle, so additive noise wrecks it.
  Image gt(48, 48, 1);
  gt.channels[0] = Grid(48, 48);
  for (int r = 0; r < 48; ++r)
    for (int c = 0; c < 48; ++c)
      gt.channels[0](r, c) =
          0.5 + 0.3 * std::sin(2.0 * 3.14159265358979 * r / 24.0) *
                    std::sin(2.0 * 3.14159265358979 * c / 24.0);

  Image noisy = gt;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(-0.05, 0.05);
  for (std::size_t i = 0; i < noisy.channels[0].size(); ++i) noisy.channels[0][i] += uni(rng);

  ImageMetrics m = image_metrics(noisy, gt, 1.0);
  CHECK(m.ssim < 1.0);
  CHECK(m.ssim > 0.0);
  CHECK(std::isfinite(m.psnr_db));

  // Constant shifts keep structure: SSIM stays high while PSNR drops.
  Image shifted = gt;
  for (std::size_t i = 0; i < shifted.channels[0].size(); ++i) shifted.channels[0][i] += 0.1;
  ImageMetrics s = image_metrics(shifted, gt, 1.0);
  CHECK(s.ssim > m.ssim);

  CHECK_THROWS_AS(image_metrics(Image(8, 8, 1), Image(8, 8, 1), 1.0), ValidationError);
  CHECK_THROWS_AS(image_metrics(Image(16, 16, 1), Image(12, 12, 1), 1.0), ValidationError);
}

TEST_CASE("affine fits absorb scale and shift exactly") {
  Grid gt = random_grid(8, 8, 21, 10.0, 50.0);
  for (auto [a, b] : {std::pair{2.0, 5.0}, {0.25, -3.0}, {-1.5, 40.0}}) {
    Grid pred(8, 8);
    for (std::size_t i = 0; i < gt.size(); ++i) pred[i] = a * gt[i] + b;
    AffineInvariantMetrics m = affine_invariant_metrics(pred, gt);
    CHECK(!m.degenerate_fit);
    CHECK(m.ai1 < 1e-9);
    CHECK(m.ai2 < 1e-9);
    CHECK(m.one_minus_abs_spearman < 1e-12);
  }
}

TEST_CASE("least-squares fit satisfies the normal equations") {
  Grid pred = random_grid(4, 4, 33, 0.0, 1.0);
  Grid gt = random_grid(4, 4, 34, 5.0, 9.0);
  AffineInvariantMetrics m = affine_invariant_metrics(pred, gt);

  // Recover the implied (p, q) by brute force around the reported residual:
  // the L2-optimal fit must beat every probe on a dense grid.
  double best = std::numeric_limits<double>::infinity();
  double best_p = 0.0, best_q = 0.0;
  double p_lo = -20.0, p_hi = 20.0, q_lo = -20.0, q_hi = 20.0;
  for (int round = 0; round < 4; ++round) {
    const int steps = 60;
    double round_best = std::numeric_limits<double>::infinity();
    double rp = 0.0, rq = 0.0;
    for (int i = 0; i <= steps; ++i)
      for (int j = 0; j <= steps; ++j) {
        const double p = p_lo + (p_hi - p_lo) * i / steps;
        const double q = q_lo + (q_hi - q_lo) * j / steps;
        const double r = affine_rmse(pred, gt, p, q);
        if (r < round_best) {
          round_best = r;
          rp = p;
          rq = q;
        }
      }
    best = round_best;
    best_p = rp;
    best_q = rq;
    const double p_span = (p_hi - p_lo) / steps, q_span = (q_hi - q_lo) / steps;
    p_lo = best_p - 2.0 * p_span;
    p_hi = best_p + 2.0 * p_span;
    q_lo = best_q - 2.0 * q_span;
    q_hi = best_q + 2.0 * q_span;
  }
  CHECK(m.ai2 == doctest::Approx(best).epsilon(1e-6));
  CHECK(m.ai2 <= best + 1e-12);  // the closed form can only be better
}

TEST_CASE("robust fit is locally optimal in the L1 sense") {
  Grid pred = random_grid(5, 5, 44, 0.0, 1.0);
  Grid gt(5, 5);
  for (std::size_t i = 0; i < gt.size(); ++i) gt[i] = 3.0 * pred[i] + 1.0;
  gt[7] = 100.0;  // one outlier should barely move the L1 fit
  AffineInvariantMetrics m = affine_invariant_metrics(pred, gt);
  // 24 of 25 residuals vanish at (3, 1); the outlier contributes |100 - fit|.
  const double outlier_resid = std::fabs(100.0 - (3.0 * pred[7] + 1.0));
  CHECK(m.ai1 == doctest::Approx(outlier_resid / 25.0).epsilon(1e-6));
  // The L2 fit chases the outlier and pays more.
  CHECK(m.ai2 > m.ai1);
}

TEST_CASE("rank correlation sees through monotone warps") {
  Grid pred = random_grid(6, 6, 55, 0.5, 3.0);
  Grid gt(6, 6);
  for (std::size_t i = 0; i < gt.size(); ++i) gt[i] = std::exp(pred[i]);
  AffineInvariantMetrics m = affine_invariant_metrics(pred, gt);
  CHECK(m.one_minus_abs_spearman < 1e-12);

  // Anti-monotone maps also score perfectly through the absolute value.
  for (std::size_t i = 0; i < gt.size(); ++i) gt[i] = -std::pow(pred[i], 3.0);
  m = affine_invariant_metrics(pred, gt);
  CHECK(m.one_minus_abs_spearman < 1e-12);

  // Shuffled targets decorrelate.
  Grid shuffled = gt;
  std::mt19937_64 rng(66);
  std::shuffle(&shuffled[0], &shuffled[0] + shuffled.size(), rng);
  m = affine_invariant_metrics(pred, shuffled);
  CHECK(m.one_minus_abs_spearman > 0.2);
}

TEST_CASE("constant predictions degrade gracefully") {
  Grid pred(4, 4, 2.5);
  Grid gt = random_grid(4, 4, 77, 1.0, 3.0);
  AffineInvariantMetrics m = affine_invariant_metrics(pred, gt);
  CHECK(m.degenerate_fit);
  CHECK(m.one_minus_abs_spearman == 1.0);

  // With no slope to fit, the best constants are the median (L1) and mean (L2).
  std::vector<double> v(&gt[0], &gt[0] + gt.size());
  std::sort(v.begin(), v.end());
  const double median = 0.5 * (v[7] + v[8]);
  double l1 = 0.0, mean = 0.0;
  for (double x : v) mean += x;
  mean /= 16.0;
  double l2 = 0.0;
  for (double x : v) {
    l1 += std::fabs(x - median);
    l2 += (x - mean) * (x - mean);
  }
  CHECK(m.ai1 == doctest::Approx(l1 / 16.0).epsilon(1e-12));
  CHECK(m.ai2 == doctest::Approx(std::sqrt(l2 / 16.0)).epsilon(1e-12));
}

TEST_CASE("forward gradient differences with zero trailing edges") {
  Grid g(2, 3);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>(i * i);
  Grid gx, gy;
  forward_gradient(g, gx, gy);
  CHECK(gx(0, 0) == 1.0);   // 1 - 0
  CHECK(gx(0, 1) == 3.0);   // 4 - 1
  CHECK(gx(0, 2) == 0.0);   // replicate edge
  CHECK(gy(0, 0) == 9.0);   // 9 - 0
  CHECK(gy(1, 2) == 0.0);
  CHECK(gy(1, 1) == 0.0);
}

TEST_CASE("training loss decomposes by term") {
  const int n = 8;
  Image gt_aif(n, n, 1);
  gt_aif.channels[0] = random_grid(n, n, 88, 0.0, 1.0);
  Grid gt_defocus = random_grid(n, n, 89, -1.0, 1.0);
  MaskPattern open = builtin_mask("open", 21);

  // Perfect predictions leave only the mask hinge, which is zero when the
  // aperture is fully open.
  LossBreakdown perfect = training_loss(gt_aif, gt_aif, gt_defocus, gt_defocus, open);
  CHECK(perfect.aif_term == 0.0);
  CHECK(perfect.defocus_term == 0.0);
  CHECK(perfect.mask_term == 0.0);
  CHECK(perfect.total == 0.0);

  // A constant offset has zero gradient error, so the value weight alone
  // scales the term.
  Image off_aif = gt_aif;
  for (std::size_t i = 0; i < off_aif.channels[0].size(); ++i) off_aif.channels[0][i] += 0.25;
  LossWeights w;
  LossBreakdown shifted = training_loss(off_aif, gt_aif, gt_defocus, gt_defocus, open, w);
  CHECK(shifted.aif_term == doctest::Approx(w.beta1 * 0.25).epsilon(1e-12));
  CHECK(shifted.defocus_term == 0.0);
  CHECK(shifted.total == doctest::Approx(w.beta1 * 0.25).epsilon(1e-12));

  Grid off_defocus = gt_defocus;
  for (std::size_t i = 0; i < off_defocus.size(); ++i) off_defocus[i] += 0.1;
  LossBreakdown shifted_d =
      training_loss(gt_aif, gt_aif, off_defocus, gt_defocus, open, w);
  CHECK(shifted_d.defocus_term == doctest::Approx(w.beta3 * 0.1).epsilon(1e-12));

  // A dim mask adds its hinge to the total.
  MaskPattern dim;
  dim.grid = Grid(21, 21, 0.0);
  dim.binary = true;
  dim.grid(10, 10) = 1.0;
  LossBreakdown hinged = training_loss(gt_aif, gt_aif, gt_defocus, gt_defocus, dim, w);
  const double t = 1.0 / 349.0;
  CHECK(hinged.mask_term == doctest::Approx(w.beta5 * (0.5 - t)).epsilon(1e-12));
  CHECK(hinged.total == hinged.mask_term);

  LossWeights bad;
  bad.beta2 = -1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

}  // TEST_SUITE
