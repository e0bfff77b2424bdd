#pragma once

#include "codedp/grid.hpp"
#include "codedp/mask.hpp"

namespace codedp {

// Weights of the training loss terms: beta1/beta2 scale the all-in-focus
// value and gradient terms, beta3/beta4 the defocus value and gradient terms,
// beta5 the mask transmission hinge.
struct LossWeights {
  double beta1 = 1.0;
  double beta2 = 0.5;
  double beta3 = 1.0;
  double beta4 = 0.5;
  double beta5 = 1e3;

  void validate() const;
};

struct DepthMetrics {
  double rmse = 0.0;    // same units as the inputs
  double mae = 0.0;
  double delta1 = 0.0;  // fraction with max(pred/gt, gt/pred) under the threshold
};

// Pointwise depth accuracy. Inputs must be positive for the ratio term.
DepthMetrics depth_metrics(const Grid& pred, const Grid& gt, double delta_threshold = 1.05);

struct AffineInvariantMetrics {
  double ai1 = 0.0;  // mean absolute error after the best L1 affine fit
  double ai2 = 0.0;  // root mean squared error after the least-squares affine fit
  double one_minus_abs_spearman = 0.0;
  bool degenerate_fit = false;  // constant prediction: fits reduce to a constant
};

// Fits gt ~ p * pred + q per metric and scores the residual, so predictions
// are compared up to scale and shift. The L1 fit uses iteratively reweighted
// least squares from the L2 solution.
AffineInvariantMetrics affine_invariant_metrics(const Grid& pred, const Grid& gt);

struct ImageMetrics {
  double psnr_db = 0.0;  // +infinity for identical images
  double ssim = 0.0;
};

// PSNR over all channels against the given peak, and mean SSIM (11x11
// Gaussian window, sigma 1.5) over the region where the window fits.
ImageMetrics image_metrics(const Image& pred, const Image& gt, double peak = 1.0);

struct LossBreakdown {
  double total = 0.0;
  double aif_term = 0.0;      // beta1 * L1 + beta2 * gradient L1
  double defocus_term = 0.0;  // beta3 * L1 + beta4 * gradient L1
  double mask_term = 0.0;     // transmission hinge
};

// Supervised training loss: L1 image and defocus errors, their forward-
// difference gradient errors, and the mask transmission hinge. All averages
// are over pixels times channels (times the two gradient components).
LossBreakdown training_loss(const Image& pred_aif, const Image& gt_aif,
                            const Grid& pred_defocus, const Grid& gt_defocus,
                            const MaskPattern& mask, const LossWeights& weights = {});

// Forward differences with replicate boundary, so the last row/column of the
// corresponding gradient is zero.
void forward_gradient(const Grid& g, Grid& gx, Grid& gy);

}  // namespace codedp
