#pragma once

#include <vector>

#include "codedp/camera.hpp"
#include "codedp/grid.hpp"
#include "codedp/mask.hpp"

namespace codedp {

// Parameters of the dual-pixel PSF model: the geometric circle of confusion
// split into left/right halves by a Butterworth-profile window, then smoothed
// with a small binomial filter.
struct DpPsfModelParams {
  int filter_order = 1;        // Butterworth order
  double shape_alpha = 2.5;    // steepness of the split window
  double shape_beta = 0.4;     // the roll-off starts beta * radius before the split line
  int smoothing_strength = 7;  // binomial smoothing width, odd; 1 disables

  void validate() const;
};

enum class DpSide { kLeft, kRight };

struct PsfPlane {
  double signed_blur_px = 0.0;
  Grid left;
  Grid right;
};

// Left/right kernel pairs over the camera's depth planes, all on one odd
// square extent. Uncoded stacks are pair normalized: sum(left) + sum(right)
// == 1 on every plane. Coding multiplies cells away, so coded sums are <= 1.
struct PsfStack {
  std::vector<PsfPlane> planes;
  int kernel_extent_px = 0;
  bool coded = false;
  CameraConfig camera;
  DpPsfModelParams model;

  int num_planes() const { return static_cast<int>(planes.size()); }
  const PsfPlane& plane(int i) const { return planes[i]; }
  // Plane whose blur is closest to blur_px; ties resolve toward smaller |blur|.
  int plane_nearest_blur(double blur_px) const;
  void validate() const;
};

// Fixed stack extent: 2 * ceil(max_blur / 2) + 1, always odd.
int kernel_extent_for(double max_blur_px);

// Radius of the disc that bounds every nonzero kernel pixel at this blur:
// half the blur circle, the anti-aliased edge, and the smoothing spill.
double psf_support_radius(double blur_px, const DpPsfModelParams& model);

// One naive (open-aperture) dual-pixel kernel. Zero blur is an exact centered
// delta of mass 0.5. Each kernel sums to 0.5, so a left/right pair sums to 1.
// extent_px == 0 picks the smallest legal extent for the blur.
Grid naive_dp_psf(double blur_px, DpSide side, const DpPsfModelParams& model, int extent_px = 0);

PsfStack generate_psf_stack(const CameraConfig& camera, const DpPsfModelParams& model = {});

// Mask cell index (row-major) behind each kernel pixel of a plane, after the
// 180-degree flip applied to positive-defocus planes. The support disc of the
// blur maps into the mask's inscribed disc with a small safety margin, so
// every nonzero kernel pixel lands strictly inside the aperture.
std::vector<int> mask_cell_map(int mask_size, double signed_blur_px, int extent_px,
                               const DpPsfModelParams& model);

// Per-plane elementwise product of the naive kernels with the resampled mask.
// Coding an already coded stack throws StateError.
PsfStack code_psf_stack(const PsfStack& stack, const MaskPattern& mask);

// Modulation transfer function |H(w)| / |H(0)|, DC at (0, 0), unshifted.
// The kernel must carry positive mass.
Grid mtf(const Grid& kernel);

// Mean MTF over radial frequencies in [lo, hi] cycles per pixel.
inline constexpr double kMidBandLo = 0.1;
inline constexpr double kMidBandHi = 0.3;
double mean_midband_mtf(const Grid& kernel, double lo = kMidBandLo, double hi = kMidBandHi);

// Horizontal centroid separation between the two kernels of a plane,
// left centroid minus right centroid, in pixels.
double psf_centroid_disparity(const PsfStack& stack, int plane_index);

}  // namespace codedp
