#pragma once

#include <vector>

#include "codedp/camera.hpp"
#include "codedp/grid.hpp"
#include "codedp/psf.hpp"
#include "codedp/render.hpp"

namespace codedp {

// Per-pixel dissimilarity for each stack plane hypothesis, aligned with the
// stack's plane order.
struct CostVolume {
  std::vector<Grid> cost;

  int num_planes() const { return static_cast<int>(cost.size()); }
  int rows() const { return cost.empty() ? 0 : cost[0].rows(); }
  int cols() const { return cost.empty() ? 0 : cost[0].cols(); }
};

// Signed defocus estimate, stored normalized by max_blur so values lie in
// [-1, 1].
struct DefocusMap {
  Grid normalized;
  double max_blur_px = 0.0;
  double pixel_pitch_um = 0.0;
};

// Cross-blur consistency: blurring the left view with the right kernel of the
// true plane matches the right view blurred with the left kernel, so the
// windowed squared difference dips at the correct plane. Window is a
// (2*patch_radius+1)^2 box, summed over channels.
CostVolume defocus_cost_volume(const DualPixelCapture& capture, const PsfStack& stack,
                               int patch_radius);

// Winner take all over planes (ties resolve toward blur zero) plus parabolic
// refinement against the two neighboring planes, clamped to half a plane
// spacing. Edge planes are not refined.
DefocusMap estimate_defocus(const CostVolume& volume, const PsfStack& stack);

// Defocus-to-depth inversion. Blurs at or past the far-field asymptote map to
// +infinity, so callers clip for display.
Grid defocus_to_depth(const DefocusMap& map, const CameraConfig& camera);

// Per-plane Wiener deconvolution of left+right with the matching combined
// kernel, composited by each pixel's nearest plane. The in-focus plane passes
// through up to the stack's light loss. reg scales the regularizer relative
// to the peak spectral power of each kernel.
Image deblur_aif(const DualPixelCapture& capture, const DefocusMap& map, const PsfStack& stack,
                 double reg = 1e-2);

// Mean over pixels of (second-lowest minus lowest) plane cost, ignoring a
// border of `margin` pixels: how decisively the volume picks its winner.
double cost_volume_margin(const CostVolume& volume, int margin = 0);

}  // namespace codedp
