#include "codedp/psf.hpp"

#include <algorithm>
#include <cmath>

#include "codedp/errors.hpp"
#include "codedp/fft.hpp"
#include "codedp/parallel.hpp"

namespace codedp {

void DpPsfModelParams::validate() const {
  if (filter_order < 1) throw ValidationError("filter order must be at least 1");
  if (!(shape_alpha > 0.0) || !std::isfinite(shape_alpha))
    throw ValidationError("shape alpha must be positive");
  if (!(shape_beta >= 0.0) || !std::isfinite(shape_beta))
    throw ValidationError("shape beta must be non-negative");
  if (smoothing_strength < 1 || smoothing_strength % 2 == 0)
    throw ValidationError("smoothing strength must be odd and positive");
}

int PsfStack::plane_nearest_blur(double blur_px) const {
  if (planes.empty()) throw ValidationError("empty PSF stack");
  int best = 0;
  double best_dist = std::fabs(planes[0].signed_blur_px - blur_px);
  for (int i = 1; i < num_planes(); ++i) {
    const double dist = std::fabs(planes[i].signed_blur_px - blur_px);
    const bool closer = dist < best_dist;
    const bool tie_toward_focus =
        dist == best_dist &&
        std::fabs(planes[i].signed_blur_px) < std::fabs(planes[best].signed_blur_px);
    if (closer || tie_toward_focus) {
      best = i;
      best_dist = dist;
    }
  }
  return best;
}

void PsfStack::validate() const {
  if (planes.empty()) throw ValidationError("PSF stack has no planes");
  if (kernel_extent_px < 1 || kernel_extent_px % 2 == 0)
    throw ValidationError("kernel extent must be odd and positive");
  for (const PsfPlane& p : planes) {
    if (p.left.rows() != kernel_extent_px || p.left.cols() != kernel_extent_px ||
        !p.left.same_shape(p.right))
      throw ValidationError("PSF plane extent mismatch");
  }
  for (int i = 1; i < num_planes(); ++i)
    if (!(planes[i].signed_blur_px > planes[i - 1].signed_blur_px))
      throw ValidationError("PSF planes must be ordered by increasing blur");
}

int kernel_extent_for(double max_blur_px) {
  if (!(max_blur_px >= 0.0) || !std::isfinite(max_blur_px))
    throw ValidationError("blur must be finite and non-negative");
  return 2 * static_cast<int>(std::ceil(max_blur_px / 2.0)) + 1;
}

double psf_support_radius(double blur_px, const DpPsfModelParams& model) {
  const double smooth_halfwidth = (model.smoothing_strength - 1) / 2.0;
  return std::fabs(blur_px) / 2.0 + 0.5 + smooth_halfwidth;
}

namespace {

std::vector<double> binomial_taps(int width) {
  // Rows of Pascal's triangle normalized to sum 1.
  std::vector<double> taps(width, 1.0);
  for (int i = 1; i < width; ++i)
    for (int j = i - 1; j > 0; --j) taps[j] += taps[j - 1];
  double sum = 0.0;
  for (double t : taps) sum += t;
  for (double& t : taps) t /= sum;
  return taps;
}

void smooth_separable(Grid& g, const std::vector<double>& taps) {
  const int h = static_cast<int>(taps.size()) / 2;
  Grid tmp(g.rows(), g.cols());
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) {
      double acc = 0.0;
      for (int k = -h; k <= h; ++k) {
        const int cc = c + k;
        if (cc >= 0 && cc < g.cols()) acc += taps[k + h] * g(r, cc);
      }
      tmp(r, c) = acc;
    }
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) {
      double acc = 0.0;
      for (int k = -h; k <= h; ++k) {
        const int rr = r + k;
        if (rr >= 0 && rr < g.rows()) acc += taps[k + h] * tmp(rr, c);
      }
      g(r, c) = acc;
    }
}

// Left-half split window: a plateau over the left of the blur circle rolling
// off across the split line. With the default alpha * beta == 1 the window
// passes exactly 1/2 at x == 0.
double split_window(double x, double radius, const DpPsfModelParams& model) {
  const double u = std::max(0.0, x / radius + model.shape_beta);
  const double a = std::pow(model.shape_alpha * u, 2 * model.filter_order);
  return 1.0 / (1.0 + a);
}

}  // namespace

Grid naive_dp_psf(double blur_px, DpSide side, const DpPsfModelParams& model, int extent_px) {
  model.validate();
  if (!std::isfinite(blur_px)) throw ValidationError("blur must be finite");
  const double abs_blur = std::fabs(blur_px);
  const int min_extent = kernel_extent_for(abs_blur);
  if (extent_px == 0) extent_px = min_extent;
  if (extent_px < min_extent || extent_px % 2 == 0)
    throw ValidationError("kernel extent must be odd and hold the full blur circle");

  Grid out(extent_px, extent_px);
  const int center = extent_px / 2;

  if (abs_blur == 0.0) {
    // In focus: both half-kernels collapse to the same centered delta.
    out(center, center) = 0.5;
    return out;
  }

  const double radius = abs_blur / 2.0;
  const double support = psf_support_radius(blur_px, model);
  const int smooth_half = (model.smoothing_strength - 1) / 2;

  // Work on a padded canvas so smoothing never runs off the edge, then crop.
  const int pad = smooth_half + 1;
  const int work_extent = extent_px + 2 * pad;
  const int wc = work_extent / 2;
  Grid work(work_extent, work_extent);
  for (int r = 0; r < work_extent; ++r) {
    const double y = r - wc;
    for (int c = 0; c < work_extent; ++c) {
      const double x = c - wc;
      const double rho = std::sqrt(x * x + y * y);
      const double coverage = std::clamp(radius + 0.5 - rho, 0.0, 1.0);
      if (coverage <= 0.0) continue;
      work(r, c) = coverage * split_window(x, radius, model);
    }
  }
  if (smooth_half > 0) smooth_separable(work, binomial_taps(model.smoothing_strength));

  // Clip to the support disc so mask resampling has a hard bound to map from.
  for (int r = 0; r < work_extent; ++r) {
    const double y = r - wc;
    for (int c = 0; c < work_extent; ++c) {
      const double x = c - wc;
      if (std::sqrt(x * x + y * y) > support) work(r, c) = 0.0;
    }
  }

  for (int r = 0; r < extent_px; ++r)
    for (int c = 0; c < extent_px; ++c) out(r, c) = work(r + pad, c + pad);

  // The left kernel keeps the left half for far defocus; the sides swap in
  // front of focus because the half-aperture images invert through the lens.
  const bool keep_left = (side == DpSide::kLeft) == (blur_px > 0.0);
  if (!keep_left) out = mirror_horizontal(out);

  const double sum = grid_sum(out);
  if (!(sum > 0.0)) throw NumericalError("dual-pixel kernel lost all mass");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= 0.5 / sum;
  return out;
}

PsfStack generate_psf_stack(const CameraConfig& camera, const DpPsfModelParams& model) {
  camera.validate();
  model.validate();
  PsfStack stack;
  stack.camera = camera;
  stack.model = model;
  stack.coded = false;
  stack.kernel_extent_px = kernel_extent_for(camera.max_blur_px);
  const std::vector<double> blurs = camera.plane_blurs_px();
  stack.planes.resize(blurs.size());
  parallel_for(0, static_cast<int>(blurs.size()), [&](int i) {
    PsfPlane& p = stack.planes[i];
    p.signed_blur_px = blurs[i];
    p.left = naive_dp_psf(blurs[i], DpSide::kLeft, model, stack.kernel_extent_px);
    // Mirroring guarantees the pair constraint bit for bit.
    p.right = mirror_horizontal(p.left);
  });
  return stack;
}

std::vector<int> mask_cell_map(int mask_size, double signed_blur_px, int extent_px,
                               const DpPsfModelParams& model) {
  if (mask_size < 1) throw ValidationError("mask size must be positive");
  if (extent_px < 1 || extent_px % 2 == 0)
    throw ValidationError("kernel extent must be odd and positive");
  const double support = psf_support_radius(signed_blur_px, model);
  // Shrink slightly so every rounded cell stays inside the inscribed disc;
  // an open mask then multiplies every support pixel by exactly one.
  const double scale = (mask_size / 2.0 - 0.75) / support;
  const double mask_center = (mask_size - 1) / 2.0;
  const int center = extent_px / 2;
  const bool flip = signed_blur_px > 0.0;

  std::vector<int> map(static_cast<std::size_t>(extent_px) * extent_px);
  for (int r = 0; r < extent_px; ++r) {
    for (int c = 0; c < extent_px; ++c) {
      const double y = r - center, x = c - center;
      int i = static_cast<int>(std::lround(mask_center + y * scale));
      int j = static_cast<int>(std::lround(mask_center + x * scale));
      i = std::clamp(i, 0, mask_size - 1);
      j = std::clamp(j, 0, mask_size - 1);
      if (flip) {
        i = mask_size - 1 - i;
        j = mask_size - 1 - j;
      }
      map[static_cast<std::size_t>(r) * extent_px + c] = i * mask_size + j;
    }
  }
  return map;
}

PsfStack code_psf_stack(const PsfStack& stack, const MaskPattern& mask) {
  stack.validate();
  mask.validate();
  if (stack.coded) throw StateError("PSF stack is already coded; coding cannot be applied twice");
  PsfStack out = stack;
  out.coded = true;
  const int extent = stack.kernel_extent_px;
  const double open_fraction = transmission(mask);
  parallel_for(0, stack.num_planes(), [&](int i) {
    PsfPlane& p = out.planes[i];
    if (p.signed_blur_px == 0.0) {
      // At exact focus every open aperture cell converges onto the same
      // pixel, so the delta kernel carries the mask's total transmission
      // rather than the value of any single cell.
      for (std::size_t k = 0; k < p.left.size(); ++k) {
        p.left[k] *= open_fraction;
        p.right[k] *= open_fraction;
      }
      return;
    }
    const std::vector<int> map =
        mask_cell_map(mask.size(), p.signed_blur_px, extent, stack.model);
    for (int r = 0; r < extent; ++r)
      for (int c = 0; c < extent; ++c) {
        const double m = mask.grid[map[static_cast<std::size_t>(r) * extent + c]];
        p.left(r, c) *= m;
        p.right(r, c) *= m;
      }
  });
  return out;
}

Grid mtf(const Grid& kernel) {
  if (kernel.empty()) throw ValidationError("empty kernel");
  if (!(grid_sum(kernel) > 0.0)) throw NumericalError("kernel carries no mass, MTF undefined");
  ComplexGrid spec = fft2_of(kernel);
  Grid out(kernel.rows(), kernel.cols());
  const double dc = std::abs(spec.at(0, 0));
  for (int r = 0; r < out.rows(); ++r)
    for (int c = 0; c < out.cols(); ++c) out(r, c) = std::abs(spec.at(r, c)) / dc;
  return out;
}

double mean_midband_mtf(const Grid& kernel, double lo, double hi) {
  if (!(lo >= 0.0 && hi > lo && hi <= 0.5 + 1e-12))
    throw ValidationError("frequency band must satisfy 0 <= lo < hi <= 0.5");
  const Grid m = mtf(kernel);
  double sum = 0.0;
  long count = 0;
  for (int r = 0; r < m.rows(); ++r) {
    const double fy = dft_bin_frequency(r, m.rows());
    for (int c = 0; c < m.cols(); ++c) {
      const double fx = dft_bin_frequency(c, m.cols());
      const double f = std::hypot(fy, fx);
      if (f >= lo && f <= hi) {
        sum += m(r, c);
        ++count;
      }
    }
  }
  if (count == 0) throw NumericalError("no DFT bins fall inside the requested band");
  return sum / static_cast<double>(count);
}

double psf_centroid_disparity(const PsfStack& stack, int plane_index) {
  if (plane_index < 0 || plane_index >= stack.num_planes())
    throw ValidationError("plane index out of range");
  const PsfPlane& p = stack.planes[plane_index];
  auto centroid_x = [&](const Grid& k) {
    const double sum = grid_sum(k);
    if (!(sum > 0.0)) throw NumericalError("kernel carries no mass, centroid undefined");
    const int center = k.cols() / 2;
    double acc = 0.0;
    for (int r = 0; r < k.rows(); ++r)
      for (int c = 0; c < k.cols(); ++c) acc += k(r, c) * (c - center);
    return acc / sum;
  };
  return centroid_x(p.left) - centroid_x(p.right);
}

}  // namespace codedp
