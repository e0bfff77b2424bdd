#include "codedp/recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "codedp/errors.hpp"
#include "codedp/fft.hpp"
#include "codedp/parallel.hpp"

namespace codedp {

CostVolume defocus_cost_volume(const DualPixelCapture& capture, const PsfStack& stack,
                               int patch_radius) {
  stack.validate();
  if (patch_radius < 1) throw ValidationError("patch radius must be at least 1");
  if (capture.left.num_channels() == 0 || !capture.left.same_shape(capture.right))
    throw ValidationError("capture views disagree in shape");

  CostVolume volume;
  volume.cost.resize(stack.num_planes());
  parallel_for(0, stack.num_planes(), [&](int k) {
    const PsfPlane& p = stack.planes[k];
    // One scale per plane keeps the cross-blur identity at the true plane
    // while stopping dim coded hypotheses from buying low costs with their
    // light loss. Uncoded pairs sum to exactly one, so nothing changes there.
    const double pair_mass = grid_sum(p.left) + grid_sum(p.right);
    if (!(pair_mass > 1e-12))
      throw NumericalError("stack plane carries no light; its hypothesis cost is undefined");
    const double scale = 1.0 / pair_mass;
    Grid diff2(capture.left.rows(), capture.left.cols());
    for (int ch = 0; ch < capture.left.num_channels(); ++ch) {
      const Grid lb = conv2_same(capture.left.channels[ch], p.right);
      const Grid rb = conv2_same(capture.right.channels[ch], p.left);
      for (std::size_t i = 0; i < diff2.size(); ++i) {
        const double d = scale * (lb[i] - rb[i]);
        diff2[i] += d * d;
      }
    }
    volume.cost[k] = box_sum(diff2, patch_radius);
  });
  return volume;
}

DefocusMap estimate_defocus(const CostVolume& volume, const PsfStack& stack) {
  stack.validate();
  if (volume.num_planes() != stack.num_planes())
    throw ValidationError("cost volume and stack plane counts disagree");
  if (volume.num_planes() == 0 || volume.rows() == 0)
    throw ValidationError("cost volume is empty");

  const int planes = volume.num_planes();
  const double max_blur = stack.camera.max_blur_px;
  const double spacing = stack.camera.plane_spacing_px();

  DefocusMap map;
  map.max_blur_px = max_blur;
  map.pixel_pitch_um = stack.camera.pixel_pitch_um;
  map.normalized = Grid(volume.rows(), volume.cols());

  parallel_for(0, volume.rows(), [&](int r) {
    for (int c = 0; c < volume.cols(); ++c) {
      int best = 0;
      double best_cost = volume.cost[0](r, c);
      for (int k = 1; k < planes; ++k) {
        const double cost = volume.cost[k](r, c);
        const bool tie_toward_focus =
            cost == best_cost && std::fabs(stack.planes[k].signed_blur_px) <
                                     std::fabs(stack.planes[best].signed_blur_px);
        if (cost < best_cost || tie_toward_focus) {
          best = k;
          best_cost = cost;
        }
      }
      double blur = stack.planes[best].signed_blur_px;
      if (best > 0 && best < planes - 1) {
        const double cm = volume.cost[best - 1](r, c);
        const double cp = volume.cost[best + 1](r, c);
        const double denom = cm - 2.0 * best_cost + cp;
        if (denom > 1e-300) {
          const double delta = std::clamp(0.5 * (cm - cp) / denom, -0.5, 0.5);
          blur += delta * spacing;
        }
      }
      map.normalized(r, c) = std::clamp(blur / max_blur, -1.0, 1.0);
    }
  });
  return map;
}

Grid defocus_to_depth(const DefocusMap& map, const CameraConfig& camera) {
  camera.validate();
  if (map.normalized.empty()) throw ValidationError("defocus map is empty");
  Grid depth(map.normalized.rows(), map.normalized.cols());
  for (std::size_t i = 0; i < depth.size(); ++i)
    depth[i] = camera.depth_for_blur_px(map.normalized[i] * map.max_blur_px);
  return depth;
}

Image deblur_aif(const DualPixelCapture& capture, const DefocusMap& map, const PsfStack& stack,
                 double reg) {
  stack.validate();
  if (!(reg > 0.0) || !std::isfinite(reg))
    throw ValidationError("Wiener regularizer must be positive");
  if (capture.left.num_channels() == 0 || !capture.left.same_shape(capture.right))
    throw ValidationError("capture views disagree in shape");
  if (capture.left.rows() != map.normalized.rows() ||
      capture.left.cols() != map.normalized.cols())
    throw ValidationError("capture and defocus map shapes disagree");

  const int rows = capture.left.rows(), cols = capture.left.cols();
  const int ch_count = capture.left.num_channels();

  Image combined(rows, cols, ch_count);
  for (int ch = 0; ch < ch_count; ++ch)
    for (std::size_t i = 0; i < combined.channels[ch].size(); ++i)
      combined.channels[ch][i] =
          capture.left.channels[ch][i] + capture.right.channels[ch][i];

  // Assign each pixel its nearest plane, then deconvolve once per plane in use.
  std::vector<int> assignment(static_cast<std::size_t>(rows) * cols);
  std::set<int> used;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int k = stack.plane_nearest_blur(map.normalized(r, c) * map.max_blur_px);
      assignment[static_cast<std::size_t>(r) * cols + c] = k;
      used.insert(k);
    }
  const std::vector<int> used_planes(used.begin(), used.end());

  // Mirror padding before the FFT keeps the periodic extension continuous;
  // deconvolving a zero-padded field instead rings across the whole image
  // through the near-null inverse gains.
  const int pad = stack.kernel_extent_px;
  const int pad_r = rows + 2 * pad;
  const int pad_c = cols + 2 * pad;
  const int off = stack.kernel_extent_px / 2;
  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -1 - i : 2 * n - 1 - i;
    return i;
  };

  std::vector<Image> restored(used_planes.size());
  parallel_for(0, static_cast<int>(used_planes.size()), [&](int ui) {
    const PsfPlane& p = stack.planes[used_planes[ui]];
    Grid kernel(stack.kernel_extent_px, stack.kernel_extent_px);
    for (std::size_t i = 0; i < kernel.size(); ++i) kernel[i] = p.left[i] + p.right[i];
    const double mass = grid_sum(kernel);
    Image& out = restored[ui];
    out = Image(rows, cols, ch_count);

    if (p.signed_blur_px == 0.0) {
      // In-focus kernels are deltas; deconvolution reduces to undoing the
      // stack's light loss.
      if (!(mass > 0.0)) return;
      for (int ch = 0; ch < ch_count; ++ch)
        for (std::size_t i = 0; i < out.channels[ch].size(); ++i)
          out.channels[ch][i] = combined.channels[ch][i] / mass;
      return;
    }
    if (!(mass > 0.0)) return;  // fully masked plane, nothing to restore

    // Kernel centered on the origin of the circular domain.
    Grid kernel_wrapped(pad_r, pad_c);
    for (int r = 0; r < kernel.rows(); ++r)
      for (int c = 0; c < kernel.cols(); ++c) {
        const int rr = (r - off + pad_r) % pad_r;
        const int cc = (c - off + pad_c) % pad_c;
        kernel_wrapped(rr, cc) = kernel(r, c);
      }
    ComplexGrid spec_k = fft2_of(kernel_wrapped);
    double peak_power = 0.0;
    for (const auto& v : spec_k.data) peak_power = std::max(peak_power, std::norm(v));
    const double lambda = reg * peak_power;

    for (int ch = 0; ch < ch_count; ++ch) {
      Grid padded(pad_r, pad_c);
      for (int r = 0; r < pad_r; ++r)
        for (int c = 0; c < pad_c; ++c)
          padded(r, c) = combined.channels[ch](reflect(r - pad, rows), reflect(c - pad, cols));
      ComplexGrid spec = fft2_of(padded);
      for (std::size_t i = 0; i < spec.data.size(); ++i) {
        const auto h = spec_k.data[i];
        spec.data[i] = spec.data[i] * std::conj(h) / (std::norm(h) + lambda);
      }
      fft2(spec, false);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          out.channels[ch](r, c) = spec.at(r + pad, c + pad).real();
    }
  });

  Image aif(rows, cols, ch_count);
  const double ceiling = std::max(0.0, image_max(combined));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int k = assignment[static_cast<std::size_t>(r) * cols + c];
      const std::size_t ui =
          std::lower_bound(used_planes.begin(), used_planes.end(), k) - used_planes.begin();
      for (int ch = 0; ch < ch_count; ++ch)
        aif.channels[ch](r, c) =
            std::clamp(restored[ui].channels[ch](r, c), 0.0, ceiling);
    }
  return aif;
}

double cost_volume_margin(const CostVolume& volume, int margin) {
  if (volume.num_planes() < 2) throw ValidationError("margin needs at least two planes");
  if (volume.rows() <= 2 * margin || volume.cols() <= 2 * margin)
    throw ValidationError("interior margin leaves no pixels");
  double acc = 0.0;
  long n = 0;
  for (int r = margin; r < volume.rows() - margin; ++r)
    for (int c = margin; c < volume.cols() - margin; ++c) {
      double best = std::numeric_limits<double>::infinity();
      double second = std::numeric_limits<double>::infinity();
      for (int k = 0; k < volume.num_planes(); ++k) {
        const double v = volume.cost[k](r, c);
        if (v < best) {
          second = best;
          best = v;
        } else if (v < second) {
          second = v;
        }
      }
      acc += second - best;
      ++n;
    }
  return acc / static_cast<double>(n);
}

}  // namespace codedp
