#include "codedp/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "codedp/errors.hpp"
#include "codedp/fft.hpp"
#include "codedp/parallel.hpp"

namespace codedp {

namespace {
constexpr double kVisibilityFloor = 1e-8;  // below this the pixel sees nothing of the layer
}

void MpiScene::validate() const {
  if (layers.empty()) throw ValidationError("scene has no layers");
  const int r = rows(), c = cols(), ch = num_channels();
  for (const MpiLayer& l : layers) {
    if (l.alpha.rows() != r || l.alpha.cols() != c || l.intensity.rows() != r ||
        l.intensity.cols() != c || l.intensity.num_channels() != ch)
      throw ValidationError("scene layer shapes disagree");
  }
  for (int i = 1; i < num_layers(); ++i)
    if (!(layers[i].signed_blur_px < layers[i - 1].signed_blur_px))
      throw ValidationError("scene layers must run farthest to nearest");
}

MpiScene build_mpi(const Image& intensity, const Grid& depth_mm, const CameraConfig& camera,
                   const PsfStack& stack) {
  camera.validate();
  stack.validate();
  if (intensity.num_channels() != 1 && intensity.num_channels() != 3)
    throw ValidationError("scene intensity must have one or three channels");
  if (intensity.rows() != depth_mm.rows() || intensity.cols() != depth_mm.cols())
    throw ValidationError("intensity and depth shapes disagree");
  for (std::size_t i = 0; i < depth_mm.size(); ++i)
    if (!(depth_mm[i] > 0.0) || !std::isfinite(depth_mm[i]))
      throw ValidationError("depth map must be positive and finite");

  const int planes = stack.num_planes();
  MpiScene scene;
  scene.layers.resize(planes);
  for (int k = 0; k < planes; ++k) {
    // Farthest first: the largest signed blur is the last stack plane.
    const int plane = planes - 1 - k;
    MpiLayer& l = scene.layers[k];
    l.plane_index = plane;
    l.signed_blur_px = stack.planes[plane].signed_blur_px;
    l.alpha = Grid(depth_mm.rows(), depth_mm.cols());
    l.intensity = Image(depth_mm.rows(), depth_mm.cols(), intensity.num_channels());
  }

  const double max_blur = stack.planes.back().signed_blur_px;
  const double min_blur = stack.planes.front().signed_blur_px;
  for (int r = 0; r < depth_mm.rows(); ++r) {
    for (int c = 0; c < depth_mm.cols(); ++c) {
      double blur = camera.blur_px_at_depth(depth_mm(r, c));
      if (blur < min_blur || blur > max_blur) {
        blur = std::clamp(blur, min_blur, max_blur);
        ++scene.clamped_pixel_count;
      }
      const int plane = stack.plane_nearest_blur(blur);
      const int layer = planes - 1 - plane;
      scene.layers[layer].alpha(r, c) = 1.0;
      for (int ch = 0; ch < intensity.num_channels(); ++ch)
        scene.layers[layer].intensity.channels[ch](r, c) = intensity.channels[ch](r, c);
    }
  }
  return scene;
}

Image composite_sharp(const MpiScene& scene) {
  scene.validate();
  Image out(scene.rows(), scene.cols(), scene.num_channels());
  for (const MpiLayer& l : scene.layers)
    for (int ch = 0; ch < out.num_channels(); ++ch)
      for (std::size_t i = 0; i < out.channels[ch].size(); ++i)
        out.channels[ch][i] += l.intensity.channels[ch][i];
  return out;
}

Grid scene_normalized_defocus(const MpiScene& scene, double max_blur_px) {
  scene.validate();
  if (!(max_blur_px > 0.0)) throw ValidationError("maximum blur must be positive");
  Grid out(scene.rows(), scene.cols());
  for (const MpiLayer& l : scene.layers) {
    const double v = l.signed_blur_px / max_blur_px;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v * l.alpha[i];
  }
  return out;
}

namespace {

void check_scene_stack(const MpiScene& scene, const PsfStack& stack) {
  scene.validate();
  stack.validate();
  for (const MpiLayer& l : scene.layers) {
    if (l.plane_index < 0 || l.plane_index >= stack.num_planes())
      throw ValidationError("scene layer references a plane outside the stack");
    if (l.signed_blur_px != stack.planes[l.plane_index].signed_blur_px)
      throw ValidationError("scene layer blur disagrees with its stack plane");
  }
}

bool layer_is_empty(const MpiLayer& l) { return grid_max(l.alpha) <= 0.0; }

}  // namespace

DualPixelCapture render_simple(const MpiScene& scene, const PsfStack& stack) {
  check_scene_stack(scene, stack);
  const int k_count = scene.num_layers();
  const int ch_count = scene.num_channels();

  // Per-layer contributions land in private buffers; the sum is sequential so
  // the result never depends on thread scheduling.
  std::vector<std::vector<Grid>> left(k_count), right(k_count);
  parallel_for(0, k_count, [&](int k) {
    const MpiLayer& l = scene.layers[k];
    if (layer_is_empty(l)) return;
    const PsfPlane& p = stack.planes[l.plane_index];
    left[k].resize(ch_count);
    right[k].resize(ch_count);
    for (int ch = 0; ch < ch_count; ++ch) {
      left[k][ch] = conv2_same(l.intensity.channels[ch], p.left);
      right[k][ch] = conv2_same(l.intensity.channels[ch], p.right);
    }
  });

  DualPixelCapture cap;
  cap.left = Image(scene.rows(), scene.cols(), ch_count);
  cap.right = Image(scene.rows(), scene.cols(), ch_count);
  for (int k = 0; k < k_count; ++k) {
    if (left[k].empty()) continue;
    for (int ch = 0; ch < ch_count; ++ch) {
      for (std::size_t i = 0; i < cap.left.channels[ch].size(); ++i) {
        cap.left.channels[ch][i] += left[k][ch][i];
        cap.right.channels[ch][i] += right[k][ch][i];
      }
    }
  }
  return cap;
}

std::vector<Grid> preprocess_alphas(const MpiScene& scene) {
  scene.validate();
  const int k_count = scene.num_layers();
  const int rows = scene.rows(), cols = scene.cols();

  // 3x3 max-pool dilates each layer so its silhouette covers the blur seam.
  std::vector<Grid> pooled(k_count);
  for (int k = 0; k < k_count; ++k) {
    const Grid& a = scene.layers[k].alpha;
    Grid& p = pooled[k];
    p = Grid(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        double m = 0.0;
        for (int dr = -1; dr <= 1; ++dr) {
          const int rr = r + dr;
          if (rr < 0 || rr >= rows) continue;
          for (int dc = -1; dc <= 1; ++dc) {
            const int cc = c + dc;
            if (cc < 0 || cc >= cols) continue;
            m = std::max(m, a(rr, cc));
          }
        }
        p(r, c) = m;
      }
  }

  // Blend toward the nearer neighbor so hard layer boundaries split their
  // weight across the two adjacent depths. The nearest layer has no nearer
  // neighbor and keeps its pooled alpha.
  std::vector<Grid> blended(k_count);
  for (int k = 0; k < k_count; ++k) {
    blended[k] = Grid(rows, cols);
    for (std::size_t i = 0; i < blended[k].size(); ++i) {
      const double nearer = (k + 1 < k_count) ? pooled[k + 1][i] : pooled[k][i];
      blended[k][i] = 0.5 * (pooled[k][i] + nearer);
    }
  }

  // Renormalize: the binary alphas partitioned the image, so the blended
  // stack sums to at least 1/2 everywhere and division is safe.
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int k = 0; k < k_count; ++k) s += blended[k](r, c);
      for (int k = 0; k < k_count; ++k) blended[k](r, c) /= s;
    }
  return blended;
}

DualPixelCapture render_occlusion_aware(const MpiScene& scene, const PsfStack& stack) {
  check_scene_stack(scene, stack);
  const int k_count = scene.num_layers();
  const int ch_count = scene.num_channels();
  const int rows = scene.rows(), cols = scene.cols();

  const std::vector<Grid> alphas = preprocess_alphas(scene);

  // Cumulative occupancy from the back through layer k.
  std::vector<Grid> cum(k_count);
  for (int k = 0; k < k_count; ++k) {
    cum[k] = k == 0 ? alphas[0] : cum[k - 1];
    if (k > 0)
      for (std::size_t i = 0; i < cum[k].size(); ++i) cum[k][i] += alphas[k][i];
  }

  struct LayerTerms {
    bool active = false;
    std::vector<Grid> data;  // per channel, already visibility-normalized
    Grid attenuation;        // blurred own-alpha over blurred visibility
  };
  std::vector<LayerTerms> terms_left(k_count), terms_right(k_count);

  auto compute_side = [&](DpSide side, std::vector<LayerTerms>& terms) {
    parallel_for(0, k_count, [&](int k) {
      const MpiLayer& l = scene.layers[k];
      // Blended alpha bounds the binary alpha from below, so an all-zero
      // blended layer has no data and no attenuation either.
      if (grid_max(alphas[k]) <= 0.0) return;
      const PsfPlane& p = stack.planes[l.plane_index];
      const Grid& h = side == DpSide::kLeft ? p.left : p.right;
      const double mass = grid_sum(h);
      if (!(mass > 0.0)) return;  // fully masked plane contributes nothing
      Grid h_unit = scaled(h, 1.0 / mass);

      LayerTerms& t = terms[k];
      t.active = true;
      const Grid visibility = conv2_same(cum[k], h_unit);
      const Grid own = conv2_same(alphas[k], h_unit);
      t.attenuation = Grid(rows, cols);
      for (std::size_t i = 0; i < t.attenuation.size(); ++i) {
        t.attenuation[i] = visibility[i] >= kVisibilityFloor
                               ? std::clamp(own[i] / visibility[i], 0.0, 1.0)
                               : 0.0;
      }
      t.data.resize(ch_count);
      for (int ch = 0; ch < ch_count; ++ch) {
        Grid d = conv2_same(l.intensity.channels[ch], h);
        for (std::size_t i = 0; i < d.size(); ++i)
          d[i] = visibility[i] >= kVisibilityFloor ? d[i] / visibility[i] : 0.0;
        t.data[ch] = std::move(d);
      }
    });
  };
  compute_side(DpSide::kLeft, terms_left);
  compute_side(DpSide::kRight, terms_right);

  // Each layer is attenuated by the nearer layers only, so walk nearest first
  // with a running transmittance and fold each layer's factor in after its
  // data has been added.
  auto composite = [&](const std::vector<LayerTerms>& terms) {
    Image out(rows, cols, ch_count);
    Grid transmit(rows, cols, 1.0);
    for (int k = k_count - 1; k >= 0; --k) {
      const LayerTerms& t = terms[k];
      if (t.active) {
        for (int ch = 0; ch < ch_count; ++ch)
          for (std::size_t i = 0; i < out.channels[ch].size(); ++i)
            out.channels[ch][i] += t.data[ch][i] * transmit[i];
        for (std::size_t i = 0; i < transmit.size(); ++i)
          transmit[i] *= 1.0 - t.attenuation[i];
      }
    }
    return out;
  };

  DualPixelCapture cap;
  cap.left = composite(terms_left);
  cap.right = composite(terms_right);
  return cap;
}

DualPixelCapture add_noise(const DualPixelCapture& capture, double a, double b,
                           std::uint64_t seed) {
  if (a < 0.0 || b < 0.0) throw ValidationError("noise coefficients must be non-negative");
  if (capture.noise.has_value()) throw StateError("capture already carries noise");
  if (capture.left.num_channels() == 0 || !capture.left.same_shape(capture.right))
    throw ValidationError("capture views disagree in shape");

  std::mt19937_64 rng(seed);
  // Box-Muller on explicit uniforms keeps the stream identical across
  // standard libraries; std::normal_distribution would not.
  bool have_spare = false;
  double spare = 0.0;
  auto next_gaussian = [&]() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    const double u1 =
        (static_cast<double>(rng() >> 11) + 1.0) / 9007199254740993.0;  // (0, 1)
    const double u2 = static_cast<double>(rng() >> 11) / 9007199254740992.0;  // [0, 1)
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare = mag * std::sin(angle);
    have_spare = true;
    return mag * std::cos(angle);
  };

  DualPixelCapture out = capture;
  auto corrupt = [&](Image& img) {
    for (Grid& ch : img.channels)
      for (std::size_t i = 0; i < ch.size(); ++i) {
        const double x = ch[i];
        const double sigma = std::sqrt(std::max(0.0, a * x + b));
        ch[i] = std::max(0.0, x + sigma * next_gaussian());
      }
  };
  corrupt(out.left);
  corrupt(out.right);
  out.noise = NoiseParams{a, b, seed};
  return out;
}

DualPixelCapture render_with_psf_sampling(const MpiScene& scene,
                                          const std::vector<PsfStack>& stacks,
                                          std::uint64_t seed) {
  if (stacks.empty()) throw ValidationError("PSF sampling needs at least one stack");
  for (const PsfStack& s : stacks) {
    if (s.num_planes() != stacks[0].num_planes() ||
        s.kernel_extent_px != stacks[0].kernel_extent_px)
      throw ValidationError("sampled stacks must share plane count and extent");
  }
  std::mt19937_64 rng(seed);
  const std::size_t pick = static_cast<std::size_t>(rng() % stacks.size());
  return render_occlusion_aware(scene, stacks[pick]);
}

}  // namespace codedp
