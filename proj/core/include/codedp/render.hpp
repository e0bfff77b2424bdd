#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "codedp/camera.hpp"
#include "codedp/grid.hpp"
#include "codedp/psf.hpp"

namespace codedp {

// One depth slab of a multiplane decomposition. Intensity is premultiplied:
// zero wherever alpha is zero.
struct MpiLayer {
  int plane_index = 0;  // index into the matching PsfStack
  double signed_blur_px = 0.0;
  Image intensity;
  Grid alpha;  // binary occupancy
};

// Layers ordered farthest to nearest, i.e. by decreasing signed blur. The
// binary alphas partition the image: they sum to one at every pixel.
struct MpiScene {
  std::vector<MpiLayer> layers;
  int clamped_pixel_count = 0;  // depth samples outside the blur range

  int num_layers() const { return static_cast<int>(layers.size()); }
  int rows() const { return layers.empty() ? 0 : layers[0].alpha.rows(); }
  int cols() const { return layers.empty() ? 0 : layers[0].alpha.cols(); }
  int num_channels() const { return layers.empty() ? 0 : layers[0].intensity.num_channels(); }
  void validate() const;
};

// Slices an RGB-D (or gray-D) input into one layer per stack plane by nearest
// signed blur. Depths outside the representable range clamp to the extreme
// planes and are counted in clamped_pixel_count.
MpiScene build_mpi(const Image& intensity, const Grid& depth_mm, const CameraConfig& camera,
                   const PsfStack& stack);

// Sum of the per-layer intensities: the all-in-focus composite.
Image composite_sharp(const MpiScene& scene);

// Per-pixel signed blur divided by max_blur, in [-1, 1].
Grid scene_normalized_defocus(const MpiScene& scene, double max_blur_px);

struct NoiseParams {
  double a = 0.0;
  double b = 0.0;
  std::uint64_t seed = 0;
};

struct DualPixelCapture {
  Image left;
  Image right;
  std::optional<NoiseParams> noise;
};

// Layer-wise convolve-and-add without occlusion handling.
DualPixelCapture render_simple(const MpiScene& scene, const PsfStack& stack);

// Alpha preparation for occlusion-aware rendering: 3x3 max-pool, then average
// each layer with its nearer neighbor, then renormalize to sum one per pixel.
std::vector<Grid> preprocess_alphas(const MpiScene& scene);

// Back-to-front composite where each layer's blurred contribution is
// normalized by the blurred visibility of everything at or behind it, and
// attenuated by the blurred alphas of nearer layers. Equals render_simple
// away from depth edges.
DualPixelCapture render_occlusion_aware(const MpiScene& scene, const PsfStack& stack);

// Heteroscedastic shot-plus-read noise: x + sqrt(a*x + b) * n, n ~ N(0,1),
// clamped at zero. The Gaussian draws come from a seeded generator so outputs
// are bit-reproducible across platforms.
DualPixelCapture add_noise(const DualPixelCapture& capture, double a, double b,
                           std::uint64_t seed);

// Picks one stack uniformly at random and renders with it: cheap stand-in for
// spatially varying optics, where the whole field of view sees one sample.
DualPixelCapture render_with_psf_sampling(const MpiScene& scene,
                                          const std::vector<PsfStack>& stacks,
                                          std::uint64_t seed);

}  // namespace codedp
