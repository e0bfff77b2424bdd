#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "codedp/camera.hpp"
#include "codedp/grid.hpp"
#include "codedp/mask.hpp"
#include "codedp/metrics.hpp"
#include "codedp/psf.hpp"
#include "codedp/render.hpp"

namespace codedp {

enum class MaskObjective { kMtfDiscriminability, kProxyRecon };

struct OptimizeConfig {
  MaskObjective objective = MaskObjective::kMtfDiscriminability;
  int mask_size = 21;

  // Training schedule. iterations < 0 derives the count from the epoch split:
  // the mask learns during the first mask_learning_epochs of epochs total.
  int epochs = 80;
  int mask_learning_epochs = 30;
  int iterations = -1;
  double lr_mask = 3e-4;
  bool lr_decay_cosine = true;

  // Sigmoid sharpening: temperature(t) = alpha0 + t / alpha_schedule_divisor,
  // so the relaxed mask starts fully gray and tightens toward binary.
  double alpha0 = 0.0;
  double alpha_schedule_divisor = 8000.0;

  double finite_diff_step = 1e-4;
  std::uint64_t seed = 0;

  // Reconstruction-proxy objective knobs.
  int batch_patches = 4;
  int patch_size = 64;
  double noise_a = 0.0;
  double noise_b = 0.0;
  int patch_radius = 3;
  double wiener_reg = 1e-2;
  LossWeights weights;

  void validate() const;
};

double temperature_at(long t, const OptimizeConfig& cfg);

// Latent grid whose sigmoid starts as a soft open aperture: +3 inside the
// inscribed disc, -3 outside.
Grid initial_open_latent(int size);

// Objective over latent parameters; smaller is better. Callers bind the
// schedule step and any data before taking gradients.
using ObjectiveFn = std::function<double(const Grid& theta)>;

// Central finite differences, one coordinate at a time. The objective must be
// deterministic in theta (freeze any sampling before calling).
Grid finite_diff_gradient(const ObjectiveFn& f, const Grid& theta, double step = 1e-4);

// Spectral objective: negated mid-band MTF of the coded defocused kernels,
// negated dissimilarity between adjacent defocused planes, plus the
// transmission hinge. Lower is better, so descent brightens and spreads the
// per-plane spectra.
double objective_mtf_discriminability(const Grid& theta, long t, const PsfStack& naive_stack,
                                      const OptimizeConfig& cfg);

// Closed-form gradient of the same objective, for verifying the
// finite-difference machinery.
Grid mtf_discriminability_gradient(const Grid& theta, long t, const PsfStack& naive_stack,
                                   const OptimizeConfig& cfg);

// RGB-D crops feeding the reconstruction-proxy objective.
struct ScenePatch {
  Image intensity;
  Grid depth_mm;
};

class PatchSource {
 public:
  PatchSource() = default;
  explicit PatchSource(std::vector<ScenePatch> scenes);
  // Loads <scene>/aif.pfm + <scene>/depth.pfm from every subdirectory.
  static PatchSource from_directory(const std::string& dir);

  std::size_t size() const { return scenes_.size(); }
  const ScenePatch& at(std::size_t i) const { return scenes_[i]; }
  // Random scene, random crop. Scenes smaller than the patch are used whole.
  ScenePatch sample_patch(std::mt19937_64& rng, int patch_size) const;

 private:
  std::vector<ScenePatch> scenes_;
};

// Swappable reconstruction backend so tests can exercise the objective with
// an ideal reconstructor. Writes the all-in-focus estimate and the normalized
// defocus map for the given capture.
using ReconFn =
    std::function<void(const DualPixelCapture&, const PsfStack&, const MpiScene&, Image& aif,
                       Grid& defocus_normalized)>;

// Renders the batch through the coded stack, reconstructs, and averages the
// supervised training loss. noise_seed freezes the capture noise so paired
// finite-difference evaluations see identical draws.
double objective_proxy_recon(const Grid& theta, long t, const std::vector<ScenePatch>& batch,
                             const PsfStack& naive_stack, const OptimizeConfig& cfg,
                             std::uint64_t noise_seed, const ReconFn& recon = {});

struct TraceRecord {
  long iteration = 0;
  double temperature = 0.0;
  double objective = 0.0;
  double best_objective = 0.0;
  double transmission = 0.0;
  double grad_norm = 0.0;
};

struct OptimizeTrace {
  std::vector<TraceRecord> records;
  MaskPattern final_continuous;  // sigmoid of the best latent at the final temperature
  MaskPattern final_binary;      // thresholded and repaired to transmission >= 0.5
  long iterations_run = 0;
  bool aborted = false;  // non-finite objective or gradient stopped descent early
};

struct Checkpoint {
  Grid theta;
  long iteration = 0;
  std::string rng_state;  // serialized mt19937_64
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Gradient descent on the latent mask with the sharpening schedule and
// (optionally) cosine learning-rate decay. Returns the best latent seen, so
// the reported final objective never exceeds the initial one. The binary
// output is repaired to at least half transmission by reopening the closed
// cells with the largest sigmoid values.
OptimizeTrace optimize_mask(const OptimizeConfig& cfg, const CameraConfig& camera,
                            const DpPsfModelParams& model, const PatchSource* dataset = nullptr,
                            const Checkpoint* resume = nullptr,
                            const std::string& checkpoint_path = "",
                            int checkpoint_every = 25);

// Threshold at 1/2 and reopen the strongest closed cells until the binary
// mask transmits at least half the open aperture.
MaskPattern binarize_with_min_transmission(const MaskPattern& continuous);

}  // namespace codedp
