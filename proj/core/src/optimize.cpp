#include "codedp/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <sstream>

#include "codedp/errors.hpp"
#include "codedp/fft.hpp"
#include "codedp/image_io.hpp"
#include "codedp/parallel.hpp"
#include "codedp/recon.hpp"

namespace codedp {

namespace {
// Relative weight of the adjacent-plane dissimilarity term against the
// mid-band MTF term. The dissimilarity lives on normalized kernels, so its
// raw scale is much smaller.
constexpr double kDissimWeight = 10.0;
}  // namespace

void OptimizeConfig::validate() const {
  if (mask_size < 1) throw ValidationError("mask size must be positive");
  if (epochs < 1) throw ValidationError("epoch count must be positive");
  if (mask_learning_epochs < 0 || mask_learning_epochs > epochs)
    throw ValidationError("mask learning epochs cannot exceed total epochs");
  if (!(lr_mask > 0.0)) throw ValidationError("learning rate must be positive");
  if (!(alpha0 >= 0.0)) throw ValidationError("initial temperature must be non-negative");
  if (!(alpha_schedule_divisor > 0.0))
    throw ValidationError("temperature divisor must be positive");
  if (!(finite_diff_step > 0.0)) throw ValidationError("finite-difference step must be positive");
  if (batch_patches < 1) throw ValidationError("batch must hold at least one patch");
  if (patch_size < 1) throw ValidationError("patch size must be positive");
  if (noise_a < 0.0 || noise_b < 0.0)
    throw ValidationError("noise coefficients must be non-negative");
  if (patch_radius < 1) throw ValidationError("patch radius must be at least 1");
  if (!(wiener_reg > 0.0)) throw ValidationError("Wiener regularizer must be positive");
  weights.validate();
}

double temperature_at(long t, const OptimizeConfig& cfg) {
  if (t < 0) throw ValidationError("iteration count must be non-negative");
  return cfg.alpha0 + static_cast<double>(t) / cfg.alpha_schedule_divisor;
}

Grid initial_open_latent(int size) {
  const Grid disc = open_disc_grid(size);
  Grid latent(size, size);
  for (std::size_t i = 0; i < latent.size(); ++i) latent[i] = disc[i] > 0.0 ? 3.0 : -3.0;
  return latent;
}

Grid finite_diff_gradient(const ObjectiveFn& f, const Grid& theta, double step) {
  if (!(step > 0.0)) throw ValidationError("finite-difference step must be positive");
  if (theta.empty()) throw ValidationError("empty parameter grid");
  Grid grad(theta.rows(), theta.cols());
  parallel_for(0, static_cast<int>(theta.size()), [&](int i) {
    Grid probe = theta;
    probe[i] = theta[i] + step;
    const double hi = f(probe);
    probe[i] = theta[i] - step;
    const double lo = f(probe);
    grad[i] = (hi - lo) / (2.0 * step);
  });
  return grad;
}

namespace {

struct CodedPlaneSide {
  const Grid* naive = nullptr;        // h
  const std::vector<int>* map = nullptr;
  Grid coded;                         // K = M[map] . h
  double mass = 0.0;                  // S = sum(K)
};

// Sum of naive kernel mass behind each mask cell.
std::vector<double> cell_mass(const Grid& h, const std::vector<int>& map, int cells) {
  std::vector<double> acc(cells, 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) acc[map[i]] += h[i];
  return acc;
}

struct MtfObjectiveParts {
  double value = 0.0;
  double mtf_mean = 0.0;
  double dissim_mean = 0.0;
  double penalty = 0.0;
};

// Shared walk for the value and the gradient: enumerates defocused
// plane/sides of the coded stack with their resampled-cell maps.
class MtfObjectiveEval {
 public:
  MtfObjectiveEval(const Grid& theta, long t, const PsfStack& naive_stack,
                   const OptimizeConfig& cfg)
      : stack_(naive_stack), cfg_(cfg) {
    naive_stack.validate();
    if (naive_stack.coded)
      throw ValidationError("the spectral objective codes the stack itself; pass the naive stack");
    temperature_ = temperature_at(t, cfg);
    mask_ = mask_from_params(theta, temperature_);
    const int extent = stack_.kernel_extent_px;
    for (int p = 0; p < stack_.num_planes(); ++p) {
      if (stack_.planes[p].signed_blur_px == 0.0) continue;
      defocused_.push_back(p);
      maps_.push_back(mask_cell_map(mask_.size(), stack_.planes[p].signed_blur_px, extent,
                                    stack_.model));
    }
    for (std::size_t d = 0; d < defocused_.size(); ++d) {
      const PsfPlane& plane = stack_.planes[defocused_[d]];
      for (const Grid* h : {&plane.left, &plane.right}) {
        CodedPlaneSide ps;
        ps.naive = h;
        ps.map = &maps_[d];
        ps.coded = Grid(extent, extent);
        for (std::size_t i = 0; i < ps.coded.size(); ++i)
          ps.coded[i] = mask_.grid[(*ps.map)[i]] * (*h)[i];
        ps.mass = grid_sum(ps.coded);
        sides_.push_back(std::move(ps));
      }
    }
  }

  const MaskPattern& mask() const { return mask_; }
  double temperature() const { return temperature_; }
  int num_sides() const { return static_cast<int>(sides_.size()); }
  int num_pairs() const {
    // Adjacent defocused plane pairs: consecutive stack planes, per side.
    int pairs = 0;
    for (std::size_t d = 0; d + 1 < defocused_.size(); ++d)
      if (defocused_[d + 1] == defocused_[d] + 1) ++pairs;
    return pairs;
  }

  // Bins of the mid-band annulus for the stack extent.
  const std::vector<std::pair<int, int>>& band_bins() const {
    if (band_.empty()) {
      const int n = stack_.kernel_extent_px;
      for (int r = 0; r < n; ++r) {
        const double fy = dft_bin_frequency(r, n);
        for (int c = 0; c < n; ++c) {
          const double fx = dft_bin_frequency(c, n);
          const double f = std::hypot(fy, fx);
          if (f >= kMidBandLo && f <= kMidBandHi) band_.emplace_back(r, c);
        }
      }
      if (band_.empty()) throw NumericalError("kernel extent too small for the mid band");
    }
    return band_;
  }

  double midband_of(const CodedPlaneSide& ps) const {
    if (!(ps.mass > 0.0)) throw NumericalError("coded kernel carries no mass, MTF undefined");
    const ComplexGrid spec = fft2_of(ps.coded);
    double acc = 0.0;
    for (const auto& [r, c] : band_bins()) acc += std::abs(spec.at(r, c));
    return acc / (static_cast<double>(band_bins().size()) * ps.mass);
  }

  MtfObjectiveParts evaluate() const {
    MtfObjectiveParts parts;
    double mtf_acc = 0.0;
    for (const CodedPlaneSide& ps : sides_) mtf_acc += midband_of(ps);
    parts.mtf_mean = mtf_acc / num_sides();

    double dissim_acc = 0.0;
    int pair_terms = 0;
    for_each_pair([&](const CodedPlaneSide& a, const CodedPlaneSide& b) {
      double d = 0.0;
      for (std::size_t i = 0; i < a.coded.size(); ++i) {
        const double diff = a.coded[i] / a.mass - b.coded[i] / b.mass;
        d += diff * diff;
      }
      dissim_acc += d;
      ++pair_terms;
    });
    parts.dissim_mean = pair_terms > 0 ? dissim_acc / pair_terms : 0.0;

    parts.penalty = mask_regularizer(mask_, cfg_.weights.beta5);
    parts.value = -parts.mtf_mean - kDissimWeight * parts.dissim_mean + parts.penalty;
    return parts;
  }

  // Gradient with respect to the mask cells, same averaging as evaluate().
  std::vector<double> mask_gradient() const {
    const int cells = mask_.size() * mask_.size();
    std::vector<double> grad(cells, 0.0);
    const int n = stack_.kernel_extent_px;
    const double bins = static_cast<double>(band_bins().size());

    for (const CodedPlaneSide& ps : sides_) {
      const std::vector<double> a_c = cell_mass(*ps.naive, *ps.map, cells);
      const ComplexGrid spec = fft2_of(ps.coded);

      // Mid-band mean via the adjoint field: mb depends on each cell through
      // the spectrum and through the DC mass.
      double mb = 0.0;
      ComplexGrid v(n, n);
      for (const auto& [r, c] : band_bins()) {
        const std::complex<double> h = spec.at(r, c);
        const double mag = std::abs(h);
        mb += mag;
        if (mag > 0.0) v.at(r, c) = h / (mag * bins * ps.mass);
      }
      mb /= bins * ps.mass;
      fft2(v, false);  // inverse carries 1/N, undone below

      const double side_weight = -1.0 / num_sides();  // negated objective, averaged
      const double area = static_cast<double>(n) * n;
      for (std::size_t i = 0; i < ps.coded.size(); ++i) {
        const int cell = (*ps.map)[i];
        grad[cell] += side_weight * area * (*ps.naive)[i] * v.data[i].real();
      }
      for (int cell = 0; cell < cells; ++cell)
        grad[cell] += side_weight * (-mb / ps.mass) * a_c[cell];
    }

    // d = sum((Ka/Sa - Kb/Sb)^2): the factor 2 from the square folds into the
    // averaged dissimilarity weight.
    const int pair_terms = num_pairs() * 2;
    const double pair_weight = pair_terms > 0 ? -2.0 * kDissimWeight / pair_terms : 0.0;
    for_each_pair([&](const CodedPlaneSide& a, const CodedPlaneSide& b) {
      const std::vector<double> a_cells = cell_mass(*a.naive, *a.map, cells);
      const std::vector<double> b_cells = cell_mass(*b.naive, *b.map, cells);
      double ua = 0.0, ub = 0.0;
      std::vector<double> ta(cells, 0.0), tb(cells, 0.0);
      for (std::size_t i = 0; i < a.coded.size(); ++i) {
        const double diff = a.coded[i] / a.mass - b.coded[i] / b.mass;
        ua += diff * a.coded[i];
        ub += diff * b.coded[i];
        ta[(*a.map)[i]] += diff * (*a.naive)[i];
        tb[(*b.map)[i]] += diff * (*b.naive)[i];
      }
      for (int cell = 0; cell < cells; ++cell) {
        const double via_a = ta[cell] / a.mass - ua * a_cells[cell] / (a.mass * a.mass);
        const double via_b = tb[cell] / b.mass - ub * b_cells[cell] / (b.mass * b.mass);
        grad[cell] += pair_weight * (via_a - via_b);
      }
    });

    // Transmission hinge: active only below half transmission, where the
    // clamp cannot be engaged either.
    if (transmission(mask_) < 0.5) {
      const double open = grid_sum(open_disc_grid(mask_.size()));
      for (int cell = 0; cell < cells; ++cell) grad[cell] += -cfg_.weights.beta5 / open;
    }
    return grad;
  }

 private:
  template <typename Fn>
  void for_each_pair(const Fn& fn) const {
    for (std::size_t d = 0; d + 1 < defocused_.size(); ++d) {
      if (defocused_[d + 1] != defocused_[d] + 1) continue;
      fn(sides_[2 * d], sides_[2 * (d + 1)]);          // left kernels
      fn(sides_[2 * d + 1], sides_[2 * (d + 1) + 1]);  // right kernels
    }
  }

  const PsfStack& stack_;
  const OptimizeConfig& cfg_;
  double temperature_ = 0.0;
  MaskPattern mask_;
  std::vector<int> defocused_;
  std::vector<std::vector<int>> maps_;
  std::vector<CodedPlaneSide> sides_;
  mutable std::vector<std::pair<int, int>> band_;
};

}  // namespace

double objective_mtf_discriminability(const Grid& theta, long t, const PsfStack& naive_stack,
                                      const OptimizeConfig& cfg) {
  return MtfObjectiveEval(theta, t, naive_stack, cfg).evaluate().value;
}

Grid mtf_discriminability_gradient(const Grid& theta, long t, const PsfStack& naive_stack,
                                   const OptimizeConfig& cfg) {
  const MtfObjectiveEval eval(theta, t, naive_stack, cfg);
  const std::vector<double> mask_grad = eval.mask_gradient();
  const MaskPattern& mask = eval.mask();
  Grid grad(theta.rows(), theta.cols());
  // Chain through the sigmoid: dM/dtheta = temperature * M * (1 - M).
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] = mask_grad[i] * eval.temperature() * mask.grid[i] * (1.0 - mask.grid[i]);
  return grad;
}

PatchSource::PatchSource(std::vector<ScenePatch> scenes) : scenes_(std::move(scenes)) {
  for (const ScenePatch& s : scenes_) {
    if (s.intensity.rows() != s.depth_mm.rows() || s.intensity.cols() != s.depth_mm.cols())
      throw ValidationError("patch intensity and depth shapes disagree");
  }
}

PatchSource PatchSource::from_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  std::vector<ScenePatch> scenes;
  for (const std::string& name : names) {
    const fs::path scene_dir = fs::path(dir) / name;
    const fs::path aif = scene_dir / "aif.pfm";
    const fs::path depth = scene_dir / "depth.pfm";
    if (!fs::exists(aif) || !fs::exists(depth)) continue;
    ScenePatch patch;
    patch.intensity = load_image_any(aif.string());
    patch.depth_mm = load_pfm_gray(depth.string());
    if (patch.intensity.rows() != patch.depth_mm.rows() ||
        patch.intensity.cols() != patch.depth_mm.cols())
      throw ValidationError("scene " + name + ": intensity and depth shapes disagree");
    scenes.push_back(std::move(patch));
  }
  if (scenes.empty()) throw IoError("no scenes with aif.pfm and depth.pfm under " + dir);
  return PatchSource(std::move(scenes));
}

ScenePatch PatchSource::sample_patch(std::mt19937_64& rng, int patch_size) const {
  if (scenes_.empty()) throw ValidationError("patch source is empty");
  if (patch_size < 1) throw ValidationError("patch size must be positive");
  const ScenePatch& src = scenes_[static_cast<std::size_t>(rng() % scenes_.size())];
  const int rows = src.intensity.rows(), cols = src.intensity.cols();
  if (rows <= patch_size && cols <= patch_size) return src;
  const int pr = std::min(patch_size, rows), pc = std::min(patch_size, cols);
  const int r0 = static_cast<int>(rng() % static_cast<std::uint64_t>(rows - pr + 1));
  const int c0 = static_cast<int>(rng() % static_cast<std::uint64_t>(cols - pc + 1));
  ScenePatch out;
  out.intensity = Image(pr, pc, src.intensity.num_channels());
  out.depth_mm = Grid(pr, pc);
  for (int r = 0; r < pr; ++r)
    for (int c = 0; c < pc; ++c) {
      out.depth_mm(r, c) = src.depth_mm(r0 + r, c0 + c);
      for (int ch = 0; ch < src.intensity.num_channels(); ++ch)
        out.intensity.channels[ch](r, c) = src.intensity.channels[ch](r0 + r, c0 + c);
    }
  return out;
}

double objective_proxy_recon(const Grid& theta, long t, const std::vector<ScenePatch>& batch,
                             const PsfStack& naive_stack, const OptimizeConfig& cfg,
                             std::uint64_t noise_seed, const ReconFn& recon) {
  if (batch.empty()) throw ValidationError("objective batch is empty");
  naive_stack.validate();
  const MaskPattern mask = mask_from_params(theta, temperature_at(t, cfg));
  const PsfStack coded = code_psf_stack(naive_stack, mask);

  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const ScenePatch& patch = batch[b];
    const MpiScene scene = build_mpi(patch.intensity, patch.depth_mm, naive_stack.camera,
                                     naive_stack);
    DualPixelCapture cap = render_occlusion_aware(scene, coded);
    if (cfg.noise_a > 0.0 || cfg.noise_b > 0.0)
      cap = add_noise(cap, cfg.noise_a, cfg.noise_b, noise_seed + b);

    Image aif;
    Grid defocus_norm;
    if (recon) {
      recon(cap, coded, scene, aif, defocus_norm);
    } else {
      const CostVolume volume = defocus_cost_volume(cap, coded, cfg.patch_radius);
      const DefocusMap map = estimate_defocus(volume, coded);
      aif = deblur_aif(cap, map, coded, cfg.wiener_reg);
      defocus_norm = map.normalized;
    }

    const Image gt_aif = composite_sharp(scene);
    const Grid gt_defocus =
        scene_normalized_defocus(scene, naive_stack.camera.max_blur_px);
    loss += training_loss(aif, gt_aif, defocus_norm, gt_defocus, mask, cfg.weights).total;
  }
  return loss / static_cast<double>(batch.size());
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  Manifest m;
  m.set("type", "mask_checkpoint");
  m.set("version", "1");
  m.set("iteration", std::to_string(ckpt.iteration));
  m.set("rows", std::to_string(ckpt.theta.rows()));
  m.set("cols", std::to_string(ckpt.theta.cols()));
  m.set("rng", ckpt.rng_state);
  std::ostringstream theta;
  for (std::size_t i = 0; i < ckpt.theta.size(); ++i) {
    if (i) theta << ' ';
    theta << format_double(ckpt.theta[i]);
  }
  m.set("theta", theta.str());
  m.save(path);
}

Checkpoint load_checkpoint(const std::string& path) {
  const Manifest m = Manifest::load(path);
  if (m.get_or("type", "") != "mask_checkpoint")
    throw IoError("not a mask checkpoint: " + path);
  Checkpoint ckpt;
  ckpt.iteration = std::stol(m.get("iteration"));
  const int rows = std::stoi(m.get("rows"));
  const int cols = std::stoi(m.get("cols"));
  ckpt.rng_state = m.get("rng");
  ckpt.theta = Grid(rows, cols);
  std::istringstream theta(m.get("theta"));
  for (std::size_t i = 0; i < ckpt.theta.size(); ++i) {
    if (!(theta >> ckpt.theta[i])) throw IoError("truncated checkpoint parameters in " + path);
  }
  return ckpt;
}

MaskPattern binarize_with_min_transmission(const MaskPattern& continuous) {
  MaskPattern binary = binarize(continuous, 0.5);
  const double open = grid_sum(open_disc_grid(binary.size()));
  double admitted = grid_sum(binary.grid);
  if (admitted / open >= 0.5) return binary;

  // Reopen the strongest closed cells until half transmission is restored.
  std::vector<std::size_t> closed;
  for (std::size_t i = 0; i < binary.grid.size(); ++i)
    if (binary.grid[i] == 0.0) closed.push_back(i);
  std::stable_sort(closed.begin(), closed.end(), [&](std::size_t a, std::size_t b) {
    return continuous.grid[a] > continuous.grid[b];
  });
  for (std::size_t i : closed) {
    if (admitted / open >= 0.5) break;
    binary.grid[i] = 1.0;
    admitted += 1.0;
  }
  return binary;
}

OptimizeTrace optimize_mask(const OptimizeConfig& cfg, const CameraConfig& camera,
                            const DpPsfModelParams& model, const PatchSource* dataset,
                            const Checkpoint* resume, const std::string& checkpoint_path,
                            int checkpoint_every) {
  cfg.validate();
  camera.validate();
  model.validate();
  const bool proxy = cfg.objective == MaskObjective::kProxyRecon;
  if (proxy && (dataset == nullptr || dataset->size() == 0))
    throw ValidationError("the reconstruction-proxy objective needs a non-empty dataset");
  if (checkpoint_every < 1) throw ValidationError("checkpoint interval must be positive");

  const PsfStack naive = generate_psf_stack(camera, model);

  long total_iters = cfg.iterations;
  if (total_iters < 0) {
    long per_epoch = 1;
    if (dataset != nullptr && dataset->size() > 0)
      per_epoch = (static_cast<long>(dataset->size()) + cfg.batch_patches - 1) /
                  cfg.batch_patches;
    total_iters = static_cast<long>(cfg.mask_learning_epochs) * per_epoch;
  }

  Grid theta;
  std::mt19937_64 rng(cfg.seed);
  long start = 0;
  if (resume != nullptr) {
    if (resume->theta.rows() != cfg.mask_size || resume->theta.cols() != cfg.mask_size)
      throw ValidationError("checkpoint mask size disagrees with the configuration");
    theta = resume->theta;
    start = resume->iteration;
    std::istringstream state(resume->rng_state);
    if (!(state >> rng)) throw IoError("corrupt generator state in checkpoint");
  } else {
    theta = initial_open_latent(cfg.mask_size);
  }

  OptimizeTrace trace;
  Grid best_theta = theta;
  double best_objective = std::numeric_limits<double>::infinity();

  auto snapshot = [&](long iteration) {
    if (checkpoint_path.empty()) return;
    Checkpoint ckpt;
    ckpt.theta = theta;
    ckpt.iteration = iteration;
    std::ostringstream state;
    state << rng;
    ckpt.rng_state = state.str();
    save_checkpoint(checkpoint_path, ckpt);
  };

  for (long t = start; t < total_iters; ++t) {
    // Freeze this iteration's sampling so the finite-difference pairs see
    // identical batches and noise.
    std::vector<ScenePatch> batch;
    std::uint64_t noise_seed = 0;
    if (proxy) {
      for (int b = 0; b < cfg.batch_patches; ++b)
        batch.push_back(dataset->sample_patch(rng, cfg.patch_size));
      noise_seed = rng();
    }
    ObjectiveFn f = [&](const Grid& probe) {
      return proxy ? objective_proxy_recon(probe, t, batch, naive, cfg, noise_seed)
                   : objective_mtf_discriminability(probe, t, naive, cfg);
    };

    const double objective = f(theta);
    const Grid grad = finite_diff_gradient(f, theta, cfg.finite_diff_step);
    double grad_norm = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) grad_norm += grad[i] * grad[i];
    grad_norm = std::sqrt(grad_norm);

    if (!std::isfinite(objective) || !std::isfinite(grad_norm)) {
      trace.aborted = true;
      break;
    }
    if (objective < best_objective) {
      best_objective = objective;
      best_theta = theta;
    }

    TraceRecord rec;
    rec.iteration = t;
    rec.temperature = temperature_at(t, cfg);
    rec.objective = objective;
    rec.best_objective = best_objective;
    rec.transmission = transmission(mask_from_params(theta, rec.temperature));
    rec.grad_norm = grad_norm;
    trace.records.push_back(rec);

    const double lr =
        cfg.lr_decay_cosine
            ? cfg.lr_mask * 0.5 *
                  (1.0 + std::cos(std::numbers::pi * static_cast<double>(t) / total_iters))
            : cfg.lr_mask;
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];

    if ((t + 1) % checkpoint_every == 0 || t + 1 == total_iters) snapshot(t + 1);
  }
  trace.iterations_run = static_cast<long>(trace.records.size());

  if (trace.records.empty()) best_theta = theta;  // nothing evaluated, keep initialization
  const double final_temperature = temperature_at(total_iters, cfg);
  trace.final_continuous = mask_from_params(best_theta, final_temperature);
  trace.final_binary = binarize_with_min_transmission(trace.final_continuous);
  return trace;
}

}  // namespace codedp
