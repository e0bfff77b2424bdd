#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "codedp/errors.hpp"
#include "codedp/image_io.hpp"
#include "codedp/mask.hpp"
#include "codedp/optimize.hpp"
#include "common.hpp"

namespace codedp::tool {

namespace {

struct OptimizeMaskArgs {
  std::string out;
  std::string objective = "mtf";
  std::string dataset;
  std::string resume;
  int checkpoint_every = 25;
  OptimizeConfig cfg;
  CameraConfig camera;
};

void run(const OptimizeMaskArgs& args) {
  OptimizeConfig cfg = args.cfg;
  cfg.objective =
      args.objective == "proxy" ? MaskObjective::kProxyRecon : MaskObjective::kMtfDiscriminability;

  std::optional<PatchSource> dataset;
  if (!args.dataset.empty()) dataset = PatchSource::from_directory(args.dataset);
  std::optional<Checkpoint> resume;
  if (!args.resume.empty()) resume = load_checkpoint(args.resume);

  std::filesystem::create_directories(args.out);
  const std::filesystem::path out(args.out);
  const std::string checkpoint_path = (out / "checkpoint.txt").string();

  const OptimizeTrace trace = optimize_mask(
      cfg, args.camera, DpPsfModelParams{}, dataset ? &*dataset : nullptr,
      resume ? &*resume : nullptr, checkpoint_path, args.checkpoint_every);

  save_mask((out / "mask_continuous.pgm").string(), trace.final_continuous);
  save_mask((out / "mask_binary.pgm").string(), trace.final_binary);
  save_pfm((out / "mask_continuous.pfm").string(), trace.final_continuous.grid);

  std::ofstream trace_out((out / "trace.txt").string());
  if (!trace_out) throw IoError("cannot write trace under " + args.out);
  trace_out << "# mask optimization trace\n";
  for (const TraceRecord& rec : trace.records) {
    trace_out << "iter=" << rec.iteration
              << " temperature=" << format_double(rec.temperature)
              << " objective=" << format_double(rec.objective)
              << " best=" << format_double(rec.best_objective)
              << " transmission=" << format_double(rec.transmission)
              << " grad_norm=" << format_double(rec.grad_norm) << "\n";
  }
  trace_out << "iterations_run=" << trace.iterations_run
            << " aborted=" << (trace.aborted ? 1 : 0) << "\n";
  trace_out.close();

  Manifest run_manifest;
  describe_run(run_manifest, "optimize-mask");
  describe_camera(run_manifest, args.camera);
  run_manifest.set("objective", args.objective);
  run_manifest.set("mask_size", std::to_string(cfg.mask_size));
  run_manifest.set("epochs", std::to_string(cfg.epochs));
  run_manifest.set("mask_learning_epochs", std::to_string(cfg.mask_learning_epochs));
  run_manifest.set("iterations", std::to_string(cfg.iterations));
  run_manifest.set("lr_mask", cfg.lr_mask);
  run_manifest.set("lr_decay_cosine", cfg.lr_decay_cosine ? "1" : "0");
  run_manifest.set("alpha0", cfg.alpha0);
  run_manifest.set("alpha_schedule_divisor", cfg.alpha_schedule_divisor);
  run_manifest.set("finite_diff_step", cfg.finite_diff_step);
  run_manifest.set("seed", std::to_string(cfg.seed));
  run_manifest.set("batch_patches", std::to_string(cfg.batch_patches));
  run_manifest.set("patch_size", std::to_string(cfg.patch_size));
  run_manifest.set("noise_a", cfg.noise_a);
  run_manifest.set("noise_b", cfg.noise_b);
  run_manifest.set("patch_radius", std::to_string(cfg.patch_radius));
  run_manifest.set("wiener_reg", cfg.wiener_reg);
  run_manifest.set("dataset", args.dataset.empty() ? "none" : args.dataset);
  run_manifest.set("resume", args.resume.empty() ? "none" : args.resume);
  run_manifest.set("checkpoint_every", std::to_string(args.checkpoint_every));
  run_manifest.set("iterations_run", std::to_string(trace.iterations_run));
  run_manifest.set("aborted", trace.aborted ? "1" : "0");
  run_manifest.set("final_transmission_continuous", transmission(trace.final_continuous));
  run_manifest.set("final_transmission_binary", transmission(trace.final_binary));
  if (!args.resume.empty()) record_input(run_manifest, "resume", args.resume);
  write_run_manifest(args.out, run_manifest);

  if (trace.aborted)
    throw NumericalError("optimization aborted on a non-finite objective or gradient");
}

}  // namespace

void register_optimize_mask(CLI::App& app) {
  auto args = std::make_shared<OptimizeMaskArgs>();
  CLI::App* cmd = app.add_subcommand(
      "optimize-mask", "Learn an aperture mask by annealed gradient descent");
  cmd->add_option("--out", args->out, "Output directory")->required();
  cmd->add_option("--objective", args->objective,
                  "mtf: spectral discriminability; proxy: reconstruction loss on a dataset")
      ->check(CLI::IsMember({"mtf", "proxy"}))
      ->capture_default_str();
  cmd->add_option("--size", args->cfg.mask_size, "Mask cells per side")->capture_default_str();
  cmd->add_option("--iterations", args->cfg.iterations,
                  "Descent steps; negative derives the count from the epoch split")
      ->capture_default_str();
  cmd->add_option("--epochs", args->cfg.epochs, "Total training epochs for the derived count")
      ->capture_default_str();
  cmd->add_option("--mask-epochs", args->cfg.mask_learning_epochs,
                  "Epochs during which the mask learns")
      ->capture_default_str();
  cmd->add_option("--lr", args->cfg.lr_mask, "Mask learning rate")->capture_default_str();
  cmd->add_flag_callback(
      "--no-cosine-lr", [args] { args->cfg.lr_decay_cosine = false; },
      "Use a constant learning rate instead of cosine decay");
  cmd->add_option("--alpha0", args->cfg.alpha0, "Initial sigmoid temperature")
      ->capture_default_str();
  cmd->add_option("--alpha-divisor", args->cfg.alpha_schedule_divisor,
                  "Iterations per unit temperature increase")
      ->capture_default_str();
  cmd->add_option("--fd-step", args->cfg.finite_diff_step, "Finite-difference step")
      ->capture_default_str();
  cmd->add_option("--seed", args->cfg.seed, "Sampling seed")->capture_default_str();
  cmd->add_option("--dataset", args->dataset,
                  "Scene directory for the proxy objective (aif.pfm + depth.pfm per scene)");
  cmd->add_option("--batch", args->cfg.batch_patches, "Patches per proxy iteration")
      ->capture_default_str();
  cmd->add_option("--patch-size", args->cfg.patch_size, "Square patch side")
      ->capture_default_str();
  cmd->add_option("--noise-a", args->cfg.noise_a, "Capture noise variance slope")
      ->capture_default_str();
  cmd->add_option("--noise-b", args->cfg.noise_b, "Capture noise variance floor")
      ->capture_default_str();
  cmd->add_option("--patch-radius", args->cfg.patch_radius, "Cost aggregation window radius")
      ->capture_default_str();
  cmd->add_option("--wiener-reg", args->cfg.wiener_reg, "Deblur regularizer")
      ->capture_default_str();
  cmd->add_option("--checkpoint-every", args->checkpoint_every, "Snapshot interval")
      ->capture_default_str();
  cmd->add_option("--resume", args->resume, "Checkpoint file to continue from");
  add_camera_options(cmd, args->camera);
  cmd->callback([args] { run(*args); });
}

}  // namespace codedp::tool
