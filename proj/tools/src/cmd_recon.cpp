#include <filesystem>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "codedp/errors.hpp"
#include "codedp/grid.hpp"
#include "codedp/image_io.hpp"
#include "codedp/recon.hpp"
#include "codedp/serialize.hpp"
#include "common.hpp"

namespace codedp::tool {

namespace {

struct ReconArgs {
  std::string capture;
  std::string stack;
  std::string out;
  double reg = 1e-2;
  int patch_radius = 3;
  int median = 0;  // 0 disables; otherwise odd window for the depth preview
};

void run(const ReconArgs& args) {
  const DualPixelCapture capture = load_capture(args.capture);
  const PsfStack stack = load_psf_stack(args.stack);

  const CostVolume volume = defocus_cost_volume(capture, stack, args.patch_radius);
  const DefocusMap defocus = estimate_defocus(volume, stack);
  const Grid depth_mm = defocus_to_depth(defocus, stack.camera);
  const Image aif = deblur_aif(capture, defocus, stack, args.reg);

  std::filesystem::create_directories(args.out);
  const std::filesystem::path out(args.out);
  save_pfm((out / "defocus.pfm").string(), defocus.normalized);
  save_pfm((out / "depth.pfm").string(), depth_mm);
  save_pfm((out / "aif.pfm").string(), aif);
  save_image_preview(args.out, "aif_preview", aif);
  save_signed_ppm((out / "defocus_preview.ppm").string(), defocus.normalized, 1.0);

  // Preview-only smoothing: the PFM outputs above stay untouched.
  Grid depth_preview = depth_mm;
  if (args.median > 1) depth_preview = median_filter(depth_preview, args.median);
  const double near = stack.camera.depth_for_blur_px(-stack.camera.max_blur_px);
  const double far = stack.camera.depth_for_blur_px(stack.camera.max_blur_px);
  save_pgm16((out / "depth_preview.pgm").string(), depth_preview, near, far);

  Manifest run_manifest;
  describe_run(run_manifest, "recon");
  run_manifest.set("capture", args.capture);
  run_manifest.set("stack", args.stack);
  run_manifest.set("wiener_reg", args.reg);
  run_manifest.set("patch_radius", std::to_string(args.patch_radius));
  run_manifest.set("median_preview", std::to_string(args.median));
  run_manifest.set("max_blur_px", stack.camera.max_blur_px);
  record_input(run_manifest, "capture_left",
               (std::filesystem::path(args.capture) / "left.pfm").string());
  record_input(run_manifest, "capture_right",
               (std::filesystem::path(args.capture) / "right.pfm").string());
  record_input(run_manifest, "stack",
               (std::filesystem::path(args.stack) / "stack.bin").string());
  write_run_manifest(args.out, run_manifest);
}

}  // namespace

void register_recon(CLI::App& app) {
  auto args = std::make_shared<ReconArgs>();
  CLI::App* cmd = app.add_subcommand(
      "recon", "Estimate defocus, depth, and the all-in-focus image from a capture");
  cmd->add_option("--capture", args->capture, "Capture directory from the render command")
      ->required();
  cmd->add_option("--stack", args->stack, "PSF stack directory used for the capture")
      ->required();
  cmd->add_option("--out", args->out, "Output directory")->required();
  cmd->add_option("--reg", args->reg, "Wiener regularizer relative to peak spectral power")
      ->capture_default_str();
  cmd->add_option("--patch-radius", args->patch_radius, "Cost aggregation window radius")
      ->capture_default_str();
  cmd->add_option("--median", args->median,
                  "Odd median window applied to the depth preview only; 0 disables")
      ->capture_default_str();
  cmd->callback([args] { run(*args); });
}

}  // namespace codedp::tool
