#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "codedp/errors.hpp"
#include "codedp/image_io.hpp"
#include "codedp/render.hpp"
#include "codedp/serialize.hpp"
#include "common.hpp"

namespace codedp::tool {

namespace {

struct RenderArgs {
  std::string scene;
  std::string depth;
  std::vector<std::string> stacks;
  std::string out;
  std::string occlusion = "on";
  double noise_a = 0.0;
  double noise_b = 0.0;
  std::uint64_t seed = 0;
};

void run(const RenderArgs& args) {
  std::vector<PsfStack> stacks;
  stacks.reserve(args.stacks.size());
  for (const std::string& dir : args.stacks) stacks.push_back(load_psf_stack(dir));

  const Image intensity = load_image_any(args.scene);
  const Grid depth_mm = load_pfm_gray(args.depth);
  const MpiScene scene = build_mpi(intensity, depth_mm, stacks[0].camera, stacks[0]);

  DualPixelCapture capture;
  if (stacks.size() > 1) {
    if (args.occlusion == "off")
      throw ValidationError("PSF sampling always renders occlusion aware; drop --occlusion off");
    capture = render_with_psf_sampling(scene, stacks, args.seed);
  } else if (args.occlusion == "on") {
    capture = render_occlusion_aware(scene, stacks[0]);
  } else {
    capture = render_simple(scene, stacks[0]);
  }
  if (args.noise_a > 0.0 || args.noise_b > 0.0)
    capture = add_noise(capture, args.noise_a, args.noise_b, args.seed);

  save_capture(args.out, capture);
  save_image_preview(args.out, "left_preview", capture.left);
  save_image_preview(args.out, "right_preview", capture.right);

  Manifest run_manifest;
  describe_run(run_manifest, "render");
  run_manifest.set("scene", args.scene);
  run_manifest.set("depth", args.depth);
  run_manifest.set("occlusion", args.occlusion);
  run_manifest.set("noise_a", args.noise_a);
  run_manifest.set("noise_b", args.noise_b);
  run_manifest.set("seed", std::to_string(args.seed));
  run_manifest.set("clamped_pixels", std::to_string(scene.clamped_pixel_count));
  record_input(run_manifest, "scene", args.scene);
  record_input(run_manifest, "depth", args.depth);
  for (std::size_t i = 0; i < args.stacks.size(); ++i)
    record_input(run_manifest, "stack" + std::to_string(i),
                 (std::filesystem::path(args.stacks[i]) / "stack.bin").string());
  write_run_manifest(args.out, run_manifest);
}

}  // namespace

void register_render(CLI::App& app) {
  auto args = std::make_shared<RenderArgs>();
  CLI::App* cmd = app.add_subcommand(
      "render", "Render a dual-pixel capture from an intensity image and a depth map");
  cmd->add_option("--scene", args->scene, "Intensity image (PGM/PPM/PFM)")->required();
  cmd->add_option("--depth", args->depth, "Depth map in millimeters (PFM)")->required();
  cmd->add_option("--stack", args->stacks,
                  "PSF stack directory; repeat to sample one stack at random")
      ->required();
  cmd->add_option("--out", args->out, "Output capture directory")->required();
  cmd->add_option("--occlusion", args->occlusion, "Occlusion-aware compositing: on or off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  cmd->add_option("--noise-a", args->noise_a, "Signal-dependent noise variance slope")
      ->capture_default_str();
  cmd->add_option("--noise-b", args->noise_b, "Signal-independent noise variance floor")
      ->capture_default_str();
  cmd->add_option("--seed", args->seed, "Seed for noise draws and stack sampling")
      ->capture_default_str();
  cmd->callback([args] { run(*args); });
}

}  // namespace codedp::tool
