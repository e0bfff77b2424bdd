#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "codedp/errors.hpp"
#include "codedp/image_io.hpp"
#include "codedp/mask.hpp"
#include "codedp/metrics.hpp"
#include "common.hpp"

namespace codedp::tool {

namespace {

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string out;
  std::string mask_check;
  double delta_threshold = 1.05;
  double peak = 1.0;
};

struct SceneScore {
  std::string name;
  double rmse = 0.0, mae = 0.0, delta1 = 0.0;
  double ai1 = 0.0, ai2 = 0.0, spearman = 0.0;
  double psnr = 0.0, ssim = 0.0;
};

std::string score_fields(const SceneScore& s) {
  std::string line;
  line += "rmse=" + format_double(s.rmse);
  line += " mae=" + format_double(s.mae);
  line += " delta1=" + format_double(s.delta1);
  line += " ai1=" + format_double(s.ai1);
  line += " ai2=" + format_double(s.ai2);
  line += " spearman=" + format_double(s.spearman);
  line += " psnr=" + format_double(s.psnr);
  line += " ssim=" + format_double(s.ssim);
  return line;
}

std::vector<std::string> scene_names(const std::filesystem::path& pred_dir) {
  if (!std::filesystem::is_directory(pred_dir))
    throw IoError("prediction directory not found: " + pred_dir.string());
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(pred_dir))
    if (entry.is_directory()) names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  if (names.empty()) throw IoError("no scene subdirectories under " + pred_dir.string());
  return names;
}

void run(const EvalArgs& args) {
  const bool compare = !args.pred.empty() || !args.gt.empty();
  if (compare && (args.pred.empty() || args.gt.empty()))
    throw ValidationError("--pred and --gt go together");
  if (!compare && args.mask_check.empty())
    throw ValidationError("nothing to evaluate: give --pred/--gt or --mask-check");

  std::filesystem::create_directories(args.out);
  Manifest run_manifest;
  describe_run(run_manifest, "eval");
  run_manifest.set("pred", args.pred.empty() ? "none" : args.pred);
  run_manifest.set("gt", args.gt.empty() ? "none" : args.gt);
  run_manifest.set("delta_threshold", args.delta_threshold);
  run_manifest.set("peak", args.peak);
  run_manifest.set("mask_check", args.mask_check.empty() ? "none" : args.mask_check);

  std::vector<std::string> lines;
  if (compare) {
    std::vector<SceneScore> scores;
    for (const std::string& name : scene_names(args.pred)) {
      const std::filesystem::path p = std::filesystem::path(args.pred) / name;
      const std::filesystem::path g = std::filesystem::path(args.gt) / name;
      for (const auto& f : {p / "depth.pfm", p / "aif.pfm", g / "depth.pfm", g / "aif.pfm"})
        if (!std::filesystem::exists(f)) throw IoError("missing file: " + f.string());

      SceneScore s;
      s.name = name;
      const Grid pred_depth = load_pfm_gray((p / "depth.pfm").string());
      const Grid gt_depth = load_pfm_gray((g / "depth.pfm").string());
      const DepthMetrics dm = depth_metrics(pred_depth, gt_depth, args.delta_threshold);
      s.rmse = dm.rmse;
      s.mae = dm.mae;
      s.delta1 = dm.delta1;
      const AffineInvariantMetrics ai = affine_invariant_metrics(pred_depth, gt_depth);
      s.ai1 = ai.ai1;
      s.ai2 = ai.ai2;
      s.spearman = ai.one_minus_abs_spearman;
      const ImageMetrics im = image_metrics(load_pfm((p / "aif.pfm").string()),
                                            load_pfm((g / "aif.pfm").string()), args.peak);
      s.psnr = im.psnr_db;
      s.ssim = im.ssim;
      scores.push_back(s);

      record_input(run_manifest, name + ".pred_depth", (p / "depth.pfm").string());
      record_input(run_manifest, name + ".pred_aif", (p / "aif.pfm").string());
      record_input(run_manifest, name + ".gt_depth", (g / "depth.pfm").string());
      record_input(run_manifest, name + ".gt_aif", (g / "aif.pfm").string());
    }

    SceneScore mean;
    for (const SceneScore& s : scores) {
      lines.push_back("scene=" + s.name + " " + score_fields(s));
      mean.rmse += s.rmse;
      mean.mae += s.mae;
      mean.delta1 += s.delta1;
      mean.ai1 += s.ai1;
      mean.ai2 += s.ai2;
      mean.spearman += s.spearman;
      mean.psnr += s.psnr;
      mean.ssim += s.ssim;
    }
    const double n = static_cast<double>(scores.size());
    mean.rmse /= n;
    mean.mae /= n;
    mean.delta1 /= n;
    mean.ai1 /= n;
    mean.ai2 /= n;
    mean.spearman /= n;
    mean.psnr /= n;
    mean.ssim /= n;
    lines.push_back("aggregate scenes=" + std::to_string(scores.size()) + " " +
                    score_fields(mean));
  }

  bool mask_ok = true;
  if (!args.mask_check.empty()) {
    const MaskPattern mask = builtin_mask(args.mask_check);
    const double t = transmission(mask);
    mask_ok = t >= 0.5;
    lines.push_back("mask=" + args.mask_check + " transmission=" + format_double(t) +
                    " min_transmission=0.5 pass=" + (mask_ok ? std::string("1") : "0"));
    run_manifest.set("mask_transmission", t);
    if (std::filesystem::exists(args.mask_check))
      record_input(run_manifest, "mask", args.mask_check);
  }

  const std::string report_path =
      (std::filesystem::path(args.out) / "report.txt").string();
  std::ofstream report(report_path);
  if (!report) throw IoError("cannot write " + report_path);
  for (const std::string& line : lines) {
    report << line << "\n";
    std::cout << line << "\n";
  }
  report.close();
  write_run_manifest(args.out, run_manifest);

  if (!mask_ok)
    throw ValidationError("mask transmission below one half: " + args.mask_check);
}

}  // namespace

void register_eval(CLI::App& app) {
  auto args = std::make_shared<EvalArgs>();
  CLI::App* cmd = app.add_subcommand(
      "eval", "Score reconstructed scenes against ground truth and check mask transmission");
  cmd->add_option("--pred", args->pred,
                  "Directory of reconstructed scenes (one subdirectory per scene)");
  cmd->add_option("--gt", args->gt, "Directory of ground-truth scenes, same layout");
  cmd->add_option("--out", args->out, "Output directory for report.txt")->required();
  cmd->add_option("--mask-check", args->mask_check,
                  "Mask name or image to verify for at least half transmission");
  cmd->add_option("--delta-threshold", args->delta_threshold, "Depth ratio pass threshold")
      ->capture_default_str();
  cmd->add_option("--peak", args->peak, "Peak intensity for the PSNR reference")
      ->capture_default_str();
  cmd->callback([args] { run(*args); });
}

}  // namespace codedp::tool
