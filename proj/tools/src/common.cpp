#include "common.hpp"

#include <filesystem>

namespace codedp::tool {

void add_camera_options(CLI::App* cmd, CameraConfig& cam) {
  cmd->add_option("--focal-length-mm", cam.focal_length_mm, "Lens focal length")
      ->capture_default_str();
  cmd->add_option("--aperture-mm", cam.aperture_diameter_mm, "Aperture diameter")
      ->capture_default_str();
  cmd->add_option("--focus-mm", cam.focus_distance_mm, "Focus distance")
      ->capture_default_str();
  cmd->add_option("--pitch-um", cam.pixel_pitch_um, "Pixel pitch in micrometers")
      ->capture_default_str();
  cmd->add_option("--max-blur-px", cam.max_blur_px, "Largest handled blur radius circle")
      ->capture_default_str();
  cmd->add_option("--planes", cam.num_planes, "Depth plane count (odd)")
      ->capture_default_str();
}

void describe_run(Manifest& m, const std::string& command) {
  m.set("tool", "codedp");
  m.set("tool_version", kToolVersion);
  m.set("command", command);
}

void describe_camera(Manifest& m, const CameraConfig& cam) {
  m.set("focal_length_mm", cam.focal_length_mm);
  m.set("aperture_mm", cam.aperture_diameter_mm);
  m.set("focus_mm", cam.focus_distance_mm);
  m.set("pitch_um", cam.pixel_pitch_um);
  m.set("max_blur_px", cam.max_blur_px);
  m.set("planes", std::to_string(cam.num_planes));
}

void record_input(Manifest& m, const std::string& label, const std::string& path) {
  m.set("input_hash." + label, hash_hex(fnv1a64_file(path)));
}

void write_run_manifest(const std::string& dir, const Manifest& m) {
  std::filesystem::create_directories(dir);
  m.save((std::filesystem::path(dir) / "run.txt").string());
}

std::string save_image_preview(const std::string& dir, const std::string& basename,
                               const Image& img) {
  const bool rgb = img.num_channels() == 3;
  const std::string name = basename + (rgb ? ".ppm" : ".pgm");
  const std::string path = (std::filesystem::path(dir) / name).string();
  if (rgb)
    save_ppm8(path, img);
  else
    save_pgm8(path, img.channels[0]);
  return name;
}

}  // namespace codedp::tool
