#pragma once

#include <string>

#include <CLI11.hpp>

#include "codedp/camera.hpp"
#include "codedp/grid.hpp"
#include "codedp/image_io.hpp"

namespace codedp::tool {

inline constexpr const char* kToolVersion = "0.1.0";

// Shared camera geometry flags, bound directly to the config fields.
void add_camera_options(CLI::App* cmd, CameraConfig& cam);

// Resolved camera settings and tool identity for a run manifest.
void describe_run(Manifest& m, const std::string& command);
void describe_camera(Manifest& m, const CameraConfig& cam);

// Content hash of an input file under input_hash.<label>.
void record_input(Manifest& m, const std::string& label, const std::string& path);

// Creates dir if needed and writes the run manifest as <dir>/run.txt.
void write_run_manifest(const std::string& dir, const Manifest& m);

// 8-bit preview next to the float outputs: PPM for RGB, PGM for gray.
// Returns the file name written.
std::string save_image_preview(const std::string& dir, const std::string& basename,
                               const Image& img);

void register_gen_psf(CLI::App& app);
void register_render(CLI::App& app);
void register_recon(CLI::App& app);
void register_eval(CLI::App& app);
void register_optimize_mask(CLI::App& app);

}  // namespace codedp::tool
