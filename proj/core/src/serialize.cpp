#include "codedp/serialize.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "codedp/errors.hpp"
#include "codedp/image_io.hpp"

namespace codedp {

namespace {

constexpr char kStackMagic[8] = {'C', 'D', 'P', 'S', 'T', 'A', 'C', 'K'};

static_assert(std::endian::native == std::endian::little,
              "stack container writes little-endian words natively");

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw IoError("truncated container: " + path);
  return v;
}

void write_grid(std::ofstream& out, const Grid& g) {
  out.write(reinterpret_cast<const char*>(g.data()),
            static_cast<std::streamsize>(g.size() * sizeof(double)));
}

void read_grid(std::ifstream& in, Grid& g, const std::string& path) {
  in.read(reinterpret_cast<char*>(g.data()),
          static_cast<std::streamsize>(g.size() * sizeof(double)));
  if (!in) throw IoError("truncated container: " + path);
}

}  // namespace

void save_psf_stack(const std::string& dir, const PsfStack& stack) {
  stack.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir);

  const std::string bin_path = (fs::path(dir) / "stack.bin").string();
  {
    std::ofstream out(bin_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + bin_path);
    out.write(kStackMagic, sizeof(kStackMagic));
    write_u32(out, 1u);
    write_u32(out, static_cast<std::uint32_t>(stack.num_planes()));
    write_u32(out, static_cast<std::uint32_t>(stack.kernel_extent_px));
    const char coded = stack.coded ? 1 : 0;
    out.write(&coded, 1);
    for (const PsfPlane& p : stack.planes) {
      out.write(reinterpret_cast<const char*>(&p.signed_blur_px), sizeof(double));
      write_grid(out, p.left);
      write_grid(out, p.right);
    }
    if (!out) throw IoError("write failed: " + bin_path);
  }

  Manifest m;
  m.set("type", "psf_stack");
  m.set("version", "1");
  m.set("coded", stack.coded ? "1" : "0");
  m.set("num_planes", std::to_string(stack.num_planes()));
  m.set("kernel_extent_px", std::to_string(stack.kernel_extent_px));
  m.set("normalization", "pair_sum_1");
  m.set("focal_length_mm", stack.camera.focal_length_mm);
  m.set("aperture_diameter_mm", stack.camera.aperture_diameter_mm);
  m.set("focus_distance_mm", stack.camera.focus_distance_mm);
  m.set("pixel_pitch_um", stack.camera.pixel_pitch_um);
  m.set("max_blur_px", stack.camera.max_blur_px);
  m.set("filter_order", std::to_string(stack.model.filter_order));
  m.set("shape_alpha", stack.model.shape_alpha);
  m.set("shape_beta", stack.model.shape_beta);
  m.set("smoothing_strength", std::to_string(stack.model.smoothing_strength));
  m.set("stack_hash", hash_hex(fnv1a64_file(bin_path)));
  m.save((fs::path(dir) / "manifest.txt").string());
}

PsfStack load_psf_stack(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string bin_path = (fs::path(dir) / "stack.bin").string();
  const std::string man_path = (fs::path(dir) / "manifest.txt").string();
  if (!fs::exists(bin_path)) throw IoError("missing stack container: " + bin_path);
  if (!fs::exists(man_path)) throw IoError("missing stack manifest: " + man_path);

  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw IoError("cannot read " + bin_path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kStackMagic, sizeof(magic)) != 0)
    throw IoError("not a PSF stack container: " + bin_path);
  const std::uint32_t version = read_u32(in, bin_path);
  if (version != 1u) throw IoError("unsupported container version in " + bin_path);
  const std::uint32_t planes = read_u32(in, bin_path);
  const std::uint32_t extent = read_u32(in, bin_path);
  if (planes == 0 || extent == 0 || extent % 2 == 0 || planes > 10000 || extent > 10000)
    throw IoError("implausible container header in " + bin_path);
  char coded = 0;
  in.read(&coded, 1);
  if (!in) throw IoError("truncated container: " + bin_path);

  PsfStack stack;
  stack.coded = coded != 0;
  stack.kernel_extent_px = static_cast<int>(extent);
  stack.planes.resize(planes);
  for (PsfPlane& p : stack.planes) {
    in.read(reinterpret_cast<char*>(&p.signed_blur_px), sizeof(double));
    if (!in) throw IoError("truncated container: " + bin_path);
    p.left = Grid(extent, extent);
    p.right = Grid(extent, extent);
    read_grid(in, p.left, bin_path);
    read_grid(in, p.right, bin_path);
  }

  const Manifest m = Manifest::load(man_path);
  stack.camera.focal_length_mm = m.get_double("focal_length_mm");
  stack.camera.aperture_diameter_mm = m.get_double("aperture_diameter_mm");
  stack.camera.focus_distance_mm = m.get_double("focus_distance_mm");
  stack.camera.pixel_pitch_um = m.get_double("pixel_pitch_um");
  stack.camera.max_blur_px = m.get_double("max_blur_px");
  stack.camera.num_planes = static_cast<int>(planes);
  stack.model.filter_order = std::stoi(m.get("filter_order"));
  stack.model.shape_alpha = m.get_double("shape_alpha");
  stack.model.shape_beta = m.get_double("shape_beta");
  stack.model.smoothing_strength = std::stoi(m.get("smoothing_strength"));
  stack.validate();
  return stack;
}

void save_capture(const std::string& dir, const DualPixelCapture& capture) {
  if (capture.left.num_channels() == 0 || !capture.left.same_shape(capture.right))
    throw ValidationError("capture views disagree in shape");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir);

  save_pfm((fs::path(dir) / "left.pfm").string(), capture.left);
  save_pfm((fs::path(dir) / "right.pfm").string(), capture.right);

  Manifest m;
  m.set("type", "dp_capture");
  m.set("rows", std::to_string(capture.left.rows()));
  m.set("cols", std::to_string(capture.left.cols()));
  m.set("channels", std::to_string(capture.left.num_channels()));
  m.set("has_noise", capture.noise.has_value() ? "1" : "0");
  if (capture.noise.has_value()) {
    m.set("noise_a", capture.noise->a);
    m.set("noise_b", capture.noise->b);
    m.set("noise_seed", std::to_string(capture.noise->seed));
  }
  m.set("left_hash", hash_hex(fnv1a64_file((fs::path(dir) / "left.pfm").string())));
  m.set("right_hash", hash_hex(fnv1a64_file((fs::path(dir) / "right.pfm").string())));
  m.save((fs::path(dir) / "manifest.txt").string());
}

DualPixelCapture load_capture(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string left = (fs::path(dir) / "left.pfm").string();
  const std::string right = (fs::path(dir) / "right.pfm").string();
  if (!fs::exists(left) || !fs::exists(right))
    throw IoError("capture directory lacks left.pfm/right.pfm: " + dir);
  DualPixelCapture cap;
  cap.left = load_pfm(left);
  cap.right = load_pfm(right);
  if (!cap.left.same_shape(cap.right))
    throw IoError("capture views disagree in shape: " + dir);
  const std::string man_path = (fs::path(dir) / "manifest.txt").string();
  if (fs::exists(man_path)) {
    const Manifest m = Manifest::load(man_path);
    if (m.get_or("has_noise", "0") == "1") {
      NoiseParams noise;
      noise.a = m.get_double("noise_a");
      noise.b = m.get_double("noise_b");
      noise.seed = std::stoull(m.get_or("noise_seed", "0"));
      cap.noise = noise;
    }
  }
  return cap;
}

}  // namespace codedp
