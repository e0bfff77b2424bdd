#include "codedp/mask.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "codedp/errors.hpp"
#include "codedp/image_io.hpp"

namespace codedp {

void MaskPattern::validate() const {
  if (grid.empty()) throw ValidationError("mask grid is empty");
  if (grid.rows() != grid.cols()) throw ValidationError("mask grid must be square");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = grid[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw ValidationError("mask cells must lie in [0, 1]");
  }
  if (binary) {
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (grid[i] != 0.0 && grid[i] != 1.0)
        throw ValidationError("binary mask contains fractional cells");
  }
}

MaskPattern mask_from_params(const Grid& latent, double temperature) {
  if (latent.empty() || latent.rows() != latent.cols())
    throw ValidationError("latent mask parameters must form a non-empty square grid");
  if (!(temperature >= 0.0) || !std::isfinite(temperature))
    throw ValidationError("mask temperature must be non-negative");
  if (!grid_finite(latent)) throw ValidationError("latent mask parameters must be finite");
  MaskPattern m;
  m.grid = Grid(latent.rows(), latent.cols());
  for (std::size_t i = 0; i < latent.size(); ++i)
    m.grid[i] = 1.0 / (1.0 + std::exp(-temperature * latent[i]));
  m.latent_params = latent;
  m.temperature = temperature;
  m.binary = false;
  return m;
}

MaskPattern binarize(const MaskPattern& mask, double threshold) {
  mask.validate();
  MaskPattern out;
  out.grid = Grid(mask.grid.rows(), mask.grid.cols());
  for (std::size_t i = 0; i < mask.grid.size(); ++i)
    out.grid[i] = mask.grid[i] >= threshold ? 1.0 : 0.0;
  out.latent_params = mask.latent_params;
  out.temperature = mask.temperature;
  out.binary = true;
  return out;
}

Grid open_disc_grid(int size) {
  if (size < 1) throw ValidationError("mask size must be positive");
  Grid g(size, size);
  const double center = (size - 1) / 2.0;
  const double radius = size / 2.0;
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double dy = r - center, dx = c - center;
      if (dy * dy + dx * dx <= radius * radius) g(r, c) = 1.0;
    }
  return g;
}

double transmission(const MaskPattern& mask) {
  mask.validate();
  const double open = grid_sum(open_disc_grid(mask.size()));
  const double ratio = grid_sum(mask.grid) / open;
  return std::clamp(ratio, 0.0, 1.0);
}

double mask_regularizer(const MaskPattern& mask, double beta5) {
  if (beta5 < 0.0) throw ValidationError("regularizer weight must be non-negative");
  return beta5 * std::max(0.0, 0.5 - transmission(mask));
}

std::vector<int> mls_sequence_31() {
  // Fibonacci register for x^5 + x^2 + 1: the output stream obeys
  // s[n+5] = s[n+2] xor s[n], so the refill bit is bit2 xor bit0.
  std::vector<int> seq;
  seq.reserve(31);
  unsigned state = 0b11111;
  for (int i = 0; i < 31; ++i) {
    seq.push_back(static_cast<int>(state & 1));
    const unsigned fb = ((state >> 2) ^ state) & 1;
    state = (state >> 1) | (fb << 4);
  }
  return seq;
}

namespace {

MaskPattern disc_mask(int size, double radius) {
  MaskPattern m;
  m.grid = Grid(size, size);
  const double center = (size - 1) / 2.0;
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double dy = r - center, dx = c - center;
      if (dy * dy + dx * dx <= radius * radius) m.grid(r, c) = 1.0;
    }
  m.binary = true;
  return m;
}

MaskPattern open_half_area_mask(int size) {
  // Centered disc whose cell count is as close as possible to half the open
  // aperture's; ties resolve to the smaller disc.
  const double open_count = grid_sum(open_disc_grid(size));
  const double target = open_count / 2.0;
  const double center = (size - 1) / 2.0;
  std::vector<double> d2;
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double dy = r - center, dx = c - center;
      d2.push_back(dy * dy + dx * dx);
    }
  std::sort(d2.begin(), d2.end());
  double best_r2 = 0.0, best_err = std::abs(1.0 - target);
  for (std::size_t i = 0; i < d2.size(); ++i) {
    if (i + 1 < d2.size() && d2[i + 1] == d2[i]) continue;  // count whole distance shells
    const double count = static_cast<double>(i + 1);
    const double err = std::abs(count - target);
    if (err < best_err) {
      best_err = err;
      best_r2 = d2[i];
    }
  }
  return disc_mask(size, std::sqrt(best_r2));
}

MaskPattern mls_separable_mask() {
  const std::vector<int> seq = mls_sequence_31();
  const int size = 31;
  MaskPattern m;
  m.grid = Grid(size, size);
  const Grid disc = open_disc_grid(size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c)
      m.grid(r, c) = disc(r, c) > 0.0 ? static_cast<double>(seq[r] * seq[c]) : 0.0;
  m.binary = true;
  return m;
}

}  // namespace

MaskPattern builtin_mask(const std::string& name_or_path, int size) {
  if (name_or_path == "open") {
    MaskPattern m;
    m.grid = open_disc_grid(size);
    m.binary = true;
    return m;
  }
  if (name_or_path == "open_half_area") return open_half_area_mask(size);
  if (name_or_path == "mls_separable") return mls_separable_mask();
  return mask_from_file(name_or_path);
}

MaskPattern mask_from_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("mask file not found: " + path);
  const Grid img = load_gray_any(path);
  if (img.rows() != img.cols())
    throw ValidationError("mask image must be square: " + path);
  MaskPattern m;
  m.grid = Grid(img.rows(), img.cols());
  for (std::size_t i = 0; i < img.size(); ++i) m.grid[i] = img[i] >= 0.5 ? 1.0 : 0.0;
  m.binary = true;
  m.validate();
  return m;
}

void save_mask(const std::string& path, const MaskPattern& mask) {
  mask.validate();
  save_pgm8(path, mask.grid, 0.0, 1.0);
  Manifest meta;
  meta.set("type", "mask");
  meta.set("size", std::to_string(mask.size()));
  meta.set("binary", mask.binary ? "1" : "0");
  meta.set("temperature", format_double(mask.temperature));
  meta.save(path + ".meta.txt");
}

MaskPattern load_mask(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("mask file not found: " + path);
  const Grid img = load_gray_any(path);
  if (img.rows() != img.cols())
    throw ValidationError("mask image must be square: " + path);
  MaskPattern m;
  m.grid = img;
  const std::string meta_path = path + ".meta.txt";
  if (std::filesystem::exists(meta_path)) {
    const Manifest meta = Manifest::load(meta_path);
    m.binary = meta.get_or("binary", "0") == "1";
    m.temperature = std::stod(meta.get_or("temperature", "0"));
  }
  if (m.binary) {
    for (std::size_t i = 0; i < m.grid.size(); ++i) m.grid[i] = m.grid[i] >= 0.5 ? 1.0 : 0.0;
  }
  m.validate();
  return m;
}

}  // namespace codedp
