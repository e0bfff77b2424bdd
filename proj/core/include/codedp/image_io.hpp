#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "codedp/grid.hpp"

namespace codedp {

// Shortest decimal form that round-trips a double exactly.
std::string format_double(double v);

// Ordered key=value text file. '#' starts a comment, keys stay in insertion
// order so manifests diff cleanly.
struct Manifest {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value) { set(key, format_double(value)); }
  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;  // throws IoError when missing
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;

  void save(const std::string& path) const;
  static Manifest load(const std::string& path);
};

// FNV-1a 64-bit content hashes, reported as 16 hex digits.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hash_hex(std::uint64_t h);

// 8-bit binary PGM/PPM. Values map linearly from [lo, hi] and clamp.
void save_pgm8(const std::string& path, const Grid& g, double lo = 0.0, double hi = 1.0);
void save_ppm8(const std::string& path, const Image& img, double lo = 0.0, double hi = 1.0);
// 16-bit PGM, most significant byte first per the format.
void save_pgm16(const std::string& path, const Grid& g, double lo = 0.0, double hi = 1.0);

// PFM float maps: "Pf" = one channel, "PF" = three. Scale header -1.0 marks
// little-endian data; rows are stored bottom to top. The reader accepts both
// endiannesses.
void save_pfm(const std::string& path, const Grid& g);
void save_pfm(const std::string& path, const Image& img);
Grid load_pfm_gray(const std::string& path);
Image load_pfm(const std::string& path);

// Reads PGM/PPM (scaled to [0, 1] by maxval) or PFM (verbatim floats).
Image load_image_any(const std::string& path);
// Single-channel view of the above; RGB collapses by channel mean.
Grid load_gray_any(const std::string& path);

// Signed-value preview: blue for negative, white at zero, red for positive.
void save_signed_ppm(const std::string& path, const Grid& g, double amplitude);

}  // namespace codedp
