#include "codedp/image_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "codedp/errors.hpp"

namespace codedp {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void Manifest::set(const std::string& key, const std::string& value) {
  for (auto& e : entries) {
    if (e.first == key) {
      e.second = value;
      return;
    }
  }
  entries.emplace_back(key, value);
}

bool Manifest::has(const std::string& key) const {
  for (const auto& e : entries)
    if (e.first == key) return true;
  return false;
}

std::string Manifest::get(const std::string& key) const {
  for (const auto& e : entries)
    if (e.first == key) return e.second;
  throw IoError("manifest key missing: " + key);
}

std::string Manifest::get_or(const std::string& key, const std::string& fallback) const {
  for (const auto& e : entries)
    if (e.first == key) return e.second;
  return fallback;
}

double Manifest::get_double(const std::string& key) const {
  try {
    return std::stod(get(key));
  } catch (const std::invalid_argument&) {
    throw IoError("manifest key is not a number: " + key);
  }
}

void Manifest::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& e : entries) out << e.first << "=" << e.second << "\n";
  if (!out) throw IoError("write failed: " + path);
}

Manifest Manifest::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed manifest line in " + path + ": " + line);
    m.entries.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return m;
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

unsigned char quantize8(double v, double lo, double hi) {
  const double t = (v - lo) / (hi - lo);
  const double q = std::clamp(t, 0.0, 1.0) * 255.0;
  return static_cast<unsigned char>(std::lround(q));
}

std::uint16_t quantize16(double v, double lo, double hi) {
  const double t = (v - lo) / (hi - lo);
  const double q = std::clamp(t, 0.0, 1.0) * 65535.0;
  return static_cast<std::uint16_t>(std::lround(q));
}

void check_range(double lo, double hi) {
  if (!(hi > lo)) throw ValidationError("image quantization range must satisfy hi > lo");
}

// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int parse_int_token(std::istream& in, const std::string& path) {
  const std::string tok = next_token(in);
  int value = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw IoError("malformed header in " + path);
  return value;
}

bool host_is_little_endian() { return std::endian::native == std::endian::little; }

void byteswap32(unsigned char* p, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i, p += 4) {
    std::swap(p[0], p[3]);
    std::swap(p[1], p[2]);
  }
}

void write_pfm(const std::string& path, const std::vector<const Grid*>& planes) {
  const int rows = planes[0]->rows(), cols = planes[0]->cols();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << (planes.size() == 1 ? "Pf" : "PF") << "\n" << cols << " " << rows << "\n";
  out << (host_is_little_endian() ? "-1.0" : "1.0") << "\n";
  std::vector<float> row(static_cast<std::size_t>(cols) * planes.size());
  for (int r = rows - 1; r >= 0; --r) {  // bottom row first
    std::size_t i = 0;
    for (int c = 0; c < cols; ++c)
      for (const Grid* p : planes) row[i++] = static_cast<float>((*p)(r, c));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw IoError("write failed: " + path);
}

Image read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  const std::string magic = next_token(in);
  int ch_count;
  if (magic == "Pf")
    ch_count = 1;
  else if (magic == "PF")
    ch_count = 3;
  else
    throw IoError("not a PFM file: " + path);
  const int cols = parse_int_token(in, path);
  const int rows = parse_int_token(in, path);
  const std::string scale_tok = next_token(in);
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (...) {
    throw IoError("malformed header in " + path);
  }
  if (rows <= 0 || cols <= 0 || scale == 0.0) throw IoError("malformed header in " + path);
  const bool file_little = scale < 0.0;

  Image img(rows, cols, ch_count);
  std::vector<unsigned char> row(static_cast<std::size_t>(cols) * ch_count * 4);
  for (int r = rows - 1; r >= 0; --r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw IoError("truncated PFM data in " + path);
    if (file_little != host_is_little_endian())
      byteswap32(row.data(), static_cast<std::size_t>(cols) * ch_count);
    const float* f = reinterpret_cast<const float*>(row.data());
    for (int c = 0; c < cols; ++c)
      for (int k = 0; k < ch_count; ++k) img.channels[k](r, c) = f[c * ch_count + k];
  }
  return img;
}

Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  const std::string magic = next_token(in);
  int ch_count;
  if (magic == "P5")
    ch_count = 1;
  else if (magic == "P6")
    ch_count = 3;
  else
    throw IoError("unsupported image format in " + path);
  const int cols = parse_int_token(in, path);
  const int rows = parse_int_token(in, path);
  const int maxval = parse_int_token(in, path);
  if (cols <= 0 || rows <= 0 || maxval <= 0 || maxval > 65535)
    throw IoError("malformed header in " + path);
  const int bytes_per_sample = maxval > 255 ? 2 : 1;

  Image img(rows, cols, ch_count);
  std::vector<unsigned char> row(static_cast<std::size_t>(cols) * ch_count * bytes_per_sample);
  for (int r = 0; r < rows; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw IoError("truncated image data in " + path);
    for (int c = 0; c < cols; ++c) {
      for (int k = 0; k < ch_count; ++k) {
        const std::size_t i = (static_cast<std::size_t>(c) * ch_count + k) * bytes_per_sample;
        int v = row[i];
        if (bytes_per_sample == 2) v = (v << 8) | row[i + 1];  // big-endian sample
        img.channels[k](r, c) = static_cast<double>(v) / maxval;
      }
    }
  }
  return img;
}

}  // namespace

void save_pgm8(const std::string& path, const Grid& g, double lo, double hi) {
  check_range(lo, hi);
  if (g.empty()) throw ValidationError("cannot save an empty grid");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "P5\n" << g.cols() << " " << g.rows() << "\n255\n";
  std::vector<unsigned char> row(g.cols());
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) row[c] = quantize8(g(r, c), lo, hi);
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  if (!out) throw IoError("write failed: " + path);
}

void save_ppm8(const std::string& path, const Image& img, double lo, double hi) {
  check_range(lo, hi);
  if (img.num_channels() != 3) throw ValidationError("PPM output needs three channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "P6\n" << img.cols() << " " << img.rows() << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.cols()) * 3);
  for (int r = 0; r < img.rows(); ++r) {
    for (int c = 0; c < img.cols(); ++c)
      for (int k = 0; k < 3; ++k) row[c * 3 + k] = quantize8(img.channels[k](r, c), lo, hi);
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("write failed: " + path);
}

void save_pgm16(const std::string& path, const Grid& g, double lo, double hi) {
  check_range(lo, hi);
  if (g.empty()) throw ValidationError("cannot save an empty grid");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "P5\n" << g.cols() << " " << g.rows() << "\n65535\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(g.cols()) * 2);
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) {
      const std::uint16_t q = quantize16(g(r, c), lo, hi);
      row[c * 2] = static_cast<unsigned char>(q >> 8);
      row[c * 2 + 1] = static_cast<unsigned char>(q & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("write failed: " + path);
}

void save_pfm(const std::string& path, const Grid& g) {
  if (g.empty()) throw ValidationError("cannot save an empty grid");
  write_pfm(path, {&g});
}

void save_pfm(const std::string& path, const Image& img) {
  if (img.num_channels() == 1) {
    write_pfm(path, {&img.channels[0]});
  } else if (img.num_channels() == 3) {
    write_pfm(path, {&img.channels[0], &img.channels[1], &img.channels[2]});
  } else {
    throw ValidationError("PFM output needs one or three channels");
  }
}

Grid load_pfm_gray(const std::string& path) {
  const Image img = read_pfm(path);
  if (img.num_channels() != 1) throw IoError("expected a single-channel PFM: " + path);
  return img.channels[0];
}

Image load_pfm(const std::string& path) { return read_pfm(path); }

Image load_image_any(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  char m[2] = {0, 0};
  in.read(m, 2);
  in.close();
  if (m[0] == 'P' && (m[1] == 'f' || m[1] == 'F')) return read_pfm(path);
  if (m[0] == 'P' && (m[1] == '5' || m[1] == '6')) return read_pnm(path);
  throw IoError("unsupported image format in " + path);
}

Grid load_gray_any(const std::string& path) {
  const Image img = load_image_any(path);
  if (img.num_channels() == 1) return img.channels[0];
  Grid g(img.rows(), img.cols());
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c) {
      double s = 0.0;
      for (const Grid& ch : img.channels) s += ch(r, c);
      g(r, c) = s / img.num_channels();
    }
  return g;
}

void save_signed_ppm(const std::string& path, const Grid& g, double amplitude) {
  if (!(amplitude > 0.0)) throw ValidationError("preview amplitude must be positive");
  Image img(g.rows(), g.cols(), 3);
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) {
      const double t = std::clamp(g(r, c) / amplitude, -1.0, 1.0);
      img.channels[0](r, c) = t >= 0.0 ? 1.0 : 1.0 + t;
      img.channels[1](r, c) = 1.0 - std::fabs(t);
      img.channels[2](r, c) = t <= 0.0 ? 1.0 : 1.0 - t;
    }
  save_ppm8(path, img, 0.0, 1.0);
}

}  // namespace codedp
