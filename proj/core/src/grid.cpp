#include "codedp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "codedp/errors.hpp"

namespace codedp {

Grid::Grid(int rows, int cols, double value) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw ValidationError("grid dimensions must be non-negative");
  data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), value);
}

double grid_sum(const Grid& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g[i];
  return s;
}

double grid_min(const Grid& g) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) m = std::min(m, g[i]);
  return m;
}

double grid_max(const Grid& g) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) m = std::max(m, g[i]);
  return m;
}

double grid_mean(const Grid& g) {
  if (g.size() == 0) return 0.0;
  return grid_sum(g) / static_cast<double>(g.size());
}

bool grid_finite(const Grid& g) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) return false;
  }
  return true;
}

double max_abs_diff(const Grid& a, const Grid& b) {
  if (!a.same_shape(b)) throw ValidationError("shape mismatch in max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

double rel_l2_diff(const Grid& a, const Grid& b) {
  if (!a.same_shape(b)) throw ValidationError("shape mismatch in rel_l2_diff");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    num += d * d;
    den += b[i] * b[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

Grid mirror_horizontal(const Grid& g) {
  Grid out(g.rows(), g.cols());
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) out(r, c) = g(r, g.cols() - 1 - c);
  return out;
}

Grid flip_both(const Grid& g) {
  Grid out(g.rows(), g.cols());
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) out(r, c) = g(g.rows() - 1 - r, g.cols() - 1 - c);
  return out;
}

Grid scaled(const Grid& g, double factor) {
  Grid out = g;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor;
  return out;
}

double interior_mean(const Grid& g, int margin) {
  if (margin < 0) throw ValidationError("interior margin must be non-negative");
  if (g.rows() <= 2 * margin || g.cols() <= 2 * margin)
    throw ValidationError("interior margin leaves no pixels");
  double s = 0.0;
  long n = 0;
  for (int r = margin; r < g.rows() - margin; ++r)
    for (int c = margin; c < g.cols() - margin; ++c) {
      s += g(r, c);
      ++n;
    }
  return s / static_cast<double>(n);
}

double interior_max_abs_diff(const Grid& a, const Grid& b, int margin) {
  if (!a.same_shape(b)) throw ValidationError("shape mismatch in interior_max_abs_diff");
  if (a.rows() <= 2 * margin || a.cols() <= 2 * margin)
    throw ValidationError("interior margin leaves no pixels");
  double m = 0.0;
  for (int r = margin; r < a.rows() - margin; ++r)
    for (int c = margin; c < a.cols() - margin; ++c)
      m = std::max(m, std::fabs(a(r, c) - b(r, c)));
  return m;
}

Grid median_filter(const Grid& g, int window) {
  if (window < 1 || window % 2 == 0) throw ValidationError("median window must be odd and positive");
  if (window == 1) return g;
  const int h = window / 2;
  Grid out(g.rows(), g.cols());
  std::vector<double> buf;
  buf.reserve(static_cast<std::size_t>(window) * window);
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) {
      buf.clear();
      const int r0 = std::max(0, r - h), r1 = std::min(g.rows() - 1, r + h);
      const int c0 = std::max(0, c - h), c1 = std::min(g.cols() - 1, c + h);
      for (int rr = r0; rr <= r1; ++rr)
        for (int cc = c0; cc <= c1; ++cc) buf.push_back(g(rr, cc));
      const std::size_t mid = buf.size() / 2;
      std::nth_element(buf.begin(), buf.begin() + mid, buf.end());
      double med = buf[mid];
      if (buf.size() % 2 == 0) {
        std::nth_element(buf.begin(), buf.begin() + mid - 1, buf.end());
        med = 0.5 * (med + buf[mid - 1]);
      }
      out(r, c) = med;
    }
  }
  return out;
}

Image::Image(int rows, int cols, int num_channels, double value) {
  if (num_channels < 1) throw ValidationError("image needs at least one channel");
  channels.assign(num_channels, Grid(rows, cols, value));
}

bool Image::same_shape(const Image& other) const {
  if (num_channels() != other.num_channels()) return false;
  for (int c = 0; c < num_channels(); ++c)
    if (!channels[c].same_shape(other.channels[c])) return false;
  return true;
}

double image_max(const Image& img) {
  double m = -std::numeric_limits<double>::infinity();
  for (const Grid& ch : img.channels) m = std::max(m, grid_max(ch));
  return m;
}

double image_max_abs_diff(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw ValidationError("shape mismatch in image_max_abs_diff");
  double m = 0.0;
  for (int c = 0; c < a.num_channels(); ++c)
    m = std::max(m, max_abs_diff(a.channels[c], b.channels[c]));
  return m;
}

}  // namespace codedp
