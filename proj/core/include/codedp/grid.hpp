#pragma once

#include <cstddef>
#include <vector>

namespace codedp {

// Dense row-major 2D array of doubles. Index order is (row, col) == (y, x).
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, double value = 0.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Grid& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

double grid_sum(const Grid& g);
double grid_min(const Grid& g);
double grid_max(const Grid& g);
double grid_mean(const Grid& g);
bool grid_finite(const Grid& g);
double max_abs_diff(const Grid& a, const Grid& b);
double rel_l2_diff(const Grid& a, const Grid& b);

Grid mirror_horizontal(const Grid& g);  // reverse columns
Grid flip_both(const Grid& g);          // reverse rows and columns
Grid scaled(const Grid& g, double factor);

// Mean over the sub-rectangle that drops `margin` pixels from every side.
double interior_mean(const Grid& g, int margin);
double interior_max_abs_diff(const Grid& a, const Grid& b, int margin);

// Window median with border windows clipped to the image. `window` must be odd.
Grid median_filter(const Grid& g, int window);

// Planar image: 1 (gray) or 3 (rgb) grids of identical shape.
struct Image {
  std::vector<Grid> channels;

  Image() = default;
  Image(int rows, int cols, int num_channels, double value = 0.0);

  int rows() const { return channels.empty() ? 0 : channels[0].rows(); }
  int cols() const { return channels.empty() ? 0 : channels[0].cols(); }
  int num_channels() const { return static_cast<int>(channels.size()); }
  bool same_shape(const Image& other) const;
};

double image_max(const Image& img);
double image_max_abs_diff(const Image& a, const Image& b);

}  // namespace codedp
