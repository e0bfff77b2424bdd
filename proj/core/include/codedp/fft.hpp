#pragma once

#include <complex>
#include <vector>

#include "codedp/grid.hpp"

namespace codedp {

// Row-major complex array used for spectra.
struct ComplexGrid {
  int rows = 0;
  int cols = 0;
  std::vector<std::complex<double>> data;

  ComplexGrid() = default;
  ComplexGrid(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {}

  std::complex<double>& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  const std::complex<double>& at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
};

// In-place 2D DFT (forward uses the e^{-i...} convention). The backward
// transform applies the 1/(rows*cols) scale, so backward(forward(x)) == x.
void fft2(ComplexGrid& g, bool forward);

// Forward transform of a real grid zero-padded to (pad_rows, pad_cols);
// zero padding sizes default to the grid's own shape.
ComplexGrid fft2_of(const Grid& g, int pad_rows = 0, int pad_cols = 0);

// Frequency of DFT bin k out of n, in cycles per pixel, range (-0.5, 0.5].
double dft_bin_frequency(int k, int n);

enum class ConvMethod { kAuto, kSpatial, kFft };

// 2D convolution with zero padding outside the image, cropped to the image
// size. Kernel dimensions must be odd. kAuto picks the spatial path for small
// kernels and the FFT path otherwise; both agree to roundoff.
Grid conv2_same(const Grid& image, const Grid& kernel, ConvMethod method = ConvMethod::kAuto);

// Sum over a (2*radius+1)^2 box around each pixel, zero padding outside.
Grid box_sum(const Grid& g, int radius);

}  // namespace codedp
