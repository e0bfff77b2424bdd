#include "codedp/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "codedp/errors.hpp"

namespace codedp {

namespace {

// FFTW plan creation is not thread safe, so plans are built under a lock and
// cached per shape. FFTW_UNALIGNED keeps new-array execution valid for any
// caller buffer; execution itself is thread safe.
std::mutex plan_mutex;
std::map<std::tuple<int, int, int>, fftw_plan> plan_cache;

fftw_plan plan_for(int rows, int cols, int sign) {
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto key = std::make_tuple(rows, cols, sign);
  auto it = plan_cache.find(key);
  if (it != plan_cache.end()) return it->second;
  std::vector<std::complex<double>> scratch(static_cast<std::size_t>(rows) * cols);
  fftw_complex* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  fftw_plan plan =
      fftw_plan_dft_2d(rows, cols, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan) throw NumericalError("failed to create FFT plan");
  plan_cache.emplace(key, plan);
  return plan;
}

}  // namespace

void fft2(ComplexGrid& g, bool forward) {
  if (g.rows <= 0 || g.cols <= 0) throw ValidationError("empty grid in fft2");
  fftw_plan plan = plan_for(g.rows, g.cols, forward ? FFTW_FORWARD : FFTW_BACKWARD);
  fftw_complex* buf = reinterpret_cast<fftw_complex*>(g.data.data());
  fftw_execute_dft(plan, buf, buf);
  if (!forward) {
    const double scale = 1.0 / (static_cast<double>(g.rows) * g.cols);
    for (auto& v : g.data) v *= scale;
  }
}

ComplexGrid fft2_of(const Grid& g, int pad_rows, int pad_cols) {
  if (g.empty()) throw ValidationError("empty grid in fft2_of");
  const int rows = pad_rows > 0 ? pad_rows : g.rows();
  const int cols = pad_cols > 0 ? pad_cols : g.cols();
  if (rows < g.rows() || cols < g.cols())
    throw ValidationError("padded transform smaller than the grid");
  ComplexGrid out(rows, cols);
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) out.at(r, c) = g(r, c);
  fft2(out, true);
  return out;
}

double dft_bin_frequency(int k, int n) {
  return k <= n / 2 ? static_cast<double>(k) / n : static_cast<double>(k - n) / n;
}

namespace {

Grid conv2_spatial(const Grid& img, const Grid& ker) {
  const int kr = ker.rows(), kc = ker.cols();
  const int cy = kr / 2, cx = kc / 2;
  Grid out(img.rows(), img.cols());
  for (int y = 0; y < img.rows(); ++y) {
    for (int x = 0; x < img.cols(); ++x) {
      double acc = 0.0;
      for (int u = 0; u < kr; ++u) {
        const int sy = y - (u - cy);
        if (sy < 0 || sy >= img.rows()) continue;
        for (int v = 0; v < kc; ++v) {
          const int sx = x - (v - cx);
          if (sx < 0 || sx >= img.cols()) continue;
          acc += ker(u, v) * img(sy, sx);
        }
      }
      out(y, x) = acc;
    }
  }
  return out;
}

Grid conv2_fft(const Grid& img, const Grid& ker) {
  const int pr = img.rows() + ker.rows() - 1;
  const int pc = img.cols() + ker.cols() - 1;
  ComplexGrid fi = fft2_of(img, pr, pc);
  ComplexGrid fk = fft2_of(ker, pr, pc);
  for (std::size_t i = 0; i < fi.data.size(); ++i) fi.data[i] *= fk.data[i];
  fft2(fi, false);
  const int oy = ker.rows() / 2, ox = ker.cols() / 2;
  Grid out(img.rows(), img.cols());
  for (int y = 0; y < img.rows(); ++y)
    for (int x = 0; x < img.cols(); ++x) out(y, x) = fi.at(y + oy, x + ox).real();
  return out;
}

}  // namespace

Grid conv2_same(const Grid& image, const Grid& kernel, ConvMethod method) {
  if (image.empty() || kernel.empty()) throw ValidationError("empty operand in conv2_same");
  if (kernel.rows() % 2 == 0 || kernel.cols() % 2 == 0)
    throw ValidationError("convolution kernel dimensions must be odd");
  if (method == ConvMethod::kAuto)
    method = (static_cast<long>(kernel.rows()) * kernel.cols() <= 81) ? ConvMethod::kSpatial
                                                                      : ConvMethod::kFft;
  return method == ConvMethod::kSpatial ? conv2_spatial(image, kernel) : conv2_fft(image, kernel);
}

Grid box_sum(const Grid& g, int radius) {
  if (radius < 0) throw ValidationError("box_sum radius must be non-negative");
  // Separable running sums; clipping the window at the border equals zero padding.
  Grid rows(g.rows(), g.cols());
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) {
      const int c0 = std::max(0, c - radius), c1 = std::min(g.cols() - 1, c + radius);
      double s = 0.0;
      for (int cc = c0; cc <= c1; ++cc) s += g(r, cc);
      rows(r, c) = s;
    }
  }
  Grid out(g.rows(), g.cols());
  for (int c = 0; c < g.cols(); ++c) {
    for (int r = 0; r < g.rows(); ++r) {
      const int r0 = std::max(0, r - radius), r1 = std::min(g.rows() - 1, r + radius);
      double s = 0.0;
      for (int rr = r0; rr <= r1; ++rr) s += rows(rr, c);
      out(r, c) = s;
    }
  }
  return out;
}

}  // namespace codedp
