#include "codedp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "codedp/errors.hpp"
#include "codedp/fft.hpp"

namespace codedp {

void LossWeights::validate() const {
  for (double b : {beta1, beta2, beta3, beta4, beta5})
    if (b < 0.0 || !std::isfinite(b)) throw ValidationError("loss weights must be non-negative");
}

DepthMetrics depth_metrics(const Grid& pred, const Grid& gt, double delta_threshold) {
  if (!pred.same_shape(gt)) throw ValidationError("shape mismatch in depth_metrics");
  if (pred.size() == 0) throw ValidationError("empty inputs in depth_metrics");
  if (!(delta_threshold > 1.0)) throw ValidationError("delta threshold must exceed 1");
  double se = 0.0, ae = 0.0;
  long hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!(pred[i] > 0.0) || !(gt[i] > 0.0))
      throw ValidationError("depth values must be positive for the ratio threshold");
    const double d = pred[i] - gt[i];
    se += d * d;
    ae += std::fabs(d);
    if (std::max(pred[i] / gt[i], gt[i] / pred[i]) < delta_threshold) ++hits;
  }
  const double n = static_cast<double>(pred.size());
  return DepthMetrics{std::sqrt(se / n), ae / n, hits / n};
}

namespace {

// Average ranks, ties share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double shared = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;  // constant ranks carry no ordering signal
  return sab / std::sqrt(saa * sbb);
}

struct AffineFit {
  double p = 0.0;
  double q = 0.0;
};

AffineFit least_squares_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  AffineFit f;
  f.p = sxx > 0.0 ? sxy / sxx : 0.0;
  f.q = my - f.p * mx;
  return f;
}

AffineFit weighted_fit(const std::vector<double>& x, const std::vector<double>& y,
                       const std::vector<double>& w) {
  double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    swx += w[i] * x[i];
    swy += w[i] * y[i];
    swxx += w[i] * x[i] * x[i];
    swxy += w[i] * x[i] * y[i];
  }
  const double det = sw * swxx - swx * swx;
  AffineFit f;
  if (std::fabs(det) < 1e-300) {
    f.p = 0.0;
    f.q = sw > 0.0 ? swy / sw : 0.0;
    return f;
  }
  f.p = (sw * swxy - swx * swy) / det;
  f.q = (swxx * swy - swx * swxy) / det;
  return f;
}

}  // namespace

AffineInvariantMetrics affine_invariant_metrics(const Grid& pred, const Grid& gt) {
  if (!pred.same_shape(gt)) throw ValidationError("shape mismatch in affine_invariant_metrics");
  if (pred.size() < 2) throw ValidationError("affine fit needs at least two samples");
  const std::size_t n = pred.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = pred[i];
    y[i] = gt[i];
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw ValidationError("affine-invariant metrics need finite inputs");
  }

  AffineInvariantMetrics out;
  const double spread = *std::max_element(x.begin(), x.end()) -
                        *std::min_element(x.begin(), x.end());
  out.degenerate_fit = spread < 1e-15;

  // L2 fit in closed form.
  const AffineFit ls = least_squares_fit(x, y);
  double se = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (ls.p * x[i] + ls.q);
    se += r * r;
  }
  out.ai2 = std::sqrt(se / static_cast<double>(n));

  // L1 fit by iteratively reweighted least squares, started from the L2 fit.
  AffineFit l1 = ls;
  if (out.degenerate_fit) {
    // Slope is unidentifiable; the best L1 constant is the median.
    std::vector<double> sorted = y;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = n / 2;
    l1.p = 0.0;
    l1.q = n % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  } else {
    std::vector<double> w(n);
    for (int it = 0; it < 100; ++it) {
      for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (l1.p * x[i] + l1.q);
        w[i] = 1.0 / std::max(std::fabs(r), 1e-12);
      }
      const AffineFit next = weighted_fit(x, y, w);
      const double step = std::fabs(next.p - l1.p) + std::fabs(next.q - l1.q);
      l1 = next;
      if (step < 1e-8 * (1.0 + std::fabs(l1.p) + std::fabs(l1.q))) break;
    }
  }
  double ae = 0.0;
  for (std::size_t i = 0; i < n; ++i) ae += std::fabs(y[i] - (l1.p * x[i] + l1.q));
  out.ai1 = ae / static_cast<double>(n);

  const double rho = pearson(average_ranks(x), average_ranks(y));
  out.one_minus_abs_spearman = 1.0 - std::fabs(rho);
  return out;
}

namespace {

Grid gaussian_kernel(int size, double sigma) {
  Grid k(size, size);
  const int h = size / 2;
  double sum = 0.0;
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double dy = r - h, dx = c - h;
      k(r, c) = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      sum += k(r, c);
    }
  for (std::size_t i = 0; i < k.size(); ++i) k[i] /= sum;
  return k;
}

double ssim_channel(const Grid& a, const Grid& b, double peak) {
  constexpr int kWindow = 11;
  constexpr double kSigma = 1.5;
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  static const Grid window = gaussian_kernel(kWindow, kSigma);

  Grid aa(a.rows(), a.cols()), bb(a.rows(), a.cols()), ab(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const Grid mu_a = conv2_same(a, window);
  const Grid mu_b = conv2_same(b, window);
  const Grid m_aa = conv2_same(aa, window);
  const Grid m_bb = conv2_same(bb, window);
  const Grid m_ab = conv2_same(ab, window);

  // Zero padding corrupts a half-window border; score only where the window
  // saw real data.
  const int h = kWindow / 2;
  double acc = 0.0;
  long n = 0;
  for (int r = h; r < a.rows() - h; ++r)
    for (int c = h; c < a.cols() - h; ++c) {
      const double ma = mu_a(r, c), mb = mu_b(r, c);
      const double va = m_aa(r, c) - ma * ma;
      const double vb = m_bb(r, c) - mb * mb;
      const double cov = m_ab(r, c) - ma * mb;
      const double num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
      const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
      acc += num / den;
      ++n;
    }
  return acc / static_cast<double>(n);
}

}  // namespace

ImageMetrics image_metrics(const Image& pred, const Image& gt, double peak) {
  if (!pred.same_shape(gt)) throw ValidationError("shape mismatch in image_metrics");
  if (pred.num_channels() == 0) throw ValidationError("empty inputs in image_metrics");
  if (!(peak > 0.0)) throw ValidationError("peak value must be positive");
  if (pred.rows() < 11 || pred.cols() < 11)
    throw ValidationError("images must be at least 11x11 for the SSIM window");

  double se = 0.0;
  for (int ch = 0; ch < pred.num_channels(); ++ch)
    for (std::size_t i = 0; i < pred.channels[ch].size(); ++i) {
      const double d = pred.channels[ch][i] - gt.channels[ch][i];
      se += d * d;
    }
  const double mse =
      se / (static_cast<double>(pred.channels[0].size()) * pred.num_channels());

  ImageMetrics out;
  out.psnr_db = mse == 0.0 ? std::numeric_limits<double>::infinity()
                           : 10.0 * std::log10(peak * peak / mse);
  double ssim_acc = 0.0;
  for (int ch = 0; ch < pred.num_channels(); ++ch)
    ssim_acc += ssim_channel(pred.channels[ch], gt.channels[ch], peak);
  out.ssim = ssim_acc / pred.num_channels();
  return out;
}

void forward_gradient(const Grid& g, Grid& gx, Grid& gy) {
  gx = Grid(g.rows(), g.cols());
  gy = Grid(g.rows(), g.cols());
  for (int r = 0; r < g.rows(); ++r)
    for (int c = 0; c < g.cols(); ++c) {
      gx(r, c) = c + 1 < g.cols() ? g(r, c + 1) - g(r, c) : 0.0;
      gy(r, c) = r + 1 < g.rows() ? g(r + 1, c) - g(r, c) : 0.0;
    }
}

namespace {

// Mean L1 difference of forward gradients: averaged over pixels, channels,
// and the two gradient components.
double gradient_l1(const Grid& a, const Grid& b) {
  Grid ax, ay, bx, by;
  forward_gradient(a, ax, ay);
  forward_gradient(b, bx, by);
  double acc = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i)
    acc += std::fabs(ax[i] - bx[i]) + std::fabs(ay[i] - by[i]);
  return acc / (2.0 * static_cast<double>(ax.size()));
}

double value_l1(const Grid& a, const Grid& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
  return acc / static_cast<double>(a.size());
}

}  // namespace

LossBreakdown training_loss(const Image& pred_aif, const Image& gt_aif,
                            const Grid& pred_defocus, const Grid& gt_defocus,
                            const MaskPattern& mask, const LossWeights& weights) {
  weights.validate();
  if (!pred_aif.same_shape(gt_aif)) throw ValidationError("AIF image shapes disagree");
  if (!pred_defocus.same_shape(gt_defocus)) throw ValidationError("defocus map shapes disagree");
  if (pred_aif.num_channels() == 0 || pred_defocus.size() == 0)
    throw ValidationError("empty inputs in training_loss");

  double aif_l1 = 0.0, aif_grad = 0.0;
  for (int ch = 0; ch < pred_aif.num_channels(); ++ch) {
    aif_l1 += value_l1(pred_aif.channels[ch], gt_aif.channels[ch]);
    aif_grad += gradient_l1(pred_aif.channels[ch], gt_aif.channels[ch]);
  }
  aif_l1 /= pred_aif.num_channels();
  aif_grad /= pred_aif.num_channels();

  LossBreakdown out;
  out.aif_term = weights.beta1 * aif_l1 + weights.beta2 * aif_grad;
  out.defocus_term = weights.beta3 * value_l1(pred_defocus, gt_defocus) +
                     weights.beta4 * gradient_l1(pred_defocus, gt_defocus);
  out.mask_term = mask_regularizer(mask, weights.beta5);
  out.total = out.aif_term + out.defocus_term + out.mask_term;
  return out;
}

}  // namespace codedp
