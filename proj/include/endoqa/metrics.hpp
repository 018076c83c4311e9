#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "endoqa/error.hpp"
#include "endoqa/filters.hpp"
#include "endoqa/raster.hpp"

namespace endoqa {

namespace detail {
inline void require_same_shape(const Raster& a, const Raster& b) {
  if (!a.same_shape(b)) throw invalid_argument("metric inputs differ in dimensions");
}
}  // namespace detail

/// Peak signal-to-noise ratio in dB for unit dynamic range; +inf when equal.
inline double psnr(const Raster& ref, const Raster& test) {
  detail::require_same_shape(ref, test);
  double se = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref.values()[i] - test.values()[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(ref.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
/// unit dynamic range, over window positions fully inside the image;
/// averaged over channels.
inline double ssim(const Raster& ref, const Raster& test) {
  detail::require_same_shape(ref, test);
  const auto win = gaussian_taps(1.5, 5);
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  for (int c = 0; c < ref.channels(); ++c) {
    const Raster a = ref.channel(c), b = test.channel(c);
    Raster aa = a, bb = b, ab = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
      aa.values()[i] = a.values()[i] * a.values()[i];
      bb.values()[i] = b.values()[i] * b.values()[i];
      ab.values()[i] = a.values()[i] * b.values()[i];
    }
    const Raster mu1 = filter_valid(a, win), mu2 = filter_valid(b, win);
    const Raster s11 = filter_valid(aa, win), s22 = filter_valid(bb, win), s12 = filter_valid(ab, win);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu1.size(); ++i) {
      const double m1 = mu1.values()[i], m2 = mu2.values()[i];
      const double v1 = s11.values()[i] - m1 * m1, v2 = s22.values()[i] - m2 * m2;
      const double cov = s12.values()[i] - m1 * m2;
      sum += ((2 * m1 * m2 + c1) * (2 * cov + c2)) / ((m1 * m1 + m2 * m2 + c1) * (v1 + v2 + c2));
    }
    total += sum / static_cast<double>(mu1.size());
  }
  return total / ref.channels();
}

/// Pixel-domain multi-scale visual information fidelity on the channel-mean
/// luminance, 4 scales, computed on a 0-255 scale with HVS noise variance 2.
inline double vif(const Raster& ref_in, const Raster& test_in) {
  detail::require_same_shape(ref_in, test_in);
  constexpr double sigma_nsq = 2.0;
  constexpr double eps = 1e-10;
  Raster ref = luminance(ref_in), dist = luminance(test_in);
  for (double& v : ref.values()) v *= 255.0;
  for (double& v : dist.values()) v *= 255.0;

  double num = 0.0, den = 0.0;
  for (int scale = 1; scale <= 4; ++scale) {
    const int n = (1 << (4 - scale + 1)) + 1;
    const auto win = gaussian_taps(n / 5.0, (n - 1) / 2);
    if (scale > 1) {
      ref = downsample2(filter_valid(ref, win));
      dist = downsample2(filter_valid(dist, win));
    }
    Raster rr = ref, dd = dist, rd = ref;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      rr.values()[i] = ref.values()[i] * ref.values()[i];
      dd.values()[i] = dist.values()[i] * dist.values()[i];
      rd.values()[i] = ref.values()[i] * dist.values()[i];
    }
    const Raster mu1 = filter_valid(ref, win), mu2 = filter_valid(dist, win);
    const Raster f11 = filter_valid(rr, win), f22 = filter_valid(dd, win), f12 = filter_valid(rd, win);
    for (std::size_t i = 0; i < mu1.size(); ++i) {
      const double m1 = mu1.values()[i], m2 = mu2.values()[i];
      double s1 = std::max(0.0, f11.values()[i] - m1 * m1);
      double s2 = std::max(0.0, f22.values()[i] - m2 * m2);
      const double s12 = f12.values()[i] - m1 * m2;
      double g = s12 / (s1 + eps);
      double sv = s2 - g * s12;
      if (s1 < eps) {
        g = 0.0;
        sv = s2;
        s1 = 0.0;
      }
      if (s2 < eps) {
        g = 0.0;
        sv = 0.0;
      }
      if (g < 0.0) {
        sv = s2;
        g = 0.0;
      }
      sv = std::max(sv, eps);
      num += std::log10(1.0 + g * g * s1 / (sv + sigma_nsq));
      den += std::log10(1.0 + s1 / sigma_nsq);
    }
  }
  if (den <= 0.0) return ref_in == test_in ? 1.0 : 0.0;
  return num / den;
}

namespace detail {

inline void central_gradient(const Raster& l, std::vector<double>& gx, std::vector<double>& gy) {
  const int w = l.width(), h = l.height();
  gx.assign(l.size(), 0.0);
  gy.assign(l.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      gx[i] = 0.5 * (l.at(std::min(x + 1, w - 1), y) - l.at(std::max(x - 1, 0), y));
      gy[i] = 0.5 * (l.at(x, std::min(y + 1, h - 1)) - l.at(x, std::max(y - 1, 0)));
    }
}

/// Otsu threshold over a 256-bin histogram of non-negative values.
inline double otsu_threshold(const std::vector<double>& v) {
  const double vmax = *std::max_element(v.begin(), v.end());
  if (vmax <= 0.0) return 0.0;
  std::array<double, 256> hist{};
  for (double x : v) hist[std::min(255, static_cast<int>(x / vmax * 255.0))] += 1.0;
  const double total = static_cast<double>(v.size());
  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += i * hist[i];
  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int best_t = 0;
  for (int t = 0; t < 256; ++t) {
    w0 += hist[t];
    if (w0 == 0.0) continue;
    const double w1 = total - w0;
    if (w1 == 0.0) break;
    sum0 += t * hist[t];
    const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return (best_t + 1) / 255.0 * vmax;
}

// Magnitude of the 3x3 box sum of the gradient field at (x, y).
inline double coherent_gradient(const std::vector<double>& gx, const std::vector<double>& gy, int w,
                                int h, int x, int y) {
  double sx = 0.0, sy = 0.0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const int xx = std::clamp(x + dx, 0, w - 1), yy = std::clamp(y + dy, 0, h - 1);
      sx += gx[static_cast<std::size_t>(yy) * w + xx];
      sy += gy[static_cast<std::size_t>(yy) * w + xx];
    }
  return std::hypot(sx, sy);
}

}  // namespace detail

/// Relative edge coherence: on the reference's edge pixels (gradient magnitude
/// above Otsu's threshold) sum the magnitude of the locally aggregated gradient
/// vector, and return test / reference. Empty when the reference has no edges.
inline std::optional<double> reco(const Raster& ref, const Raster& test) {
  detail::require_same_shape(ref, test);
  const Raster lr = luminance(ref), lt = luminance(test);
  const int w = lr.width(), h = lr.height();
  std::vector<double> rgx, rgy, tgx, tgy;
  detail::central_gradient(lr, rgx, rgy);
  detail::central_gradient(lt, tgx, tgy);
  std::vector<double> mag(rgx.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::hypot(rgx[i], rgy[i]);
  const double thr = detail::otsu_threshold(mag);
  if (thr <= 0.0) return std::nullopt;
  double sr = 0.0, st = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (mag[static_cast<std::size_t>(y) * w + x] <= thr) continue;
      sr += detail::coherent_gradient(rgx, rgy, w, h, x, y);
      st += detail::coherent_gradient(tgx, tgy, w, h, x, y);
    }
  if (sr <= 0.0) return std::nullopt;
  return st / sr;
}

struct MetricSet {
  double psnr = 0.0;
  double ssim = 0.0;
  double vif = 0.0;
  std::optional<double> reco;
};

inline MetricSet compute_metrics(const Raster& ref, const Raster& test) {
  return {psnr(ref, test), ssim(ref, test), vif(ref, test), reco(ref, test)};
}

}  // namespace endoqa
