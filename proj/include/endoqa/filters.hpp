#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "endoqa/error.hpp"
#include "endoqa/raster.hpp"

namespace endoqa {

/// Half-sample symmetric reflection: -1 -> 0, n -> n-1.
inline int reflect_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

/// Odd-sided square kernel of taps, row-major, centered.
struct Kernel2D {
  int side = 1;
  std::vector<double> taps{1.0};

  int radius() const noexcept { return side / 2; }
  double at(int dx, int dy) const noexcept {
    return taps[static_cast<std::size_t>(dy + radius()) * side + (dx + radius())];
  }
  double sum() const noexcept {
    double s = 0.0;
    for (double t : taps) s += t;
    return s;
  }
};

namespace detail {
struct Tap {
  int dx, dy;
  double w;
};
inline std::vector<Tap> nonzero_taps(const Kernel2D& k) {
  std::vector<Tap> out;
  const int r = k.radius();
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (k.at(dx, dy) != 0.0) out.push_back({dx, dy, k.at(dx, dy)});
  return out;
}
}  // namespace detail

namespace detail {
// Reflected source index of x - shift for every x.
inline std::vector<int> shifted_indices(int n, int shift) {
  std::vector<int> m(n);
  for (int i = 0; i < n; ++i) m[i] = reflect_index(i - shift, n);
  return m;
}
}  // namespace detail

/// out(x) = sum_k h(k) in(reflect(x - k)). Only nonzero taps are visited, so
/// sparse trajectory kernels stay cheap.
inline Raster convolve(const Raster& in, const Kernel2D& k) {
  const auto taps = detail::nonzero_taps(k);
  Raster out(in.width(), in.height(), in.channels());
  const int w = in.width(), h = in.height(), nc = in.channels();
  const double* src = in.values().data();
  double* dst = out.values().data();
  for (const auto& t : taps) {
    const auto xs = detail::shifted_indices(w, t.dx);
    for (int y = 0; y < h; ++y) {
      const double* row = src + static_cast<std::size_t>(reflect_index(y - t.dy, h)) * w * nc;
      double* orow = dst + static_cast<std::size_t>(y) * w * nc;
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < nc; ++c) orow[x * nc + c] += t.w * row[xs[x] * nc + c];
    }
  }
  return out;
}

/// Exact adjoint of `convolve` under the same reflective boundary.
inline Raster convolve_adjoint(const Raster& in, const Kernel2D& k) {
  const auto taps = detail::nonzero_taps(k);
  Raster out(in.width(), in.height(), in.channels());
  const int w = in.width(), h = in.height(), nc = in.channels();
  const double* src = in.values().data();
  double* dst = out.values().data();
  for (const auto& t : taps) {
    const auto xs = detail::shifted_indices(w, t.dx);
    for (int y = 0; y < h; ++y) {
      double* orow = dst + static_cast<std::size_t>(reflect_index(y - t.dy, h)) * w * nc;
      const double* row = src + static_cast<std::size_t>(y) * w * nc;
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < nc; ++c) orow[xs[x] * nc + c] += t.w * row[x * nc + c];
    }
  }
  return out;
}

/// Normalized 1-D Gaussian with radius ceil(3 sigma) unless given.
inline std::vector<double> gaussian_taps(double sigma, int radius = -1) {
  if (!(sigma > 0.0)) throw invalid_argument("gaussian sigma must be positive");
  if (radius < 0) radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> g(2 * radius + 1);
  double s = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    g[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    s += g[i + radius];
  }
  for (double& v : g) v /= s;
  return g;
}

inline Kernel2D gaussian_kernel(double sigma, int radius = -1) {
  const auto g = gaussian_taps(sigma, radius);
  Kernel2D k;
  k.side = static_cast<int>(g.size());
  k.taps.resize(g.size() * g.size());
  for (std::size_t y = 0; y < g.size(); ++y)
    for (std::size_t x = 0; x < g.size(); ++x) k.taps[y * g.size() + x] = g[y] * g[x];
  return k;
}

/// Same-size separable filtering with reflective boundary.
inline Raster separable_filter(const Raster& in, const std::vector<double>& taps) {
  const int r = static_cast<int>(taps.size() / 2);
  const int w = in.width(), h = in.height(), nc = in.channels();
  Raster tmp(w, h, nc), out(w, h, nc);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < nc; ++c) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i) s += taps[i + r] * in.at(reflect_index(x + i, w), y, c);
        tmp.at(x, y, c) = s;
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < nc; ++c) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i) s += taps[i + r] * tmp.at(x, reflect_index(y + i, h), c);
        out.at(x, y, c) = s;
      }
  return out;
}

inline Raster gaussian_blur(const Raster& in, double sigma) {
  return separable_filter(in, gaussian_taps(sigma));
}

/// Correlation keeping only positions where the window fits entirely
/// (MATLAB filter2 'valid'). Result is (w-n+1) x (h-n+1); window is separable.
inline Raster filter_valid(const Raster& in, const std::vector<double>& taps) {
  const int n = static_cast<int>(taps.size());
  const int ow = in.width() - n + 1, oh = in.height() - n + 1, nc = in.channels();
  if (ow <= 0 || oh <= 0) throw invalid_argument("image smaller than filter window");
  Raster tmp(ow, in.height(), nc), out(ow, oh, nc);
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < ow; ++x)
      for (int c = 0; c < nc; ++c) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += taps[i] * in.at(x + i, y, c);
        tmp.at(x, y, c) = s;
      }
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x)
      for (int c = 0; c < nc; ++c) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += taps[i] * tmp.at(x, y + i, c);
        out.at(x, y, c) = s;
      }
  return out;
}

/// Keeps every second sample starting at 0 in both axes.
inline Raster downsample2(const Raster& in) {
  const int w = (in.width() + 1) / 2, h = (in.height() + 1) / 2;
  Raster out(w, h, in.channels());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < in.channels(); ++c) out.at(x, y, c) = in.at(2 * x, 2 * y, c);
  return out;
}

/// Channel mean as a single-channel raster.
inline Raster luminance(const Raster& in) {
  if (in.channels() == 1) return in;
  Raster out(in.width(), in.height(), 1);
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      double s = 0.0;
      for (int c = 0; c < in.channels(); ++c) s += in.at(x, y, c);
      out.at(x, y) = s / in.channels();
    }
  return out;
}

}  // namespace endoqa
