#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "endoqa/error.hpp"
#include "endoqa/raster.hpp"
#include "endoqa/restoration/tv.hpp"

namespace endoqa {

struct PatchInpaintOptions {
  int patch_side = 9;
  // half-width of the local source search window; the whole image is
  // searched when the window holds no complete source patch
  int search_radius = 48;
  TvParams fallback{};
};

struct PatchInpaintReport {
  int fill_steps = 0;
  bool used_tv_fallback = false;
};

/// Greedy exemplar-based fill. At each step the fill-front pixel with the
/// highest priority (patch confidence times isophote strength) is chosen and
/// its unknown pixels are copied from the source patch minimizing SSD over
/// the known pixels. Sources are patches lying entirely in the original
/// known region.
inline Frame patch_inpaint(const Frame& f, const Mask& m, const PatchInpaintOptions& opt = {},
                           PatchInpaintReport* report = nullptr) {
  const int side = opt.patch_side;
  if (side < 1 || side % 2 == 0) throw invalid_argument("patch side must be odd and >= 1");
  if (!m.matches(f)) throw invalid_argument("mask dimensions differ from frame");
  PatchInpaintReport local;
  PatchInpaintReport& rep = report ? *report : local;
  rep = PatchInpaintReport{};
  if (m.none()) return f;
  if (m.all()) throw invalid_argument("patch_inpaint needs known pixels to source patches");

  const int w = f.width(), h = f.height(), nc = f.channels(), r = side / 2;
  const std::size_t n = m.size();
  Frame img = f;
  std::vector<std::uint8_t> known(n);
  std::vector<double> conf(n);
  for (std::size_t i = 0; i < n; ++i) {
    known[i] = !m[i];
    conf[i] = known[i] ? 1.0 : 0.0;
  }

  // summed-area table of original holes: a source center is valid when its
  // patch fits in the image and contains no hole pixel
  std::vector<int> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      sat[(y + 1) * (w + 1) + x + 1] = m.at(x, y) + sat[y * (w + 1) + x + 1] +
                                       sat[(y + 1) * (w + 1) + x] - sat[y * (w + 1) + x];
  auto valid_source = [&](int cx, int cy) {
    if (cx - r < 0 || cy - r < 0 || cx + r >= w || cy + r >= h) return false;
    const int x0 = cx - r, y0 = cy - r, x1 = cx + r + 1, y1 = cy + r + 1;
    return sat[y1 * (w + 1) + x1] - sat[y0 * (w + 1) + x1] - sat[y1 * (w + 1) + x0] +
               sat[y0 * (w + 1) + x0] == 0;
  };

  auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
  auto lum = [&](int x, int y) {
    double s = 0.0;
    for (int c = 0; c < nc; ++c) s += img.at(x, y, c);
    return s / nc;
  };

  std::vector<std::size_t> unknown;
  for (std::size_t i = 0; i < n; ++i)
    if (!known[i]) unknown.push_back(i);

  while (!unknown.empty()) {
    // priority over the fill front
    double best_priority = -1.0;
    int tx = -1, ty = -1;
    for (std::size_t i : unknown) {
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      const bool front = (x > 0 && known[i - 1]) || (x + 1 < w && known[i + 1]) ||
                         (y > 0 && known[i - w]) || (y + 1 < h && known[i + w]);
      if (!front) continue;
      double c_sum = 0.0;
      double gmax = 0.0, isox = 0.0, isoy = 0.0;
      for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy)
        for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
          const std::size_t j = idx(xx, yy);
          if (!known[j]) continue;
          c_sum += conf[j];
          if (xx > 0 && xx + 1 < w && yy > 0 && yy + 1 < h && known[j - 1] && known[j + 1] &&
              known[j - w] && known[j + w]) {
            const double gx = 0.5 * (lum(xx + 1, yy) - lum(xx - 1, yy));
            const double gy = 0.5 * (lum(xx, yy + 1) - lum(xx, yy - 1));
            const double g2 = gx * gx + gy * gy;
            if (g2 > gmax) {
              gmax = g2;
              isox = -gy;
              isoy = gx;
            }
          }
        }
      const double confidence = c_sum / (side * side);
      // front normal from the known-indicator gradient
      auto k = [&](int xx, int yy) {
        xx = std::clamp(xx, 0, w - 1);
        yy = std::clamp(yy, 0, h - 1);
        return known[idx(xx, yy)] ? 1.0 : 0.0;
      };
      double nx = k(x + 1, y) - k(x - 1, y), ny = k(x, y + 1) - k(x, y - 1);
      const double nn = std::hypot(nx, ny);
      if (nn > 0.0) {
        nx /= nn;
        ny /= nn;
      }
      const double data = std::abs(isox * nx + isoy * ny);
      const double priority = confidence * (data + 1e-3);
      if (priority > best_priority) {
        best_priority = priority;
        tx = x;
        ty = y;
      }
    }
    if (tx < 0) break;

    // best source patch
    auto ssd_at = [&](int sx, int sy, double bound) {
      double s = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = ty + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = tx + dx;
          if (xx < 0 || xx >= w || !known[idx(xx, yy)]) continue;
          for (int c = 0; c < nc; ++c) {
            const double d = img.at(xx, yy, c) - img.at(sx + dx, sy + dy, c);
            s += d * d;
          }
        }
        if (s > bound) return s;
      }
      return s;
    };
    auto search = [&](int x0, int y0, int x1, int y1, int& bx, int& by) {
      double best = std::numeric_limits<double>::infinity();
      long best_d2 = 0;
      for (int sy = y0; sy <= y1; ++sy)
        for (int sx = x0; sx <= x1; ++sx) {
          if (!valid_source(sx, sy)) continue;
          const double s = ssd_at(sx, sy, best);
          const long d2 = static_cast<long>(sx - tx) * (sx - tx) + static_cast<long>(sy - ty) * (sy - ty);
          if (s < best || (s == best && d2 < best_d2)) {
            best = s;
            best_d2 = d2;
            bx = sx;
            by = sy;
          }
        }
      return std::isfinite(best);
    };
    int bx = -1, by = -1;
    const int R = opt.search_radius;
    bool found = search(std::max(0, tx - R), std::max(0, ty - R), std::min(w - 1, tx + R),
                        std::min(h - 1, ty + R), bx, by);
    if (!found) found = search(0, 0, w - 1, h - 1, bx, by);
    if (!found) break;

    double c_sum = 0.0;
    for (int yy = std::max(0, ty - r); yy <= std::min(h - 1, ty + r); ++yy)
      for (int xx = std::max(0, tx - r); xx <= std::min(w - 1, tx + r); ++xx)
        if (known[idx(xx, yy)]) c_sum += conf[idx(xx, yy)];
    const double patch_conf = c_sum / (side * side);
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        const int xx = tx + dx, yy = ty + dy;
        if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
        const std::size_t j = idx(xx, yy);
        if (known[j]) continue;
        for (int c = 0; c < nc; ++c) img.at(xx, yy, c) = img.at(bx + dx, by + dy, c);
        known[j] = 1;
        conf[j] = patch_conf;
      }
    ++rep.fill_steps;
    std::erase_if(unknown, [&](std::size_t i) { return known[i] != 0; });
  }

  if (!unknown.empty()) {
    Mask rest(w, h);
    for (std::size_t i : unknown) rest.set(static_cast<int>(i % w), static_cast<int>(i / w));
    rep.used_tv_fallback = true;
    return tv_inpaint(img, rest, opt.fallback);
  }
  return img;
}

}  // namespace endoqa
