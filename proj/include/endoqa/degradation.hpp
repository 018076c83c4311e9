#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "endoqa/error.hpp"
#include "endoqa/filters.hpp"
#include "endoqa/raster.hpp"

namespace endoqa {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Camera path in kernel-relative pixel coordinates (origin at kernel center).
struct BlurTrajectory {
  std::vector<Point2> points;
  std::uint64_t seed = 0;
};

/// Normalized blur kernel: odd square side, non-negative taps summing to 1.
struct Psf {
  Kernel2D kernel;

  static constexpr double kSumTolerance = 1e-9;

  static Psf delta(int side = 1) {
    if (side < 1 || side % 2 == 0) throw invalid_argument("psf side must be odd and >= 1");
    Psf p;
    p.kernel.side = side;
    p.kernel.taps.assign(static_cast<std::size_t>(side) * side, 0.0);
    p.kernel.taps[static_cast<std::size_t>(side / 2) * side + side / 2] = 1.0;
    return p;
  }

  static Psf gaussian(double sigma) { return Psf{gaussian_kernel(sigma)}; }

  void validate(double tol = kSumTolerance) const {
    if (kernel.side < 1 || kernel.side % 2 == 0) throw invalid_argument("psf side must be odd and >= 1");
    if (kernel.taps.size() != static_cast<std::size_t>(kernel.side) * kernel.side)
      throw invalid_argument("psf tap count does not match its side");
    for (double t : kernel.taps)
      if (!(t >= 0.0)) throw invalid_argument("psf taps must be non-negative");
    if (std::abs(kernel.sum() - 1.0) > tol) throw invalid_argument("psf taps must sum to 1");
  }
};

/// Paper-style patch sides for random inpainting masks.
inline std::vector<int> default_mask_sides() {
  std::vector<int> s{5, 7};
  for (int v = 11; v <= 33; v += 2) s.push_back(v);
  return s;
}

struct MaskSpec {
  int count = 1;
  std::vector<int> sides = default_mask_sides();
};

/// Parameters of the forward model  I = F[(h * f + noise)^gamma].
struct DegradationSpec {
  std::optional<Psf> psf;
  double gamma = 1.0;
  double noise_sigma = 0.0;
  std::optional<MaskSpec> mask;

  void validate() const {
    if (!(gamma > 0.0)) throw invalid_argument("gamma must be positive");
    if (!(noise_sigma >= 0.0)) throw invalid_argument("noise sigma must be non-negative");
    if (psf) psf->validate();
    if (mask && mask->count < 1) throw invalid_argument("mask count must be >= 1");
  }
};

/// Rasterizes the polyline: equal-mass samples spaced uniformly in arc length
/// (one per pixel of length, endpoints included), bilinearly splatted, then
/// normalized.
inline Psf trajectory_kernel(const BlurTrajectory& traj, int side) {
  if (side < 1 || side % 2 == 0) throw invalid_argument("kernel side must be odd and >= 1");
  if (traj.points.empty()) throw invalid_argument("trajectory needs at least one point");
  const double half = (side - 1) / 2.0;
  for (const Point2& p : traj.points)
    if (std::abs(p.x) > half + 1e-9 || std::abs(p.y) > half + 1e-9)
      throw invalid_argument("trajectory exceeds kernel support");

  std::vector<double> cumulative{0.0};
  for (std::size_t i = 1; i < traj.points.size(); ++i) {
    const double dx = traj.points[i].x - traj.points[i - 1].x;
    const double dy = traj.points[i].y - traj.points[i - 1].y;
    cumulative.push_back(cumulative.back() + std::hypot(dx, dy));
  }
  const double length = cumulative.back();

  std::vector<Point2> samples;
  if (length <= 1e-12) {
    samples.push_back(traj.points.front());
  } else {
    const int segments = std::max(1, static_cast<int>(std::ceil(length - 1e-9)));
    std::size_t seg = 1;
    for (int i = 0; i <= segments; ++i) {
      const double s = length * i / segments;
      while (seg + 1 < cumulative.size() && cumulative[seg] < s) ++seg;
      const double seg_len = cumulative[seg] - cumulative[seg - 1];
      const double t = seg_len > 0.0 ? std::clamp((s - cumulative[seg - 1]) / seg_len, 0.0, 1.0) : 0.0;
      const Point2& a = traj.points[seg - 1];
      const Point2& b = traj.points[seg];
      samples.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }

  Psf psf;
  psf.kernel.side = side;
  psf.kernel.taps.assign(static_cast<std::size_t>(side) * side, 0.0);
  auto splat = [&](int ix, int iy, double w) {
    if (w <= 0.0 || ix < 0 || iy < 0 || ix >= side || iy >= side) return;
    psf.kernel.taps[static_cast<std::size_t>(iy) * side + ix] += w;
  };
  for (const Point2& p : samples) {
    const double px = std::clamp(p.x + half, 0.0, side - 1.0);
    const double py = std::clamp(p.y + half, 0.0, side - 1.0);
    const int x0 = static_cast<int>(std::floor(px)), y0 = static_cast<int>(std::floor(py));
    const double fx = px - x0, fy = py - y0;
    splat(x0, y0, (1 - fx) * (1 - fy));
    splat(x0 + 1, y0, fx * (1 - fy));
    splat(x0, y0 + 1, (1 - fx) * fy);
    splat(x0 + 1, y0 + 1, fx * fy);
  }
  const double total = psf.kernel.sum();
  for (double& t : psf.kernel.taps) t /= total;
  return psf;
}

inline constexpr int kDefaultKernelSide = 15;
inline constexpr int kDefaultTrajectoryCount = 15;

/// Smooth random camera path: a walk whose heading drifts by small Gaussian
/// turns, recentred on its centroid and shrunk to fit the kernel support.
inline BlurTrajectory random_trajectory(std::uint64_t seed, int side = kDefaultKernelSide,
                                        int steps = 24, double step_length = 0.4,
                                        double turn_sigma = 0.35) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle0(0.0, 2.0 * 3.14159265358979323846);
  std::normal_distribution<double> turn(0.0, turn_sigma);
  BlurTrajectory traj;
  traj.seed = seed;
  double heading = angle0(rng);
  Point2 p{};
  traj.points.push_back(p);
  for (int i = 0; i < steps; ++i) {
    heading += turn(rng);
    p.x += step_length * std::cos(heading);
    p.y += step_length * std::sin(heading);
    traj.points.push_back(p);
  }
  Point2 c{};
  for (const auto& q : traj.points) {
    c.x += q.x;
    c.y += q.y;
  }
  c.x /= traj.points.size();
  c.y /= traj.points.size();
  double extent = 0.0;
  for (auto& q : traj.points) {
    q.x -= c.x;
    q.y -= c.y;
    extent = std::max({extent, std::abs(q.x), std::abs(q.y)});
  }
  const double half = (side - 1) / 2.0;
  if (extent > half) {
    const double s = half / extent;
    for (auto& q : traj.points) {
      q.x *= s;
      q.y *= s;
    }
  }
  return traj;
}

/// The default bank of simulated trajectories (seeds 1..15).
inline std::vector<BlurTrajectory> default_trajectories(int side = kDefaultKernelSide) {
  std::vector<BlurTrajectory> out;
  for (int s = 1; s <= kDefaultTrajectoryCount; ++s) out.push_back(random_trajectory(s, side));
  return out;
}

inline Mask random_masks(int width, int height, int count, const std::vector<int>& sides,
                         std::uint64_t seed) {
  if (count < 1) throw invalid_argument("mask count must be >= 1");
  if (sides.empty()) throw invalid_argument("mask side set is empty");
  const int max_side = *std::max_element(sides.begin(), sides.end());
  if (*std::min_element(sides.begin(), sides.end()) < 1) throw invalid_argument("mask sides must be >= 1");
  if (max_side > width || max_side > height) throw invalid_argument("frame smaller than largest mask side");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, sides.size() - 1);
  Mask m(width, height);
  for (int i = 0; i < count; ++i) {
    const int s = sides[pick(rng)];
    const int x = std::uniform_int_distribution<int>(0, width - s)(rng);
    const int y = std::uniform_int_distribution<int>(0, height - s)(rng);
    for (int yy = y; yy < y + s; ++yy)
      for (int xx = x; xx < x + s; ++xx) m.set(xx, yy);
  }
  return m;
}

/// `count` random squares whose union covers about `target_fraction` of the
/// frame. Sides are drawn from `sides` and then scaled by a common factor
/// found by bisection on the realized coverage.
inline Mask coverage_masks(int width, int height, int count, double target_fraction,
                           const std::vector<int>& sides, std::uint64_t seed) {
  if (count < 1) throw invalid_argument("mask count must be >= 1");
  if (sides.empty()) throw invalid_argument("mask side set is empty");
  if (!(target_fraction > 0.0 && target_fraction < 1.0))
    throw invalid_argument("target coverage must lie in (0,1)");
  struct Draw {
    int side;
    double u, v;
  };
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, sides.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Draw> draws;
  for (int i = 0; i < count; ++i) {
    const int s = sides[pick(rng)];
    const double u = unit(rng), v = unit(rng);
    draws.push_back({s, u, v});
  }
  const int limit = std::min(width, height);
  auto build = [&](double scale) {
    Mask m(width, height);
    for (const Draw& d : draws) {
      const int s = std::clamp(static_cast<int>(std::lround(d.side * scale)), 1, limit);
      const int x = std::min(width - s, static_cast<int>(d.u * (width - s + 1)));
      const int y = std::min(height - s, static_cast<int>(d.v * (height - s + 1)));
      for (int yy = y; yy < y + s; ++yy)
        for (int xx = x; xx < x + s; ++xx) m.set(xx, yy);
    }
    return m;
  };
  const double total = static_cast<double>(width) * height;
  double lo = 0.0, hi = 2.0 * limit;
  Mask best = build(1.0);
  double best_err = std::abs(best.count() / total - target_fraction);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    Mask m = build(mid);
    const double frac = m.count() / total;
    const double err = std::abs(frac - target_fraction);
    if (err < best_err) {
      best_err = err;
      best = std::move(m);
    }
    (frac < target_fraction ? lo : hi) = mid;
  }
  return best;
}

/// Applies blur (reflective boundary), additive Gaussian noise, the power law
/// and mask knockout (masked pixels forced to 1.0), in that order. The
/// result is clamped to [0,1] and depends only on (frame, spec, seed).
inline Frame corrupt(const Frame& f, const DegradationSpec& spec, std::uint64_t seed,
                     Mask* applied_mask = nullptr) {
  spec.validate();
  Raster r = spec.psf ? convolve(f, spec.psf->kernel) : static_cast<const Raster&>(f);
  if (spec.noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (double& v : r.values()) v += noise(rng);
  }
  for (double& v : r.values()) {
    v = std::clamp(v, 0.0, 1.0);
    if (spec.gamma != 1.0) v = std::pow(v, spec.gamma);
  }
  if (spec.mask) {
    const Mask m = random_masks(f.width(), f.height(), spec.mask->count, spec.mask->sides,
                                seed ^ 0x9e3779b97f4a7c15ULL);
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x)
        if (m.at(x, y))
          for (int c = 0; c < f.channels(); ++c) r.at(x, y, c) = 1.0;
    if (applied_mask) *applied_mask = m;
  } else if (applied_mask) {
    *applied_mask = Mask(f.width(), f.height());
  }
  return Frame::from_raster(r, f.bit_depth_source, f.index);
}

}  // namespace endoqa
