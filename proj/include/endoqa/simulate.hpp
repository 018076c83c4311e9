#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "endoqa/degradation.hpp"
#include "endoqa/geometry.hpp"
#include "endoqa/quality.hpp"
#include "endoqa/raster.hpp"

namespace endoqa {

/// Smooth shading plus a low-amplitude oriented texture and a few sharp-edged
/// blobs. Values stay inside [0.05, 0.95].
inline Frame synthetic_scene(int width, int height, int channels, std::uint64_t seed,
                             double texture_amplitude = 0.04) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr double pi = 3.14159265358979323846;
  const double fx1 = 0.5 + u(rng), fy1 = 0.5 + u(rng), ph1 = 2 * pi * u(rng);
  const double fx2 = 1.0 + 1.5 * u(rng), fy2 = 0.5 + u(rng), ph2 = 2 * pi * u(rng);
  const double tex_angle = pi * u(rng), tex_period = 6.0 + 4.0 * u(rng);
  struct Blob {
    double cx, cy, r, delta;
  };
  std::vector<Blob> blobs;
  for (int i = 0; i < 4; ++i)
    blobs.push_back({u(rng), u(rng), 0.08 + 0.12 * u(rng), (u(rng) < 0.5 ? -1.0 : 1.0) * (0.12 + 0.1 * u(rng))});
  std::array<double, 3> tint{1.0, 0.85 + 0.1 * u(rng), 0.7 + 0.15 * u(rng)};
  // chroma: a slow wave pulling red against blue, and per-blob channel gains
  const double fx3 = 0.3 + u(rng), fy3 = 0.3 + u(rng), ph3 = 2 * pi * u(rng);
  std::array<std::array<double, 3>, 4> blob_gain{};
  for (auto& g : blob_gain)
    for (double& c : g) c = 0.7 + 0.6 * u(rng);

  Frame f(width, height, channels);
  const double ca = std::cos(tex_angle), sa = std::sin(tex_angle);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double nx = static_cast<double>(x) / width, ny = static_cast<double>(y) / height;
      double v = 0.5 + 0.15 * std::sin(2 * pi * (fx1 * nx + fy1 * ny) + ph1) +
                 0.08 * std::cos(2 * pi * (fx2 * nx - fy2 * ny) + ph2);
      v += texture_amplitude * std::sin(2 * pi * (ca * x + sa * y) / tex_period);
      std::array<double, 3> extra{};
      for (std::size_t i = 0; i < blobs.size(); ++i) {
        const Blob& b = blobs[i];
        const double d = std::hypot(nx - b.cx, ny - b.cy);
        if (d < b.r) {
          v += b.delta;
          for (int c = 0; c < 3; ++c) extra[c] += b.delta * (blob_gain[i][c] - 1.0);
        }
      }
      const double chroma = 0.04 * std::sin(2 * pi * (fx3 * nx + fy3 * ny) + ph3);
      for (int c = 0; c < channels; ++c) {
        if (channels != 3) {
          f.at(x, y, c) = std::clamp(v, 0.05, 0.95);
          continue;
        }
        const double t = 0.5 + (v - 0.5) * tint[c] + extra[c] + chroma * (1 - c);
        f.at(x, y, c) = std::clamp(t, 0.05, 0.95);
      }
    }
  return f;
}

enum class CorruptionLevel { clean, mild, severe };

inline std::string_view to_string(CorruptionLevel l) {
  switch (l) {
    case CorruptionLevel::clean: return "clean";
    case CorruptionLevel::mild: return "mild";
    case CorruptionLevel::severe: return "severe";
  }
  return "unknown";
}

/// A clean/corrupted pair with the detections a perfect detector would emit
/// for the injected corruption.
struct SimulatedFrame {
  std::string id;
  CorruptionLevel level = CorruptionLevel::clean;
  std::string corruption;  // short description
  Frame clean;
  Frame corrupted;
  std::vector<Detection> detections;
};

namespace detail {

inline BBox pixel_box(int x, int y, int side_w, int side_h, int width, int height) {
  return {static_cast<double>(x) / width, static_cast<double>(y) / height,
          static_cast<double>(side_w) / width, static_cast<double>(side_h) / height};
}

inline void knock_out(Frame& f, int x, int y, int sw, int sh, double value) {
  for (int yy = y; yy < y + sh; ++yy)
    for (int xx = x; xx < x + sw; ++xx)
      for (int c = 0; c < f.channels(); ++c) f.at(xx, yy, c) = value;
}

}  // namespace detail

/// Builds one simulated frame. Mild frames get exactly one kind of
/// restorable corruption (trajectory blur, specular knockouts or an exposure
/// shift); severe frames get several large central occlusions; clean frames
/// are untouched but may carry a tiny benign detection or low-confidence
/// spurious ones.
inline SimulatedFrame simulate_frame(const Frame& clean, CorruptionLevel level, std::uint64_t seed,
                                     double noise_sigma = 0.003) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int w = clean.width(), h = clean.height();
  SimulatedFrame s;
  s.level = level;
  s.clean = clean;
  s.corrupted = clean;

  switch (level) {
    case CorruptionLevel::clean: {
      const double r = u(rng);
      if (r < 0.25) {
        // tiny corner blur box: scores above the keep threshold
        s.detections.push_back({ArtifactClass::blur, {0.02, 0.02, 0.05, 0.05}, 0.6});
        s.corruption = "benign";
      } else if (r < 0.45) {
        s.detections.push_back({ArtifactClass::misc_artifact, {0.3, 0.3, 0.3, 0.3}, 0.1 + 0.1 * u(rng)});
        s.corruption = "spurious-low-confidence";
      } else {
        s.corruption = "none";
      }
      break;
    }
    case CorruptionLevel::mild: {
      const int kind = static_cast<int>(u(rng) * 3.0);
      if (kind == 0) {
        DegradationSpec spec;
        spec.psf = trajectory_kernel(random_trajectory(1 + rng() % kDefaultTrajectoryCount), kDefaultKernelSide);
        spec.noise_sigma = noise_sigma;
        s.corrupted = corrupt(clean, spec, rng());
        s.detections.push_back({ArtifactClass::blur, {0.0, 0.0, 1.0, 1.0}, 0.7 + 0.2 * u(rng)});
        s.corruption = "motion-blur";
      } else if (kind == 1) {
        const int n = 2 + static_cast<int>(u(rng) * 3.0);
        for (int i = 0; i < n; ++i) {
          const int side = std::max(2, static_cast<int>(std::lround((0.04 + 0.04 * u(rng)) * std::min(w, h))));
          const int x = static_cast<int>(u(rng) * (w - side)), y = static_cast<int>(u(rng) * (h - side));
          detail::knock_out(s.corrupted, x, y, side, side, 1.0);
          s.detections.push_back({ArtifactClass::specularity, detail::pixel_box(x, y, side, side, w, h), 0.5 + 0.4 * u(rng)});
        }
        s.corruption = "specularity";
      } else {
        const bool bright = u(rng) < 0.5;
        DegradationSpec spec;
        spec.gamma = bright ? 0.6 : 1.8;
        spec.noise_sigma = noise_sigma;
        s.corrupted = corrupt(clean, spec, rng());
        s.detections.push_back({bright ? ArtifactClass::saturation : ArtifactClass::contrast,
                                {0.0, 0.0, 1.0, 1.0}, 0.6 + 0.3 * u(rng)});
        s.corruption = bright ? "over-exposure" : "under-exposure";
      }
      break;
    }
    case CorruptionLevel::severe: {
      const int n = 2 + static_cast<int>(u(rng) * 3.0);
      for (int i = 0; i < n; ++i) {
        const double bw = 0.3 + 0.2 * u(rng), bh = 0.3 + 0.2 * u(rng);
        const double bx = 0.5 - bw / 2 + (u(rng) - 0.5) * 0.1, by = 0.5 - bh / 2 + (u(rng) - 0.5) * 0.1;
        const BBox box{bx, by, bw, bh};
        const PixelRect pr = rasterize(box, w, h);
        detail::knock_out(s.corrupted, pr.x0, pr.y0, pr.x1 - pr.x0, pr.y1 - pr.y0, 0.2 + 0.6 * u(rng));
        s.detections.push_back({ArtifactClass::misc_artifact, box, 0.5 + 0.4 * u(rng)});
      }
      s.corruption = "occlusion";
      break;
    }
  }
  return s;
}

/// Deterministic corpus with the requested level proportions (rounded),
/// frames shuffled, ids "frame_00000"... in sequence order.
inline std::vector<SimulatedFrame> simulate_corpus(int frames, double mild_fraction, double severe_fraction,
                                                   int width, int height, int channels, std::uint64_t seed) {
  if (frames < 0) throw invalid_argument("frame count must be non-negative");
  if (!(mild_fraction >= 0 && severe_fraction >= 0 && mild_fraction + severe_fraction <= 1.0))
    throw invalid_argument("corruption fractions must be non-negative and sum to at most 1");
  const int n_mild = static_cast<int>(std::lround(frames * mild_fraction));
  const int n_severe = static_cast<int>(std::lround(frames * severe_fraction));
  std::vector<CorruptionLevel> levels(frames, CorruptionLevel::clean);
  for (int i = 0; i < n_mild && i < frames; ++i) levels[i] = CorruptionLevel::mild;
  for (int i = n_mild; i < n_mild + n_severe && i < frames; ++i) levels[i] = CorruptionLevel::severe;
  std::mt19937_64 rng(seed);
  std::shuffle(levels.begin(), levels.end(), rng);

  std::vector<SimulatedFrame> out;
  out.reserve(frames);
  for (int i = 0; i < frames; ++i) {
    const std::uint64_t frame_seed = rng();
    Frame clean = synthetic_scene(width, height, channels, frame_seed);
    clean.index = i;
    SimulatedFrame s = simulate_frame(clean, levels[i], frame_seed ^ 0xa5a5a5a5ULL);
    char id[32];
    std::snprintf(id, sizeof id, "frame_%05d", i);
    s.id = id;
    s.clean.index = s.corrupted.index = i;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace endoqa
