#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "endoqa/error.hpp"
#include "endoqa/raster.hpp"

namespace endoqa {

inline constexpr double kDefaultIntensityCeiling = 0.9;

/// Mean and population covariance of the pixels whose brightest channel is
/// below the ceiling. `used` marks those pixels.
struct ColorStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::size_t count = 0;
  Mask used;
};

inline Mask sub_ceiling_mask(const Raster& f, double ceiling) {
  Mask used(f.width(), f.height());
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) {
      double mx = 0.0;
      for (int c = 0; c < f.channels(); ++c) mx = std::max(mx, f.at(x, y, c));
      if (mx < ceiling) used.set(x, y);
    }
  return used;
}

/// Statistics of `f` over the pixels selected by `used`.
inline ColorStats color_stats_over(const Raster& f, const Mask& used) {
  const int nc = f.channels();
  ColorStats s;
  s.used = used;
  s.count = used.count();
  if (s.count < 2) throw invalid_argument("color statistics need at least 2 qualifying pixels");
  s.mean = Eigen::VectorXd::Zero(nc);
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x)
      if (used.at(x, y))
        for (int c = 0; c < nc; ++c) s.mean[c] += f.at(x, y, c);
  s.mean /= static_cast<double>(s.count);
  s.covariance = Eigen::MatrixXd::Zero(nc, nc);
  Eigen::VectorXd d(nc);
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x)
      if (used.at(x, y)) {
        for (int c = 0; c < nc; ++c) d[c] = f.at(x, y, c) - s.mean[c];
        s.covariance.noalias() += d * d.transpose();
      }
  s.covariance /= static_cast<double>(s.count);
  return s;
}

inline ColorStats color_stats(const Raster& f, double intensity_ceiling = kDefaultIntensityCeiling) {
  return color_stats_over(f, sub_ceiling_mask(f, intensity_ceiling));
}

struct RetransferResult {
  Frame frame;
  // target covariance was singular and got delta*I added
  bool regularized = false;
};

inline constexpr double kCovarianceRegularizer = 1e-8;

/// Affine recolouring  out = S_s^{1/2} S_t^{-1/2} (in - mu_t) + mu_s, clamped
/// to [0,1]. Matrix roots come from symmetric eigendecompositions.
inline RetransferResult color_retransfer(const Frame& target, const ColorStats& src,
                                         const ColorStats& tgt) {
  const int nc = target.channels();
  if (src.mean.size() != nc || tgt.mean.size() != nc)
    throw invalid_argument("color statistics channel count differs from frame");

  RetransferResult res;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_t(tgt.covariance);
  Eigen::VectorXd ev_t = es_t.eigenvalues();
  if (ev_t.minCoeff() < kCovarianceRegularizer) {
    res.regularized = true;
    ev_t.array() += kCovarianceRegularizer;
  }
  const Eigen::MatrixXd inv_sqrt_t =
      es_t.eigenvectors() * ev_t.cwiseSqrt().cwiseInverse().asDiagonal() * es_t.eigenvectors().transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_s(src.covariance);
  const Eigen::MatrixXd sqrt_s = es_s.eigenvectors() *
                                 es_s.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                                 es_s.eigenvectors().transpose();
  const Eigen::MatrixXd a = sqrt_s * inv_sqrt_t;

  Raster out(target.width(), target.height(), nc);
  Eigen::VectorXd v(nc);
  for (int y = 0; y < target.height(); ++y)
    for (int x = 0; x < target.width(); ++x) {
      for (int c = 0; c < nc; ++c) v[c] = target.at(x, y, c) - tgt.mean[c];
      const Eigen::VectorXd o = a * v + src.mean;
      for (int c = 0; c < nc; ++c) out.at(x, y, c) = o[c];
    }
  res.frame = Frame::from_raster(out, target.bit_depth_source, target.index);
  return res;
}

enum class ExposureDirection { saturation, low_contrast };

struct ExposureResult {
  Frame frame;
  double gamma = 1.0;  // estimated exposure gamma; the frame was raised to 1/gamma
  std::optional<std::string> warning;
};

/// Highlight shoulder: identity below `ceiling`, smooth exponential roll-off
/// above it with unit slope at the knee.
inline double highlight_shoulder(double v, double ceiling) {
  if (v <= ceiling) return v;
  const double span = 1.0 - ceiling;
  return ceiling + span * (1.0 - std::exp(-(v - ceiling) / span));
}

/// Estimates the exposure gamma g from the median intensity of sub-ceiling
/// pixels (median = 0.5^g, g clamped to [0.3, 3]) and applies v^(1/g). The
/// saturation direction also compresses highlights above the ceiling.
inline ExposureResult exposure_correct(const Frame& f, ExposureDirection direction,
                                       double ceiling = kDefaultIntensityCeiling) {
  ExposureResult res{f, 1.0, std::nullopt};
  const auto [mn, mx] = std::minmax_element(f.values().begin(), f.values().end());
  const bool constant = *mx - *mn < 1e-12;
  const Mask used = sub_ceiling_mask(f, ceiling);
  std::vector<double> intensity;
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x)
      if (used.at(x, y)) {
        double s = 0.0;
        for (int c = 0; c < f.channels(); ++c) s += f.at(x, y, c);
        intensity.push_back(s / f.channels());
      }
  if (intensity.empty()) {
    res.warning = "no pixels below the intensity ceiling; exposure left unchanged";
    return res;
  }
  const std::size_t mid = intensity.size() / 2;
  std::nth_element(intensity.begin(), intensity.begin() + mid, intensity.end());
  double median = intensity[mid];
  if (intensity.size() % 2 == 0) {
    const double lower = *std::max_element(intensity.begin(), intensity.begin() + mid);
    median = 0.5 * (median + lower);
  }
  if (!(median > 0.0 && median < 1.0)) {
    res.warning = "degenerate median intensity; exposure left unchanged";
    return res;
  }
  const double g = std::clamp(std::log(median) / std::log(0.5), 0.3, 3.0);
  res.gamma = g;
  if (constant) res.warning = "constant frame; gamma estimated from a single level";
  Frame out = f;
  for (double& v : out.values()) {
    v = std::pow(v, 1.0 / g);
    if (direction == ExposureDirection::saturation) v = highlight_shoulder(v, ceiling);
    v = std::clamp(v, 0.0, 1.0);
  }
  res.frame = std::move(out);
  return res;
}

}  // namespace endoqa
