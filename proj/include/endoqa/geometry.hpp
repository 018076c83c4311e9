#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "endoqa/error.hpp"
#include "endoqa/raster.hpp"

namespace endoqa {

/// Artifact taxonomy. Integer codes are stable and used in every file format.
enum class ArtifactClass : int {
  blur = 0,
  bubbles = 1,
  specularity = 2,
  saturation = 3,
  contrast = 4,
  misc_artifact = 5,
};

inline constexpr int kArtifactClassCount = 6;

inline constexpr std::array<ArtifactClass, kArtifactClassCount> kAllArtifactClasses{
    ArtifactClass::blur,       ArtifactClass::bubbles,  ArtifactClass::specularity,
    ArtifactClass::saturation, ArtifactClass::contrast, ArtifactClass::misc_artifact};

inline constexpr bool is_valid_class_code(int code) noexcept {
  return code >= 0 && code < kArtifactClassCount;
}

inline ArtifactClass class_from_code(int code) {
  if (!is_valid_class_code(code))
    throw invalid_argument("artifact class code " + std::to_string(code) + " out of range 0-5");
  return static_cast<ArtifactClass>(code);
}

inline constexpr int class_code(ArtifactClass c) noexcept { return static_cast<int>(c); }

inline std::string_view class_name(ArtifactClass c) {
  switch (c) {
    case ArtifactClass::blur: return "blur";
    case ArtifactClass::bubbles: return "bubbles";
    case ArtifactClass::specularity: return "specularity";
    case ArtifactClass::saturation: return "saturation";
    case ArtifactClass::contrast: return "contrast";
    case ArtifactClass::misc_artifact: return "misc_artifact";
  }
  throw invalid_argument("artifact class code " + std::to_string(static_cast<int>(c)) +
                         " out of range 0-5");
}

inline std::optional<ArtifactClass> class_from_name(std::string_view name) {
  for (ArtifactClass c : kAllArtifactClasses)
    if (class_name(c) == name) return c;
  return std::nullopt;
}

/// Axis-aligned box in normalized image coordinates, (x, y) the top-left corner.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  static constexpr double kEps = 1e-9;

  double center_x() const noexcept { return x + 0.5 * w; }
  double center_y() const noexcept { return y + 0.5 * h; }

  /// Empty when valid, otherwise the name of the offending field.
  std::optional<std::string> violation() const {
    if (!std::isfinite(x) || x < 0.0 || x > 1.0) return "x";
    if (!std::isfinite(y) || y < 0.0 || y > 1.0) return "y";
    if (!std::isfinite(w) || w <= 0.0 || w > 1.0) return "w";
    if (!std::isfinite(h) || h <= 0.0 || h > 1.0) return "h";
    if (x + w > 1.0 + kEps) return "w";
    if (y + h > 1.0 + kEps) return "h";
    return std::nullopt;
  }
  bool valid() const { return !violation().has_value(); }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Detection {
  ArtifactClass cls = ArtifactClass::blur;
  BBox box;
  double confidence = 1.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

inline void validate(const BBox& b) {
  if (auto field = b.violation()) throw invalid_argument("invalid bounding box field '" + *field + "'");
}

inline void validate(const Detection& d) {
  if (!is_valid_class_code(class_code(d.cls)))
    throw invalid_argument("artifact class code " + std::to_string(class_code(d.cls)) +
                           " out of range 0-5");
  validate(d.box);
  if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
    throw invalid_argument("detection confidence outside [0,1]");
}

inline double intersection_area(const BBox& a, const BBox& b) noexcept {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  return (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
}

inline double iou(const BBox& a, const BBox& b) noexcept {
  const double inter = intersection_area(a, b);
  const double uni = a.w * a.h + b.w * b.h - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

inline double area_fraction(const BBox& b) noexcept { return b.w * b.h; }

/// Weight of the 3x3 grid cell containing the box center: 0.5 for the
/// center cell, 0.25 for left/right/top/bottom, 0.125 for the corners.
inline double location_weight(const BBox& b) noexcept {
  auto cell = [](double v) { return std::clamp(static_cast<int>(std::floor(v * 3.0)), 0, 2); };
  const int col = cell(b.center_x());
  const int row = cell(b.center_y());
  if (col == 1 && row == 1) return 0.5;
  if (col == 1 || row == 1) return 0.25;
  return 0.125;
}

/// Pixel span [begin, end) covered by a box along one axis; rounding is
/// half away from zero and at least one pixel is always covered.
struct PixelRect {
  int x0, y0, x1, y1;
};

inline PixelRect rasterize(const BBox& b, int width, int height) {
  auto span = [](double lo, double ext, int n) {
    int a = static_cast<int>(std::lround(lo * n));
    int e = static_cast<int>(std::lround((lo + ext) * n));
    a = std::clamp(a, 0, n - 1);
    e = std::clamp(e, a + 1, n);
    return std::pair{a, e};
  };
  auto [x0, x1] = span(b.x, b.w, width);
  auto [y0, y1] = span(b.y, b.h, height);
  return {x0, y0, x1, y1};
}

/// Dilation with a (2r+1)x(2r+1) square structuring element, done as two
/// separable 1-D max passes.
inline Mask dilate_mask(const Mask& m, int radius) {
  if (radius < 0) throw invalid_argument("dilation radius must be non-negative");
  if (radius == 0 || m.size() == 0) return m;
  const int w = m.width(), h = m.height();
  Mask rows(w, h);
  for (int y = 0; y < h; ++y) {
    // distance-to-last-set sweep in both directions
    int last = -radius - 1;
    for (int x = 0; x < w; ++x) {
      if (m.at(x, y)) last = x;
      if (x - last <= radius) rows.set(x, y);
    }
    last = w + radius + 1;
    for (int x = w - 1; x >= 0; --x) {
      if (m.at(x, y)) last = x;
      if (last - x <= radius) rows.set(x, y);
    }
  }
  Mask out(w, h);
  for (int x = 0; x < w; ++x) {
    int last = -radius - 1;
    for (int y = 0; y < h; ++y) {
      if (rows.at(x, y)) last = y;
      if (y - last <= radius) out.set(x, y);
    }
    last = h + radius + 1;
    for (int y = h - 1; y >= 0; --y) {
      if (rows.at(x, y)) last = y;
      if (last - y <= radius) out.set(x, y);
    }
  }
  return out;
}

inline void fill_box(Mask& m, const BBox& b) {
  const PixelRect r = rasterize(b, m.width(), m.height());
  for (int y = r.y0; y < r.y1; ++y)
    for (int x = r.x0; x < r.x1; ++x) m.set(x, y);
}

inline Mask boxes_to_mask(const std::vector<Detection>& dets, int width, int height,
                          int dilation_radius) {
  Mask m(width, height);
  for (const Detection& d : dets) fill_box(m, d.box);
  return dilate_mask(m, dilation_radius);
}

}  // namespace endoqa
