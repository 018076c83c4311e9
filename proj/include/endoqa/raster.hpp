#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "endoqa/error.hpp"

namespace endoqa {

/// Interleaved multi-channel raster of doubles, row-major. No range
/// restriction on the stored values (used for signed bands and solver state).
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels, double fill = 0.0)
      : width_(width), height_(height), channels_(channels) {
    if (width <= 0 || height <= 0) throw invalid_argument("raster dimensions must be positive");
    if (channels != 1 && channels != 3) throw invalid_argument("raster must have 1 or 3 channels");
    values_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::size_t offset(int x, int y, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  double& at(int x, int y, int c = 0) noexcept { return values_[offset(x, y, c)]; }
  double at(int x, int y, int c = 0) const noexcept { return values_[offset(x, y, c)]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool same_shape(const Raster& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  /// Single channel copy of channel `c`.
  Raster channel(int c) const {
    Raster out(width_, height_, 1);
    for (std::size_t i = 0; i < pixel_count(); ++i) out.values_[i] = values_[i * channels_ + c];
    return out;
  }

  void set_channel(int c, const Raster& plane) {
    for (std::size_t i = 0; i < pixel_count(); ++i) values_[i * channels_ + c] = plane.values_[i];
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> values_;
};

/// A video frame: raster with values in [0,1] plus its source bit depth
/// and position in the sequence.
class Frame : public Raster {
 public:
  Frame() = default;
  Frame(int width, int height, int channels, double fill = 0.0)
      : Raster(width, height, channels, fill) {
    if (fill < 0.0 || fill > 1.0) throw invalid_argument("frame values must lie in [0,1]");
  }

  /// Wraps `r`, clamping every value into [0,1].
  static Frame from_raster(const Raster& r, int bit_depth = 8, std::int64_t index = 0) {
    Frame f;
    static_cast<Raster&>(f) = r;
    for (double& v : f.values()) v = std::clamp(v, 0.0, 1.0);
    f.bit_depth_source = bit_depth;
    f.index = index;
    return f;
  }

  bool in_unit_range() const noexcept {
    return std::all_of(values().begin(), values().end(),
                       [](double v) { return v >= 0.0 && v <= 1.0; });
  }

  int bit_depth_source = 8;
  std::int64_t index = 0;

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Binary raster; true marks an unknown / corrupted pixel.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, bool fill = false) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw invalid_argument("mask dimensions must be positive");
    bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool at(int x, int y) const noexcept { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v = true) noexcept {
    bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }
  bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }
  bool none() const noexcept { return count() == 0; }
  bool all() const noexcept { return count() == bits_.size(); }
  bool matches(const Raster& r) const noexcept { return width_ == r.width() && height_ == r.height(); }

  Mask& operator|=(const Mask& o) {
    if (o.width_ != width_ || o.height_ != height_) throw invalid_argument("mask size mismatch");
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= o.bits_[i];
    return *this;
  }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace endoqa
