#pragma once

#include <cmath>
#include <vector>

#include "endoqa/filters.hpp"
#include "endoqa/raster.hpp"

namespace endoqa {

/// High-frequency bands plus the remaining low-pass residual.
struct HfPyramid {
  Raster lowpass;
  std::vector<Raster> bands;  // finest first

  Raster reconstruct() const {
    Raster out = lowpass;
    for (const Raster& b : bands)
      for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += b.values()[i];
    return out;
  }
};

inline constexpr int kHfScales = 4;

/// Iterated low-pass / high-pass split: Gaussian low-pass with sigma 1, 2, 4,
/// 8; each band is the current image minus its low-pass.
inline HfPyramid hf_pyramid(const Raster& f, int scales = kHfScales, double base_sigma = 1.0) {
  HfPyramid p;
  Raster current = f;
  double sigma = base_sigma;
  for (int s = 0; s < scales; ++s, sigma *= 2.0) {
    Raster low = gaussian_blur(current, sigma);
    Raster band = current;
    for (std::size_t i = 0; i < band.size(); ++i) band.values()[i] -= low.values()[i];
    p.bands.push_back(std::move(band));
    current = std::move(low);
  }
  p.lowpass = std::move(current);
  return p;
}

/// Summed L2 distance between the band stacks of two images.
inline double hf_edge_fidelity(const Raster& a, const Raster& b) {
  const HfPyramid pa = hf_pyramid(a), pb = hf_pyramid(b);
  double total = 0.0;
  for (std::size_t s = 0; s < pa.bands.size(); ++s) {
    double ss = 0.0;
    for (std::size_t i = 0; i < pa.bands[s].size(); ++i) {
      const double d = pa.bands[s].values()[i] - pb.bands[s].values()[i];
      ss += d * d;
    }
    total += std::sqrt(ss);
  }
  return total;
}

}  // namespace endoqa
