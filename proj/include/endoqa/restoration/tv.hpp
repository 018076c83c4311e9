#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "endoqa/degradation.hpp"
#include "endoqa/error.hpp"
#include "endoqa/filters.hpp"
#include "endoqa/raster.hpp"

namespace endoqa {

/// Total-variation solver settings. `lambda` weighs data fidelity against TV
/// (the TV term carries 1/lambda); `kernel_radius` is the Gaussian PSF std used
/// when no PSF is supplied.
struct TvParams {
  double lambda = 1e3;
  double kernel_radius = 2.3;
  int max_iters = 400;
  double tol = 1e-5;

  void validate() const {
    if (!(lambda > 0.0)) throw invalid_argument("tv lambda must be positive");
    if (!(kernel_radius > 0.0)) throw invalid_argument("tv kernel radius must be positive");
    if (max_iters < 1) throw invalid_argument("tv max_iters must be >= 1");
    if (!(tol >= 0.0)) throw invalid_argument("tv tol must be non-negative");
  }

  friend bool operator==(const TvParams&, const TvParams&) = default;
};

/// Per-iteration record of a solver run. For deconvolution `objective[k]` is
/// the energy of the estimate held after iteration k.
struct TvTrace {
  std::vector<double> objective;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// Forward differences with zero flux at the far border.
inline void gradient(const std::vector<double>& u, int w, int h, std::vector<double>& gx,
                     std::vector<double>& gy) {
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      gx[i] = x + 1 < w ? u[i + 1] - u[i] : 0.0;
      gy[i] = y + 1 < h ? u[i + w] - u[i] : 0.0;
    }
}

// Negative adjoint of `gradient`.
inline double divergence_at(const std::vector<double>& px, const std::vector<double>& py, int w,
                            int h, int x, int y) {
  const std::size_t i = static_cast<std::size_t>(y) * w + x;
  double d = 0.0;
  if (x + 1 < w) d += px[i];
  if (x > 0) d -= px[i - 1];
  if (y + 1 < h) d += py[i];
  if (y > 0) d -= py[i - w];
  return d;
}

inline double total_variation(const std::vector<double>& u, int w, int h) {
  double tv = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double gx = x + 1 < w ? u[i + 1] - u[i] : 0.0;
      const double gy = y + 1 < h ? u[i + w] - u[i] : 0.0;
      tv += std::hypot(gx, gy);
    }
  return tv;
}

inline Raster plane_from(const std::vector<double>& v, int w, int h) {
  Raster r(w, h, 1);
  std::copy(v.begin(), v.end(), r.values().begin());
  return r;
}

inline double operator_norm_sq(const Kernel2D& k, int w, int h) {
  Raster v(w, h, 1);
  std::uint64_t state = 0x2545F4914F6CDD1DULL;
  for (double& x : v.values()) {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    x = static_cast<double>(state % 1000) / 1000.0 + 0.1;
  }
  double norm_sq = 1.0;
  for (int it = 0; it < 30; ++it) {
    Raster hv = convolve_adjoint(convolve(v, k), k);
    double n = 0.0;
    for (double x : hv.values()) n += x * x;
    n = std::sqrt(n);
    if (n == 0.0) return 1.0;
    double vn = 0.0;
    for (double x : v.values()) vn += x * x;
    norm_sq = n / std::sqrt(vn);
    for (std::size_t i = 0; i < hv.size(); ++i) v.values()[i] = hv.values()[i] / n;
  }
  return norm_sq;
}

}  // namespace detail

/// Energy  0.5 |h*u - g|^2 + TV(u)/lambda  summed over channels.
inline double tv_deconvolution_energy(const Raster& u, const Raster& g, const Psf& psf,
                                      double lambda) {
  const Raster hu = convolve(u, psf.kernel);
  double data = 0.0;
  for (std::size_t i = 0; i < hu.size(); ++i) {
    const double d = hu.values()[i] - g.values()[i];
    data += d * d;
  }
  double tv = 0.0;
  for (int c = 0; c < u.channels(); ++c) {
    const Raster p = u.channel(c);
    tv += detail::total_variation(std::vector<double>(p.values().begin(), p.values().end()),
                                  u.width(), u.height());
  }
  return 0.5 * data + tv / lambda;
}

/// Non-blind TV deconvolution by a first-order primal-dual iteration with
/// both the TV and the data term dualized, and the primal constrained to
/// [0,1]. Without a PSF an isotropic Gaussian of std `kernel_radius` is used.
/// The returned estimate is the lowest-energy primal iterate seen, so the
/// traced energy never increases.
inline Frame tv_deconvolve(const Frame& g, const std::optional<Psf>& psf_in, const TvParams& p,
                           TvTrace* trace = nullptr) {
  p.validate();
  const Psf psf = psf_in ? *psf_in : Psf::gaussian(p.kernel_radius);
  psf.validate(1e-6);

  const int w = g.width(), h = g.height();
  const std::size_t n = g.pixel_count();
  const double alpha = 1.0 / p.lambda;
  const double l2 = 8.0 + 1.01 * detail::operator_norm_sq(psf.kernel, w, h);
  const double tau = 0.99 / std::sqrt(l2);
  const double sigma = 0.99 / std::sqrt(l2);

  TvTrace local;
  TvTrace& tr = trace ? *trace : local;
  tr = TvTrace{};

  Raster out(w, h, g.channels());
  std::vector<double> best_energy_per_channel(g.channels());
  // per-channel best-so-far energies are summed into the trace
  std::vector<std::vector<double>> channel_trace(g.channels());
  int iterations_used = 0;
  bool all_converged = true;

  for (int c = 0; c < g.channels(); ++c) {
    const Raster gc = g.channel(c);
    const std::vector<double> gv(gc.values().begin(), gc.values().end());
    std::vector<double> u = gv, ubar = gv, best = gv;
    std::vector<double> px(n, 0.0), py(n, 0.0), q(n, 0.0), gx(n), gy(n);

    Raster hu_r = convolve(detail::plane_from(u, w, h), psf.kernel);
    std::vector<double> hu(hu_r.values().begin(), hu_r.values().end());
    std::vector<double> hubar = hu;

    auto energy = [&](const std::vector<double>& uu, const std::vector<double>& huu) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += (huu[i] - gv[i]) * (huu[i] - gv[i]);
      return 0.5 * d + alpha * detail::total_variation(uu, w, h);
    };
    double best_e = energy(u, hu);
    bool converged = false;
    int it = 0;
    for (; it < p.max_iters; ++it) {
      detail::gradient(ubar, w, h, gx, gy);
      for (std::size_t i = 0; i < n; ++i) {
        const double ax = px[i] + sigma * gx[i], ay = py[i] + sigma * gy[i];
        const double scale = std::max(1.0, std::hypot(ax, ay) / alpha);
        px[i] = ax / scale;
        py[i] = ay / scale;
        q[i] = (q[i] + sigma * (hubar[i] - gv[i])) / (1.0 + sigma);
      }
      const Raster htq = convolve_adjoint(detail::plane_from(q, w, h), psf.kernel);
      double change = 0.0, norm = 0.0;
      std::vector<double> u_new(n);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const double grad = -detail::divergence_at(px, py, w, h, x, y) + htq.values()[i];
          u_new[i] = std::clamp(u[i] - tau * grad, 0.0, 1.0);
          change += (u_new[i] - u[i]) * (u_new[i] - u[i]);
          norm += u_new[i] * u_new[i];
        }
      const Raster hn_r = convolve(detail::plane_from(u_new, w, h), psf.kernel);
      std::vector<double> hu_new(hn_r.values().begin(), hn_r.values().end());
      for (std::size_t i = 0; i < n; ++i) {
        ubar[i] = 2.0 * u_new[i] - u[i];
        hubar[i] = 2.0 * hu_new[i] - hu[i];
      }
      u = std::move(u_new);
      hu = std::move(hu_new);

      const double e = energy(u, hu);
      if (e <= best_e) {
        best_e = e;
        best = u;
      }
      channel_trace[c].push_back(best_e);
      if (norm > 0.0 && std::sqrt(change / norm) < p.tol) {
        converged = true;
        ++it;
        break;
      }
    }
    iterations_used = std::max(iterations_used, it);
    all_converged = all_converged && converged;
    out.set_channel(c, detail::plane_from(best, w, h));
  }

  tr.iterations = iterations_used;
  tr.converged = all_converged;
  tr.objective.assign(iterations_used, 0.0);
  for (const auto& ct : channel_trace)
    for (int k = 0; k < iterations_used; ++k)
      tr.objective[k] += ct.empty() ? 0.0 : ct[std::min<std::size_t>(k, ct.size() - 1)];

  return Frame::from_raster(out, g.bit_depth_source, g.index);
}

namespace detail {

/// Initial guess for a hole: repeatedly assign each unknown pixel that touches
/// a known one the mean of its known 4-neighbours.
inline void onion_fill(Raster& r, const Mask& m) {
  const int w = r.width(), h = r.height();
  std::vector<std::uint8_t> known(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) known[i] = !m[i];
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) pending.push_back(i);
  while (!pending.empty()) {
    std::vector<std::size_t> layer, rest;
    for (std::size_t i : pending) {
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      const bool touches = (x > 0 && known[i - 1]) || (x + 1 < w && known[i + 1]) ||
                           (y > 0 && known[i - w]) || (y + 1 < h && known[i + w]);
      (touches ? layer : rest).push_back(i);
    }
    if (layer.empty()) break;
    for (std::size_t i : layer) {
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      for (int c = 0; c < r.channels(); ++c) {
        double s = 0.0;
        int k = 0;
        auto take = [&](int xx, int yy) {
          const std::size_t j = static_cast<std::size_t>(yy) * w + xx;
          if (known[j]) {
            s += r.at(xx, yy, c);
            ++k;
          }
        };
        if (x > 0) take(x - 1, y);
        if (x + 1 < w) take(x + 1, y);
        if (y > 0) take(x, y - 1);
        if (y + 1 < h) take(x, y + 1);
        r.at(x, y, c) = s / k;
      }
    }
    for (std::size_t i : layer) known[i] = 1;
    pending = std::move(rest);
  }
}

}  // namespace detail

/// TV inpainting: pixels outside the mask are fixed, pixels inside minimize
/// the isotropic total variation. Only the mask neighbourhood is iterated.
inline Frame tv_inpaint(const Frame& f, const Mask& m, const TvParams& p, TvTrace* trace = nullptr) {
  p.validate();
  if (!m.matches(f)) throw invalid_argument("mask dimensions differ from frame");
  if (m.all()) throw invalid_argument("tv_inpaint needs at least one known pixel");
  TvTrace local;
  TvTrace& tr = trace ? *trace : local;
  tr = TvTrace{};
  if (m.none()) {
    tr.converged = true;
    return f;
  }

  const int w = f.width(), h = f.height();
  Raster r = f;
  detail::onion_fill(r, m);

  std::vector<std::size_t> unknown;
  std::vector<std::uint8_t> active_flag(m.size(), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!m[i]) continue;
      unknown.push_back(i);
      // dual cells whose forward stencil reads pixel i
      active_flag[i] = 1;
      if (x > 0) active_flag[i - 1] = 1;
      if (y > 0) active_flag[i - w] = 1;
    }
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < active_flag.size(); ++i)
    if (active_flag[i]) active.push_back(i);

  const double tau = 0.99 / std::sqrt(8.0), sigma = 0.99 / std::sqrt(8.0);
  const std::size_t n = m.size();
  int iterations_used = 0;
  bool all_converged = true;
  for (int c = 0; c < f.channels(); ++c) {
    std::vector<double> u(n), px(n, 0.0), py(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) u[i] = r.values()[i * f.channels() + c];
    std::vector<double> ubar = u;
    bool converged = false;
    int it = 0;
    for (; it < p.max_iters; ++it) {
      for (std::size_t i : active) {
        const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
        const double gx = x + 1 < w ? ubar[i + 1] - ubar[i] : 0.0;
        const double gy = y + 1 < h ? ubar[i + w] - ubar[i] : 0.0;
        const double ax = px[i] + sigma * gx, ay = py[i] + sigma * gy;
        const double scale = std::max(1.0, std::hypot(ax, ay));
        px[i] = ax / scale;
        py[i] = ay / scale;
      }
      double change = 0.0, norm = 0.0;
      for (std::size_t i : unknown) {
        const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
        const double un = std::clamp(u[i] + tau * detail::divergence_at(px, py, w, h, x, y), 0.0, 1.0);
        change += (un - u[i]) * (un - u[i]);
        norm += un * un;
        ubar[i] = 2.0 * un - u[i];
        u[i] = un;
      }
      if (norm > 0.0 ? std::sqrt(change / norm) < p.tol : change == 0.0) {
        converged = true;
        ++it;
        break;
      }
    }
    iterations_used = std::max(iterations_used, it);
    all_converged = all_converged && converged;
    if (trace) tr.objective.push_back(detail::total_variation(u, w, h));
    for (std::size_t i : unknown) r.values()[i * f.channels() + c] = u[i];
  }
  tr.iterations = iterations_used;
  tr.converged = all_converged;

  Frame out = f;
  for (std::size_t i : unknown)
    for (int c = 0; c < f.channels(); ++c) out.values()[i * f.channels() + c] = r.values()[i * f.channels() + c];
  return out;
}

}  // namespace endoqa
