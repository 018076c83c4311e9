#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "endoqa/degradation.hpp"
#include "endoqa/metrics.hpp"
#include "endoqa/restoration/color.hpp"
#include "endoqa/restoration/hf_pyramid.hpp"
#include "endoqa/restoration/patch_inpaint.hpp"
#include "endoqa/restoration/tv.hpp"
#include "endoqa/simulate.hpp"

using namespace endoqa;

namespace {
double max_abs_diff(const Raster& a, const Raster& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

Mask square_hole(int w, int h, int x0, int y0, int side) {
  Mask m(w, h);
  for (int y = y0; y < y0 + side; ++y)
    for (int x = x0; x < x0 + side; ++x) m.set(x, y);
  return m;
}

Frame random_frame(int w, int h, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Frame f(w, h, c);
  for (double& v : f.values()) v = u(rng);
  return f;
}
}  // namespace

// --- filters --------------------------------------------------------------

TEST(Convolve, AdjointIdentity) {
  const Raster x = random_frame(23, 17, 3, 1), y = random_frame(23, 17, 3, 2);
  const Kernel2D k = trajectory_kernel(random_trajectory(3), 15).kernel;
  const Raster kx = convolve(x, k), kty = convolve_adjoint(y, k);
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lhs += kx.values()[i] * y.values()[i];
    rhs += x.values()[i] * kty.values()[i];
  }
  EXPECT_NEAR(lhs, rhs, 1e-9 * std::abs(lhs));
}

TEST(Convolve, ShiftKernelMovesImage) {
  Kernel2D k;
  k.side = 3;
  k.taps.assign(9, 0.0);
  k.taps[1 * 3 + 2] = 1.0;  // dx = +1
  const Raster x = random_frame(8, 5, 1, 4);
  const Raster y = convolve(x, k);
  for (int yy = 0; yy < 5; ++yy)
    for (int xx = 1; xx < 8; ++xx) EXPECT_EQ(y.at(xx, yy), x.at(xx - 1, yy));
  EXPECT_EQ(y.at(0, 2), x.at(0, 2));
}

// --- HF pyramid -----------------------------------------------------------

TEST(HfPyramid, ConstantFrameHasZeroBands) {
  const auto p = hf_pyramid(Frame(40, 30, 3, 0.37));
  ASSERT_EQ(p.bands.size(), 4u);
  for (const auto& b : p.bands)
    for (double v : b.values()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(HfPyramid, ReconstructionIdentity) {
  const Frame f = random_frame(37, 29, 3, 8);
  EXPECT_LT(max_abs_diff(hf_pyramid(f).reconstruct(), f), 1e-12);
}

TEST(HfPyramid, ImpulseEnergyDecreasesWithScale) {
  Frame f(64, 64, 1);
  f.at(32, 32) = 1.0;
  const auto p = hf_pyramid(f);
  double prev = INFINITY;
  for (const auto& b : p.bands) {
    double e = 0.0;
    for (double v : b.values()) e += v * v;
    EXPECT_LT(e, prev);
    prev = e;
  }
}

TEST(HfPyramid, FidelityZeroOnlyForEqualFrames) {
  const Frame f = synthetic_scene(48, 48, 1, 3);
  EXPECT_EQ(hf_edge_fidelity(f, f), 0.0);
  EXPECT_GT(hf_edge_fidelity(f, Frame::from_raster(gaussian_blur(f, 2.0))), 0.0);
}

// --- TV deconvolution -----------------------------------------------------

TEST(TvDeconvolve, DeltaPsfKeepsCleanInput) {
  const Frame f = synthetic_scene(64, 64, 3, 2);
  const Frame r = tv_deconvolve(f, Psf::delta(1), TvParams{});
  EXPECT_LT(max_abs_diff(r, f), 1e-2);
}

TEST(TvDeconvolve, UniformFrameUnchanged) {
  const Frame f(32, 32, 3, 0.42);
  const Frame r = tv_deconvolve(f, trajectory_kernel(random_trajectory(1), 15), TvParams{});
  EXPECT_LT(max_abs_diff(r, f), 1e-9);
}

TEST(TvDeconvolve, RejectsNonNormalizedPsf) {
  Psf p = Psf::delta(3);
  p.kernel.taps[4] = 0.9;
  EXPECT_THROW(tv_deconvolve(Frame(16, 16, 1, 0.5), p, TvParams{}), Error);
  TvParams bad;
  bad.lambda = 0;
  EXPECT_THROW(tv_deconvolve(Frame(16, 16, 1, 0.5), std::nullopt, bad), Error);
}

TEST(TvDeconvolve, ImprovesTrajectoryBlurAndEnergyNeverRises) {
  const auto bank = default_trajectories();
  for (int i : {0, 7}) {
    const Frame clean = synthetic_scene(96, 96, 1, 50 + i);
    DegradationSpec spec;
    spec.psf = trajectory_kernel(bank[i], 15);
    spec.noise_sigma = 0.003;
    const Frame g = corrupt(clean, spec, 7 + i);
    TvParams p;
    p.max_iters = 200;
    TvTrace tr;
    const Frame r = tv_deconvolve(g, spec.psf, p, &tr);
    EXPECT_GT(psnr(clean, r), psnr(clean, g));
    EXPECT_TRUE(r.in_unit_range());
    ASSERT_FALSE(tr.objective.empty());
    for (std::size_t k = 1; k < tr.objective.size(); ++k) EXPECT_LE(tr.objective[k], tr.objective[k - 1]);
  }
}

TEST(TvDeconvolve, BlindModeRunsWithGaussian) {
  const Frame clean = synthetic_scene(48, 48, 3, 4);
  const Frame g = Frame::from_raster(gaussian_blur(clean, 2.3));
  TvParams p;
  p.max_iters = 50;
  const Frame r = tv_deconvolve(g, std::nullopt, p);
  EXPECT_TRUE(r.same_shape(g));
  EXPECT_TRUE(r.in_unit_range());
}

// --- TV inpainting --------------------------------------------------------

TEST(TvInpaint, EmptyMaskIsIdentity) {
  const Frame f = random_frame(20, 20, 3, 1);
  EXPECT_EQ(tv_inpaint(f, Mask(20, 20), TvParams{}), f);
}

TEST(TvInpaint, AllTrueMaskRejected) {
  EXPECT_THROW(tv_inpaint(Frame(8, 8, 1, 0.5), Mask(8, 8, true), TvParams{}), Error);
}

TEST(TvInpaint, ConstantFrameStaysConstant) {
  Frame f(30, 30, 3, 0.6);
  const Mask m = random_masks(30, 30, 4, {5, 7}, 3);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i])
      for (int c = 0; c < 3; ++c) f.values()[i * 3 + c] = 1.0;
  const Frame r = tv_inpaint(f, m, TvParams{});
  for (double v : r.values()) EXPECT_NEAR(v, 0.6, 1e-9);
}

TEST(TvInpaint, LinearGradientHole) {
  Frame f(40, 40, 1);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) f.at(x, y) = 0.1 + 0.8 * (0.6 * x + 0.4 * y) / 39.0;
  const Mask m = square_hole(40, 40, 15, 16, 9);
  Frame g = f;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) g.values()[i] = 0.0;
  TvParams p;
  p.max_iters = 5000;
  p.tol = 1e-8;
  const Frame r = tv_inpaint(g, m, p);
  EXPECT_LT(max_abs_diff(r, f), 0.02);
}

TEST(TvInpaint, KnownPixelsExactlyPreserved) {
  const Frame f = synthetic_scene(64, 64, 3, 5);
  const Mask m = random_masks(64, 64, 5, {5, 7, 11}, 6);
  const Frame r = tv_inpaint(f, m, TvParams{});
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!m[i])
      for (int c = 0; c < 3; ++c) { EXPECT_EQ(r.values()[i * 3 + c], f.values()[i * 3 + c]); }
}

// --- patch inpainting -----------------------------------------------------

TEST(PatchInpaint, EmptyMaskIsIdentity) {
  const Frame f = random_frame(20, 20, 1, 2);
  EXPECT_EQ(patch_inpaint(f, Mask(20, 20)), f);
}

TEST(PatchInpaint, CheckerboardExactFill) {
  Frame f(64, 64, 3);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      for (int c = 0; c < 3; ++c) f.at(x, y, c) = ((x / 4 + y / 4) % 2) ? 0.8 : 0.2;
  const Mask m = square_hole(64, 64, 24, 28, 8);
  Frame g = f;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i])
      for (int c = 0; c < 3; ++c) g.values()[i * 3 + c] = 1.0;
  PatchInpaintReport rep;
  const Frame r = patch_inpaint(g, m, {}, &rep);
  EXPECT_EQ(r, f);
  EXPECT_FALSE(rep.used_tv_fallback);
  EXPECT_GT(rep.fill_steps, 0);
}

TEST(PatchInpaint, ConstantFrame) {
  Frame f(32, 32, 1, 0.3);
  const Mask m = square_hole(32, 32, 10, 10, 6);
  const Frame g = patch_inpaint(f, m);
  for (double v : g.values()) EXPECT_EQ(v, 0.3);
}

TEST(PatchInpaint, FallsBackWhenNoSourcePatch) {
  // every 9x9 window touches the hole, so no complete source exists
  const Frame f = synthetic_scene(12, 12, 1, 1);
  const Mask m = square_hole(12, 12, 4, 4, 4);
  PatchInpaintReport rep;
  const Frame r = patch_inpaint(f, m, {}, &rep);
  EXPECT_TRUE(rep.used_tv_fallback);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!m[i]) { EXPECT_EQ(r.values()[i], f.values()[i]); }
}

TEST(PatchInpaint, OutOfMaskPixelsPreserved) {
  const Frame f = synthetic_scene(80, 80, 3, 9);
  const Mask m = random_masks(80, 80, 4, {5, 7, 11}, 2);
  const Frame r = patch_inpaint(f, m);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!m[i])
      for (int c = 0; c < 3; ++c) { EXPECT_EQ(r.values()[i * 3 + c], f.values()[i * 3 + c]); }
}

// --- colour ---------------------------------------------------------------

TEST(ColorStats, TwoPixelMean) {
  Frame f(2, 1, 3);
  for (int c = 0; c < 3; ++c) {
    f.at(0, 0, c) = 0.1;
    f.at(1, 0, c) = 0.3;
  }
  const ColorStats s = color_stats(f);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(s.mean[c], 0.2, 1e-15);
    EXPECT_NEAR(s.covariance(c, c), 0.01, 1e-15);
  }
}

TEST(ColorStats, SaturatedPixelsExcluded) {
  Frame f(3, 1, 3, 1.0);
  for (int c = 0; c < 3; ++c) {
    f.at(0, 0, c) = 0.2;
    f.at(1, 0, c) = 0.4;
  }
  const ColorStats s = color_stats(f);
  EXPECT_EQ(s.count, 2u);
  EXPECT_FALSE(s.used.at(2, 0));
  EXPECT_NEAR(s.mean[0], 0.3, 1e-15);
}

TEST(ColorStats, ConstantFrameZeroCovariance) {
  const ColorStats s = color_stats(Frame(5, 5, 3, 0.4));
  EXPECT_LT(s.covariance.norm(), 1e-20);
}

TEST(ColorStats, TooFewPixelsRejected) {
  Frame f(2, 2, 3, 1.0);
  f.at(0, 0, 0) = 0.1;
  f.at(0, 0, 1) = 0.1;
  f.at(0, 0, 2) = 0.1;
  EXPECT_THROW(color_stats(f), Error);
}

TEST(ColorRetransfer, SameStatsIsIdentity) {
  const Frame f = synthetic_scene(32, 32, 3, 4);
  const ColorStats s = color_stats(f);
  const auto r = color_retransfer(f, s, s);
  EXPECT_LT(max_abs_diff(r.frame, f), 1e-9);
  EXPECT_FALSE(r.regularized);
}

TEST(ColorRetransfer, ScalarClosedForm) {
  ColorStats src, tgt;
  src.mean = Eigen::VectorXd::Constant(1, 0.4);
  src.covariance = Eigen::MatrixXd::Constant(1, 1, 0.01);
  tgt.mean = Eigen::VectorXd::Constant(1, 0.5);
  tgt.covariance = Eigen::MatrixXd::Constant(1, 1, 0.0025);
  const auto r = color_retransfer(Frame(1, 1, 1, 0.55), src, tgt);
  EXPECT_NEAR(r.frame.at(0, 0), 0.5, 1e-12);
}

TEST(ColorRetransfer, SingularTargetIsRegularizedAndFlagged) {
  const Frame t(4, 4, 3, 0.5);
  const ColorStats src = color_stats(synthetic_scene(16, 16, 3, 1));
  const auto r = color_retransfer(t, src, color_stats(t));
  EXPECT_TRUE(r.regularized);
  EXPECT_TRUE(r.frame.in_unit_range());
}

TEST(ColorRetransfer, MatchesSourceStatistics) {
  const Frame src = synthetic_scene(40, 40, 3, 11), tgt = synthetic_scene(40, 40, 3, 12);
  const ColorStats s = color_stats(src), t = color_stats(tgt);
  const auto r = color_retransfer(tgt, s, t);
  const ColorStats o = color_stats_over(r.frame, t.used);
  EXPECT_LT((o.mean - s.mean).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((o.covariance - s.covariance).cwiseAbs().maxCoeff(), 1e-6);
}

// --- exposure -------------------------------------------------------------

TEST(ExposureCorrect, DarkUniformFrame) {
  const auto r = exposure_correct(Frame(8, 8, 3, 0.25), ExposureDirection::low_contrast);
  EXPECT_NEAR(r.gamma, 2.0, 1e-12);
  for (double v : r.frame.values()) EXPECT_NEAR(v, 0.5, 1e-12);
}

TEST(ExposureCorrect, MedianHalfIsIdentityBelowShoulder) {
  Frame f(3, 1, 1);
  f.at(0, 0) = 0.2;
  f.at(1, 0) = 0.5;
  f.at(2, 0) = 0.7;
  const auto r = exposure_correct(f, ExposureDirection::saturation);
  EXPECT_NEAR(r.gamma, 1.0, 1e-12);
  EXPECT_LT(max_abs_diff(r.frame, f), 1e-12);
}

TEST(ExposureCorrect, DegenerateFrameUnchangedWithWarning) {
  const auto r = exposure_correct(Frame(4, 4, 1, 0.0), ExposureDirection::low_contrast);
  EXPECT_TRUE(r.warning.has_value());
  EXPECT_EQ(r.frame, Frame(4, 4, 1, 0.0));
}

TEST(ExposureCorrect, UndoesSimulatedGamma) {
  const Frame clean = synthetic_scene(64, 64, 3, 21);
  for (double gamma : {0.5, 2.0}) {
    DegradationSpec spec;
    spec.gamma = gamma;
    const Frame g = corrupt(clean, spec, 1);
    const auto r = exposure_correct(g, gamma < 1 ? ExposureDirection::saturation : ExposureDirection::low_contrast);
    EXPECT_GT(psnr(clean, r.frame), psnr(clean, g)) << gamma;
  }
}

TEST(HighlightShoulder, ContinuousAndBounded) {
  EXPECT_EQ(highlight_shoulder(0.5, 0.9), 0.5);
  EXPECT_EQ(highlight_shoulder(0.9, 0.9), 0.9);
  EXPECT_LT(highlight_shoulder(1.0, 0.9), 1.0);
  EXPECT_GT(highlight_shoulder(0.95, 0.9), 0.9);
}
