#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "endoqa/error.hpp"
#include "endoqa/geometry.hpp"
#include "endoqa/metrics.hpp"
#include "endoqa/quality.hpp"
#include "endoqa/raster.hpp"
#include "endoqa/restoration/color.hpp"
#include "endoqa/restoration/patch_inpaint.hpp"
#include "endoqa/restoration/tv.hpp"

namespace endoqa {

enum class InpaintMethod { tv, patch };

inline std::string_view to_string(InpaintMethod m) { return m == InpaintMethod::tv ? "tv" : "patch"; }

struct PipelineConfig {
  QualityConfig quality;
  TvParams tv;
  // pixels at a 512 px reference size; scaled with resolution when
  // scale_dilation is set
  int dilation_radius = 4;
  bool scale_dilation = true;
  double confidence_threshold = 0.25;
  double intensity_ceiling = kDefaultIntensityCeiling;
  InpaintMethod inpaint_method = InpaintMethod::tv;
  int patch_side = 9;

  int dilation_for(int width, int height) const {
    if (!scale_dilation) return dilation_radius;
    return static_cast<int>(std::lround(dilation_radius * std::max(width, height) / 512.0));
  }

  void validate() const {
    quality.validate();
    tv.validate();
    if (dilation_radius < 0) throw invalid_argument("dilation radius must be non-negative");
    if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0))
      throw invalid_argument("confidence threshold must lie in [0,1]");
    if (!(intensity_ceiling > 0.0 && intensity_ceiling <= 1.0))
      throw invalid_argument("intensity ceiling must lie in (0,1]");
    if (patch_side < 1 || patch_side % 2 == 0) throw invalid_argument("patch side must be odd");
  }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

enum class StageKind { Deblur, Exposure, Inpaint };

inline std::string_view to_string(StageKind k) {
  switch (k) {
    case StageKind::Deblur: return "deblur";
    case StageKind::Exposure: return "exposure+crt";
    case StageKind::Inpaint: return "inpaint";
  }
  return "unknown";
}

struct RestorationStage {
  StageKind kind = StageKind::Deblur;
  // Inpaint only; Deblur and Exposure act on the whole frame
  std::optional<Mask> mask;
  ExposureDirection direction = ExposureDirection::saturation;
  std::vector<Detection> provenance;
};

struct RestorationPlan {
  std::vector<RestorationStage> stages;

  bool empty() const noexcept { return stages.empty(); }
  std::vector<StageKind> kinds() const {
    std::vector<StageKind> k;
    for (const auto& s : stages) k.push_back(s.kind);
    return k;
  }

  /// Each stage at most once, Deblur first and Inpaint last when present.
  void validate() const {
    auto k = kinds();
    for (StageKind s : {StageKind::Deblur, StageKind::Exposure, StageKind::Inpaint})
      if (std::count(k.begin(), k.end(), s) > 1) throw invalid_argument("restoration stage repeated");
    auto pos = [&](StageKind s) { return std::find(k.begin(), k.end(), s) - k.begin(); };
    if (pos(StageKind::Deblur) < static_cast<long>(k.size()) && pos(StageKind::Deblur) != 0)
      throw invalid_argument("deblur must be the first stage");
    if (pos(StageKind::Inpaint) < static_cast<long>(k.size()) &&
        pos(StageKind::Inpaint) != static_cast<long>(k.size()) - 1)
      throw invalid_argument("inpaint must be the last stage");
    for (const auto& s : stages)
      if (s.kind == StageKind::Inpaint && !s.mask) throw invalid_argument("inpaint stage lacks a mask");
  }
};

/// Stage list for a frame routed to restoration: Deblur for blur, exposure
/// correction + colour retransfer for saturation/contrast, inpainting of the
/// dilated boxes of specularity/bubbles/misc artifacts. Detections under the
/// confidence threshold are ignored.
inline RestorationPlan plan_restoration(const std::vector<Detection>& all_dets, int width, int height,
                                        const PipelineConfig& cfg) {
  const auto dets = filter_by_confidence(all_dets, cfg.confidence_threshold);
  RestorationStage deblur{StageKind::Deblur, std::nullopt, {}, {}};
  RestorationStage exposure{StageKind::Exposure, std::nullopt, {}, {}};
  RestorationStage inpaint{StageKind::Inpaint, std::nullopt, {}, {}};
  double saturation_area = 0.0, contrast_area = 0.0;
  for (const Detection& d : dets) {
    switch (d.cls) {
      case ArtifactClass::blur: deblur.provenance.push_back(d); break;
      case ArtifactClass::saturation:
        saturation_area += area_fraction(d.box);
        exposure.provenance.push_back(d);
        break;
      case ArtifactClass::contrast:
        contrast_area += area_fraction(d.box);
        exposure.provenance.push_back(d);
        break;
      case ArtifactClass::specularity:
      case ArtifactClass::bubbles:
      case ArtifactClass::misc_artifact: inpaint.provenance.push_back(d); break;
    }
  }
  RestorationPlan plan;
  if (!deblur.provenance.empty()) plan.stages.push_back(std::move(deblur));
  if (!exposure.provenance.empty()) {
    exposure.direction = saturation_area >= contrast_area ? ExposureDirection::saturation
                                                          : ExposureDirection::low_contrast;
    plan.stages.push_back(std::move(exposure));
  }
  if (!inpaint.provenance.empty()) {
    inpaint.mask = boxes_to_mask(inpaint.provenance, width, height, cfg.dilation_for(width, height));
    plan.stages.push_back(std::move(inpaint));
  }
  return plan;
}

struct FrameLog {
  std::string frame_id;
  std::int64_t index = 0;
  double qs = 1.0;
  Disposition disposition = Disposition::Keep;
  std::vector<std::string> stages;
  std::vector<std::string> warnings;
  std::optional<MetricSet> pre;   // against ground truth, when supplied
  std::optional<MetricSet> post;
};

struct RestoreOutcome {
  Frame frame;
  FrameLog log;
  // set when a stage failed; the frame must then be discarded
  std::optional<std::string> error;
};

/// Runs the plan's stages in order. Inpainting only rewrites masked pixels;
/// deblur and exposure act on the whole frame.
inline RestoreOutcome restore_frame(const Frame& f, const RestorationPlan& plan, const PipelineConfig& cfg) {
  RestoreOutcome out{f, {}, std::nullopt};
  out.log.index = f.index;
  out.log.disposition = Disposition::Restore;
  try {
    plan.validate();
    for (const RestorationStage& stage : plan.stages) {
      switch (stage.kind) {
        case StageKind::Deblur: {
          TvTrace trace;
          out.frame = tv_deconvolve(out.frame, std::nullopt, cfg.tv, &trace);
          if (!trace.converged)
            out.log.warnings.push_back("deblur stopped at max_iters=" + std::to_string(trace.iterations));
          break;
        }
        case StageKind::Exposure: {
          const Frame before = out.frame;
          const Mask pre_mask = sub_ceiling_mask(before, cfg.intensity_ceiling);
          ExposureResult er = exposure_correct(before, stage.direction, cfg.intensity_ceiling);
          if (er.warning) out.log.warnings.push_back(*er.warning);
          // colour reference: the corrected values of pixels that were not
          // saturated before correction
          if (pre_mask.count() >= 2) {
            const Mask post_mask = sub_ceiling_mask(er.frame, cfg.intensity_ceiling);
            if (post_mask.count() >= 2) {
              const ColorStats src = color_stats_over(er.frame, pre_mask);
              const ColorStats tgt = color_stats_over(er.frame, post_mask);
              RetransferResult rr = color_retransfer(er.frame, src, tgt);
              if (rr.regularized) out.log.warnings.push_back("crt: singular target covariance regularized");
              er.frame = std::move(rr.frame);
            } else {
              out.log.warnings.push_back("crt skipped: fewer than 2 sub-ceiling pixels after correction");
            }
          } else {
            out.log.warnings.push_back("crt skipped: fewer than 2 sub-ceiling pixels");
          }
          out.frame = std::move(er.frame);
          break;
        }
        case StageKind::Inpaint: {
          const Mask& m = *stage.mask;
          if (cfg.inpaint_method == InpaintMethod::patch) {
            PatchInpaintOptions opt;
            opt.patch_side = cfg.patch_side;
            opt.fallback = cfg.tv;
            PatchInpaintReport rep;
            out.frame = patch_inpaint(out.frame, m, opt, &rep);
            if (rep.used_tv_fallback) out.log.warnings.push_back("patch inpaint fell back to tv");
          } else {
            out.frame = tv_inpaint(out.frame, m, cfg.tv);
          }
          break;
        }
      }
      out.log.stages.emplace_back(to_string(stage.kind));
    }
  } catch (const std::exception& e) {
    out.error = e.what();
    out.frame = f;
    out.log.disposition = Disposition::Discard;
    out.log.warnings.push_back(std::string("stage failed: ") + e.what());
  }
  out.frame.index = f.index;
  out.frame.bit_depth_source = f.bit_depth_source;
  return out;
}

struct VideoReport {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t restored = 0;
  std::size_t discarded = 0;
  // detections per class code after the confidence filter
  std::array<std::size_t, kArtifactClassCount> class_histogram{};

  double fraction(std::size_t n) const { return total ? static_cast<double>(n) / total : 0.0; }
  double kept_fraction() const { return fraction(kept); }
  double restored_fraction() const { return fraction(restored); }
  double discarded_fraction() const { return fraction(discarded); }
  double retained_fraction() const { return fraction(kept + restored); }
};

struct VideoFrameInput {
  std::string id;
  std::optional<Frame> frame;  // empty when the frame could not be read
  std::string read_error;
  std::optional<Frame> reference;
};

struct OutputFrame {
  std::string id;
  Frame frame;
};

struct VideoResult {
  VideoReport report;
  std::vector<FrameLog> logs;
  std::vector<OutputFrame> frames;  // kept and restored frames, input order
};

using DetectionTable = std::map<std::string, std::vector<Detection>>;

/// Per frame: filter detections, score, triage; Keep frames pass through
/// untouched, Restore frames are restored, Discard frames are dropped.
/// Frames are processed on up to `threads` workers; outputs keep input order.
inline VideoResult process_video(const std::vector<VideoFrameInput>& inputs, const DetectionTable& dets,
                                 const PipelineConfig& cfg, int threads = 1) {
  cfg.validate();
  struct Slot {
    FrameLog log;
    std::optional<Frame> out;
    std::vector<Detection> used;
  };
  std::vector<Slot> slots(inputs.size());

  auto work = [&](std::size_t i) {
    const VideoFrameInput& in = inputs[i];
    Slot& s = slots[i];
    s.log.frame_id = in.id;
    s.log.index = static_cast<std::int64_t>(i);
    auto it = dets.find(in.id);
    s.used = it == dets.end() ? std::vector<Detection>{}
                              : filter_by_confidence(it->second, cfg.confidence_threshold);
    if (!in.frame) {
      s.log.qs = 0.0;
      s.log.disposition = Disposition::Discard;
      s.log.warnings.push_back("io: " + in.read_error);
      return;
    }
    try {
      const QualityReport qr = quality_score(s.used, cfg.quality);
      s.log.qs = qr.qs;
      s.log.disposition = qr.disposition;
    } catch (const std::exception& e) {
      s.log.qs = 0.0;
      s.log.disposition = Disposition::Discard;
      s.log.warnings.push_back(std::string("scoring failed: ") + e.what());
      return;
    }
    if (s.log.disposition == Disposition::Keep) {
      s.out = *in.frame;
    } else if (s.log.disposition == Disposition::Restore) {
      const RestorationPlan plan = plan_restoration(s.used, in.frame->width(), in.frame->height(), cfg);
      RestoreOutcome ro = restore_frame(*in.frame, plan, cfg);
      s.log.stages = ro.log.stages;
      s.log.warnings = ro.log.warnings;
      if (ro.error) {
        s.log.disposition = Disposition::Discard;
      } else {
        if (in.reference && in.reference->same_shape(*in.frame)) {
          try {
            s.log.pre = compute_metrics(*in.reference, *in.frame);
            s.log.post = compute_metrics(*in.reference, ro.frame);
          } catch (const std::exception& e) {
            s.log.pre.reset();
            s.log.post.reset();
            s.log.warnings.push_back(std::string("metrics skipped: ") + e.what());
          }
        }
        s.out = std::move(ro.frame);
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(inputs.size())));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < inputs.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < inputs.size(); i = next++) work(i);
      });
  }

  VideoResult res;
  res.report.total = inputs.size();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    Slot& s = slots[i];
    for (const Detection& d : s.used) ++res.report.class_histogram[class_code(d.cls)];
    switch (s.log.disposition) {
      case Disposition::Keep: ++res.report.kept; break;
      case Disposition::Restore: ++res.report.restored; break;
      case Disposition::Discard: ++res.report.discarded; break;
    }
    if (s.out) res.frames.push_back({inputs[i].id, std::move(*s.out)});
    res.logs.push_back(std::move(s.log));
  }
  return res;
}

/// Retention of the trivial baseline that discards every frame holding any
/// detection above the confidence threshold.
inline std::size_t any_detection_baseline_kept(const std::vector<std::string>& frame_ids,
                                               const DetectionTable& dets, double confidence_threshold) {
  std::size_t kept = 0;
  for (const auto& id : frame_ids) {
    auto it = dets.find(id);
    if (it == dets.end() || filter_by_confidence(it->second, confidence_threshold).empty()) ++kept;
  }
  return kept;
}

}  // namespace endoqa
