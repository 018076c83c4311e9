#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "endoqa/geometry.hpp"

namespace endoqa {

struct GroundTruth {
  ArtifactClass cls = ArtifactClass::blur;
  BBox box;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct EvalFrame {
  std::string id;
  std::vector<GroundTruth> truths;
  std::vector<Detection> predictions;
};

using EvalDataset = std::vector<EvalFrame>;

/// Outcome of matching one frame's predictions against its ground truth.
/// Vectors indexed by the input order of predictions / truths.
struct FrameMatch {
  std::vector<std::optional<std::size_t>> matched_truth;
  std::vector<double> match_iou;
  std::vector<bool> truth_matched;
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
};

/// Predictions visited by descending confidence (ties keep input order); each
/// takes the highest-IoU unmatched truth of its class with IoU >= iou_thr.
inline FrameMatch match_predictions(const std::vector<Detection>& preds,
                                    const std::vector<GroundTruth>& truths, double iou_thr) {
  FrameMatch m;
  m.matched_truth.assign(preds.size(), std::nullopt);
  m.match_iou.assign(preds.size(), 0.0);
  m.truth_matched.assign(truths.size(), false);

  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].confidence > preds[b].confidence;
  });

  for (std::size_t p : order) {
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < truths.size(); ++g) {
      if (m.truth_matched[g] || truths[g].cls != preds[p].cls) continue;
      const double v = iou(preds[p].box, truths[g].box);
      if (v >= iou_thr && v > best_iou) {
        best = g;
        best_iou = v;
      }
    }
    if (best) {
      m.truth_matched[*best] = true;
      m.matched_truth[p] = best;
      m.match_iou[p] = best_iou;
      ++m.true_positives;
    } else {
      ++m.false_positives;
    }
  }
  m.false_negatives = static_cast<int>(truths.size()) - m.true_positives;
  return m;
}

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  double confidence = 0.0;
};

namespace detail {

struct RankedHit {
  double confidence;
  bool true_positive;
};

/// Class predictions across the dataset, ranked by confidence. Ties keep
/// dataset order (frame order, then prediction order).
inline std::vector<RankedHit> ranked_hits(const EvalDataset& ds, ArtifactClass cls, double iou_thr,
                                          std::size_t& truth_count) {
  std::vector<RankedHit> hits;
  truth_count = 0;
  for (const EvalFrame& f : ds) {
    for (const auto& g : f.truths) truth_count += (g.cls == cls);
    const FrameMatch m = match_predictions(f.predictions, f.truths, iou_thr);
    for (std::size_t p = 0; p < f.predictions.size(); ++p)
      if (f.predictions[p].cls == cls)
        hits.push_back({f.predictions[p].confidence, m.matched_truth[p].has_value()});
  }
  std::stable_sort(hits.begin(), hits.end(),
                   [](const RankedHit& a, const RankedHit& b) { return a.confidence > b.confidence; });
  return hits;
}

}  // namespace detail

/// One (recall, precision) point per ranked prediction of `cls`.
namespace detail {

inline std::size_t count_truths(const EvalDataset& ds, ArtifactClass cls) {
  std::size_t n = 0;
  for (const EvalFrame& f : ds)
    for (const auto& g : f.truths) n += (g.cls == cls);
  return n;
}

inline std::vector<PrPoint> curve_from_hits(const std::vector<RankedHit>& hits, std::size_t n_truth) {
  std::vector<PrPoint> curve;
  curve.reserve(hits.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < hits.size(); ++k) {
    tp += hits[k].true_positive;
    const double recall = n_truth ? static_cast<double>(tp) / static_cast<double>(n_truth) : 0.0;
    curve.push_back({recall, static_cast<double>(tp) / static_cast<double>(k + 1), hits[k].confidence});
  }
  return curve;
}

}  // namespace detail

inline std::vector<PrPoint> pr_curve(const EvalDataset& ds, ArtifactClass cls, double iou_thr) {
  std::size_t n_truth = 0;
  const auto hits = detail::ranked_hits(ds, cls, iou_thr, n_truth);
  return detail::curve_from_hits(hits, n_truth);
}

inline std::optional<double> average_precision(const EvalDataset& ds, ArtifactClass cls,
                                               double iou_thr) {
  if (detail::count_truths(ds, cls) == 0) return std::nullopt;
  std::vector<PrPoint> curve = pr_curve(ds, cls, iou_thr);
  for (std::size_t k = curve.size(); k-- > 1;)
    curve[k - 1].precision = std::max(curve[k - 1].precision, curve[k].precision);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (const PrPoint& p : curve) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return 100.0 * ap;
}

inline std::optional<double> mean_average_precision(const EvalDataset& ds, double iou_thr) {
  double sum = 0.0;
  int n = 0;
  for (ArtifactClass c : kAllArtifactClasses) {
    if (auto ap = average_precision(ds, c, iou_thr)) {
      sum += *ap;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

inline constexpr std::array<double, 3> kEvalThresholds{0.05, 0.25, 0.50};

struct EvalResult {
  // [threshold index][class code]
  std::array<std::array<std::optional<double>, kArtifactClassCount>, 3> class_ap{};
  std::array<std::optional<double>, 3> map{};  // mAP_5, mAP_25, mAP_50
  std::optional<double> mean_iou_25;           // percent, over true positives at IoU 0.25
  std::size_t predicted_boxes = 0;
  std::size_t truth_boxes = 0;
  // PR curves at IoU 0.25, one per class code
  std::array<std::vector<PrPoint>, kArtifactClassCount> pr_curves{};
};

inline double mean_iou_of_matches(const EvalDataset& ds, double iou_thr, bool& any) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const EvalFrame& f : ds) {
    const FrameMatch m = match_predictions(f.predictions, f.truths, iou_thr);
    for (std::size_t p = 0; p < m.matched_truth.size(); ++p)
      if (m.matched_truth[p]) {
        sum += m.match_iou[p];
        ++n;
      }
  }
  any = n > 0;
  return n ? sum / static_cast<double>(n) : 0.0;
}

inline EvalResult evaluate_detections(const EvalDataset& ds) {
  EvalResult r;
  for (std::size_t t = 0; t < kEvalThresholds.size(); ++t) {
    for (ArtifactClass c : kAllArtifactClasses)
      r.class_ap[t][class_code(c)] = average_precision(ds, c, kEvalThresholds[t]);
    r.map[t] = mean_average_precision(ds, kEvalThresholds[t]);
  }
  bool any = false;
  const double miou = mean_iou_of_matches(ds, 0.25, any);
  if (any) r.mean_iou_25 = 100.0 * miou;
  for (const EvalFrame& f : ds) {
    r.predicted_boxes += f.predictions.size();
    r.truth_boxes += f.truths.size();
  }
  for (ArtifactClass c : kAllArtifactClasses) r.pr_curves[class_code(c)] = pr_curve(ds, c, 0.25);
  return r;
}

}  // namespace endoqa
