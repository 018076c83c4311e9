#pragma once

#include <algorithm>
#include <array>
#include <string_view>
#include <vector>

#include "endoqa/error.hpp"
#include "endoqa/geometry.hpp"

namespace endoqa {

enum class Disposition { Discard, Restore, Keep };

inline std::string_view to_string(Disposition d) {
  switch (d) {
    case Disposition::Discard: return "discard";
    case Disposition::Restore: return "restore";
    case Disposition::Keep: return "keep";
  }
  return "unknown";
}

/// Weight tables and thresholds of the frame quality score.
struct QualityConfig {
  // indexed by ArtifactClass code
  std::array<double, kArtifactClassCount> class_weights{0.05, 0.10, 0.20, 0.10, 0.05, 0.50};
  double lambda_area = 0.5;
  double lambda_location = 0.5;
  // below this many boxes the small-count lambdas apply
  int small_count_cutoff = 5;
  double small_count_lambda_area = 1.0;
  double small_count_lambda_location = 1.0;
  double discard_below = 0.5;
  double keep_above = 0.95;

  double class_weight(ArtifactClass c) const { return class_weights.at(class_code(c)); }
  void set_class_weight(ArtifactClass c, double w) { class_weights.at(class_code(c)) = w; }

  void validate() const {
    for (double w : class_weights)
      if (!(w >= 0.0)) throw invalid_argument("class weights must be non-negative");
    if (!(lambda_area >= 0.0 && lambda_location >= 0.0 && small_count_lambda_area >= 0.0 &&
          small_count_lambda_location >= 0.0))
      throw invalid_argument("lambda weights must be non-negative");
    if (small_count_cutoff < 0) throw invalid_argument("small_count_cutoff must be non-negative");
    if (!(0.0 <= discard_below && discard_below <= keep_above && keep_above <= 1.0))
      throw invalid_argument("thresholds must satisfy 0 <= discard_below <= keep_above <= 1");
  }

  friend bool operator==(const QualityConfig&, const QualityConfig&) = default;
};

struct BoxContribution {
  Detection detection;
  double area_term = 0.0;      // lambda_A * W_C * W_A
  double location_term = 0.0;  // lambda_L * W_C * W_L
};

struct QualityReport {
  double qs = 1.0;
  Disposition disposition = Disposition::Keep;
  std::vector<BoxContribution> contributions;

  double penalty() const {
    double s = 0.0;
    for (const auto& c : contributions) s += c.area_term + c.location_term;
    return s;
  }
};

/// Discard below `discard_below`, keep above `keep_above`; both boundaries
/// themselves route to Restore.
inline Disposition triage(double qs, const QualityConfig& cfg) {
  if (qs < cfg.discard_below) return Disposition::Discard;
  if (qs > cfg.keep_above) return Disposition::Keep;
  return Disposition::Restore;
}

inline QualityReport quality_score(const std::vector<Detection>& dets, const QualityConfig& cfg) {
  QualityReport report;
  const bool few = static_cast<int>(dets.size()) < cfg.small_count_cutoff;
  const double la = few ? cfg.small_count_lambda_area : cfg.lambda_area;
  const double ll = few ? cfg.small_count_lambda_location : cfg.lambda_location;

  report.contributions.reserve(dets.size());
  double penalty = 0.0;
  for (const Detection& d : dets) {
    validate(d);
    const double wc = cfg.class_weight(d.cls);
    BoxContribution c{d, la * wc * area_fraction(d.box), ll * wc * location_weight(d.box)};
    penalty += c.area_term + c.location_term;
    report.contributions.push_back(c);
  }
  report.qs = std::clamp(1.0 - penalty, 0.0, 1.0);
  report.disposition = triage(report.qs, cfg);
  return report;
}

/// Keeps detections whose confidence reaches `threshold`.
inline std::vector<Detection> filter_by_confidence(const std::vector<Detection>& dets,
                                                   double threshold) {
  std::vector<Detection> out;
  std::copy_if(dets.begin(), dets.end(), std::back_inserter(out),
               [&](const Detection& d) { return d.confidence >= threshold; });
  return out;
}

}  // namespace endoqa
