#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "endoqa/detection_eval.hpp"
#include "endoqa/io/sidecar.hpp"
#include "endoqa/pipeline.hpp"

namespace endoqa::io {

/// Shortest round-trip-safe text for a double; "inf"/"-inf"/"nan" for
/// non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline nlohmann::ordered_json report_to_json(const VideoReport& r) {
  nlohmann::ordered_json j;
  j["total"] = r.total;
  j["kept"] = r.kept;
  j["restored"] = r.restored;
  j["discarded"] = r.discarded;
  j["fractions"] = {{"kept", r.kept_fraction()},
                    {"restored", r.restored_fraction()},
                    {"discarded", r.discarded_fraction()}};
  j["retained_fraction"] = r.retained_fraction();
  nlohmann::ordered_json hist;
  for (ArtifactClass c : kAllArtifactClasses) hist[std::string(class_name(c))] = r.class_histogram[class_code(c)];
  j["class_histogram"] = hist;
  return j;
}

inline std::string report_json_text(const VideoReport& r) { return report_to_json(r).dump(2) + "\n"; }

inline constexpr const char* kFrameLogHeader =
    "frame_id,index,qs,disposition,stages,warnings,psnr_pre,psnr_post,ssim_pre,ssim_post,vif_pre,vif_post,"
    "reco_pre,reco_post";

inline std::string frame_log_csv(const std::vector<FrameLog>& logs) {
  std::string out = std::string(kFrameLogHeader) + "\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (const FrameLog& l : logs) {
    std::vector<std::string> row{csv_field(l.frame_id),
                                 std::to_string(l.index),
                                 format_number(l.qs),
                                 std::string(to_string(l.disposition)),
                                 csv_field(join(l.stages, ';')),
                                 csv_field(join(l.warnings, ';'))};
    auto metric = [&](auto get) {
      row.push_back(l.pre ? opt(get(*l.pre)) : std::string());
      row.push_back(l.post ? opt(get(*l.post)) : std::string());
    };
    metric([](const MetricSet& m) { return std::optional<double>(m.psnr); });
    metric([](const MetricSet& m) { return std::optional<double>(m.ssim); });
    metric([](const MetricSet& m) { return std::optional<double>(m.vif); });
    metric([](const MetricSet& m) { return m.reco; });
    out += join(row, ',') + "\n";
  }
  return out;
}

/// Writes the video report as JSON and the per-frame log as CSV.
inline void emit_report(const VideoReport& report, const std::vector<FrameLog>& logs,
                        const std::string& json_path, const std::string& csv_path) {
  write_text_file(json_path, report_json_text(report));
  write_text_file(csv_path, frame_log_csv(logs));
}

inline std::string pr_curve_csv(const std::vector<PrPoint>& curve) {
  std::string out = "recall,precision\n";
  for (const PrPoint& p : curve) out += format_number(p.recall) + "," + format_number(p.precision) + "\n";
  return out;
}

inline nlohmann::ordered_json eval_result_to_json(const EvalResult& r) {
  using nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  ordered_json j;
  const char* names[] = {"5", "25", "50"};
  for (std::size_t t = 0; t < kEvalThresholds.size(); ++t) j[std::string("mAP_") + names[t]] = opt(r.map[t]);
  ordered_json per_class;
  for (ArtifactClass c : kAllArtifactClasses) {
    ordered_json aps;
    for (std::size_t t = 0; t < kEvalThresholds.size(); ++t)
      aps[std::string("AP_") + names[t]] = opt(r.class_ap[t][class_code(c)]);
    per_class[std::string(class_name(c))] = aps;
  }
  j["class_ap"] = per_class;
  j["mean_iou_25"] = opt(r.mean_iou_25);
  j["predicted_boxes"] = r.predicted_boxes;
  j["annotated_boxes"] = r.truth_boxes;
  return j;
}

}  // namespace endoqa::io
