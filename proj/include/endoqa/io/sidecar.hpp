#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "endoqa/detection_eval.hpp"
#include "endoqa/error.hpp"
#include "endoqa/geometry.hpp"

namespace endoqa::io {

/// Detections of one frame as stored in a sidecar file.
struct SidecarRecord {
  std::string frame_id;
  std::vector<Detection> boxes;

  friend bool operator==(const SidecarRecord&, const SidecarRecord&) = default;
};

/// Per-frame detections, in file order.
///
/// File layout:
///   {"frames": [{"frame_id": "0001",
///                "boxes": [{"class": 2, "x": 0.1, "y": 0.2, "w": 0.3, "h": 0.1,
///                           "confidence": 0.8}]}]}
/// Class codes are 0-5 (blur, bubbles, specularity, saturation, contrast,
/// misc_artifact). Coordinates are normalized, (x, y) the top-left corner.
struct DetectionSidecar {
  std::vector<SidecarRecord> frames;

  const SidecarRecord* find(const std::string& id) const {
    for (const auto& r : frames)
      if (r.frame_id == id) return &r;
    return nullptr;
  }

  friend bool operator==(const DetectionSidecar&, const DetectionSidecar&) = default;
};

inline Error parse_error(const std::string& what) { return Error(ErrorKind::Parse, what); }

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw parse_error(where + "." + it.key() + ": unknown field");
  }
}

inline double number_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw parse_error(where + "." + key + ": missing field");
  const auto& v = obj.at(key);
  if (!v.is_number()) throw parse_error(where + "." + key + ": expected a number");
  return v.get<double>();
}

}  // namespace detail

/// Strict parse. With `require_confidence` false (ground-truth files) a
/// missing confidence defaults to 1.
inline DetectionSidecar parse_sidecar_text(const std::string& text, bool require_confidence = true) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error(std::string("sidecar is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw parse_error("sidecar: top level must be an object");
  detail::reject_unknown_keys(doc, {"frames"}, "sidecar");
  if (!doc.contains("frames") || !doc.at("frames").is_array())
    throw parse_error("sidecar.frames: missing or not an array");

  DetectionSidecar out;
  std::set<std::string> seen;
  const auto& frames = doc.at("frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& rec = frames[i];
    std::string where = "frames[" + std::to_string(i) + "]";
    if (!rec.is_object()) throw parse_error(where + ": expected an object");
    if (!rec.contains("frame_id") || !rec.at("frame_id").is_string())
      throw parse_error(where + ".frame_id: missing or not a string");
    SidecarRecord r;
    r.frame_id = rec.at("frame_id").get<std::string>();
    where += " (frame_id=" + r.frame_id + ")";
    detail::reject_unknown_keys(rec, {"frame_id", "boxes"}, where);
    if (!seen.insert(r.frame_id).second) throw parse_error(where + ".frame_id: duplicate frame id");
    if (!rec.contains("boxes") || !rec.at("boxes").is_array())
      throw parse_error(where + ".boxes: missing or not an array");
    const auto& boxes = rec.at("boxes");
    for (std::size_t j = 0; j < boxes.size(); ++j) {
      const auto& b = boxes[j];
      const std::string bw = where + ".boxes[" + std::to_string(j) + "]";
      if (!b.is_object()) throw parse_error(bw + ": expected an object");
      detail::reject_unknown_keys(b, {"class", "x", "y", "w", "h", "confidence"}, bw);
      if (!b.contains("class") || !b.at("class").is_number_integer())
        throw parse_error(bw + ".class: missing or not an integer");
      const auto code = b.at("class").get<long long>();
      if (code < 0 || code >= kArtifactClassCount)
        throw parse_error(bw + ".class: code " + std::to_string(code) + " out of range 0-5");
      Detection d;
      d.cls = static_cast<ArtifactClass>(code);
      d.box = {detail::number_field(b, "x", bw), detail::number_field(b, "y", bw),
               detail::number_field(b, "w", bw), detail::number_field(b, "h", bw)};
      if (auto field = d.box.violation()) throw parse_error(bw + "." + *field + ": invalid box coordinate");
      if (b.contains("confidence") || require_confidence)
        d.confidence = detail::number_field(b, "confidence", bw);
      if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
        throw parse_error(bw + ".confidence: outside [0,1]");
      r.boxes.push_back(d);
    }
    out.frames.push_back(std::move(r));
  }
  return out;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

inline DetectionSidecar parse_sidecar(const std::string& path, bool require_confidence = true) {
  try {
    return parse_sidecar_text(read_text_file(path), require_confidence);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw parse_error(path + ": " + e.what());
    throw;
  }
}

inline std::string sidecar_to_text(const DetectionSidecar& s) {
  nlohmann::ordered_json doc;
  doc["frames"] = nlohmann::ordered_json::array();
  for (const auto& r : s.frames) {
    nlohmann::ordered_json rec;
    rec["frame_id"] = r.frame_id;
    rec["boxes"] = nlohmann::ordered_json::array();
    for (const Detection& d : r.boxes) {
      nlohmann::ordered_json b;
      b["class"] = class_code(d.cls);
      b["x"] = d.box.x;
      b["y"] = d.box.y;
      b["w"] = d.box.w;
      b["h"] = d.box.h;
      b["confidence"] = d.confidence;
      rec["boxes"].push_back(std::move(b));
    }
    doc["frames"].push_back(std::move(rec));
  }
  return doc.dump(2) + "\n";
}

inline void write_sidecar(const std::string& path, const DetectionSidecar& s) {
  write_text_file(path, sidecar_to_text(s));
}

/// Pairs ground truth and predictions by frame id. Every prediction frame
/// must exist in the ground truth.
inline EvalDataset make_eval_dataset(const DetectionSidecar& truth, const DetectionSidecar& preds) {
  EvalDataset ds;
  for (const auto& r : truth.frames) {
    EvalFrame f;
    f.id = r.frame_id;
    for (const Detection& d : r.boxes) f.truths.push_back({d.cls, d.box});
    if (const auto* p = preds.find(r.frame_id)) f.predictions = p->boxes;
    ds.push_back(std::move(f));
  }
  for (const auto& p : preds.frames)
    if (!truth.find(p.frame_id))
      throw invalid_argument("prediction frame_id=" + p.frame_id + " has no ground-truth record");
  return ds;
}

}  // namespace endoqa::io
