#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "endoqa/degradation.hpp"
#include "endoqa/io/sidecar.hpp"
#include "endoqa/pipeline.hpp"

namespace endoqa::io {

struct SimulatorConfig {
  int kernel_side = kDefaultKernelSide;
  int trajectory_count = kDefaultTrajectoryCount;
  double noise_sigma = 0.003;
  double gamma = 1.0;
  // 0 disables mask knockout
  int mask_count = 0;
  std::vector<int> mask_sides = default_mask_sides();

  friend bool operator==(const SimulatorConfig&, const SimulatorConfig&) = default;
};

struct PathsConfig {
  std::string input;
  std::string sidecar;
  std::string reference;
  std::string output;

  friend bool operator==(const PathsConfig&, const PathsConfig&) = default;
};

/// Everything a CLI run reads from its config file. Absent fields keep
/// their defaults; unknown fields are rejected.
struct RunConfig {
  PipelineConfig pipeline;
  SimulatorConfig simulator;
  PathsConfig paths;
  std::uint64_t seed = 0;

  void validate() const {
    pipeline.validate();
    if (simulator.kernel_side < 1 || simulator.kernel_side % 2 == 0)
      throw invalid_argument("simulator.kernel_side must be odd and >= 1");
    if (simulator.trajectory_count < 1) throw invalid_argument("simulator.trajectory_count must be >= 1");
    if (!(simulator.noise_sigma >= 0.0)) throw invalid_argument("simulator.noise_sigma must be >= 0");
    if (!(simulator.gamma > 0.0)) throw invalid_argument("simulator.gamma must be > 0");
    if (simulator.mask_count < 0) throw invalid_argument("simulator.mask_count must be >= 0");
    if (simulator.mask_sides.empty()) throw invalid_argument("simulator.mask_sides is empty");
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  using nlohmann::ordered_json;
  const QualityConfig& q = c.pipeline.quality;
  ordered_json weights;
  for (ArtifactClass k : kAllArtifactClasses) weights[std::string(class_name(k))] = q.class_weight(k);
  ordered_json j;
  j["quality"] = {{"class_weights", weights},
                  {"lambda_area", q.lambda_area},
                  {"lambda_location", q.lambda_location},
                  {"small_count_cutoff", q.small_count_cutoff},
                  {"small_count_lambda_area", q.small_count_lambda_area},
                  {"small_count_lambda_location", q.small_count_lambda_location},
                  {"discard_below", q.discard_below},
                  {"keep_above", q.keep_above}};
  const TvParams& tv = c.pipeline.tv;
  j["tv"] = {{"lambda", tv.lambda}, {"kernel_radius", tv.kernel_radius}, {"max_iters", tv.max_iters}, {"tol", tv.tol}};
  j["dilation_radius"] = c.pipeline.dilation_radius;
  j["scale_dilation"] = c.pipeline.scale_dilation;
  j["confidence_threshold"] = c.pipeline.confidence_threshold;
  j["intensity_ceiling"] = c.pipeline.intensity_ceiling;
  j["inpaint_method"] = std::string(to_string(c.pipeline.inpaint_method));
  j["patch_side"] = c.pipeline.patch_side;
  const SimulatorConfig& s = c.simulator;
  j["simulator"] = {{"kernel_side", s.kernel_side},   {"trajectory_count", s.trajectory_count},
                    {"noise_sigma", s.noise_sigma},   {"gamma", s.gamma},
                    {"mask_count", s.mask_count},     {"mask_sides", s.mask_sides}};
  j["paths"] = {{"input", c.paths.input},
                {"sidecar", c.paths.sidecar},
                {"reference", c.paths.reference},
                {"output", c.paths.output}};
  j["seed"] = c.seed;
  return j;
}

namespace detail {

template <class T>
void read_field(const nlohmann::json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw parse_error(where + "." + key + ": wrong type");
  }
}

inline const nlohmann::json& object_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_object()) throw parse_error(where + "." + key + ": expected an object");
  return v;
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw parse_error("config: top level must be an object");
  RunConfig c;
  detail::reject_unknown_keys(j,
                              {"quality", "tv", "dilation_radius", "scale_dilation", "confidence_threshold",
                               "intensity_ceiling", "inpaint_method", "patch_side", "simulator", "paths", "seed"},
                              "config");
  if (j.contains("quality")) {
    const auto& q = detail::object_field(j, "quality", "config");
    const std::string w = "config.quality";
    detail::reject_unknown_keys(q,
                                {"class_weights", "lambda_area", "lambda_location", "small_count_cutoff",
                                 "small_count_lambda_area", "small_count_lambda_location", "discard_below",
                                 "keep_above"},
                                w);
    QualityConfig& qc = c.pipeline.quality;
    if (q.contains("class_weights")) {
      const auto& cw = detail::object_field(q, "class_weights", w);
      for (auto it = cw.begin(); it != cw.end(); ++it) {
        auto cls = class_from_name(it.key());
        if (!cls) throw parse_error(w + ".class_weights." + it.key() + ": unknown artifact class");
        if (!it.value().is_number()) throw parse_error(w + ".class_weights." + it.key() + ": expected a number");
        qc.set_class_weight(*cls, it.value().get<double>());
      }
    }
    detail::read_field(q, "lambda_area", qc.lambda_area, w);
    detail::read_field(q, "lambda_location", qc.lambda_location, w);
    detail::read_field(q, "small_count_cutoff", qc.small_count_cutoff, w);
    detail::read_field(q, "small_count_lambda_area", qc.small_count_lambda_area, w);
    detail::read_field(q, "small_count_lambda_location", qc.small_count_lambda_location, w);
    detail::read_field(q, "discard_below", qc.discard_below, w);
    detail::read_field(q, "keep_above", qc.keep_above, w);
  }
  if (j.contains("tv")) {
    const auto& t = detail::object_field(j, "tv", "config");
    detail::reject_unknown_keys(t, {"lambda", "kernel_radius", "max_iters", "tol"}, "config.tv");
    detail::read_field(t, "lambda", c.pipeline.tv.lambda, "config.tv");
    detail::read_field(t, "kernel_radius", c.pipeline.tv.kernel_radius, "config.tv");
    detail::read_field(t, "max_iters", c.pipeline.tv.max_iters, "config.tv");
    detail::read_field(t, "tol", c.pipeline.tv.tol, "config.tv");
  }
  detail::read_field(j, "dilation_radius", c.pipeline.dilation_radius, "config");
  detail::read_field(j, "scale_dilation", c.pipeline.scale_dilation, "config");
  detail::read_field(j, "confidence_threshold", c.pipeline.confidence_threshold, "config");
  detail::read_field(j, "intensity_ceiling", c.pipeline.intensity_ceiling, "config");
  if (j.contains("inpaint_method")) {
    std::string m;
    detail::read_field(j, "inpaint_method", m, "config");
    if (m == "tv") c.pipeline.inpaint_method = InpaintMethod::tv;
    else if (m == "patch") c.pipeline.inpaint_method = InpaintMethod::patch;
    else throw parse_error("config.inpaint_method: expected \"tv\" or \"patch\"");
  }
  detail::read_field(j, "patch_side", c.pipeline.patch_side, "config");
  if (j.contains("simulator")) {
    const auto& s = detail::object_field(j, "simulator", "config");
    const std::string w = "config.simulator";
    detail::reject_unknown_keys(s, {"kernel_side", "trajectory_count", "noise_sigma", "gamma", "mask_count", "mask_sides"}, w);
    detail::read_field(s, "kernel_side", c.simulator.kernel_side, w);
    detail::read_field(s, "trajectory_count", c.simulator.trajectory_count, w);
    detail::read_field(s, "noise_sigma", c.simulator.noise_sigma, w);
    detail::read_field(s, "gamma", c.simulator.gamma, w);
    detail::read_field(s, "mask_count", c.simulator.mask_count, w);
    detail::read_field(s, "mask_sides", c.simulator.mask_sides, w);
  }
  if (j.contains("paths")) {
    const auto& p = detail::object_field(j, "paths", "config");
    detail::reject_unknown_keys(p, {"input", "sidecar", "reference", "output"}, "config.paths");
    detail::read_field(p, "input", c.paths.input, "config.paths");
    detail::read_field(p, "sidecar", c.paths.sidecar, "config.paths");
    detail::read_field(p, "reference", c.paths.reference, "config.paths");
    detail::read_field(p, "output", c.paths.output, "config.paths");
  }
  detail::read_field(j, "seed", c.seed, "config");
  try {
    c.validate();
  } catch (const Error& e) {
    throw parse_error(std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline RunConfig load_config(const std::string& path) {
  try {
    return parse_config_text(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw parse_error(path + ": " + e.what());
    throw;
  }
}

inline std::string config_to_text(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace endoqa::io
