// endoqa command-line front end.
//
//   endoqa score        --sidecar dets.json
//   endoqa eval-detect  --truth gt.json --pred dets.json [--pr-dir DIR]
//   endoqa simulate     --out DIR [--frames N --mild F --severe F --width W --height H --channels C]
//   endoqa restore      --input frame.png --sidecar dets.json --out restored.png [--frame-id ID]
//   endoqa pipeline     --input DIR --sidecar dets.json --out DIR [--reference DIR]
//   endoqa metrics      --ref a.png --test b.png
//
// Every subcommand accepts --config, --seed and --threads. Failures print a
// single line "error <kind>: <message>" on stderr and exit nonzero.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "endoqa/endoqa.hpp"
#include "endoqa/io/config.hpp"
#include "endoqa/io/image_io.hpp"
#include "endoqa/io/report.hpp"
#include "endoqa/io/sidecar.hpp"

namespace fs = std::filesystem;
using namespace endoqa;
using nlohmann::ordered_json;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "random seed (overrides the config)");
  sub->add_option("--threads", c.threads, "worker threads, 0 = hardware concurrency")->check(CLI::NonNegativeNumber);
}

io::RunConfig resolve(const Common& c) {
  io::RunConfig rc = c.config.empty() ? io::RunConfig{} : io::load_config(c.config);
  if (c.seed) rc.seed = *c.seed;
  return rc;
}

int thread_count(const Common& c) {
  if (c.threads > 0) return c.threads;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::string pick(const std::string& flag, const std::string& from_config, const char* name) {
  const std::string& v = flag.empty() ? from_config : flag;
  if (v.empty()) throw invalid_argument(std::string("missing ") + name + " (flag or config paths)");
  return v;
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory " + p.string() + ": " + ec.message());
}

DetectionTable to_table(const io::DetectionSidecar& s) {
  DetectionTable t;
  for (const auto& r : s.frames) t[r.frame_id] = r.boxes;
  return t;
}

void print(const ordered_json& j) { std::cout << j.dump(2) << "\n"; }

// ---------------------------------------------------------------------------

struct ScoreArgs {
  Common common;
  std::string sidecar;
};

int run_score(const ScoreArgs& a) {
  const io::RunConfig rc = resolve(a.common);
  const auto side = io::parse_sidecar(pick(a.sidecar, rc.paths.sidecar, "--sidecar"));
  std::cout << "frame_id,qs,disposition,boxes_used\n";
  for (const auto& r : side.frames) {
    const auto used = filter_by_confidence(r.boxes, rc.pipeline.confidence_threshold);
    const auto q = quality_score(used, rc.pipeline.quality);
    std::cout << io::csv_field(r.frame_id) << "," << io::format_number(q.qs) << "," << to_string(q.disposition) << ","
              << used.size() << "\n";
  }
  return 0;
}

struct EvalArgs {
  Common common;
  std::string truth, pred, pr_dir;
};

int run_eval(const EvalArgs& a) {
  resolve(a.common);
  const auto truth = io::parse_sidecar(a.truth, false);
  const auto pred = io::parse_sidecar(a.pred);
  const EvalResult r = evaluate_detections(io::make_eval_dataset(truth, pred));
  if (!a.pr_dir.empty()) {
    ensure_dir(a.pr_dir);
    for (ArtifactClass c : kAllArtifactClasses)
      io::write_text_file((fs::path(a.pr_dir) / ("pr_" + std::string(class_name(c)) + ".csv")).string(),
                          io::pr_curve_csv(r.pr_curves[class_code(c)]));
  }
  print(io::eval_result_to_json(r));
  return 0;
}

struct SimArgs {
  Common common;
  std::string out;
  int frames = 20;
  double mild = 0.3, severe = 0.1;
  int width = 128, height = 128, channels = 3;
};

int run_simulate(const SimArgs& a) {
  const io::RunConfig rc = resolve(a.common);
  if (a.width < 33 || a.height < 33) throw invalid_argument("frames must be at least 33x33");
  const std::string out = pick(a.out, rc.paths.output, "--out");
  const auto corpus = simulate_corpus(a.frames, a.mild, a.severe, a.width, a.height, a.channels, rc.seed);
  const fs::path root(out);
  ensure_dir(root / "clean");
  ensure_dir(root / "corrupt");
  io::DetectionSidecar side;
  ordered_json manifest;
  manifest["seed"] = rc.seed;
  manifest["frames"] = ordered_json::array();
  for (const auto& s : corpus) {
    io::write_png((root / "clean" / (s.id + ".png")).string(), s.clean);
    io::write_png((root / "corrupt" / (s.id + ".png")).string(), s.corrupted);
    side.frames.push_back({s.id, s.detections});
    manifest["frames"].push_back({{"frame_id", s.id}, {"level", to_string(s.level)}, {"corruption", s.corruption}});
  }
  io::write_sidecar((root / "detections.json").string(), side);
  io::write_text_file((root / "manifest.json").string(), manifest.dump(2) + "\n");
  std::cout << "wrote " << corpus.size() << " frame pairs to " << root.string() << "\n";
  return 0;
}

struct RestoreArgs {
  Common common;
  std::string input, sidecar, out, frame_id, reference;
};

int run_restore(const RestoreArgs& a) {
  const io::RunConfig rc = resolve(a.common);
  const std::string input = pick(a.input, rc.paths.input, "--input");
  const Frame f = io::read_png(input);
  const auto side = io::parse_sidecar(pick(a.sidecar, rc.paths.sidecar, "--sidecar"));
  const std::string id = a.frame_id.empty() ? fs::path(input).stem().string() : a.frame_id;
  const auto* rec = side.find(id);
  const std::vector<Detection> dets = rec ? rec->boxes : std::vector<Detection>{};
  const auto used = filter_by_confidence(dets, rc.pipeline.confidence_threshold);
  const auto q = quality_score(used, rc.pipeline.quality);
  const RestorationPlan plan = plan_restoration(used, f.width(), f.height(), rc.pipeline);
  RestoreOutcome ro = restore_frame(f, plan, rc.pipeline);
  if (ro.error) throw Error(ErrorKind::Numerical, "restoration failed: " + *ro.error);
  io::write_png(pick(a.out, rc.paths.output, "--out"), ro.frame);
  ordered_json j;
  j["frame_id"] = id;
  j["qs"] = q.qs;
  j["disposition"] = std::string(to_string(q.disposition));
  j["stages"] = ro.log.stages;
  j["warnings"] = ro.log.warnings;
  if (!a.reference.empty()) {
    const Frame ref = io::read_png(a.reference);
    const MetricSet pre = compute_metrics(ref, f), post = compute_metrics(ref, ro.frame);
    j["psnr"] = {{"pre", pre.psnr}, {"post", post.psnr}};
    j["ssim"] = {{"pre", pre.ssim}, {"post", post.ssim}};
  }
  print(j);
  return 0;
}

struct PipelineArgs {
  Common common;
  std::string input, sidecar, out, reference;
};

int run_pipeline(const PipelineArgs& a) {
  const io::RunConfig rc = resolve(a.common);
  const std::string input = pick(a.input, rc.paths.input, "--input");
  const std::string out = pick(a.out, rc.paths.output, "--out");
  const std::string ref_dir = a.reference.empty() ? rc.paths.reference : a.reference;
  if (!fs::is_directory(input)) throw Error(ErrorKind::Io, "input is not a directory: " + input);
  const DetectionTable table = to_table(io::parse_sidecar(pick(a.sidecar, rc.paths.sidecar, "--sidecar")));

  const auto files = io::list_png_files(input);
  std::vector<VideoFrameInput> inputs;
  std::vector<fs::path> sources;
  for (std::size_t i = 0; i < files.size(); ++i) {
    VideoFrameInput in;
    in.id = files[i].stem().string();
    try {
      in.frame = io::read_png(files[i].string(), static_cast<std::int64_t>(i));
    } catch (const Error& e) {
      in.read_error = e.what();
    }
    if (!ref_dir.empty()) {
      const fs::path rp = fs::path(ref_dir) / files[i].filename();
      if (fs::exists(rp)) in.reference = io::read_png(rp.string(), static_cast<std::int64_t>(i));
    }
    inputs.push_back(std::move(in));
    sources.push_back(files[i]);
  }

  const VideoResult res = process_video(inputs, table, rc.pipeline, thread_count(a.common));
  const fs::path root(out);
  ensure_dir(root / "frames");
  std::size_t k = 0;
  for (std::size_t i = 0; i < res.logs.size(); ++i) {
    const Disposition d = res.logs[i].disposition;
    if (d == Disposition::Discard) continue;
    const OutputFrame& of = res.frames[k++];
    const fs::path dst = root / "frames" / (of.id + ".png");
    if (d == Disposition::Keep) {
      // untouched frames are copied verbatim
      std::error_code ec;
      fs::copy_file(sources[i], dst, fs::copy_options::overwrite_existing, ec);
      if (ec) throw Error(ErrorKind::Io, "cannot copy " + sources[i].string() + ": " + ec.message());
    } else {
      io::write_png(dst.string(), of.frame);
    }
  }
  io::emit_report(res.report, res.logs, (root / "report.json").string(), (root / "frame_log.csv").string());
  std::cout << "frames " << res.report.total << ": kept " << res.report.kept << ", restored " << res.report.restored
            << ", discarded " << res.report.discarded << "\n";
  return 0;
}

struct MetricArgs {
  Common common;
  std::string ref, test;
};

int run_metrics(const MetricArgs& a) {
  resolve(a.common);
  const Frame ref = io::read_png(a.ref), test = io::read_png(a.test);
  const MetricSet m = compute_metrics(ref, test);
  ordered_json j;
  j["psnr"] = std::isinf(m.psnr) ? ordered_json("inf") : ordered_json(m.psnr);
  j["ssim"] = m.ssim;
  j["vif"] = m.vif;
  j["reco"] = m.reco ? ordered_json(*m.reco) : ordered_json(nullptr);
  print(j);
  return 0;
}

int fail(ErrorKind kind, const std::string& msg) {
  std::string one_line = msg;
  for (char& ch : one_line)
    if (ch == '\n' || ch == '\r') ch = ' ';
  std::fprintf(stderr, "error %s: %s\n", to_string(kind), one_line.c_str());
  switch (kind) {
    case ErrorKind::InvalidArgument: return 2;
    case ErrorKind::Parse: return 3;
    case ErrorKind::Io: return 4;
    case ErrorKind::Numerical: return 5;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"endoscopy frame quality triage and restoration"};
  app.require_subcommand(1);

  ScoreArgs score;
  auto* s_score = app.add_subcommand("score", "quality score and triage per sidecar frame");
  add_common(s_score, score.common);
  s_score->add_option("--sidecar", score.sidecar, "detection sidecar JSON");

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval-detect", "AP/mAP/IoU of predictions against ground truth");
  add_common(s_eval, ev.common);
  s_eval->add_option("--truth", ev.truth, "ground-truth sidecar")->required();
  s_eval->add_option("--pred", ev.pred, "prediction sidecar")->required();
  s_eval->add_option("--pr-dir", ev.pr_dir, "write per-class PR curves (IoU 0.25) here");

  SimArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "write a simulated clean/corrupted corpus");
  add_common(s_sim, sim.common);
  s_sim->add_option("--out", sim.out, "output directory");
  s_sim->add_option("--frames", sim.frames, "frame count")->check(CLI::NonNegativeNumber);
  s_sim->add_option("--mild", sim.mild, "fraction of mildly corrupted frames")->check(CLI::Range(0.0, 1.0));
  s_sim->add_option("--severe", sim.severe, "fraction of severely corrupted frames")->check(CLI::Range(0.0, 1.0));
  s_sim->add_option("--width", sim.width, "frame width");
  s_sim->add_option("--height", sim.height, "frame height");
  s_sim->add_option("--channels", sim.channels, "1 or 3")->check(CLI::IsMember({1, 3}));

  RestoreArgs rest;
  auto* s_rest = app.add_subcommand("restore", "restore one frame from its detections");
  add_common(s_rest, rest.common);
  s_rest->add_option("--input", rest.input, "input PNG");
  s_rest->add_option("--sidecar", rest.sidecar, "detection sidecar JSON");
  s_rest->add_option("--out", rest.out, "output PNG");
  s_rest->add_option("--frame-id", rest.frame_id, "sidecar frame id (default: input file stem)");
  s_rest->add_option("--reference", rest.reference, "clean reference PNG for before/after metrics");

  PipelineArgs pipe;
  auto* s_pipe = app.add_subcommand("pipeline", "triage and restore a directory of frames");
  add_common(s_pipe, pipe.common);
  s_pipe->add_option("--input", pipe.input, "directory of PNG frames");
  s_pipe->add_option("--sidecar", pipe.sidecar, "detection sidecar JSON");
  s_pipe->add_option("--out", pipe.out, "output directory");
  s_pipe->add_option("--reference", pipe.reference, "directory of clean frames with matching names");

  MetricArgs met;
  auto* s_met = app.add_subcommand("metrics", "PSNR/SSIM/VIF/RECO between two frames");
  add_common(s_met, met.common);
  s_met->add_option("--ref", met.ref, "reference PNG")->required();
  s_met->add_option("--test", met.test, "test PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(ErrorKind::InvalidArgument, e.what());
  }

  try {
    if (*s_score) return run_score(score);
    if (*s_eval) return run_eval(ev);
    if (*s_sim) return run_simulate(sim);
    if (*s_rest) return run_restore(rest);
    if (*s_pipe) return run_pipeline(pipe);
    if (*s_met) return run_metrics(met);
  } catch (const Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail(ErrorKind::Numerical, e.what());
  }
  return fail(ErrorKind::InvalidArgument, "no subcommand");
}
