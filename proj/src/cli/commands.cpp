#include <algorithm>
#include <chrono>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "osd/cli.hpp"
#include "osd/features.hpp"
#include "osd/parallel.hpp"
#include "osd/synth.hpp"

namespace osd::cli {
namespace fs = std::filesystem;
using nlohmann::json;

// Bad flag combinations found after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<SceneBundle> load_scene_dir(const fs::path& dir, std::size_t workers) {
  const std::vector<fs::path> files = list_scene_files(dir);
  std::vector<SceneBundle> out(files.size());
  parallel_for(files.size(), workers, [&](std::size_t i) {
    SceneBundle& b = out[i];
    b.file = files[i];
    try {
      b.scene = load_scene(files[i]);
      const fs::path side = detections_path_for(files[i]);
      if (fs::exists(side)) b.detections = detections_from_json(read_text_file(side));
    } catch (const DocumentError& e) {
      throw std::runtime_error(files[i].string() + ": malformed document at " + e.what());
    }
    if (b.detections && b.detections->scene_id != b.scene.scene_id) {
      throw std::runtime_error(fmt::format("{}: sidecar scene id '{}' differs from '{}'",
                                           files[i].string(), b.detections->scene_id,
                                           b.scene.scene_id));
    }
  });
  return out;
}

std::vector<Detection> scored_detections(const SceneBundle& bundle, const HeadModel* model) {
  if (!bundle.detections) {
    throw std::runtime_error("no detection sidecar for " + bundle.file.string());
  }
  const DetectionSet& set = *bundle.detections;
  if (!model) {
    const std::size_t classes = set.class_names.size();
    for (const ClosedSetDetection& d : set.detections) {
      if (d.embedding.size() != classes) {
        throw std::runtime_error(fmt::format("{}: embedding size {} but {} classes",
                                             bundle.file.string(), d.embedding.size(),
                                             classes));
      }
    }
    return score_detections(set.detections, Prototypes(classes), HeadKind::kMetric,
                            set.class_names);
  }
  std::vector<ClosedSetDetection> embedded;
  embedded.reserve(set.detections.size());
  for (const ClosedSetDetection& d : set.detections) {
    const std::vector<Point3> inside = points_in_box(bundle.scene.points, d.box);
    embedded.push_back({d.box, embed(*model, feature_extract(inside, d.box))});
  }
  const std::vector<std::string>& names =
      model->class_names.empty() ? set.class_names : model->class_names;
  return score_detections(embedded, Prototypes(model->classes), model->kind, names);
}

OpenSetResult run_open_set(const SceneBundle& bundle, std::span<const Detection> scored,
                           const PipelineConfig& cfg, ResultMode mode) {
  if (mode == ResultMode::kNaive) return run_naive(scored, cfg);
  return run_mluc(bundle.scene.points, scored, cfg);
}

EvalScene make_eval_scene(const Scene& scene, const OpenSetResult& result) {
  EvalScene e;
  e.scene_id = scene.scene_id;
  e.gt = scene.gt_boxes;
  for (const Detection& d : result.known) e.known.push_back({d.box, d.naive_score});
  for (const UnknownBox& u : result.unknown) e.unknown.push_back({u.box, u.score});
  return e;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

json diagnostics_json(const Diagnostics& d) {
  return {{"proposals", d.proposals},
          {"skipped_no_point", d.skipped_no_point},
          {"skipped_empty_region", d.skipped_empty_region},
          {"dropped_small_clusters", d.dropped_small_clusters},
          {"suppressed_by_nms", d.suppressed_by_nms}};
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create directory " + dir.string());
  }
}

fs::path sidecar_manifest(const fs::path& file) {
  return fs::path(file.string() + ".manifest.json");
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
  std::uint64_t seed = 0;
  std::size_t scenes = 1;
  std::string out;
  double unknown_ratio = 0.3;
  std::size_t density = 7;
  double sigma = 0.3;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  SynthConfig cfg;
  cfg.seed = a.seed;
  cfg.scenes = a.scenes;
  cfg.unknown_ratio = a.unknown_ratio;
  if (a.density == 0) throw UsageError("--density must be at least 1");
  cfg.objects_max = a.density;
  cfg.objects_min = std::min(cfg.objects_min, a.density);
  cfg.sigma = a.sigma;
  cfg.validate();
  ensure_directory(a.out);

  const std::vector<SynthScene> scenes = synth_generate(cfg);
  const fs::path dir(a.out);
  std::vector<std::string> outputs(2 * scenes.size());
  parallel_for(scenes.size(), 0, [&](std::size_t i) {
    const fs::path scene_file = dir / (scenes[i].scene.scene_id + ".json");
    const fs::path det_file = detections_path_for(scene_file);
    save_scene(scenes[i].scene, scene_file);
    write_text_file(det_file, detections_to_json(scenes[i].detections));
    outputs[2 * i] = scene_file.string();
    outputs[2 * i + 1] = det_file.string();
  });

  RunManifest m;
  m.command = "synth";
  m.config = {{"seed", a.seed},
              {"scenes", a.scenes},
              {"out", a.out},
              {"unknown_ratio", a.unknown_ratio},
              {"density", a.density},
              {"sigma", a.sigma},
              {"objects_min", cfg.objects_min},
              {"classes", cfg.class_names()}};
  m.outputs = outputs;
  m.duration_seconds = seconds_since(start);
  write_text_file(dir / "manifest.json", m.to_json());
  out << fmt::format("wrote {} scenes to {}\n", scenes.size(), a.out);
  return kOk;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string head = "metric";
  int epochs = 50;
  double lr = 0.003;
  std::size_t batch = 4;
  std::size_t hidden = 32;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  const HeadKind kind = head_kind_from_string(a.head);
  TrainConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.hidden = a.hidden;
  cfg.seed = a.seed;
  cfg.validate();

  const std::vector<SceneBundle> bundles = load_scene_dir(a.data);
  std::vector<std::string> classes;
  for (const SceneBundle& b : bundles) {
    if (b.detections) {
      classes = b.detections->class_names;
      break;
    }
  }
  if (classes.empty()) {
    std::set<std::string> seen;
    for (const SceneBundle& b : bundles) {
      for (const Box7& g : b.scene.gt_boxes) {
        if (g.label != kUnknownLabel) seen.insert(g.label);
      }
    }
    classes.assign(seen.begin(), seen.end());
  }
  std::map<std::string, std::size_t> class_index;
  for (std::size_t i = 0; i < classes.size(); ++i) class_index[classes[i]] = i;

  std::vector<TrainSample> samples;
  std::vector<std::string> inputs;
  for (const SceneBundle& b : bundles) {
    inputs.push_back(b.file.string());
    for (const Box7& g : b.scene.gt_boxes) {
      const auto it = class_index.find(g.label);
      if (it == class_index.end()) continue;
      samples.push_back({feature_extract(points_in_box(b.scene.points, g), g), it->second});
    }
  }
  if (samples.empty() || classes.size() < 2) {
    throw std::runtime_error("no labelled known objects in " + a.data);
  }

  TrainResult result = train(samples, cfg, kind, classes.size());
  result.model.class_names = classes;
  write_text_file(a.out, save_model(result.model));

  RunManifest m;
  m.command = "train";
  m.config = {{"data", a.data},     {"head", to_string(kind)}, {"epochs", a.epochs},
              {"lr", a.lr},         {"batch", a.batch},        {"hidden", a.hidden},
              {"seed", a.seed},     {"out", a.out},            {"beta1", cfg.beta1},
              {"beta2", cfg.beta2}, {"epsilon", cfg.epsilon},  {"classes", classes}};
  m.inputs = inputs;
  m.outputs = {a.out};
  m.duration_seconds = seconds_since(start);
  m.diagnostics = {{"samples", samples.size()}};
  m.extra = {{"epoch_losses", result.epoch_losses},
             {"final_loss", mean_loss(result.model, samples)}};
  write_text_file(sidecar_manifest(a.out), m.to_json());
  out << fmt::format("trained {} head on {} samples\n", to_string(kind), samples.size());
  return kOk;
}

// ---- shared open-set options ---------------------------------------------

struct OpenSetArgs {
  std::string model;
  std::string scenes;
  std::string cluster_config;
  double nms_iou = 0.1;
  std::string seed_pick = "center_nearest";
  std::uint64_t rng_seed = 0;
};

void add_open_set_options(CLI::App* cmd, OpenSetArgs& a) {
  cmd->add_option("--model", a.model, "Head model file (default: sidecar embeddings)");
  cmd->add_option("--scenes", a.scenes, "Scene directory")->required();
  cmd->add_option("--cluster-config", a.cluster_config, "Clustering parameters (JSON)");
  cmd->add_option("--nms-iou", a.nms_iou, "Unknown-box suppression IoU");
  cmd->add_option("--seed-pick", a.seed_pick, "center_nearest or random");
  cmd->add_option("--rng-seed", a.rng_seed, "Seed for random seed picks");
}

std::optional<HeadModel> load_optional_model(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_model(read_text_file(path));
}

PipelineConfig pipeline_config(const OpenSetArgs& a) {
  PipelineConfig cfg;
  if (!a.cluster_config.empty()) {
    cfg.cluster = cluster_config_from_json(read_text_file(a.cluster_config));
  }
  cfg.nms_iou = a.nms_iou;
  cfg.seed_pick = seed_pick_from_string(a.seed_pick);
  cfg.rng_seed = a.rng_seed;
  cfg.threads = 1;  // scenes already run in parallel
  return cfg;
}

json open_set_config_json(const OpenSetArgs& a, const PipelineConfig& cfg) {
  return {{"model", a.model.empty() ? json(nullptr) : json(a.model)},
          {"scenes", a.scenes},
          {"cluster", cluster_config_to_json(cfg.cluster)},
          {"nms_iou", cfg.nms_iou},
          {"seed_pick", to_string(cfg.seed_pick)},
          {"rng_seed", cfg.rng_seed},
          {"min_extent", cfg.min_extent}};
}

// ---- detect --------------------------------------------------------------

struct DetectArgs {
  OpenSetArgs common;
  std::optional<double> lambda_eds;
  bool naive = false;
  std::optional<double> lambda_naive;
  std::string out;
};

int cmd_detect(const DetectArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  if (a.naive && a.lambda_eds) throw UsageError("--lambda-eds and --naive are exclusive");
  if (a.naive && !a.lambda_naive) throw UsageError("--naive requires --lambda-naive");
  if (!a.naive && a.lambda_naive) throw UsageError("--lambda-naive requires --naive");
  if (!a.naive && !a.lambda_eds) throw UsageError("give --lambda-eds or --naive");
  const ResultMode mode = a.naive ? ResultMode::kNaive : ResultMode::kMluc;

  PipelineConfig cfg = pipeline_config(a.common);
  if (a.lambda_eds) cfg.lambda_eds = *a.lambda_eds;
  if (a.lambda_naive) cfg.lambda_naive = *a.lambda_naive;
  cfg.validate();
  const std::optional<HeadModel> model = load_optional_model(a.common.model);
  if (model && model->kind == HeadKind::kSoftmax && mode == ResultMode::kMluc) {
    throw UsageError("the distance-sum pipeline needs a metric head");
  }

  const std::vector<SceneBundle> bundles = load_scene_dir(a.common.scenes);
  ensure_directory(a.out);
  const fs::path dir(a.out);
  std::vector<Diagnostics> diag(bundles.size());
  std::vector<std::string> outputs(bundles.size());
  parallel_for(bundles.size(), 0, [&](std::size_t i) {
    const SceneBundle& b = bundles[i];
    const std::vector<Detection> scored = scored_detections(b, model ? &*model : nullptr);
    ResultDocument doc;
    doc.scene_id = b.scene.scene_id;
    doc.mode = mode;
    doc.class_names = model && !model->class_names.empty() ? model->class_names
                                                           : b.detections->class_names;
    doc.result = run_open_set(b, scored, cfg, mode);
    diag[i] = doc.result.diagnostics;
    const fs::path file = dir / (b.scene.scene_id + ".result.json");
    write_text_file(file, result_to_json(doc));
    outputs[i] = file.string();
  });

  Diagnostics total;
  json skipped = json::array();
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    total += diag[i];
    if (diag[i].skipped() > 0) {
      skipped.push_back({{"scene_id", bundles[i].scene.scene_id},
                         {"skipped_no_point", diag[i].skipped_no_point},
                         {"skipped_empty_region", diag[i].skipped_empty_region}});
    }
  }

  RunManifest m;
  m.command = "detect";
  m.config = open_set_config_json(a.common, cfg);
  m.config["mode"] = mode == ResultMode::kNaive ? "naive" : "mluc";
  m.config["lambda_eds"] = cfg.lambda_eds;
  m.config["lambda_naive"] = cfg.lambda_naive;
  m.config["out"] = a.out;
  for (const SceneBundle& b : bundles) m.inputs.push_back(b.file.string());
  if (model) m.inputs.push_back(a.common.model);
  m.outputs = outputs;
  m.duration_seconds = seconds_since(start);
  m.diagnostics = diagnostics_json(total);
  m.diagnostics["scenes_with_skips"] = skipped;
  write_text_file(dir / "manifest.json", m.to_json());

  out << fmt::format("{} scenes, {} proposals, {} skipped\n", bundles.size(),
                     total.proposals, total.skipped());
  return total.skipped() > 0 ? kDiagnostics : kOk;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string gt;
  std::string det;
  std::string iou_config;
  std::string report;
};

EvalConfig load_eval_config(const std::string& path) {
  if (path.empty()) return EvalConfig{};
  return EvalConfig::from_json(read_text_file(path));
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  const EvalConfig cfg = load_eval_config(a.iou_config);
  const std::vector<SceneBundle> bundles = load_scene_dir(a.gt);
  const std::vector<fs::path> det_files = list_result_files(a.det);

  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    if (!by_id.emplace(bundles[i].scene.scene_id, i).second) {
      throw std::runtime_error("duplicate ground-truth scene id '" +
                               bundles[i].scene.scene_id + "'");
    }
  }
  std::vector<ResultDocument> docs(det_files.size());
  parallel_for(det_files.size(), 0, [&](std::size_t i) {
    try {
      docs[i] = result_from_json(read_text_file(det_files[i]));
    } catch (const DocumentError& e) {
      throw std::runtime_error(det_files[i].string() + ": malformed document at " +
                               e.what());
    }
  });

  std::vector<std::string> unmatched;
  std::vector<const OpenSetResult*> result_for(bundles.size(), nullptr);
  for (const ResultDocument& d : docs) {
    const auto it = by_id.find(d.scene_id);
    if (it == by_id.end()) {
      unmatched.push_back(d.scene_id);
      continue;
    }
    if (result_for[it->second]) {
      throw std::runtime_error("duplicate detection scene id '" + d.scene_id + "'");
    }
    result_for[it->second] = &d.result;
  }
  if (!unmatched.empty()) {
    throw std::runtime_error("detections for scene ids missing from ground truth: " +
                             fmt::format("{}", fmt::join(unmatched, ", ")));
  }

  const OpenSetResult empty;
  std::vector<EvalScene> scenes;
  scenes.reserve(bundles.size());
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    scenes.push_back(make_eval_scene(bundles[i].scene, result_for[i] ? *result_for[i] : empty));
  }
  const EvalReport report = evaluate(scenes, cfg);
  write_text_file(a.report, report.to_json());

  RunManifest m;
  m.command = "eval";
  m.config = {{"gt", a.gt},
              {"det", a.det},
              {"iou_config", a.iou_config.empty() ? json(nullptr) : json(a.iou_config)},
              {"report", a.report},
              {"eval", json::parse(cfg.to_json())}};
  for (const SceneBundle& b : bundles) m.inputs.push_back(b.file.string());
  for (const fs::path& f : det_files) m.inputs.push_back(f.string());
  m.outputs = {a.report};
  m.duration_seconds = seconds_since(start);
  m.diagnostics = {{"warnings", report.warnings}};
  write_text_file(sidecar_manifest(a.report), m.to_json());

  out << fmt::format("mAP_known {:.2f}  AP_unknown {:.2f}  recall_unknown {:.2f}  "
                     "mAP_harm {:.2f}\n",
                     report.map_known, report.ap_unknown, report.recall_unknown,
                     report.map_harm);
  return kOk;
}

// ---- sweep ---------------------------------------------------------------

struct SweepArgs {
  OpenSetArgs common;
  std::string thresholds;
  std::string iou_config;
  bool naive = false;
  std::string out;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  std::vector<double> thresholds;
  try {
    thresholds = parse_threshold_range(a.thresholds);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const ResultMode mode = a.naive ? ResultMode::kNaive : ResultMode::kMluc;
  PipelineConfig base = pipeline_config(a.common);
  base.validate();
  const EvalConfig eval_cfg = load_eval_config(a.iou_config);
  const std::optional<HeadModel> model = load_optional_model(a.common.model);
  if (model && model->kind == HeadKind::kSoftmax && mode == ResultMode::kMluc) {
    throw UsageError("the distance-sum pipeline needs a metric head");
  }

  const std::vector<SceneBundle> bundles = load_scene_dir(a.common.scenes);
  std::vector<std::vector<Detection>> scored(bundles.size());
  parallel_for(bundles.size(), 0, [&](std::size_t i) {
    scored[i] = scored_detections(bundles[i], model ? &*model : nullptr);
  });

  Diagnostics total;
  auto evaluate_at = [&](double lambda) {
    PipelineConfig cfg = base;
    (mode == ResultMode::kNaive ? cfg.lambda_naive : cfg.lambda_eds) = lambda;
    cfg.validate();
    std::vector<EvalScene> scenes(bundles.size());
    std::vector<Diagnostics> diag(bundles.size());
    parallel_for(bundles.size(), 0, [&](std::size_t i) {
      const OpenSetResult r = run_open_set(bundles[i], scored[i], cfg, mode);
      diag[i] = r.diagnostics;
      scenes[i] = make_eval_scene(bundles[i].scene, r);
    });
    for (const Diagnostics& d : diag) total += d;
    return evaluate(scenes, eval_cfg);
  };

  const double closed = evaluate_at(0.0).map_known;
  const SweepResult sweep =
      sweep_thresholds(thresholds, evaluate_at, closed, eval_cfg.max_degradation);
  write_text_file(a.out, format_sweep_csv(sweep));

  RunManifest m;
  m.command = "sweep";
  m.config = open_set_config_json(a.common, base);
  m.config["mode"] = mode == ResultMode::kNaive ? "naive" : "mluc";
  m.config["thresholds"] = a.thresholds;
  m.config["iou_config"] = a.iou_config.empty() ? json(nullptr) : json(a.iou_config);
  m.config["eval"] = json::parse(eval_cfg.to_json());
  m.config["out"] = a.out;
  for (const SceneBundle& b : bundles) m.inputs.push_back(b.file.string());
  if (model) m.inputs.push_back(a.common.model);
  m.outputs = {a.out};
  m.duration_seconds = seconds_since(start);
  m.diagnostics = diagnostics_json(total);
  const SweepPoint& op = sweep.points[sweep.chosen];
  m.extra = {{"operating_threshold", op.threshold},
             {"fallback", sweep.fallback},
             {"closed_set_map_known", sweep.closed_set_map_known}};
  write_text_file(sidecar_manifest(a.out), m.to_json());

  out << fmt::format("operating point {:.4f}: mAP_harm {:.2f}{}\n", op.threshold,
                     op.map_harm, sweep.fallback ? " (fallback)" : "");
  return kOk;
}

// ---- plot ----------------------------------------------------------------

struct PlotArgs {
  std::string scene;
  std::string det;
  std::string out;
};

int cmd_plot(const PlotArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  const Scene scene = load_scene(a.scene);
  std::optional<ResultDocument> doc;
  if (!a.det.empty()) {
    try {
      doc = result_from_json(read_text_file(a.det));
    } catch (const DocumentError& e) {
      throw std::runtime_error(a.det + ": malformed document at " + e.what());
    }
  }
  write_text_file(a.out, render_svg(scene, doc ? &*doc : nullptr));

  RunManifest m;
  m.command = "plot";
  m.config = {{"scene", a.scene},
              {"det", a.det.empty() ? json(nullptr) : json(a.det)},
              {"out", a.out}};
  m.inputs = {a.scene};
  if (!a.det.empty()) m.inputs.push_back(a.det);
  m.outputs = {a.out};
  m.duration_seconds = seconds_since(start);
  write_text_file(sidecar_manifest(a.out), m.to_json());
  out << "wrote " << a.out << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Open-set 3D detection toolkit", "osd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate synthetic scenes");
  c_synth->add_option("--seed", synth.seed, "Random seed");
  c_synth->add_option("--scenes", synth.scenes, "Number of scenes")->required();
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--unknown-ratio", synth.unknown_ratio, "Probability an object is unknown");
  c_synth->add_option("--density", synth.density, "Maximum objects per scene");
  c_synth->add_option("--sigma", synth.sigma, "Embedding noise");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a detection head");
  c_train->add_option("--data", tr.data, "Training scene directory")->required();
  c_train->add_option("--head", tr.head, "metric or softmax")
      ->check(CLI::IsMember({"metric", "softmax"}));
  c_train->add_option("--epochs", tr.epochs, "Epochs")->check(CLI::NonNegativeNumber);
  c_train->add_option("--lr", tr.lr, "Learning rate");
  c_train->add_option("--batch", tr.batch, "Batch size");
  c_train->add_option("--hidden", tr.hidden, "Hidden units");
  c_train->add_option("--seed", tr.seed, "Initialization and shuffle seed");
  c_train->add_option("--out", tr.out, "Model file")->required();

  DetectArgs det;
  auto* c_detect = app.add_subcommand("detect", "Open-set inference");
  add_open_set_options(c_detect, det.common);
  c_detect->add_option("--lambda-eds", det.lambda_eds, "Distance-sum threshold");
  c_detect->add_flag("--naive", det.naive, "Confidence-threshold baseline");
  c_detect->add_option("--lambda-naive", det.lambda_naive, "Confidence threshold");
  c_detect->add_option("--out", det.out, "Output directory")->required();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Score detections");
  c_eval->add_option("--gt", ev.gt, "Ground-truth scene directory")->required();
  c_eval->add_option("--det", ev.det, "Result directory")->required();
  c_eval->add_option("--iou-config", ev.iou_config, "Evaluation config (JSON)");
  c_eval->add_option("--report", ev.report, "Report file")->required();

  SweepArgs sw;
  auto* c_sweep = app.add_subcommand("sweep", "Threshold sweep");
  add_open_set_options(c_sweep, sw.common);
  c_sweep->add_option("--thresholds", sw.thresholds, "a:b:step")->required();
  c_sweep->add_option("--iou-config", sw.iou_config, "Evaluation config (JSON)");
  c_sweep->add_flag("--naive", sw.naive, "Sweep the confidence threshold instead");
  c_sweep->add_option("--out", sw.out, "CSV file")->required();

  PlotArgs pl;
  auto* c_plot = app.add_subcommand("plot", "Bird's-eye-view SVG");
  c_plot->add_option("--scene", pl.scene, "Scene file")->required();
  c_plot->add_option("--det", pl.det, "Result file");
  c_plot->add_option("--out", pl.out, "SVG file")->required();

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.push_back("osd");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (c_synth->parsed()) return cmd_synth(synth, out);
    if (c_train->parsed()) return cmd_train(tr, out);
    if (c_detect->parsed()) return cmd_detect(det, out);
    if (c_eval->parsed()) return cmd_eval(ev, out);
    if (c_sweep->parsed()) return cmd_sweep(sw, out);
    if (c_plot->parsed()) return cmd_plot(pl, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kBadInput;
  } catch (const DocumentError& e) {
    err << "malformed document at " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  }
  return kBadInput;
}

}  // namespace osd::cli
