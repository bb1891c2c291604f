#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "osd/eval.hpp"
#include "osd/metric_head.hpp"
#include "osd/pipeline.hpp"
#include "osd/scene.hpp"

namespace osd::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kBadInput = 1, kDiagnostics = 2 };

// Entry point shared by the `osd` binary and the tests. `args` excludes the
// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double duration_seconds = 0.0;
  nlohmann::json diagnostics = nlohmann::json::object();
  nlohmann::json extra = nlohmann::json::object();

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

// a:b:step, inclusive at both ends within 1e-12. Throws on a > b or step <= 0.
std::vector<double> parse_threshold_range(const std::string& range);

ClusterConfig cluster_config_from_json(const std::string& text);
nlohmann::json cluster_config_to_json(const ClusterConfig& cfg);

// Bird's-eye-view drawing of a scene with optional detections.
std::string render_svg(const Scene& scene, const ResultDocument* result);

// Scene documents in a directory (excluding detection, result and manifest
// files), sorted by file name.
std::vector<std::filesystem::path> list_scene_files(const std::filesystem::path& dir);
std::vector<std::filesystem::path> list_result_files(const std::filesystem::path& dir);
std::filesystem::path detections_path_for(const std::filesystem::path& scene_file);

struct SceneBundle {
  std::filesystem::path file;
  Scene scene;
  std::optional<DetectionSet> detections;  // sidecar, when present
};

std::vector<SceneBundle> load_scene_dir(const std::filesystem::path& dir,
                                        std::size_t workers = 0);

// Scored detections for one scene. Without a model the sidecar embeddings
// are read as metric-head outputs; with one, the head runs on per-box
// features. Throws std::runtime_error when the scene has no sidecar.
std::vector<Detection> scored_detections(const SceneBundle& bundle, const HeadModel* model);

OpenSetResult run_open_set(const SceneBundle& bundle, std::span<const Detection> scored,
                           const PipelineConfig& cfg, ResultMode mode);

EvalScene make_eval_scene(const Scene& scene, const OpenSetResult& result);

}  // namespace osd::cli
