#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "osd/cli.hpp"

namespace osd::cli {

using nlohmann::json;

std::string RunManifest::to_json() const {
  json doc;
  doc["format"] = "osd-manifest";
  doc["command"] = command;
  doc["tool_version"] = kToolVersion;
  doc["config"] = config;
  doc["inputs"] = inputs;
  doc["outputs"] = outputs;
  doc["duration_seconds"] = duration_seconds;
  doc["diagnostics"] = diagnostics;
  if (!extra.empty()) doc["extra"] = extra;
  return doc.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    RunManifest m;
    m.command = doc.at("command").get<std::string>();
    m.config = doc.at("config");
    m.inputs = doc.at("inputs").get<std::vector<std::string>>();
    m.outputs = doc.at("outputs").get<std::vector<std::string>>();
    m.duration_seconds = doc.at("duration_seconds").get<double>();
    m.diagnostics = doc.at("diagnostics");
    if (doc.contains("extra")) m.extra = doc.at("extra");
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("manifest: ") + e.what());
  }
}

std::vector<double> parse_threshold_range(const std::string& range) {
  const auto first = range.find(':');
  const auto second = first == std::string::npos ? first : range.find(':', first + 1);
  if (second == std::string::npos) {
    throw std::invalid_argument("threshold range must look like a:b:step");
  }
  double a, b, step;
  try {
    std::size_t used = 0;
    const std::string sa = range.substr(0, first);
    const std::string sb = range.substr(first + 1, second - first - 1);
    const std::string ss = range.substr(second + 1);
    a = std::stod(sa, &used);
    if (used != sa.size()) throw std::invalid_argument(sa);
    b = std::stod(sb, &used);
    if (used != sb.size()) throw std::invalid_argument(sb);
    step = std::stod(ss, &used);
    if (used != ss.size()) throw std::invalid_argument(ss);
  } catch (const std::exception&) {
    throw std::invalid_argument("threshold range '" + range + "' is not numeric");
  }
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(step)) {
    throw std::invalid_argument("threshold range must be finite");
  }
  if (!(step > 0.0)) throw std::invalid_argument("threshold step must be positive");
  if (a > b) throw std::invalid_argument("threshold range start exceeds its end");
  const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-12)) + 1;
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(a + static_cast<double>(i) * step);
  return out;
}

ClusterConfig cluster_config_from_json(const std::string& text) {
  ClusterConfig cfg;
  try {
    const json doc = json::parse(text);
    if (doc.contains("lambda_theta_deg")) {
      cfg.lambda_theta = doc.at("lambda_theta_deg").get<double>() * M_PI / 180.0;
    }
    cfg.lambda_theta = doc.value("lambda_theta", cfg.lambda_theta);
    cfg.region_radius = doc.value("region_radius", cfg.region_radius);
    cfg.neighbor_radius = doc.value("neighbor_radius", cfg.neighbor_radius);
    if (doc.contains("merge_when")) {
      cfg.merge_when = merge_when_from_string(doc.at("merge_when").get<std::string>());
    }
    cfg.min_cluster_points = doc.value("min_cluster_points", cfg.min_cluster_points);
    if (doc.contains("ground_z") && !doc.at("ground_z").is_null()) {
      cfg.ground_z = doc.at("ground_z").get<double>();
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("cluster config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json cluster_config_to_json(const ClusterConfig& cfg) {
  json j;
  j["lambda_theta"] = cfg.lambda_theta;
  j["region_radius"] = cfg.region_radius;
  j["neighbor_radius"] = cfg.neighbor_radius;
  j["merge_when"] = to_string(cfg.merge_when);
  j["min_cluster_points"] = cfg.min_cluster_points;
  j["ground_z"] = cfg.ground_z ? json(*cfg.ground_z) : json(nullptr);
  return j;
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::filesystem::path> list_matching(const std::filesystem::path& dir,
                                                 bool results) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (!ends_with(name, ".json") || name == "manifest.json") continue;
    const bool is_result = ends_with(name, ".result.json");
    const bool is_aux = ends_with(name, ".dets.json") || ends_with(name, ".manifest.json");
    if (results ? is_result : (!is_result && !is_aux)) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::filesystem::path> list_scene_files(const std::filesystem::path& dir) {
  return list_matching(dir, false);
}

std::vector<std::filesystem::path> list_result_files(const std::filesystem::path& dir) {
  return list_matching(dir, true);
}

std::filesystem::path detections_path_for(const std::filesystem::path& scene_file) {
  std::filesystem::path p = scene_file;
  p.replace_extension(".dets.json");
  return p;
}

}  // namespace osd::cli
