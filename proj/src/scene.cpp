#include "osd/scene.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

namespace osd {
namespace {

using nlohmann::json;

constexpr const char* kSceneFormat = "osd-scene";
constexpr const char* kDetectionFormat = "osd-detections";
constexpr const char* kResultFormat = "osd-result";

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DocumentError("byte " + std::to_string(e.byte), e.what());
  }
}

const json& member(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw DocumentError(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw DocumentError(path + "/" + key, "missing field");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw DocumentError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw DocumentError(path, "value is not finite");
  return d;
}

std::string string_field(const json& obj, const std::string& key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_string()) throw DocumentError(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

const json& array_field(const json& obj, const std::string& key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_array()) throw DocumentError(path + "/" + key, "expected an array");
  return v;
}

std::vector<double> number_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw DocumentError(path, "expected an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number(v[i], path + "/" + std::to_string(i)));
  }
  return out;
}

void check_format(const json& doc, const char* format) {
  if (!doc.is_object()) throw DocumentError("/", "expected an object");
  const auto it = doc.find("format");
  if (it != doc.end() && (!it->is_string() || it->get<std::string>() != format)) {
    throw DocumentError("/format", std::string("expected '") + format + "'");
  }
}

json box_json(const Box7& b) {
  json j;
  j["label"] = b.label;
  j["cx"] = b.cx;
  j["cy"] = b.cy;
  j["cz"] = b.cz;
  j["w"] = b.w;
  j["l"] = b.l;
  j["h"] = b.h;
  j["yaw"] = b.yaw;
  return j;
}

Box7 box_from(const json& j, const std::string& path) {
  Box7 b;
  b.label = string_field(j, "label", path);
  b.cx = number(member(j, "cx", path), path + "/cx");
  b.cy = number(member(j, "cy", path), path + "/cy");
  b.cz = number(member(j, "cz", path), path + "/cz");
  b.w = number(member(j, "w", path), path + "/w");
  b.l = number(member(j, "l", path), path + "/l");
  b.h = number(member(j, "h", path), path + "/h");
  b.yaw = number(member(j, "yaw", path), path + "/yaw");
  if (!(b.w > 0.0)) throw DocumentError(path + "/w", "box extent must be positive");
  if (!(b.l > 0.0)) throw DocumentError(path + "/l", "box extent must be positive");
  if (!(b.h > 0.0)) throw DocumentError(path + "/h", "box extent must be positive");
  if (std::abs(b.yaw) > std::numbers::pi) {
    throw DocumentError(path + "/yaw", "yaw must lie in (-pi, pi]");
  }
  return b;
}

std::vector<std::string> string_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw DocumentError(path, "expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) {
      throw DocumentError(path + "/" + std::to_string(i), "expected a string");
    }
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

std::string require_id(const json& doc) {
  std::string id = string_field(doc, "scene_id", "");
  if (id.empty()) throw DocumentError("/scene_id", "scene id must be non-empty");
  return id;
}

}  // namespace

DocumentError::DocumentError(const std::string& where, const std::string& what)
    : std::runtime_error(where + ": " + what), where_(where) {}

void Scene::validate() const {
  if (scene_id.empty()) throw std::invalid_argument("scene id must be non-empty");
  for (const Point3& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw std::invalid_argument("scene point is not finite");
    }
  }
  for (const Box7& b : gt_boxes) validate_box(b);
  if (!point_object_ids.empty() && point_object_ids.size() != points.size()) {
    throw std::invalid_argument("point object ids do not match point count");
  }
}

std::string scene_to_json(const Scene& s) {
  s.validate();
  json doc;
  doc["format"] = kSceneFormat;
  doc["scene_id"] = s.scene_id;
  json pts = json::array();
  for (const Point3& p : s.points) pts.push_back({p.x, p.y, p.z});
  doc["points"] = std::move(pts);
  if (!s.point_object_ids.empty()) doc["point_object_ids"] = s.point_object_ids;
  json boxes = json::array();
  for (const Box7& b : s.gt_boxes) boxes.push_back(box_json(b));
  doc["boxes"] = std::move(boxes);
  return doc.dump() + "\n";
}

Scene scene_from_json(const std::string& text) {
  const json doc = parse_document(text);
  check_format(doc, kSceneFormat);
  Scene s;
  s.scene_id = require_id(doc);
  const json& pts = array_field(doc, "points", "");
  s.points.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::string path = "/points/" + std::to_string(i);
    const std::vector<double> xyz = number_array(pts[i], path);
    if (xyz.size() != 3) throw DocumentError(path, "expected [x, y, z]");
    s.points.push_back({xyz[0], xyz[1], xyz[2]});
  }
  const json& boxes = array_field(doc, "boxes", "");
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    s.gt_boxes.push_back(box_from(boxes[i], "/boxes/" + std::to_string(i)));
  }
  if (doc.contains("point_object_ids")) {
    const json& ids = array_field(doc, "point_object_ids", "");
    if (ids.size() != s.points.size()) {
      throw DocumentError("/point_object_ids", "length differs from points");
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!ids[i].is_number_integer()) {
        throw DocumentError("/point_object_ids/" + std::to_string(i), "expected an integer");
      }
      s.point_object_ids.push_back(ids[i].get<int>());
    }
  }
  return s;
}

std::string detections_to_json(const DetectionSet& d) {
  json doc;
  doc["format"] = kDetectionFormat;
  doc["scene_id"] = d.scene_id;
  doc["classes"] = d.class_names;
  json dets = json::array();
  for (const ClosedSetDetection& c : d.detections) {
    json j = box_json(c.box);
    j["embedding"] = c.embedding;
    dets.push_back(std::move(j));
  }
  doc["detections"] = std::move(dets);
  return doc.dump(1) + "\n";
}

DetectionSet detections_from_json(const std::string& text) {
  const json doc = parse_document(text);
  check_format(doc, kDetectionFormat);
  DetectionSet d;
  d.scene_id = require_id(doc);
  d.class_names = string_array(member(doc, "classes", ""), "/classes");
  const json& dets = array_field(doc, "detections", "");
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const std::string path = "/detections/" + std::to_string(i);
    ClosedSetDetection c;
    c.box = box_from(dets[i], path);
    c.embedding = number_array(member(dets[i], "embedding", path), path + "/embedding");
    d.detections.push_back(std::move(c));
  }
  return d;
}

std::string result_to_json(const ResultDocument& r) {
  json doc;
  doc["format"] = kResultFormat;
  doc["scene_id"] = r.scene_id;
  doc["mode"] = r.mode == ResultMode::kMluc ? "mluc" : "naive";
  doc["classes"] = r.class_names;
  json known = json::array();
  for (const Detection& d : r.result.known) {
    json j = box_json(d.box);
    j["embedding"] = d.embedding;
    j["probs"] = d.probs;
    j["naive_score"] = d.naive_score;
    j["eds"] = d.eds_score;
    known.push_back(std::move(j));
  }
  doc["known"] = std::move(known);
  json unknown = json::array();
  for (const UnknownBox& u : r.result.unknown) {
    json j = box_json(u.box);
    j["score"] = u.score;
    unknown.push_back(std::move(j));
  }
  doc["unknown"] = std::move(unknown);
  const Diagnostics& g = r.result.diagnostics;
  doc["diagnostics"] = {{"proposals", g.proposals},
                        {"skipped_no_point", g.skipped_no_point},
                        {"skipped_empty_region", g.skipped_empty_region},
                        {"dropped_small_clusters", g.dropped_small_clusters},
                        {"suppressed_by_nms", g.suppressed_by_nms}};
  return doc.dump(1) + "\n";
}

ResultDocument result_from_json(const std::string& text) {
  const json doc = parse_document(text);
  check_format(doc, kResultFormat);
  ResultDocument r;
  r.scene_id = require_id(doc);
  const std::string mode = string_field(doc, "mode", "");
  if (mode == "mluc") {
    r.mode = ResultMode::kMluc;
  } else if (mode == "naive") {
    r.mode = ResultMode::kNaive;
  } else {
    throw DocumentError("/mode", "expected 'mluc' or 'naive'");
  }
  if (doc.contains("classes")) r.class_names = string_array(doc.at("classes"), "/classes");
  const json& known = array_field(doc, "known", "");
  for (std::size_t i = 0; i < known.size(); ++i) {
    const std::string path = "/known/" + std::to_string(i);
    Detection d;
    d.box = box_from(known[i], path);
    d.embedding = number_array(member(known[i], "embedding", path), path + "/embedding");
    d.probs = number_array(member(known[i], "probs", path), path + "/probs");
    d.naive_score = number(member(known[i], "naive_score", path), path + "/naive_score");
    d.eds_score = number(member(known[i], "eds", path), path + "/eds");
    r.result.known.push_back(std::move(d));
  }
  const json& unknown = array_field(doc, "unknown", "");
  for (std::size_t i = 0; i < unknown.size(); ++i) {
    const std::string path = "/unknown/" + std::to_string(i);
    UnknownBox u;
    u.box = box_from(unknown[i], path);
    u.score = number(member(unknown[i], "score", path), path + "/score");
    r.result.unknown.push_back(std::move(u));
  }
  if (doc.contains("diagnostics")) {
    const json& g = doc.at("diagnostics");
    Diagnostics& out = r.result.diagnostics;
    out.proposals = g.value("proposals", std::size_t{0});
    out.skipped_no_point = g.value("skipped_no_point", std::size_t{0});
    out.skipped_empty_region = g.value("skipped_empty_region", std::size_t{0});
    out.dropped_small_clusters = g.value("dropped_small_clusters", std::size_t{0});
    out.suppressed_by_nms = g.value("suppressed_by_nms", std::size_t{0});
  }
  return r;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void save_scene(const Scene& s, const std::filesystem::path& path) {
  write_text_file(path, scene_to_json(s));
}

Scene load_scene(const std::filesystem::path& path) {
  return scene_from_json(read_text_file(path));
}

}  // namespace osd
