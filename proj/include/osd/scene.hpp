#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "osd/geometry.hpp"
#include "osd/pipeline.hpp"

namespace osd {

struct Scene {
  std::string scene_id;
  std::vector<Point3> points;
  std::vector<Box7> gt_boxes;
  // Ground-truth object index per point (-1 for none); empty when unknown.
  std::vector<int> point_object_ids;

  void validate() const;
  friend bool operator==(const Scene&, const Scene&) = default;
};

// Closed-set detector output for one scene.
struct DetectionSet {
  std::string scene_id;
  std::vector<std::string> class_names;
  std::vector<ClosedSetDetection> detections;

  friend bool operator==(const DetectionSet&, const DetectionSet&) = default;
};

enum class ResultMode { kMluc, kNaive };

struct ResultDocument {
  std::string scene_id;
  ResultMode mode = ResultMode::kMluc;
  std::vector<std::string> class_names;
  OpenSetResult result;

  friend bool operator==(const ResultDocument&, const ResultDocument&) = default;
};

// Malformed document. `where` is a byte offset ("byte 17") for syntax errors
// or a JSON pointer ("/boxes/3/w") for content errors.
class DocumentError : public std::runtime_error {
 public:
  DocumentError(const std::string& where, const std::string& what);
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

std::string scene_to_json(const Scene& s);
Scene scene_from_json(const std::string& text);

std::string detections_to_json(const DetectionSet& d);
DetectionSet detections_from_json(const std::string& text);

std::string result_to_json(const ResultDocument& r);
ResultDocument result_from_json(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

void save_scene(const Scene& s, const std::filesystem::path& path);
Scene load_scene(const std::filesystem::path& path);

}  // namespace osd
