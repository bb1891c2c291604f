#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "osd/geometry.hpp"
#include "osd/scene.hpp"

namespace osd {

struct ShapeTemplate {
  std::string name;
  double l_min, l_max;
  double w_min, w_max;
  double h_min, h_max;
  // Known classes a closed-set detector mistakes this shape for (unknown
  // templates only).
  std::vector<std::string> confusable_with;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t scenes = 1;
  std::vector<ShapeTemplate> known = default_known_templates();
  std::vector<ShapeTemplate> unknown = default_unknown_templates();
  std::size_t objects_min = 3;
  std::size_t objects_max = 7;
  double unknown_ratio = 0.3;
  double min_gap = 1.0;             // m, between BEV footprints
  double azimuth_res_deg = 0.2;
  double elevation_res_deg = 0.4;
  double elevation_min_deg = -24.0;
  double elevation_max_deg = 2.0;
  double range_min = 6.0;           // m, object centre
  double range_max = 30.0;
  double ground_z = -1.73;          // sensor sits at the origin
  double sigma = 0.3;               // embedding noise
  double center_jitter = 0.05;      // m, known detections
  double size_jitter = 0.03;        // fraction, known detections
  double yaw_jitter = 0.02;         // rad, known detections
  std::size_t placement_attempts = 400;

  static std::vector<ShapeTemplate> default_known_templates();
  static std::vector<ShapeTemplate> default_unknown_templates();

  void validate() const;
  std::vector<std::string> class_names() const;
};

struct SynthScene {
  Scene scene;
  DetectionSet detections;
};

// Distance along the unit ray `dir` from `origin` to the first hit on the
// surface of `box`, if any (t > 0).
std::optional<double> ray_box_hit(const Point3& origin, const Point3& dir, const Box7& box);

// Distance between two BEV footprints (0 when they overlap).
double footprint_gap(const Box7& a, const Box7& b);

// Deterministic given cfg.seed; scenes are generated in parallel from
// per-scene derived seeds.
std::vector<SynthScene> synth_generate(const SynthConfig& cfg, std::size_t workers = 0);

std::string scene_name(std::size_t index);

}  // namespace osd
