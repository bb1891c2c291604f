#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osd/clustering.hpp"
#include "osd/geometry.hpp"
#include "osd/metric_head.hpp"

namespace osd {

// Raw closed-set detector output: a class-labelled box and the head output
// (embedding for metric heads, logits for softmax heads).
struct ClosedSetDetection {
  Box7 box;
  Embedding embedding;

  friend bool operator==(const ClosedSetDetection&, const ClosedSetDetection&) = default;
};

struct Detection {
  Box7 box;
  Embedding embedding;
  std::vector<double> probs;
  double naive_score = 0.0;
  double eds_score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct UnknownBox {
  Box7 box;
  double score = 0.0;  // box volume

  friend bool operator==(const UnknownBox&, const UnknownBox&) = default;
};

struct Diagnostics {
  std::size_t proposals = 0;
  std::size_t skipped_no_point = 0;
  std::size_t skipped_empty_region = 0;
  std::size_t dropped_small_clusters = 0;
  std::size_t suppressed_by_nms = 0;

  std::size_t skipped() const { return skipped_no_point + skipped_empty_region; }
  Diagnostics& operator+=(const Diagnostics& o);
  friend bool operator==(const Diagnostics&, const Diagnostics&) = default;
};

struct OpenSetResult {
  std::vector<Detection> known;
  std::vector<UnknownBox> unknown;
  Diagnostics diagnostics;

  friend bool operator==(const OpenSetResult&, const OpenSetResult&) = default;
};

enum class SeedPick { kCenterNearest, kRandom };

std::string to_string(SeedPick s);
SeedPick seed_pick_from_string(const std::string& s);

struct PipelineConfig {
  double lambda_eds = 0.0;
  double lambda_naive = 0.0;
  ClusterConfig cluster;
  double nms_iou = 0.1;
  SeedPick seed_pick = SeedPick::kCenterNearest;
  std::uint64_t rng_seed = 0;
  double min_extent = kDefaultMinExtent;
  Point3 sensor_origin;
  // Worker cap for per-proposal clustering; 0 means the process default.
  std::size_t threads = 0;

  void validate() const;
};

// Fills class probabilities, naive confidence, EDS and the argmax class
// label. For softmax heads the embedding holds logits. `class_names` may be
// empty, in which case labels become the zero-based class index.
std::vector<Detection> score_detections(std::span<const ClosedSetDetection> dets,
                                        const Prototypes& protos, HeadKind kind,
                                        std::span<const std::string> class_names = {});

// Detections with eds_score < lambda_eds, in input order.
std::vector<Detection> select_unknown_proposals(std::span<const Detection> dets,
                                                const PipelineConfig& cfg);

// Index of the seed point inside `det.box`, or nullopt when the box holds no
// cloud point. Random picks draw from `rng_seed` mixed with `proposal_index`.
std::optional<std::size_t> pick_seed(const Detection& det,
                                     std::span<const Point3> cloud,
                                     const PipelineConfig& cfg,
                                     std::size_t proposal_index = 0);

// Largest-volume-first greedy suppression.
std::vector<Box7> nms_largest_first(std::span<const Box7> boxes, double iou_threshold);

OpenSetResult run_mluc(std::span<const Point3> cloud, std::span<const Detection> dets,
                       const PipelineConfig& cfg);

OpenSetResult run_naive(std::span<const Detection> dets, const PipelineConfig& cfg);

}  // namespace osd
