#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "osd/geometry.hpp"

namespace osd {

enum class Interpolation { kEleven, kForty, kContinuous };
enum class UnknownScore { kVolume, kConstant };

std::string to_string(Interpolation i);
Interpolation interpolation_from_string(const std::string& s);
std::string to_string(UnknownScore s);
UnknownScore unknown_score_from_string(const std::string& s);

struct ClassThreshold {
  std::string name;
  double iou = 0.5;

  friend bool operator==(const ClassThreshold&, const ClassThreshold&) = default;
};

struct EvalConfig {
  std::vector<ClassThreshold> known_classes = {
      {"car", 0.7}, {"pedestrian", 0.5}, {"cyclist", 0.5}};
  double unknown_iou = 0.1;
  Interpolation interpolation = Interpolation::kForty;
  double max_degradation = 0.10;
  UnknownScore unknown_score = UnknownScore::kVolume;

  // Known classes and thresholds used for the industrial-park dataset.
  static EvalConfig udi();
  // KITTI knowns; van and truck are held out as unknown.
  static EvalConfig kitti();

  void validate() const;
  std::string to_json() const;
  static EvalConfig from_json(const std::string& text);
};

struct ScoredBox {
  Box7 box;
  double score = 0.0;
};

struct MatchResult {
  std::vector<double> scores;  // descending
  std::vector<bool> true_positive;
  std::size_t matched_gt = 0;
};

// Greedy matching in descending score order; each detection takes the
// unmatched ground truth with the highest IoU at or above the threshold.
MatchResult match_detections(std::span<const ScoredBox> dets, std::span<const Box7> gts,
                             double iou_threshold);

// Interpolated AP over the precision-recall curve, in percent.
double average_precision(std::span<const double> scores,
                         const std::vector<bool>& true_positive, std::size_t num_gt,
                         Interpolation interpolation = Interpolation::kForty);

// Harmonic mean of known mAP and unknown AP; 0 when both are 0.
double map_harm(double map_known, double ap_unknown);

// Percentage of unknown ground truths matched (class-agnostic).
double recall_unknown(std::span<const ScoredBox> unknown_dets,
                      std::span<const Box7> unknown_gts, double iou_threshold = 0.1);

struct EvalScene {
  std::string scene_id;
  std::vector<Box7> gt;           // labels: known class names or "unknown"
  std::vector<ScoredBox> known;   // labels are predicted classes
  std::vector<ScoredBox> unknown;
};

struct ClassReport {
  std::string name;
  double ap = 0.0;
  std::size_t num_gt = 0;
  std::size_t num_det = 0;
};

struct EvalReport {
  double map_known = 0.0;
  double ap_unknown = 0.0;
  double recall_unknown = 0.0;
  double map_harm = 0.0;
  std::vector<ClassReport> per_class;
  std::size_t unknown_gt = 0;
  std::size_t unknown_det = 0;
  std::size_t unknown_matched = 0;
  std::vector<std::string> warnings;

  std::string to_json() const;
};

// mAP_known averages AP over known classes that have ground truth.
EvalReport evaluate(std::span<const EvalScene> scenes, const EvalConfig& cfg);

struct SweepPoint {
  double threshold = 0.0;
  double recall_unknown = 0.0;
  double ap_unknown = 0.0;
  double map_known = 0.0;
  double map_harm = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::size_t chosen = 0;
  // True when no point kept known mAP within the allowed degradation.
  bool fallback = false;
  double closed_set_map_known = 0.0;
};

// Evaluates every threshold and picks the best mAP_harm among points whose
// known mAP stays within `max_degradation` of the closed-set value.
SweepResult sweep_thresholds(std::span<const double> thresholds,
                             const std::function<EvalReport(double)>& evaluate_at,
                             double closed_set_map_known, double max_degradation);

// threshold,recall_unknown,ap_unknown,map_known,map_harm rows with four
// decimals, then a '#'-prefixed footer naming the operating point.
std::string format_sweep_csv(const SweepResult& sweep);

}  // namespace osd
