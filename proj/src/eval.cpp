#include "osd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace osd {
namespace {

using nlohmann::json;

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

std::string to_string(Interpolation i) {
  switch (i) {
    case Interpolation::kEleven:
      return "r11";
    case Interpolation::kForty:
      return "r40";
    case Interpolation::kContinuous:
      return "continuous";
  }
  return "r40";
}

Interpolation interpolation_from_string(const std::string& s) {
  if (s == "r11" || s == "11") return Interpolation::kEleven;
  if (s == "r40" || s == "40") return Interpolation::kForty;
  if (s == "continuous") return Interpolation::kContinuous;
  throw std::invalid_argument("unknown interpolation '" + s + "'");
}

std::string to_string(UnknownScore s) {
  return s == UnknownScore::kVolume ? "volume" : "constant";
}

UnknownScore unknown_score_from_string(const std::string& s) {
  if (s == "volume") return UnknownScore::kVolume;
  if (s == "constant") return UnknownScore::kConstant;
  throw std::invalid_argument("unknown unknown-score mode '" + s + "'");
}

EvalConfig EvalConfig::udi() {
  EvalConfig c;
  c.known_classes = {{"car", 0.5}, {"pedestrian", 0.5}, {"cyclist", 0.5}, {"truck", 0.7}};
  return c;
}

EvalConfig EvalConfig::kitti() {
  EvalConfig c;
  c.known_classes = {{"car", 0.7}, {"pedestrian", 0.5}, {"cyclist", 0.5}};
  return c;
}

void EvalConfig::validate() const {
  for (const ClassThreshold& c : known_classes) {
    if (!(c.iou > 0.0 && c.iou <= 1.0)) {
      throw std::invalid_argument("IoU threshold for '" + c.name + "' must lie in (0, 1]");
    }
    if (c.name == kUnknownLabel) {
      throw std::invalid_argument("'unknown' cannot be a known class");
    }
  }
  if (!(unknown_iou > 0.0 && unknown_iou <= 1.0)) {
    throw std::invalid_argument("unknown IoU threshold must lie in (0, 1]");
  }
  if (!(max_degradation >= 0.0 && max_degradation < 1.0)) {
    throw std::invalid_argument("max degradation must lie in [0, 1)");
  }
}

std::string EvalConfig::to_json() const {
  json doc;
  json classes = json::object();
  for (const ClassThreshold& c : known_classes) classes[c.name] = c.iou;
  json order = json::array();
  for (const ClassThreshold& c : known_classes) order.push_back(c.name);
  doc["classes"] = classes;
  doc["class_order"] = order;
  doc["unknown"] = unknown_iou;
  doc["interpolation"] = to_string(interpolation);
  doc["degradation"] = max_degradation;
  doc["unknown_score"] = to_string(unknown_score);
  return doc.dump(2);
}

EvalConfig EvalConfig::from_json(const std::string& text) {
  EvalConfig cfg;
  try {
    const json doc = json::parse(text);
    if (doc.contains("classes")) {
      cfg.known_classes.clear();
      const json& classes = doc.at("classes");
      std::vector<std::string> order;
      if (doc.contains("class_order")) {
        order = doc.at("class_order").get<std::vector<std::string>>();
      } else {
        for (auto it = classes.begin(); it != classes.end(); ++it) order.push_back(it.key());
      }
      for (const std::string& name : order) {
        cfg.known_classes.push_back({name, classes.at(name).get<double>()});
      }
    }
    cfg.unknown_iou = doc.value("unknown", cfg.unknown_iou);
    if (doc.contains("interpolation")) {
      cfg.interpolation = interpolation_from_string(doc.at("interpolation").get<std::string>());
    }
    cfg.max_degradation = doc.value("degradation", cfg.max_degradation);
    if (doc.contains("unknown_score")) {
      cfg.unknown_score = unknown_score_from_string(doc.at("unknown_score").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("eval config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

MatchResult match_detections(std::span<const ScoredBox> dets, std::span<const Box7> gts,
                             double iou_threshold) {
  std::vector<double> scores;
  scores.reserve(dets.size());
  for (const ScoredBox& d : dets) scores.push_back(d.score);
  const std::vector<std::size_t> order = order_by_score(scores);

  MatchResult out;
  std::vector<char> taken(gts.size(), 0);
  for (std::size_t i : order) {
    double best_iou = -1.0;
    std::size_t best = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double iou = iou_3d(dets[i].box, gts[g]);
      if (iou >= iou_threshold && iou > best_iou) {
        best_iou = iou;
        best = g;
      }
    }
    out.scores.push_back(dets[i].score);
    if (best < gts.size()) {
      taken[best] = 1;
      ++out.matched_gt;
      out.true_positive.push_back(true);
    } else {
      out.true_positive.push_back(false);
    }
  }
  return out;
}

double average_precision(std::span<const double> scores,
                         const std::vector<bool>& true_positive, std::size_t num_gt,
                         Interpolation interpolation) {
  if (scores.size() != true_positive.size()) {
    throw std::invalid_argument("score and flag counts differ");
  }
  if (num_gt == 0) return 0.0;
  const std::vector<std::size_t> order = order_by_score(scores);

  std::vector<double> precision, recall;
  precision.reserve(order.size());
  recall.reserve(order.size());
  double tp = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (true_positive[order[rank]]) tp += 1.0;
    precision.push_back(tp / static_cast<double>(rank + 1));
    recall.push_back(tp / static_cast<double>(num_gt));
  }
  // Envelope: best precision at any rank with recall >= recall[k].
  for (std::size_t k = precision.size(); k-- > 1;) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  auto interpolated = [&](double r) {
    const auto it = std::lower_bound(recall.begin(), recall.end(), r - 1e-12);
    if (it == recall.end()) return 0.0;
    return precision[static_cast<std::size_t>(it - recall.begin())];
  };

  double ap = 0.0;
  switch (interpolation) {
    case Interpolation::kEleven:
      for (int i = 0; i <= 10; ++i) ap += interpolated(i / 10.0);
      ap /= 11.0;
      break;
    case Interpolation::kForty:
      for (int i = 1; i <= 40; ++i) ap += interpolated(i / 40.0);
      ap /= 40.0;
      break;
    case Interpolation::kContinuous: {
      double prev = 0.0;
      for (std::size_t k = 0; k < recall.size(); ++k) {
        ap += (recall[k] - prev) * precision[k];
        prev = recall[k];
      }
      break;
    }
  }
  return 100.0 * ap;
}

double map_harm(double map_known, double ap_unknown) {
  const double sum = map_known + ap_unknown;
  if (sum <= 0.0) return 0.0;
  return 2.0 * map_known * ap_unknown / sum;
}

double recall_unknown(std::span<const ScoredBox> unknown_dets,
                      std::span<const Box7> unknown_gts, double iou_threshold) {
  if (unknown_gts.empty()) return 0.0;
  const MatchResult m = match_detections(unknown_dets, unknown_gts, iou_threshold);
  return 100.0 * static_cast<double>(m.matched_gt) /
         static_cast<double>(unknown_gts.size());
}

EvalReport evaluate(std::span<const EvalScene> scenes, const EvalConfig& cfg) {
  cfg.validate();
  EvalReport report;

  double ap_sum = 0.0;
  std::size_t classes_with_gt = 0;
  for (const ClassThreshold& cls : cfg.known_classes) {
    ClassReport cr;
    cr.name = cls.name;
    std::vector<double> scores;
    std::vector<bool> flags;
    for (const EvalScene& s : scenes) {
      std::vector<Box7> gts;
      for (const Box7& g : s.gt) {
        if (g.label == cls.name) gts.push_back(g);
      }
      std::vector<ScoredBox> dets;
      for (const ScoredBox& d : s.known) {
        if (d.box.label == cls.name) dets.push_back(d);
      }
      const MatchResult m = match_detections(dets, gts, cls.iou);
      scores.insert(scores.end(), m.scores.begin(), m.scores.end());
      flags.insert(flags.end(), m.true_positive.begin(), m.true_positive.end());
      cr.num_gt += gts.size();
      cr.num_det += dets.size();
    }
    cr.ap = average_precision(scores, flags, cr.num_gt, cfg.interpolation);
    if (cr.num_gt > 0) {
      ap_sum += cr.ap;
      ++classes_with_gt;
    } else {
      report.warnings.push_back("class '" + cls.name +
                                "' has no ground truth; AP set to 0 and excluded from mAP");
    }
    report.per_class.push_back(cr);
  }
  report.map_known = classes_with_gt > 0 ? ap_sum / static_cast<double>(classes_with_gt) : 0.0;

  std::vector<double> scores;
  std::vector<bool> flags;
  for (const EvalScene& s : scenes) {
    std::vector<Box7> gts;
    for (const Box7& g : s.gt) {
      if (g.label == kUnknownLabel) gts.push_back(g);
    }
    std::vector<ScoredBox> dets = s.unknown;
    if (cfg.unknown_score == UnknownScore::kConstant) {
      for (ScoredBox& d : dets) d.score = 1.0;
    }
    const MatchResult m = match_detections(dets, gts, cfg.unknown_iou);
    scores.insert(scores.end(), m.scores.begin(), m.scores.end());
    flags.insert(flags.end(), m.true_positive.begin(), m.true_positive.end());
    report.unknown_gt += gts.size();
    report.unknown_det += dets.size();
    report.unknown_matched += m.matched_gt;
  }
  if (report.unknown_gt == 0) {
    report.warnings.push_back("no unknown ground truth; AP_unknown set to 0");
  }
  report.ap_unknown = average_precision(scores, flags, report.unknown_gt, cfg.interpolation);
  report.recall_unknown =
      report.unknown_gt > 0 ? 100.0 * static_cast<double>(report.unknown_matched) /
                                  static_cast<double>(report.unknown_gt)
                            : 0.0;
  report.map_harm = map_harm(report.map_known, report.ap_unknown);
  return report;
}

std::string EvalReport::to_json() const {
  json doc;
  doc["map_known"] = map_known;
  doc["ap_unknown"] = ap_unknown;
  doc["recall_unknown"] = recall_unknown;
  doc["map_harm"] = map_harm;
  doc["unknown_gt"] = unknown_gt;
  doc["unknown_det"] = unknown_det;
  doc["unknown_matched"] = unknown_matched;
  json classes = json::array();
  for (const ClassReport& c : per_class) {
    classes.push_back({{"name", c.name}, {"ap", c.ap}, {"num_gt", c.num_gt},
                       {"num_det", c.num_det}});
  }
  doc["per_class"] = classes;
  doc["warnings"] = warnings;
  return doc.dump(2) + "\n";
}

SweepResult sweep_thresholds(std::span<const double> thresholds,
                             const std::function<EvalReport(double)>& evaluate_at,
                             double closed_set_map_known, double max_degradation) {
  if (thresholds.empty()) throw std::invalid_argument("no thresholds to sweep");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw std::invalid_argument("thresholds must be sorted ascending");
  }
  SweepResult out;
  out.closed_set_map_known = closed_set_map_known;
  for (double t : thresholds) {
    const EvalReport r = evaluate_at(t);
    out.points.push_back({t, r.recall_unknown, r.ap_unknown, r.map_known, r.map_harm});
  }
  const double floor = (1.0 - max_degradation) * closed_set_map_known;
  bool found = false;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    const SweepPoint& p = out.points[i];
    if (p.map_known < floor) continue;
    if (!found || p.map_harm > out.points[out.chosen].map_harm) {
      out.chosen = i;
      found = true;
    }
  }
  if (!found) {
    out.chosen = 0;
    out.fallback = true;
  }
  return out;
}

std::string format_sweep_csv(const SweepResult& sweep) {
  std::string out = "threshold,recall_unknown,ap_unknown,map_known,map_harm\n";
  for (const SweepPoint& p : sweep.points) {
    out += fmt::format("{:.4f},{:.4f},{:.4f},{:.4f},{:.4f}\n", p.threshold,
                       p.recall_unknown, p.ap_unknown, p.map_known, p.map_harm);
  }
  if (!sweep.points.empty()) {
    const SweepPoint& c = sweep.points[sweep.chosen];
    out += fmt::format(
        "# operating_point,{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},closed_set_map_known={:.4f}{}\n",
        c.threshold, c.recall_unknown, c.ap_unknown, c.map_known, c.map_harm,
        sweep.closed_set_map_known, sweep.fallback ? ",fallback" : "");
  }
  return out;
}

}  // namespace osd
