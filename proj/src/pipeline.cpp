#include "osd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "osd/parallel.hpp"

namespace osd {
namespace {

double dist2(const Point3& a, double x, double y, double z) {
  const double dx = a.x - x, dy = a.y - y, dz = a.z - z;
  return dx * dx + dy * dy + dz * dz;
}

struct ProposalOutcome {
  std::optional<Box7> box;
  Diagnostics diag;
};

}  // namespace

Diagnostics& Diagnostics::operator+=(const Diagnostics& o) {
  proposals += o.proposals;
  skipped_no_point += o.skipped_no_point;
  skipped_empty_region += o.skipped_empty_region;
  dropped_small_clusters += o.dropped_small_clusters;
  suppressed_by_nms += o.suppressed_by_nms;
  return *this;
}

std::string to_string(SeedPick s) {
  return s == SeedPick::kCenterNearest ? "center_nearest" : "random";
}

SeedPick seed_pick_from_string(const std::string& s) {
  if (s == "center_nearest") return SeedPick::kCenterNearest;
  if (s == "random") return SeedPick::kRandom;
  throw std::invalid_argument("unknown seed pick mode '" + s + "'");
}

void PipelineConfig::validate() const {
  if (!(nms_iou >= 0.0 && nms_iou < 1.0)) {
    throw std::invalid_argument("nms_iou must lie in [0, 1)");
  }
  if (!(lambda_naive >= 0.0 && lambda_naive <= 1.0)) {
    throw std::invalid_argument("lambda_naive must lie in [0, 1]");
  }
  if (std::isnan(lambda_eds)) throw std::invalid_argument("lambda_eds is NaN");
  if (!(min_extent > 0.0)) throw std::invalid_argument("min_extent must be positive");
  cluster.validate();
}

std::vector<Detection> score_detections(std::span<const ClosedSetDetection> dets,
                                        const Prototypes& protos, HeadKind kind,
                                        std::span<const std::string> class_names) {
  if (!class_names.empty() && class_names.size() != protos.num_classes()) {
    throw std::invalid_argument("class name count does not match prototypes");
  }
  std::vector<Detection> out;
  out.reserve(dets.size());
  for (const ClosedSetDetection& d : dets) {
    if (d.embedding.size() != protos.num_classes()) {
      throw std::invalid_argument("detection embedding has dimension " +
                                  std::to_string(d.embedding.size()) + ", expected " +
                                  std::to_string(protos.num_classes()));
    }
    Detection s;
    s.box = d.box;
    s.embedding = d.embedding;
    s.probs = kind == HeadKind::kMetric ? class_probabilities(d.embedding, protos)
                                        : softmax(d.embedding);
    s.naive_score = naive_confidence(s.probs);
    s.eds_score = eds(d.embedding, protos);
    const std::size_t c = argmax(s.probs);
    s.box.label = class_names.empty() ? std::to_string(c) : class_names[c];
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Detection> select_unknown_proposals(std::span<const Detection> dets,
                                                const PipelineConfig& cfg) {
  std::vector<Detection> out;
  for (const Detection& d : dets) {
    if (d.eds_score < cfg.lambda_eds) out.push_back(d);
  }
  return out;
}

std::optional<std::size_t> pick_seed(const Detection& det,
                                     std::span<const Point3> cloud,
                                     const PipelineConfig& cfg,
                                     std::size_t proposal_index) {
  std::vector<std::size_t> inside;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (point_in_box(cloud[i], det.box)) inside.push_back(i);
  }
  if (inside.empty()) return std::nullopt;

  if (cfg.seed_pick == SeedPick::kRandom) {
    std::mt19937_64 rng(mix_seed(cfg.rng_seed, proposal_index));
    std::uniform_int_distribution<std::size_t> dist(0, inside.size() - 1);
    return inside[dist(rng)];
  }
  std::size_t best = inside.front();
  double best_d = dist2(cloud[best], det.box.cx, det.box.cy, det.box.cz);
  for (std::size_t i : inside) {
    const double d = dist2(cloud[i], det.box.cx, det.box.cy, det.box.cz);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::vector<Box7> nms_largest_first(std::span<const Box7> boxes, double iou_threshold) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return box_volume(boxes[a]) > box_volume(boxes[b]);
  });
  std::vector<Box7> kept;
  for (std::size_t i : order) {
    const bool keep = std::all_of(kept.begin(), kept.end(), [&](const Box7& k) {
      return iou_3d(boxes[i], k) <= iou_threshold;
    });
    if (keep) kept.push_back(boxes[i]);
  }
  return kept;
}

OpenSetResult run_mluc(std::span<const Point3> cloud, std::span<const Detection> dets,
                       const PipelineConfig& cfg) {
  cfg.validate();
  OpenSetResult result;
  std::vector<const Detection*> proposals;
  for (const Detection& d : dets) {
    if (d.eds_score < cfg.lambda_eds) {
      proposals.push_back(&d);
    } else {
      result.known.push_back(d);
    }
  }
  result.diagnostics.proposals = proposals.size();
  if (proposals.empty()) return result;

  const NeighborIndex index(cloud, cfg.cluster.neighbor_radius);
  std::vector<ProposalOutcome> outcomes(proposals.size());
  parallel_for(proposals.size(), cfg.threads, [&](std::size_t i) {
    ProposalOutcome& out = outcomes[i];
    const std::optional<std::size_t> picked = pick_seed(*proposals[i], cloud, cfg, i);
    if (!picked) {
      ++out.diag.skipped_no_point;
      return;
    }
    ProposalRegion region;
    try {
      region = extract_region(cloud, cloud[*picked], cfg.cluster.region_radius,
                              cfg.cluster.ground_z);
    } catch (const std::runtime_error&) {
      ++out.diag.skipped_empty_region;
      return;
    }
    const std::vector<std::size_t> members =
        grow_cluster(cloud, index, region.seed, region, cfg.cluster, cfg.sensor_origin);
    if (members.size() < cfg.cluster.min_cluster_points) {
      ++out.diag.dropped_small_clusters;
      return;
    }
    std::vector<Point3> pts;
    pts.reserve(members.size());
    for (std::size_t m : members) pts.push_back(cloud[m]);
    out.box = min_oriented_box(pts, cfg.min_extent);
  });

  std::vector<Box7> boxes;
  for (const ProposalOutcome& o : outcomes) {
    result.diagnostics += o.diag;
    if (o.box) boxes.push_back(*o.box);
  }
  const std::vector<Box7> kept = nms_largest_first(boxes, cfg.nms_iou);
  result.diagnostics.suppressed_by_nms = boxes.size() - kept.size();
  for (const Box7& b : kept) result.unknown.push_back({b, box_volume(b)});
  return result;
}

OpenSetResult run_naive(std::span<const Detection> dets, const PipelineConfig& cfg) {
  cfg.validate();
  OpenSetResult result;
  for (const Detection& d : dets) {
    if (d.naive_score < cfg.lambda_naive) {
      Box7 b = d.box;
      b.label = kUnknownLabel;
      result.unknown.push_back({b, box_volume(b)});
      ++result.diagnostics.proposals;
    } else {
      result.known.push_back(d);
    }
  }
  return result;
}

}  // namespace osd
