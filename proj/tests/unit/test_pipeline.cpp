#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "osd/pipeline.hpp"
#include "osd/synth.hpp"

using namespace osd;

namespace {

Detection with_scores(Box7 box, double eds_score, double naive = 0.9) {
  Detection d;
  d.box = std::move(box);
  d.eds_score = eds_score;
  d.naive_score = naive;
  d.probs = {naive, 1.0 - naive};
  return d;
}

Box7 box(double cx, double cy, double cz, double w, double l, double h, double yaw = 0) {
  Box7 b;
  b.cx = cx;
  b.cy = cy;
  b.cz = cz;
  b.w = w;
  b.l = l;
  b.h = h;
  b.yaw = yaw;
  b.label = "car";
  return b;
}

// Front face of an object at range 10, y in [y0, y1], z in [0, 1.4].
std::vector<Point3> face(double y0, double y1) {
  std::vector<Point3> pts;
  for (double y = y0; y <= y1 + 1e-9; y += 0.1) {
    for (double z = 0.0; z <= 1.4 + 1e-9; z += 0.1) pts.push_back({10.0, y, z});
  }
  return pts;
}

std::vector<Detection> scored_scene(const SynthScene& s) {
  const Prototypes protos(s.detections.class_names.size());
  return score_detections(s.detections.detections, protos, HeadKind::kMetric,
                          s.detections.class_names);
}

}  // namespace

TEST(ScoreDetections, SpecExamples) {
  const Prototypes p(3);
  const std::vector<ClosedSetDetection> in = {{box(0, 0, 0, 1, 1, 1), p.vector(2)},
                                              {box(0, 0, 0, 1, 1, 1), {0, 0, 0}}};
  const auto out = score_detections(in, p, HeadKind::kMetric);
  EXPECT_EQ(out[0].box.label, "2");
  for (double v : out[1].probs) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(out[1].eds_score, 27.0);
  EXPECT_TRUE(score_detections({}, p, HeadKind::kMetric).empty());

  const std::vector<std::string> names = {"car", "pedestrian", "cyclist"};
  EXPECT_EQ(score_detections(in, p, HeadKind::kMetric, names)[0].box.label, "cyclist");
}

TEST(ScoreDetections, DetectionInvariantsHold) {
  const SynthScene s = synth_generate(SynthConfig{.seed = 3, .scenes = 1})[0];
  for (const Detection& d : scored_scene(s)) {
    EXPECT_NEAR(std::accumulate(d.probs.begin(), d.probs.end(), 0.0), 1.0, 1e-9);
    EXPECT_EQ(d.naive_score, *std::max_element(d.probs.begin(), d.probs.end()));
    EXPECT_GE(d.eds_score, 0.0);
  }
}

TEST(ScoreDetections, DimensionMismatchThrows) {
  const std::vector<ClosedSetDetection> in = {{box(0, 0, 0, 1, 1, 1), {1, 2}}};
  EXPECT_THROW(score_detections(in, Prototypes(3), HeadKind::kMetric),
               std::invalid_argument);
}

TEST(ScoreDetections, SoftmaxHeadUsesLogits) {
  const std::vector<ClosedSetDetection> in = {{box(0, 0, 0, 1, 1, 1), {0, std::log(3.0)}}};
  const auto out = score_detections(in, Prototypes(2), HeadKind::kSoftmax);
  EXPECT_NEAR(out[0].probs[1], 0.75, 1e-15);
  EXPECT_EQ(out[0].box.label, "1");
}

TEST(SelectUnknownProposals, SpecExamples) {
  const std::vector<Detection> d = {with_scores(box(0, 0, 0, 1, 1, 1), 27),
                                    with_scores(box(5, 0, 0, 1, 1, 1), 100)};
  PipelineConfig cfg;
  cfg.lambda_eds = 50;
  const auto sel = select_unknown_proposals(d, cfg);
  ASSERT_EQ(sel.size(), 1u);
  EXPECT_EQ(sel[0], d[0]);
  cfg.lambda_eds = 0;
  EXPECT_TRUE(select_unknown_proposals(d, cfg).empty());
  cfg.lambda_eds = std::numeric_limits<double>::infinity();
  EXPECT_EQ(select_unknown_proposals(d, cfg), d);
}

TEST(PickSeed, SpecExamples) {
  const Detection d = with_scores(box(0, 0, 0, 2, 2, 2), 0);
  const std::vector<Point3> one = {{5, 5, 5}, {0.3, 0.2, 0.1}};
  PipelineConfig cfg;
  EXPECT_EQ(pick_seed(d, one, cfg), 1u);
  cfg.seed_pick = SeedPick::kRandom;
  EXPECT_EQ(pick_seed(d, one, cfg), 1u);

  const std::vector<Point3> two = {{0.2, 0, 0}, {0.1, 0, 0}};
  cfg.seed_pick = SeedPick::kCenterNearest;
  EXPECT_EQ(pick_seed(d, two, cfg), 1u);

  const std::vector<Point3> tie = {{0.5, 0, 0}, {-0.5, 0, 0}};
  EXPECT_EQ(pick_seed(d, tie, cfg), 0u);

  std::vector<Point3> many;
  for (int i = 0; i < 50; ++i) many.push_back({-0.9 + i * 0.036, 0, 0});
  cfg.seed_pick = SeedPick::kRandom;
  cfg.rng_seed = 77;
  EXPECT_EQ(pick_seed(d, many, cfg, 3), pick_seed(d, many, cfg, 3));
}

TEST(PickSeed, EmptyBoxSignalsSkip) {
  const Detection d = with_scores(box(0, 0, 0, 1, 1, 1), 0);
  const std::vector<Point3> pts = {{3, 3, 3}};
  EXPECT_FALSE(pick_seed(d, pts, PipelineConfig{}).has_value());
}

TEST(PickSeed, RandomModeIsRoughlyUniform) {
  const Detection d = with_scores(box(0, 0, 0, 2, 2, 2), 0);
  std::vector<Point3> pts;
  for (int i = 0; i < 4; ++i) pts.push_back({-0.6 + 0.4 * i, 0, 0});
  PipelineConfig cfg;
  cfg.seed_pick = SeedPick::kRandom;
  std::vector<int> hits(4, 0);
  for (std::size_t k = 0; k < 4000; ++k) ++hits[*pick_seed(d, pts, cfg, k)];
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);
}

TEST(Nms, SpecExamples) {
  const std::vector<Box7> one = {box(0, 0, 0, 1, 2, 1)};
  EXPECT_EQ(nms_largest_first(one, 0.1), one);
  const std::vector<Box7> twins = {box(0, 0, 0, 1, 2, 1), box(0, 0, 0, 1, 2, 1)};
  EXPECT_EQ(nms_largest_first(twins, 0.1).size(), 1u);

  // A: l=10 on [-5,5]; B: l=8 centred at 2.25 overlaps 6.75; IoU 6.75/11.25.
  const Box7 a = box(0, 0, 0, 1, 10, 1), b = box(2.25, 0, 0, 1, 8, 1),
             c = box(20, 0, 0, 1, 5, 1);
  ASSERT_NEAR(iou_3d(a, b), 0.6, 1e-12);
  const std::vector<Box7> in = {c, b, a};
  EXPECT_EQ(nms_largest_first(in, 0.1), (std::vector<Box7>{a, c}));
}

TEST(Nms, KeptSetRespectsThreshold) {
  std::vector<Box7> boxes;
  for (int i = 0; i < 30; ++i) {
    boxes.push_back(box(0.3 * (i % 7), 0.2 * (i % 5), 0, 1 + 0.05 * i, 2, 1.5, 0.1 * i));
  }
  const auto kept = nms_largest_first(boxes, 0.1);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (std::size_t j = i + 1; j < kept.size(); ++j) {
      EXPECT_LE(iou_3d(kept[i], kept[j]), 0.1);
    }
    if (i > 0) EXPECT_GE(box_volume(kept[i - 1]), box_volume(kept[i]));
  }
}

TEST(RunMluc, NoProposalsKeepsEverythingKnown) {
  const std::vector<Detection> d = {with_scores(box(0, 0, 0, 1, 1, 1), 40)};
  PipelineConfig cfg;
  cfg.lambda_eds = 30;
  const auto r = run_mluc(face(-1, 1), d, cfg);
  EXPECT_EQ(r.known, d);
  EXPECT_TRUE(r.unknown.empty());
}

TEST(RunMluc, RecoversExactPointSetOfOneObject) {
  std::vector<Point3> cloud = face(-1, 1);
  const std::size_t object_points = cloud.size();
  const auto other = face(2.5, 3.5);
  cloud.insert(cloud.end(), other.begin(), other.end());

  // Anchor-sized detection covering part of the first object.
  const std::vector<Detection> d = {with_scores(box(10, 0.2, 0.7, 1.0, 0.8, 1.6), 10)};
  PipelineConfig cfg;
  cfg.lambda_eds = 30;
  const auto r = run_mluc(cloud, d, cfg);
  ASSERT_EQ(r.unknown.size(), 1u);
  EXPECT_EQ(r.unknown[0].box.label, kUnknownLabel);
  EXPECT_DOUBLE_EQ(r.unknown[0].score, box_volume(r.unknown[0].box));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    EXPECT_EQ(point_in_box(cloud[i], r.unknown[0].box, 1e-6), i < object_points) << i;
  }
}

TEST(RunMluc, OverlappingProposalsOnOneObjectCollapseUnderNms) {
  const std::vector<Point3> cloud = face(-1, 1);
  const std::vector<Detection> d = {with_scores(box(10, -0.3, 0.7, 1.0, 0.8, 1.6), 10),
                                    with_scores(box(10, 0.4, 0.7, 1.0, 0.8, 1.6), 12)};
  PipelineConfig cfg;
  cfg.lambda_eds = 30;
  const auto r = run_mluc(cloud, d, cfg);
  EXPECT_EQ(r.unknown.size(), 1u);
  EXPECT_EQ(r.diagnostics.proposals, 2u);
  EXPECT_EQ(r.diagnostics.suppressed_by_nms, 1u);
}

TEST(RunMluc, SkipsProposalsWithoutPoints) {
  const std::vector<Detection> d = {with_scores(box(-20, 0, 0, 1, 1, 1), 10)};
  PipelineConfig cfg;
  cfg.lambda_eds = 30;
  const auto r = run_mluc(face(-1, 1), d, cfg);
  EXPECT_TRUE(r.unknown.empty());
  EXPECT_EQ(r.diagnostics.skipped_no_point, 1u);
}

TEST(RunMluc, DropsSmallClusters) {
  const std::vector<Point3> cloud = {{10, 0, 0}, {10, 0.1, 0}, {10, 0.2, 0}};
  const std::vector<Detection> d = {with_scores(box(10, 0.1, 0, 1, 1, 1), 10)};
  PipelineConfig cfg;
  cfg.lambda_eds = 30;
  const auto r = run_mluc(cloud, d, cfg);
  EXPECT_TRUE(r.unknown.empty());
  EXPECT_EQ(r.diagnostics.dropped_small_clusters, 1u);
  cfg.cluster.min_cluster_points = 3;
  EXPECT_EQ(run_mluc(cloud, d, cfg).unknown.size(), 1u);
}

TEST(RunMluc, ZeroThresholdIsClosedSetOutput) {
  for (const SynthScene& s : synth_generate(SynthConfig{.seed = 12, .scenes = 5})) {
    const auto dets = scored_scene(s);
    PipelineConfig cfg;
    const auto r = run_mluc(s.scene.points, dets, cfg);
    EXPECT_EQ(r.known, dets);
    EXPECT_TRUE(r.unknown.empty());
  }
}

TEST(RunMluc, PartitionContainmentNmsAndDeterminism) {
  for (const SynthScene& s : synth_generate(SynthConfig{.seed = 21, .scenes = 8})) {
    const auto dets = scored_scene(s);
    for (SeedPick mode : {SeedPick::kCenterNearest, SeedPick::kRandom}) {
      PipelineConfig cfg;
      cfg.lambda_eds = 31.5;
      cfg.seed_pick = mode;
      cfg.rng_seed = 5;
      const auto r = run_mluc(s.scene.points, dets, cfg);
      EXPECT_EQ(r.known.size() + r.diagnostics.proposals, dets.size());
      for (const Detection& k : r.known) EXPECT_GE(k.eds_score, cfg.lambda_eds);
      for (std::size_t i = 0; i < r.unknown.size(); ++i) {
        const std::size_t inside = std::count_if(
            s.scene.points.begin(), s.scene.points.end(),
            [&](const Point3& p) { return point_in_box(p, r.unknown[i].box, 1e-6); });
        EXPECT_GE(inside, cfg.cluster.min_cluster_points);
        for (std::size_t j = i + 1; j < r.unknown.size(); ++j) {
          EXPECT_LE(iou_3d(r.unknown[i].box, r.unknown[j].box), cfg.nms_iou);
        }
      }
      cfg.threads = 3;
      EXPECT_EQ(run_mluc(s.scene.points, dets, cfg), r);
    }
  }
}

TEST(RunNaive, SpecExamples) {
  const std::vector<Detection> d = {with_scores(box(0, 0, 0, 1, 2, 1), 0, 0.95),
                                    with_scores(box(5, 0, 0, 1, 2, 1), 0, 0.40)};
  PipelineConfig cfg;
  cfg.lambda_naive = 0.0;
  auto r = run_naive(d, cfg);
  EXPECT_EQ(r.known, d);
  EXPECT_TRUE(r.unknown.empty());

  cfg.lambda_naive = 1.0;
  r = run_naive(d, cfg);
  EXPECT_TRUE(r.known.empty());
  EXPECT_EQ(r.unknown.size(), 2u);

  cfg.lambda_naive = 0.5;
  r = run_naive(d, cfg);
  ASSERT_EQ(r.unknown.size(), 1u);
  ASSERT_EQ(r.known.size(), 1u);
  EXPECT_EQ(r.known[0], d[0]);
  Box7 expected = d[1].box;
  expected.label = kUnknownLabel;
  EXPECT_EQ(r.unknown[0].box, expected);
}

TEST(PipelineConfig, Validation) {
  PipelineConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.nms_iou = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.lambda_naive = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(seed_pick_from_string("random"), SeedPick::kRandom);
  EXPECT_EQ(to_string(SeedPick::kCenterNearest), "center_nearest");
  EXPECT_THROW(seed_pick_from_string("first"), std::invalid_argument);
}
