#include <algorithm>
#include <numeric>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "osd/clustering.hpp"

using namespace osd;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double law_of_cosines(const Point3& o, const Point3& t, const Point3& s) {
  auto len = [](const Point3& a, const Point3& b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                     (a.z - b.z) * (a.z - b.z));
  };
  const double lt = len(o, t), ls = len(o, s), d = len(t, s);
  const double hi = std::max(lt, ls), lo = std::min(lt, ls);
  return std::acos(std::clamp((hi * hi + d * d - lo * lo) / (2 * d * hi), -1.0, 1.0));
}

std::vector<std::size_t> brute_neighbors(const std::vector<Point3>& pts, std::size_t i,
                                         double r) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    if (j == i) continue;
    const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y,
                 dz = pts[i].z - pts[j].z;
    if (dx * dx + dy * dy + dz * dz <= r * r) out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> grow_all(const std::vector<Point3>& pts, std::size_t seed,
                                  const ClusterConfig& cfg) {
  const NeighborIndex index(pts, cfg.neighbor_radius);
  const ProposalRegion region = extract_region(pts, pts[seed], cfg.region_radius);
  return grow_cluster(pts, index, seed, region, cfg);
}

}  // namespace

TEST(NeighborIndex, SpecExamples) {
  const std::vector<Point3> none;
  const NeighborIndex empty(none, 0.5);
  EXPECT_TRUE(empty.query({0, 0, 0}).empty());

  const std::vector<Point3> near = {{0, 0, 0}, {0.4, 0, 0}};
  const NeighborIndex a(near, 0.5);
  EXPECT_EQ(a.neighbors(0), std::vector<std::size_t>{1});
  EXPECT_EQ(a.neighbors(1), std::vector<std::size_t>{0});

  const std::vector<Point3> far = {{0, 0, 0}, {0.6, 0, 0}};
  const NeighborIndex b(far, 0.5);
  EXPECT_TRUE(b.neighbors(0).empty());
  EXPECT_TRUE(b.neighbors(1).empty());
}

TEST(NeighborIndex, RejectsNonPositiveRadius) {
  const std::vector<Point3> pts = {{0, 0, 0}};
  EXPECT_THROW(NeighborIndex(pts, 0.0), std::invalid_argument);
}

TEST(NeighborIndex, MatchesBruteForceIncludingNegativeCoordinates) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<Point3> pts(600);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng) * 0.3};
  // Points exactly on cell boundaries and at exact radius.
  pts.push_back({0.5, 0.0, 0.0});
  pts.push_back({1.0, 0.0, 0.0});
  const NeighborIndex index(pts, 0.5);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(index.neighbors(i), brute_neighbors(pts, i, 0.5)) << i;
  }
}

TEST(PairAngle, SpecExamples) {
  const Point3 o{0, 0, 0};
  EXPECT_EQ(pair_angle(o, {10, 0, 0}, {12, 0, 0}), 0.0);
  EXPECT_NEAR(pair_angle(o, {10, 0, 0}, {10, 0.5, 0}) / kDeg, 87.14, 5e-3);
  EXPECT_NEAR(pair_angle(o, {10, 0, 0}, {10, 1, 0}), std::acos(1.0 / std::sqrt(101.0)),
              1e-12);
  EXPECT_NEAR(pair_angle(o, {10, 0, 0}, {10, 1, 0}) / kDeg, 84.29, 5e-3);
}

TEST(PairAngle, CoincidentPointsThrow) {
  try {
    pair_angle({0, 0, 0}, {1, 2, 3}, {1, 2, 3});
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "coincident points");
  }
}

TEST(PairAngle, SymmetricBoundedAndMatchesLawOfCosines) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int k = 0; k < 2000; ++k) {
    const Point3 o{u(rng) * 0.1, u(rng) * 0.1, 1.7};
    const Point3 t{u(rng), u(rng), u(rng) * 0.1};
    const Point3 s{t.x + u(rng) * 0.02, t.y + u(rng) * 0.02, t.z + u(rng) * 0.02};
    const double a = pair_angle(o, t, s);
    EXPECT_EQ(a, pair_angle(o, s, t));
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, std::numbers::pi);
    EXPECT_NEAR(a, law_of_cosines(o, t, s), 1e-6);
  }
}

TEST(PairAngle, ExactZeroForSensorCollinearPairs) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 500; ++k) {
    const Point3 dir{u(rng), u(rng), u(rng)};
    const Point3 t{dir.x * 4, dir.y * 4, dir.z * 4};
    const Point3 s{dir.x * 7, dir.y * 7, dir.z * 7};
    EXPECT_NEAR(pair_angle({0, 0, 0}, t, s), 0.0, 1e-12);
  }
}

TEST(ClusterConfig, ValidatesRanges) {
  ClusterConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_NEAR(cfg.lambda_theta, 65 * kDeg, 1e-12);
  cfg.lambda_theta = std::numbers::pi / 2;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.region_radius = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.neighbor_radius = -1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(merge_when_from_string("angle_below"), MergeWhen::kAngleBelow);
  EXPECT_EQ(to_string(MergeWhen::kAngleAbove), "angle_above");
  EXPECT_THROW(merge_when_from_string("sideways"), std::invalid_argument);
}

TEST(ExtractRegion, SpecExamples) {
  const std::vector<Point3> pts = {{0, 0, 0}, {3.9, 0, 0}, {0, 4.1, 0}, {0, 0, 20}};
  const ProposalRegion whole = extract_region(pts, pts[0], 100.0);
  EXPECT_EQ(whole.points, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(whole.seed, 0u);

  const ProposalRegion r4 = extract_region(pts, pts[0], 4.0);
  EXPECT_EQ(r4.points, (std::vector<std::size_t>{0, 1, 3}));
}

TEST(ExtractRegion, OffCloudCentreSeedsAtNearestPoint) {
  const std::vector<Point3> pts = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  const ProposalRegion r = extract_region(pts, {1.8, 0.1, 0}, 4.0);
  EXPECT_EQ(r.seed, 2u);
}

TEST(ExtractRegion, EmptyRegionThrows) {
  const std::vector<Point3> pts = {{10, 10, 0}};
  try {
    extract_region(pts, {0, 0, 0}, 4.0);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "empty proposal region");
  }
  const std::vector<Point3> low = {{0, 0, -2}};
  EXPECT_THROW(extract_region(low, {0, 0, 0}, 4.0, -1.5), std::runtime_error);
}

TEST(GrowCluster, TangentialArcFormsOneCluster) {
  std::vector<Point3> arc;
  const double step = 0.3 / 10.0;  // radians for 0.3 m spacing at 10 m
  for (int i = 0; i < 10; ++i) {
    arc.push_back({10 * std::cos(i * step), 10 * std::sin(i * step), 0});
  }
  for (std::size_t i = 0; i + 1 < arc.size(); ++i) {
    EXPECT_GT(law_of_cosines({0, 0, 0}, arc[i], arc[i + 1]), 88 * kDeg);
  }
  ClusterConfig cfg;
  EXPECT_EQ(grow_all(arc, 4, cfg).size(), 10u);
}

TEST(GrowCluster, RadialChainStaysAtSeed) {
  const std::vector<Point3> chain = {{10, 0, 0}, {10.4, 0, 0}, {10.8, 0, 0}};
  ClusterConfig cfg;
  EXPECT_EQ(grow_all(chain, 0, cfg), std::vector<std::size_t>{0});
  EXPECT_EQ(grow_all(chain, 1, cfg), std::vector<std::size_t>{1});
  cfg.merge_when = MergeWhen::kAngleBelow;
  EXPECT_EQ(grow_all(chain, 0, cfg).size(), 3u);
}

TEST(GrowCluster, SinglePointRegion) {
  const std::vector<Point3> pts = {{5, 0, 0}, {50, 0, 0}};
  ClusterConfig cfg;
  EXPECT_EQ(grow_all(pts, 0, cfg), std::vector<std::size_t>{0});
}

TEST(GrowCluster, SeedOutsideRegionThrows) {
  const std::vector<Point3> pts = {{0, 0, 0}, {10, 0, 0}};
  const NeighborIndex index(pts, 0.5);
  const ProposalRegion region = extract_region(pts, pts[0], 4.0);
  EXPECT_THROW(grow_cluster(pts, index, 1, region, ClusterConfig{}), std::invalid_argument);
}

TEST(GrowCluster, RadiusGuardStopsAtCylinderWall) {
  // Tangential wall at x = 10 spanning y in [-6, 6]; cylinder of 4 m about y = 0.
  std::vector<Point3> wall;
  for (int i = -60; i <= 60; ++i) wall.push_back({10, i * 0.1, 0});
  ClusterConfig cfg;
  const auto r = grow_all(wall, 60, cfg);
  for (std::size_t i : r) EXPECT_LE(std::abs(wall[i].y), 4.0 + 1e-12);
  EXPECT_EQ(r.size(), 81u);
}

TEST(GrowCluster, EqualRangeNeighborsMerge) {
  // Points on a sphere of radius 8 within 0.5 m of each other.
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-0.02, 0.02);
  std::vector<Point3> pts;
  for (int i = 0; i < 30; ++i) {
    const double az = u(rng), el = u(rng);
    pts.push_back({8 * std::cos(el) * std::cos(az), 8 * std::cos(el) * std::sin(az),
                   8 * std::sin(el)});
  }
  ClusterConfig cfg;
  EXPECT_EQ(grow_all(pts, 0, cfg).size(), pts.size());
}

namespace {

std::vector<Point3> two_objects_cloud(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  std::vector<Point3> pts;
  // Front face of a box and, behind it along the same rays, a farther wall.
  for (int i = 0; i < 40; ++i) pts.push_back({10, u(rng) * 2, u(rng)});
  for (int i = 0; i < 40; ++i) pts.push_back({10.45, u(rng) * 2, u(rng) + 1.0});
  for (int i = 0; i < 20; ++i) pts.push_back({10 + u(rng) * 2, u(rng) * 2, u(rng)});
  return pts;
}

}  // namespace

TEST(GrowCluster, IndependentOfPointOrder) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto pts = two_objects_cloud(s);
    ClusterConfig cfg;
    const auto base = grow_all(pts, 0, cfg);
    std::set<std::pair<double, double>> base_set;
    for (std::size_t i : base) base_set.insert({pts[i].y, pts[i].z});

    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(s + 100);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Point3> shuffled(pts.size());
    std::size_t new_seed = 0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      shuffled[i] = pts[perm[i]];
      if (perm[i] == 0) new_seed = i;
    }
    const NeighborIndex index(shuffled, cfg.neighbor_radius);
    const ProposalRegion region = extract_region(shuffled, pts[0], cfg.region_radius);
    const auto other = grow_cluster(shuffled, index, new_seed, region, cfg);
    std::set<std::pair<double, double>> other_set;
    for (std::size_t i : other) other_set.insert({shuffled[i].y, shuffled[i].z});
    EXPECT_EQ(base_set, other_set);
  }
}

TEST(GrowCluster, ResultClosedUnderMergeRelation) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto pts = two_objects_cloud(s);
    for (MergeWhen mode : {MergeWhen::kAngleAbove, MergeWhen::kAngleBelow}) {
      ClusterConfig cfg;
      cfg.merge_when = mode;
      const auto r = grow_all(pts, 0, cfg);
      EXPECT_TRUE(std::binary_search(r.begin(), r.end(), 0u));
      const std::set<std::size_t> in(r.begin(), r.end());
      for (std::size_t t : r) {
        for (std::size_t j : brute_neighbors(pts, t, cfg.neighbor_radius)) {
          if (in.count(j)) continue;
          const double dxy = std::hypot(pts[j].x - pts[0].x, pts[j].y - pts[0].y);
          if (dxy > cfg.region_radius) continue;
          const double th = law_of_cosines({0, 0, 0}, pts[t], pts[j]);
          const bool merge = mode == MergeWhen::kAngleAbove ? th > cfg.lambda_theta
                                                            : th < cfg.lambda_theta;
          // Allow slack only for pairs sitting on the threshold itself.
          if (std::abs(th - cfg.lambda_theta) > 1e-9) {
            EXPECT_FALSE(merge) << t << " -> " << j;
          }
        }
      }
    }
  }
}
