#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "osd/geometry.hpp"

namespace osd {

// Uniform grid with cell size equal to the query radius; radius queries scan
// the 27 surrounding cells and are exact. Immutable after construction.
class NeighborIndex {
 public:
  NeighborIndex(std::span<const Point3> points, double radius);

  double radius() const { return radius_; }
  std::size_t size() const { return points_.size(); }
  const Point3& point(std::size_t i) const { return points_[i]; }

  // Indices (ascending) of points within `radius()` of point `i`, excluding i.
  std::vector<std::size_t> neighbors(std::size_t i) const;
  // Indices (ascending) of points within `radius()` of `q`.
  std::vector<std::size_t> query(const Point3& q) const;

 private:
  struct CellKey {
    long long x, y, z;
    bool operator==(const CellKey&) const = default;
  };
  struct CellHash {
    std::size_t operator()(const CellKey& k) const;
  };

  CellKey cell_of(const Point3& p) const;
  template <typename Fn>
  void scan(const Point3& q, Fn&& fn) const;

  std::vector<Point3> points_;
  double radius_;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> cells_;
};

enum class MergeWhen { kAngleAbove, kAngleBelow };

std::string to_string(MergeWhen m);
MergeWhen merge_when_from_string(const std::string& s);

struct ClusterConfig {
  double lambda_theta = 1.1344640137963142;  // 65 degrees
  double region_radius = 4.0;                // m
  double neighbor_radius = 0.5;              // m
  MergeWhen merge_when = MergeWhen::kAngleAbove;
  std::size_t min_cluster_points = 5;
  // Points with z below this are ignored by region extraction and growth.
  std::optional<double> ground_z;

  void validate() const;
};

// Angle at the farther of t and s between the segment to the nearer point
// and the ray back to the sensor origin `o`. Throws on coincident t and s.
double pair_angle(const Point3& o, const Point3& t, const Point3& s);

struct ProposalRegion {
  Point3 center;
  std::size_t seed = 0;
  std::vector<std::size_t> points;  // ascending cloud indices
};

// Cloud points within xy distance `r` of `p` (a z-unbounded cylinder). When
// `p` is not a cloud point, the region point nearest `p` becomes the seed.
// Throws std::runtime_error("empty proposal region") when nothing qualifies.
ProposalRegion extract_region(std::span<const Point3> points, const Point3& p,
                              double r, std::optional<double> ground_z = {});

// Breadth-first growth from `seed` over radius neighbors. A neighbor joins
// when it lies inside the region cylinder and the merge predicate holds for
// the (frontier, neighbor) pair. The result is the seed's connected
// component under that relation, ascending by index.
std::vector<std::size_t> grow_cluster(std::span<const Point3> points,
                                      const NeighborIndex& index, std::size_t seed,
                                      const ProposalRegion& region,
                                      const ClusterConfig& cfg,
                                      const Point3& origin = {});

}  // namespace osd
