#include "osd/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace osd {
namespace {

double dist2(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

double xy_dist2(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

bool above_ground(const Point3& p, const std::optional<double>& ground_z) {
  return !ground_z || p.z >= *ground_z;
}

}  // namespace

std::size_t NeighborIndex::CellHash::operator()(const CellKey& k) const {
  std::size_t h = static_cast<std::size_t>(k.x) * 73856093u;
  h ^= static_cast<std::size_t>(k.y) * 19349663u;
  h ^= static_cast<std::size_t>(k.z) * 83492791u;
  return h;
}

NeighborIndex::NeighborIndex(std::span<const Point3> points, double radius)
    : points_(points.begin(), points.end()), radius_(radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("neighbor radius must be positive");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    cells_[cell_of(points_[i])].push_back(i);
  }
}

NeighborIndex::CellKey NeighborIndex::cell_of(const Point3& p) const {
  return {static_cast<long long>(std::floor(p.x / radius_)),
          static_cast<long long>(std::floor(p.y / radius_)),
          static_cast<long long>(std::floor(p.z / radius_))};
}

template <typename Fn>
void NeighborIndex::scan(const Point3& q, Fn&& fn) const {
  const CellKey c = cell_of(q);
  const double r2 = radius_ * radius_;
  for (long long dx = -1; dx <= 1; ++dx) {
    for (long long dy = -1; dy <= 1; ++dy) {
      for (long long dz = -1; dz <= 1; ++dz) {
        auto it = cells_.find({c.x + dx, c.y + dy, c.z + dz});
        if (it == cells_.end()) continue;
        for (std::size_t j : it->second) {
          if (dist2(points_[j], q) <= r2) fn(j);
        }
      }
    }
  }
}

std::vector<std::size_t> NeighborIndex::neighbors(std::size_t i) const {
  std::vector<std::size_t> out;
  scan(points_.at(i), [&](std::size_t j) {
    if (j != i) out.push_back(j);
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> NeighborIndex::query(const Point3& q) const {
  std::vector<std::size_t> out;
  scan(q, [&](std::size_t j) { out.push_back(j); });
  std::sort(out.begin(), out.end());
  return out;
}

std::string to_string(MergeWhen m) {
  return m == MergeWhen::kAngleAbove ? "angle_above" : "angle_below";
}

MergeWhen merge_when_from_string(const std::string& s) {
  if (s == "angle_above") return MergeWhen::kAngleAbove;
  if (s == "angle_below") return MergeWhen::kAngleBelow;
  throw std::invalid_argument("unknown merge rule '" + s + "'");
}

void ClusterConfig::validate() const {
  if (!(lambda_theta > 0.0 && lambda_theta < std::numbers::pi / 2)) {
    throw std::invalid_argument("lambda_theta must lie in (0, pi/2)");
  }
  if (!(region_radius > 0.0)) throw std::invalid_argument("region radius must be positive");
  if (!(neighbor_radius > 0.0)) {
    throw std::invalid_argument("neighbor radius must be positive");
  }
}

double pair_angle(const Point3& o, const Point3& t, const Point3& s) {
  const double d2 = dist2(t, s);
  if (d2 == 0.0) throw std::invalid_argument("coincident points");
  const double rt = dist2(o, t);
  const double rs = dist2(o, s);
  if (std::max(rt, rs) == 0.0) throw std::invalid_argument("points coincide with the sensor");
  const Point3& far = rt >= rs ? t : s;
  const Point3& near = rt >= rs ? s : t;
  // Same angle as the law of cosines on (|far-o|, |far-near|, |near-o|), but
  // via atan2 so sensor-collinear pairs come out at exactly 0.
  const double ax = o.x - far.x, ay = o.y - far.y, az = o.z - far.z;
  const double bx = near.x - far.x, by = near.y - far.y, bz = near.z - far.z;
  const double cx = ay * bz - az * by;
  const double cy = az * bx - ax * bz;
  const double cz = ax * by - ay * bx;
  return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), ax * bx + ay * by + az * bz);
}

ProposalRegion extract_region(std::span<const Point3> points, const Point3& p,
                              double r, std::optional<double> ground_z) {
  if (!(r > 0.0)) throw std::invalid_argument("region radius must be positive");
  ProposalRegion region;
  region.center = p;
  const double r2 = r * r;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!above_ground(points[i], ground_z)) continue;
    if (xy_dist2(points[i], p) > r2) continue;
    region.points.push_back(i);
    const double d = dist2(points[i], p);
    if (d < best) {
      best = d;
      region.seed = i;
    }
  }
  if (region.points.empty()) throw std::runtime_error("empty proposal region");
  return region;
}

std::vector<std::size_t> grow_cluster(std::span<const Point3> points,
                                      const NeighborIndex& index, std::size_t seed,
                                      const ProposalRegion& region,
                                      const ClusterConfig& cfg, const Point3& origin) {
  if (seed >= points.size() || index.size() != points.size()) {
    throw std::invalid_argument("seed or index does not match the cloud");
  }
  const double r2 = cfg.region_radius * cfg.region_radius;
  auto in_region = [&](std::size_t i) {
    return xy_dist2(points[i], region.center) <= r2 &&
           above_ground(points[i], cfg.ground_z);
  };
  if (!in_region(seed)) throw std::invalid_argument("seed outside proposal region");

  std::vector<char> member(points.size(), 0);
  std::deque<std::size_t> frontier{seed};
  member[seed] = 1;
  std::vector<std::size_t> out;
  while (!frontier.empty()) {
    const std::size_t t = frontier.front();
    frontier.pop_front();
    out.push_back(t);
    for (std::size_t s : index.neighbors(t)) {
      if (member[s] || !in_region(s)) continue;
      // Duplicate returns of the same position carry no angle; treat them as
      // the same surface sample.
      bool merge = true;
      if (dist2(points[t], points[s]) > 0.0) {
        const double theta = pair_angle(origin, points[t], points[s]);
        merge = cfg.merge_when == MergeWhen::kAngleAbove ? theta > cfg.lambda_theta
                                                         : theta < cfg.lambda_theta;
      }
      if (merge) {
        member[s] = 1;
        frontier.push_back(s);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace osd
