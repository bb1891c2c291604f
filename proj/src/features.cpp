#include "osd/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace osd {

std::vector<double> feature_extract(std::span<const Point3> points, const Box7& box) {
  std::vector<double> f(kFeatureDim, 0.0);
  if (points.empty()) return f;

  f[0] = box.w;
  f[1] = box.l;
  f[2] = box.h;
  f[3] = std::log1p(static_cast<double>(points.size()));

  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  double sx = 0.0, sy = 0.0, sz = 0.0;
  double zmin = std::numeric_limits<double>::infinity(), zmax = -zmin;
  std::vector<Vec2> xy;
  xy.reserve(points.size());
  for (const Point3& p : points) {
    const double dx = p.x - box.cx;
    const double dy = p.y - box.cy;
    sx += c * dx + s * dy;
    sy += -s * dx + c * dy;
    sz += p.z - box.cz;
    zmin = std::min(zmin, p.z);
    zmax = std::max(zmax, p.z);
    xy.push_back({p.x, p.y});
  }
  const double n = static_cast<double>(points.size());
  f[4] = sx / n;
  f[5] = sy / n;
  f[6] = sz / n;
  f[7] = (zmax - zmin) / box.h;
  const std::vector<Vec2> hull = convex_hull(std::move(xy));
  f[8] = polygon_area(hull) / (box.w * box.l);
  return f;
}

std::vector<Point3> points_in_box(std::span<const Point3> cloud, const Box7& box,
                                  double tolerance) {
  std::vector<Point3> out;
  for (const Point3& p : cloud) {
    if (point_in_box(p, box, tolerance)) out.push_back(p);
  }
  return out;
}

}  // namespace osd
