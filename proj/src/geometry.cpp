#include "osd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace osd {
namespace {

constexpr double kSliverArea = 1e-12;  // m^2

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Sutherland-Hodgman against one directed edge; keeps the left side.
std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& poly, const Vec2& e0,
                                  const Vec2& e1) {
  std::vector<Vec2> out;
  if (poly.empty()) return out;
  out.reserve(poly.size() + 1);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& cur = poly[i];
    const Vec2& nxt = poly[(i + 1) % poly.size()];
    const double dc = cross(e0, e1, cur);
    const double dn = cross(e0, e1, nxt);
    if (dc >= 0.0) out.push_back(cur);
    if ((dc >= 0.0) != (dn >= 0.0)) {
      const double t = dc / (dc - dn);
      out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
    }
  }
  return out;
}

double z_overlap(const Box7& a, const Box7& b) {
  const double lo = std::max(a.cz - a.h / 2, b.cz - b.h / 2);
  const double hi = std::min(a.cz + a.h / 2, b.cz + b.h / 2);
  return std::max(0.0, hi - lo);
}

}  // namespace

double normalize_yaw(double yaw) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(yaw, kTwoPi);
  if (r <= -std::numbers::pi) r += kTwoPi;
  if (r > std::numbers::pi) r -= kTwoPi;
  return r;
}

void validate_box(const Box7& b) {
  for (double v : {b.cx, b.cy, b.cz, b.w, b.l, b.h, b.yaw}) {
    if (!std::isfinite(v)) throw std::invalid_argument("box field is not finite");
  }
  if (!(b.w > 0.0 && b.l > 0.0 && b.h > 0.0)) {
    throw std::invalid_argument("box extents must be positive");
  }
}

bool point_in_box(const Point3& p, const Box7& b, double tolerance) {
  const double dx = p.x - b.cx;
  const double dy = p.y - b.cy;
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= b.l / 2 + tolerance &&
         std::abs(ly) <= b.w / 2 + tolerance &&
         std::abs(p.z - b.cz) <= b.h / 2 + tolerance;
}

std::array<Vec2, 4> bev_corners(const Box7& b) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double hl = b.l / 2;
  const double hw = b.w / 2;
  std::array<Vec2, 4> out;
  const double lx[4] = {hl, -hl, -hl, hl};
  const double ly[4] = {hw, hw, -hw, -hw};
  for (int i = 0; i < 4; ++i) {
    out[i] = {b.cx + c * lx[i] - s * ly[i], b.cy + s * lx[i] + c * ly[i]};
  }
  return out;
}

double polygon_area(std::span<const Vec2> poly) {
  if (poly.size() < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    acc += a.x * b.y - b.x * a.y;
  }
  return std::abs(acc) / 2;
}

double bev_intersection_area(const Box7& a, const Box7& b) {
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  std::vector<Vec2> poly(ca.begin(), ca.end());
  for (int i = 0; i < 4 && !poly.empty(); ++i) {
    poly = clip_half_plane(poly, cb[i], cb[(i + 1) % 4]);
  }
  const double area = polygon_area(poly);
  return area < kSliverArea ? 0.0 : area;
}

double box_volume(const Box7& b) { return b.w * b.l * b.h; }

double iou_3d(const Box7& a, const Box7& b) {
  const double dz = z_overlap(a, b);
  if (dz <= 0.0) return 0.0;
  const double inter = bev_intersection_area(a, b) * dz;
  if (inter <= 0.0) return 0.0;
  const double uni = box_volume(a) + box_volume(b) - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) {
                          return a.x == b.x && a.y == b.y;
                        }),
            pts.end());
  if (pts.size() < 3) return pts;

  // Andrew's monotone chain, collinear points dropped.
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    const Vec2& p = pts[i];
    while (k >= lower && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

double enclosing_rect_area(std::span<const Vec2> pts, double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  double umin = std::numeric_limits<double>::infinity(), umax = -umin;
  double vmin = umin, vmax = -umin;
  for (const Vec2& p : pts) {
    const double u = c * p.x + s * p.y;
    const double v = -s * p.x + c * p.y;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  return (umax - umin) * (vmax - vmin);
}

Box7 min_oriented_box(std::span<const Point3> points, double min_extent) {
  if (points.empty()) throw std::invalid_argument("empty cluster");

  std::vector<Vec2> xy;
  xy.reserve(points.size());
  double zmin = std::numeric_limits<double>::infinity(), zmax = -zmin;
  for (const Point3& p : points) {
    xy.push_back({p.x, p.y});
    zmin = std::min(zmin, p.z);
    zmax = std::max(zmax, p.z);
  }
  const std::vector<Vec2> hull = convex_hull(std::move(xy));

  double best_yaw = 0.0;
  if (hull.size() == 2) {
    best_yaw = std::atan2(hull[1].y - hull[0].y, hull[1].x - hull[0].x);
  } else if (hull.size() >= 3) {
    double best_area = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const Vec2& a = hull[i];
      const Vec2& b = hull[(i + 1) % hull.size()];
      const double yaw = std::atan2(b.y - a.y, b.x - a.x);
      const double area = enclosing_rect_area(hull, yaw);
      if (area < best_area) {
        best_area = area;
        best_yaw = yaw;
      }
    }
  }

  const double c = std::cos(best_yaw);
  const double s = std::sin(best_yaw);
  double umin = std::numeric_limits<double>::infinity(), umax = -umin;
  double vmin = umin, vmax = -umin;
  for (const Vec2& p : hull) {
    const double u = c * p.x + s * p.y;
    const double v = -s * p.x + c * p.y;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  double len = umax - umin;
  double wid = vmax - vmin;
  const double uc = (umin + umax) / 2;
  const double vc = (vmin + vmax) / 2;

  Box7 box;
  box.cx = c * uc - s * vc;
  box.cy = s * uc + c * vc;
  box.cz = (zmin + zmax) / 2;
  box.h = std::max(zmax - zmin, min_extent);
  // Heading follows the longer side; the box is symmetric under a half turn,
  // so yaw is folded into (-pi/2, pi/2].
  double yaw = best_yaw;
  if (wid > len) {
    std::swap(len, wid);
    yaw += std::numbers::pi / 2;
  }
  yaw = normalize_yaw(yaw);
  if (yaw <= -std::numbers::pi / 2) yaw += std::numbers::pi;
  if (yaw > std::numbers::pi / 2) yaw -= std::numbers::pi;
  box.yaw = yaw;
  box.l = std::max(len, min_extent);
  box.w = std::max(wid, min_extent);
  box.label = kUnknownLabel;
  return box;
}

}  // namespace osd
