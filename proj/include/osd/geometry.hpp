#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace osd {

inline constexpr const char* kUnknownLabel = "unknown";
inline constexpr double kDefaultMinExtent = 0.1;  // m

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Oriented 3D box. `l` runs along the local x axis (heading), `w` along the
// local y axis, `h` along z. Yaw is about +z and lives in (-pi, pi].
struct Box7 {
  double cx = 0.0;
  double cy = 0.0;
  double cz = 0.0;
  double w = 1.0;
  double l = 1.0;
  double h = 1.0;
  double yaw = 0.0;
  std::string label;

  friend bool operator==(const Box7&, const Box7&) = default;
};

double normalize_yaw(double yaw);

// Throws std::invalid_argument when extents are non-positive or any field is
// not finite.
void validate_box(const Box7& b);

// Closed-box containment; `tolerance` widens every half-extent.
bool point_in_box(const Point3& p, const Box7& b, double tolerance = 0.0);

// Counter-clockwise BEV corners.
std::array<Vec2, 4> bev_corners(const Box7& b);

double bev_intersection_area(const Box7& a, const Box7& b);
double iou_3d(const Box7& a, const Box7& b);
double box_volume(const Box7& b);

// Convex polygon helpers shared with feature extraction.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts);
double polygon_area(std::span<const Vec2> poly);

// Area of the xy rectangle aligned with `yaw` that encloses `pts`.
double enclosing_rect_area(std::span<const Vec2> pts, double yaw);

// Minimum-BEV-area yaw-oriented box around `points` (rotating calipers over
// the hull edges). Extents below `min_extent` are floored. Labelled
// "unknown". Throws std::invalid_argument("empty cluster") on empty input.
Box7 min_oriented_box(std::span<const Point3> points,
                      double min_extent = kDefaultMinExtent);

}  // namespace osd
