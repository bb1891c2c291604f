#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "osd/geometry.hpp"

namespace osd {

// Per-box feature layout:
//   0 w, 1 l, 2 h                      box extents (m)
//   3 log(1 + point count)
//   4..6 centroid offset from the box centre in the box frame (m)
//   7 z spread: (max z - min z) / h
//   8 BEV hull area / box BEV area
inline constexpr std::size_t kFeatureDim = 9;

// Points are the cloud points inside `box`. No points gives the zero vector.
std::vector<double> feature_extract(std::span<const Point3> points, const Box7& box);

std::vector<Point3> points_in_box(std::span<const Point3> cloud, const Box7& box,
                                  double tolerance = 0.0);

}  // namespace osd
