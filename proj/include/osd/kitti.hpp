#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "osd/geometry.hpp"

namespace osd::kitti {

struct VelodynePoint {
  Point3 position;
  float intensity = 0.0f;
};

class FormatError : public std::runtime_error {
 public:
  FormatError(std::size_t offset, const std::string& what);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Little-endian float32 quadruples (x, y, z, intensity).
std::vector<VelodynePoint> read_velodyne(std::span<const std::byte> bytes);
std::vector<VelodynePoint> read_velodyne_file(const std::string& path);
std::vector<std::byte> write_velodyne(std::span<const VelodynePoint> points);

std::vector<Point3> positions(std::span<const VelodynePoint> points);

// Rigid transform from the rectified camera frame to the cloud frame.
struct CameraToCloud {
  double rotation[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  double translation[3] = {0, 0, 0};

  Point3 apply(const Point3& p) const;
  Point3 rotate(const Point3& v) const;
};

// Builds the camera-to-cloud transform from an object calibration file
// (needs R0_rect and Tr_velo_to_cam). Throws std::runtime_error naming a
// missing entry.
CameraToCloud parse_calibration(const std::string& calib_text);

// Object labels converted to cloud-frame Box7. Van and Truck become
// "unknown"; Car, Pedestrian and Cyclist are lower-cased; anything else is
// dropped.
std::vector<Box7> read_labels(const std::string& label_text, const std::string& calib_text);

}  // namespace osd::kitti
