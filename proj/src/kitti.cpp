#include "osd/kitti.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <Eigen/Dense>

namespace osd::kitti {
namespace {

constexpr std::size_t kPointBytes = 16;

float load_le_float(const std::byte* p) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | std::to_integer<std::uint32_t>(p[i]);
  return std::bit_cast<float>(bits);
}

void store_le_float(float v, std::byte* p) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) {
    p[i] = static_cast<std::byte>(bits & 0xffu);
    bits >>= 8;
  }
}

std::map<std::string, std::vector<double>> parse_calib_entries(const std::string& text) {
  std::map<std::string, std::vector<double>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = line.substr(0, colon);
    std::istringstream values(line.substr(colon + 1));
    std::vector<double> v;
    double x;
    while (values >> x) v.push_back(x);
    out[key] = std::move(v);
  }
  return out;
}

const std::vector<double>& require_entry(const std::map<std::string, std::vector<double>>& e,
                                         const std::string& key, std::size_t count) {
  const auto it = e.find(key);
  if (it == e.end()) throw std::runtime_error("calibration entry '" + key + "' missing");
  if (it->second.size() != count) {
    throw std::runtime_error("calibration entry '" + key + "' needs " +
                             std::to_string(count) + " values");
  }
  return it->second;
}

}  // namespace

FormatError::FormatError(std::size_t offset, const std::string& what)
    : std::runtime_error("byte offset " + std::to_string(offset) + ": " + what),
      offset_(offset) {}

std::vector<VelodynePoint> read_velodyne(std::span<const std::byte> bytes) {
  if (bytes.size() % kPointBytes != 0) {
    const std::size_t offset = bytes.size() - bytes.size() % kPointBytes;
    throw FormatError(offset, "trailing partial point record");
  }
  std::vector<VelodynePoint> out;
  out.reserve(bytes.size() / kPointBytes);
  for (std::size_t off = 0; off < bytes.size(); off += kPointBytes) {
    const std::byte* p = bytes.data() + off;
    VelodynePoint v;
    v.position = {load_le_float(p), load_le_float(p + 4), load_le_float(p + 8)};
    v.intensity = load_le_float(p + 12);
    out.push_back(v);
  }
  return out;
}

std::vector<VelodynePoint> read_velodyne_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_velodyne(std::as_bytes(std::span<const char>(raw)));
}

std::vector<std::byte> write_velodyne(std::span<const VelodynePoint> points) {
  std::vector<std::byte> out(points.size() * kPointBytes);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::byte* p = out.data() + i * kPointBytes;
    store_le_float(static_cast<float>(points[i].position.x), p);
    store_le_float(static_cast<float>(points[i].position.y), p + 4);
    store_le_float(static_cast<float>(points[i].position.z), p + 8);
    store_le_float(points[i].intensity, p + 12);
  }
  return out;
}

std::vector<Point3> positions(std::span<const VelodynePoint> points) {
  std::vector<Point3> out;
  out.reserve(points.size());
  for (const VelodynePoint& p : points) out.push_back(p.position);
  return out;
}

Point3 CameraToCloud::rotate(const Point3& v) const {
  const double in[3] = {v.x, v.y, v.z};
  double o[3];
  for (int r = 0; r < 3; ++r) {
    o[r] = rotation[r][0] * in[0] + rotation[r][1] * in[1] + rotation[r][2] * in[2];
  }
  return {o[0], o[1], o[2]};
}

Point3 CameraToCloud::apply(const Point3& p) const {
  const Point3 r = rotate(p);
  return {r.x + translation[0], r.y + translation[1], r.z + translation[2]};
}

CameraToCloud parse_calibration(const std::string& calib_text) {
  const auto entries = parse_calib_entries(calib_text);
  const auto& r0 = require_entry(entries, "R0_rect", 9);
  const auto& tr = require_entry(entries, "Tr_velo_to_cam", 12);

  // x_rect = R0 * (R * x_velo + t)  =>  x_velo = R^T * (R0^-1 * x_rect - t)
  Eigen::Matrix3d rect;
  Eigen::Matrix3d rot;
  Eigen::Vector3d t;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      rect(r, c) = r0[r * 3 + c];
      rot(r, c) = tr[r * 4 + c];
    }
    t(r) = tr[r * 4 + 3];
  }
  const Eigen::Matrix3d cam_to_velo = rot.inverse() * rect.inverse();
  const Eigen::Vector3d offset = -(rot.inverse() * t);

  CameraToCloud out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.rotation[r][c] = cam_to_velo(r, c);
    out.translation[r] = offset(r);
  }
  return out;
}

std::vector<Box7> read_labels(const std::string& label_text, const std::string& calib_text) {
  const CameraToCloud tf = parse_calibration(calib_text);
  std::vector<Box7> out;
  std::istringstream in(label_text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string type;
    if (!(fields >> type)) continue;
    double v[14];
    for (double& x : v) {
      if (!(fields >> x)) {
        throw std::runtime_error("label line " + std::to_string(line_no) +
                                 ": expected 15 fields");
      }
    }
    std::string label;
    if (type == "Car") {
      label = "car";
    } else if (type == "Pedestrian") {
      label = "pedestrian";
    } else if (type == "Cyclist") {
      label = "cyclist";
    } else if (type == "Van" || type == "Truck") {
      label = kUnknownLabel;
    } else {
      continue;
    }
    // type trunc occ alpha x1 y1 x2 y2 h w l x y z ry
    const double h = v[7], w = v[8], l = v[9];
    const Point3 bottom_cam{v[10], v[11], v[12]};
    const double ry = v[13];

    const Point3 bottom = tf.apply(bottom_cam);
    const Point3 heading = tf.rotate({std::cos(ry), 0.0, -std::sin(ry)});

    Box7 b;
    b.cx = bottom.x;
    b.cy = bottom.y;
    b.cz = bottom.z + h / 2;
    b.w = w;
    b.l = l;
    b.h = h;
    b.yaw = normalize_yaw(std::atan2(heading.y, heading.x));
    b.label = label;
    out.push_back(b);
  }
  return out;
}

}  // namespace osd::kitti
