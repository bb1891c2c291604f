#include "osd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "osd/metric_head.hpp"
#include "osd/parallel.hpp"

namespace osd {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Placed {
  Box7 box;
  const ShapeTemplate* shape = nullptr;
  bool unknown = false;
  double az_mid = 0.0;   // rad
  double az_half = 0.0;  // rad
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double segment_point_dist(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = a.x + t * vx - p.x, dy = a.y + t * vy - p.y;
  return std::sqrt(dx * dx + dy * dy);
}

// Azimuth interval of a footprint seen from the origin, as mid +- half.
void azimuth_extent(const Box7& b, double* mid, double* half) {
  const double center = std::atan2(b.cy, b.cx);
  double lo = 0.0, hi = 0.0;
  for (const Vec2& c : bev_corners(b)) {
    const double d = normalize_yaw(std::atan2(c.y, c.x) - center);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  *mid = center + (lo + hi) / 2;
  *half = (hi - lo) / 2;
}

std::vector<double> mean_extent(const ShapeTemplate& t) {
  return {(t.l_min + t.l_max) / 2, (t.w_min + t.w_max) / 2, (t.h_min + t.h_max) / 2};
}

std::vector<Placed> place_objects(const SynthConfig& cfg, std::mt19937_64& rng,
                                  std::size_t scene_index) {
  const std::size_t count = std::uniform_int_distribution<std::size_t>(
      cfg.objects_min, cfg.objects_max)(rng);
  const double az_margin = 2.0 * cfg.azimuth_res_deg * kDegToRad;
  std::vector<Placed> placed;
  std::size_t attempts = 0;
  while (placed.size() < count) {
    if (++attempts > cfg.placement_attempts) {
      throw std::runtime_error(fmt::format(
          "scene {}: could not place {} objects after {} attempts; lower the object "
          "density",
          scene_index, count, cfg.placement_attempts));
    }
    Placed p;
    p.unknown = !cfg.unknown.empty() && uniform(rng, 0.0, 1.0) < cfg.unknown_ratio;
    const auto& pool = p.unknown ? cfg.unknown : cfg.known;
    p.shape = &pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    Box7& b = p.box;
    b.l = uniform(rng, p.shape->l_min, p.shape->l_max);
    b.w = uniform(rng, p.shape->w_min, p.shape->w_max);
    b.h = uniform(rng, p.shape->h_min, p.shape->h_max);
    b.yaw = normalize_yaw(uniform(rng, -std::numbers::pi, std::numbers::pi));
    const double range = uniform(rng, cfg.range_min, cfg.range_max);
    const double az = uniform(rng, -std::numbers::pi, std::numbers::pi);
    b.cx = range * std::cos(az);
    b.cy = range * std::sin(az);
    b.cz = cfg.ground_z + b.h / 2;
    b.label = p.unknown ? kUnknownLabel : p.shape->name;
    azimuth_extent(b, &p.az_mid, &p.az_half);

    bool ok = true;
    for (const Placed& q : placed) {
      const double daz = std::abs(normalize_yaw(p.az_mid - q.az_mid));
      if (daz < p.az_half + q.az_half + az_margin ||
          footprint_gap(p.box, q.box) < cfg.min_gap) {
        ok = false;
        break;
      }
    }
    if (ok) placed.push_back(std::move(p));
  }
  return placed;
}

// Casts the scanner lattice rays that can reach `target`; returns hit points
// whose nearest surface belongs to `target`.
void cast_object(const SynthConfig& cfg, const std::vector<Placed>& objects,
                 std::size_t target, Scene* scene) {
  const Box7& b = objects[target].box;
  const double az_res = cfg.azimuth_res_deg * kDegToRad;
  const double el_res = cfg.elevation_res_deg * kDegToRad;
  const double el_min = cfg.elevation_min_deg * kDegToRad;
  const int channels =
      static_cast<int>(std::floor((cfg.elevation_max_deg - cfg.elevation_min_deg) /
                                  cfg.elevation_res_deg + 1e-9)) + 1;

  const double az_lo = objects[target].az_mid - objects[target].az_half;
  const double az_hi = objects[target].az_mid + objects[target].az_half;
  const long long k_lo = static_cast<long long>(std::ceil(az_lo / az_res));
  const long long k_hi = static_cast<long long>(std::floor(az_hi / az_res));

  const double center_range = std::hypot(b.cx, b.cy);
  const double half_diag = std::hypot(b.l, b.w) / 2;
  const double r_near = std::max(0.1, center_range - half_diag);
  const double r_far = center_range + half_diag;
  const double z_bot = b.cz - b.h / 2, z_top = b.cz + b.h / 2;
  const double e_lo = std::atan2(z_bot, z_bot < 0 ? r_near : r_far);
  const double e_hi = std::atan2(z_top, z_top > 0 ? r_near : r_far);
  const int j_lo = std::max(0, static_cast<int>(std::ceil((e_lo - el_min) / el_res)));
  const int j_hi = std::min(channels - 1, static_cast<int>(std::floor((e_hi - el_min) / el_res)));

  const Point3 origin{};
  for (long long k = k_lo; k <= k_hi; ++k) {
    const double az = static_cast<double>(k) * az_res;
    for (int j = j_lo; j <= j_hi; ++j) {
      const double el = el_min + j * el_res;
      const Point3 dir{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
      double best = std::numeric_limits<double>::infinity();
      std::size_t owner = objects.size();
      for (std::size_t o = 0; o < objects.size(); ++o) {
        const auto t = ray_box_hit(origin, dir, objects[o].box);
        if (t && *t < best) {
          best = *t;
          owner = o;
        }
      }
      if (owner != target) continue;
      scene->points.push_back({best * dir.x, best * dir.y, best * dir.z});
      scene->point_object_ids.push_back(static_cast<int>(target));
    }
  }
}

SynthScene generate_scene(const SynthConfig& cfg, std::size_t index) {
  std::mt19937_64 rng(mix_seed(cfg.seed, index));
  const std::vector<Placed> objects = place_objects(cfg, rng, index);

  SynthScene out;
  out.scene.scene_id = scene_name(index);
  for (const Placed& p : objects) out.scene.gt_boxes.push_back(p.box);
  for (std::size_t o = 0; o < objects.size(); ++o) cast_object(cfg, objects, o, &out.scene);

  out.detections.scene_id = out.scene.scene_id;
  out.detections.class_names = cfg.class_names();
  const Prototypes protos(cfg.known.size());
  std::normal_distribution<double> noise(0.0, 1.0);
  auto noisy = [&](Embedding e) {
    for (double& v : e) v += cfg.sigma * noise(rng);
    return e;
  };
  auto class_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < cfg.known.size(); ++i) {
      if (cfg.known[i].name == name) return i;
    }
    throw std::invalid_argument("unknown confusable class '" + name + "'");
  };

  for (std::size_t o = 0; o < objects.size(); ++o) {
    const Placed& p = objects[o];
    if (!p.unknown) {
      ClosedSetDetection d;
      d.box = p.box;
      d.box.cx += uniform(rng, -cfg.center_jitter, cfg.center_jitter);
      d.box.cy += uniform(rng, -cfg.center_jitter, cfg.center_jitter);
      d.box.l *= 1.0 + uniform(rng, -cfg.size_jitter, cfg.size_jitter);
      d.box.w *= 1.0 + uniform(rng, -cfg.size_jitter, cfg.size_jitter);
      d.box.h *= 1.0 + uniform(rng, -cfg.size_jitter, cfg.size_jitter);
      d.box.yaw = normalize_yaw(d.box.yaw + uniform(rng, -cfg.yaw_jitter, cfg.yaw_jitter));
      d.embedding = noisy(protos.vector(class_index(p.shape->name)));
      out.detections.detections.push_back(std::move(d));
      continue;
    }

    // Unknown shapes come back as one or two anchor-sized boxes of a
    // confusable known class, each sitting on a visible point of the object.
    std::vector<Point3> visible;
    for (std::size_t i = 0; i < out.scene.points.size(); ++i) {
      if (out.scene.point_object_ids[i] == static_cast<int>(o)) {
        visible.push_back(out.scene.points[i]);
      }
    }
    const int n_det = std::uniform_int_distribution<int>(1, 2)(rng);
    if (visible.empty()) continue;
    double mx = 0.0, my = 0.0;
    for (const Point3& v : visible) {
      mx += v.x;
      my += v.y;
    }
    mx /= static_cast<double>(visible.size());
    my /= static_cast<double>(visible.size());
    const double hx = std::cos(p.box.yaw) * p.box.l / 4;
    const double hy = std::sin(p.box.yaw) * p.box.l / 4;
    for (int k = 0; k < n_det; ++k) {
      const double sign = n_det == 1 ? 0.0 : (k == 0 ? -1.0 : 1.0);
      const double tx = mx + sign * hx, ty = my + sign * hy;
      const Point3* anchor = &visible.front();
      double best = std::numeric_limits<double>::infinity();
      for (const Point3& v : visible) {
        const double d = std::hypot(v.x - tx, v.y - ty);
        if (d < best) {
          best = d;
          anchor = &v;
        }
      }
      const auto& names = p.shape->confusable_with;
      const std::string& as =
          names[std::uniform_int_distribution<std::size_t>(0, names.size() - 1)(rng)];
      const std::vector<double> ext = mean_extent(cfg.known[class_index(as)]);
      ClosedSetDetection d;
      d.box.label = as;
      d.box.cx = anchor->x;
      d.box.cy = anchor->y;
      d.box.cz = cfg.ground_z + ext[2] / 2;
      d.box.l = ext[0];
      d.box.w = ext[1];
      d.box.h = ext[2];
      d.box.yaw = p.box.yaw;
      d.embedding = noisy(Embedding(cfg.known.size(), 0.0));
      out.detections.detections.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace

std::vector<ShapeTemplate> SynthConfig::default_known_templates() {
  return {{"car", 3.3, 3.8, 1.5, 1.7, 1.4, 1.6, {}},
          {"pedestrian", 0.5, 0.8, 0.5, 0.7, 1.6, 1.9, {}},
          {"cyclist", 1.5, 1.9, 0.5, 0.7, 1.5, 1.8, {}}};
}

std::vector<ShapeTemplate> SynthConfig::default_unknown_templates() {
  // Both stay below the scanner height so their roofs return points.
  return {{"golf_cart", 2.2, 2.6, 1.1, 1.3, 1.5, 1.7, {"pedestrian", "cyclist"}},
          {"trailer", 2.4, 3.2, 1.3, 1.7, 1.0, 1.4, {"cyclist", "car"}}};
}

void SynthConfig::validate() const {
  if (known.size() < 3) throw std::invalid_argument("need at least 3 known templates");
  if (unknown.size() < 2) throw std::invalid_argument("need at least 2 unknown templates");
  std::set<std::string> names;
  for (const auto* pool : {&known, &unknown}) {
    for (const ShapeTemplate& t : *pool) {
      if (t.name.empty() || t.name == kUnknownLabel || !names.insert(t.name).second) {
        throw std::invalid_argument("template names must be unique, non-empty and not "
                                    "'unknown'");
      }
      if (!(t.l_min > 0 && t.l_min <= t.l_max && t.w_min > 0 && t.w_min <= t.w_max &&
            t.h_min > 0 && t.h_min <= t.h_max)) {
        throw std::invalid_argument("template '" + t.name + "' has invalid size ranges");
      }
    }
  }
  for (const ShapeTemplate& t : unknown) {
    if (t.confusable_with.empty()) {
      throw std::invalid_argument("unknown template '" + t.name + "' needs a confusable class");
    }
    for (const std::string& c : t.confusable_with) {
      if (std::none_of(known.begin(), known.end(),
                       [&](const ShapeTemplate& k) { return k.name == c; })) {
        throw std::invalid_argument("confusable class '" + c + "' is not a known template");
      }
    }
  }
  if (objects_min < 1 || objects_min > objects_max) {
    throw std::invalid_argument("object count range is empty");
  }
  if (!(unknown_ratio >= 0.0 && unknown_ratio <= 1.0)) {
    throw std::invalid_argument("unknown ratio must lie in [0, 1]");
  }
  if (!(min_gap > 0.0)) throw std::invalid_argument("minimum gap must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
  if (!(azimuth_res_deg > 0.0 && elevation_res_deg > 0.0 &&
        elevation_min_deg < elevation_max_deg)) {
    throw std::invalid_argument("invalid scanner geometry");
  }
  if (!(range_min > 0.0 && range_min < range_max)) {
    throw std::invalid_argument("invalid range limits");
  }
}

std::vector<std::string> SynthConfig::class_names() const {
  std::vector<std::string> out;
  for (const ShapeTemplate& t : known) out.push_back(t.name);
  return out;
}

std::optional<double> ray_box_hit(const Point3& origin, const Point3& dir, const Box7& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double ox = origin.x - box.cx, oy = origin.y - box.cy;
  const double o[3] = {c * ox + s * oy, -s * ox + c * oy, origin.z - box.cz};
  const double d[3] = {c * dir.x + s * dir.y, -s * dir.x + c * dir.y, dir.z};
  const double half[3] = {box.l / 2, box.w / 2, box.h / 2};
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (std::abs(o[a]) > half[a]) return std::nullopt;
      continue;
    }
    double t1 = (-half[a] - o[a]) / d[a];
    double t2 = (half[a] - o[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
  }
  if (t_near > t_far || t_near <= 0.0) return std::nullopt;
  return t_near;
}

double footprint_gap(const Box7& a, const Box7& b) {
  if (bev_intersection_area(a, b) > 0.0) return 0.0;
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      best = std::min(best, segment_point_dist(ca[i], cb[j], cb[(j + 1) % 4]));
      best = std::min(best, segment_point_dist(cb[i], ca[j], ca[(j + 1) % 4]));
    }
  }
  return best;
}

std::vector<SynthScene> synth_generate(const SynthConfig& cfg, std::size_t workers) {
  cfg.validate();
  std::vector<SynthScene> out(cfg.scenes);
  parallel_for(cfg.scenes, workers, [&](std::size_t i) { out[i] = generate_scene(cfg, i); });
  return out;
}

std::string scene_name(std::size_t index) { return fmt::format("scene_{:05d}", index); }

}  // namespace osd
