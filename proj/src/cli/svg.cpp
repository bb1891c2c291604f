#include <algorithm>
#include <array>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "osd/cli.hpp"

namespace osd::cli {
namespace {

struct Bounds {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -std::numeric_limits<double>::infinity();
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  bool empty() const { return xmin > xmax; }
};

// SVG y grows downwards; the cloud's y grows to the left of the heading.
std::string polygon(const Box7& b, const char* style) {
  std::string pts;
  for (const Vec2& c : bev_corners(b)) {
    if (!pts.empty()) pts += ' ';
    pts += fmt::format("{:.3f},{:.3f}", c.x, -c.y);
  }
  return fmt::format("<polygon points=\"{}\" {}/>\n", pts, style);
}

std::string escape_xml(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const Scene& scene, const ResultDocument* result) {
  Bounds bounds;
  for (const Point3& p : scene.points) bounds.add(p.x, -p.y);
  auto add_box = [&](const Box7& b) {
    for (const Vec2& c : bev_corners(b)) bounds.add(c.x, -c.y);
  };
  for (const Box7& b : scene.gt_boxes) add_box(b);
  if (result) {
    for (const Detection& d : result->result.known) add_box(d.box);
    for (const UnknownBox& u : result->result.unknown) add_box(u.box);
  }
  bounds.add(0.0, 0.0);
  if (bounds.empty()) bounds = {-10.0, 10.0, -10.0, 10.0};
  const double margin = 1.0;
  const double x0 = bounds.xmin - margin;
  const double y0 = bounds.ymin - margin;
  const double width = bounds.xmax - bounds.xmin + 2 * margin;
  const double height = bounds.ymax - bounds.ymin + 2 * margin;
  const double pixels_per_m = 20.0;

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "viewBox=\"{:.3f} {:.3f} {:.3f} {:.3f}\">\n",
      width * pixels_per_m, height * pixels_per_m, x0, y0, width, height);
  svg += fmt::format("<title>{}</title>\n", escape_xml(scene.scene_id));
  svg += fmt::format(
      "<rect x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" fill=\"white\"/>\n",
      x0, y0, width, height);
  svg += fmt::format(
      "<g id=\"axes\" stroke=\"#bbbbbb\" stroke-width=\"0.03\">\n"
      "<line x1=\"{:.3f}\" y1=\"0\" x2=\"{:.3f}\" y2=\"0\"/>\n"
      "<line x1=\"0\" y1=\"{:.3f}\" x2=\"0\" y2=\"{:.3f}\"/>\n</g>\n",
      x0, x0 + width, y0, y0 + height);
  svg += "<g id=\"points\" fill=\"#555555\">\n";
  for (const Point3& p : scene.points) {
    svg += fmt::format("<circle cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"0.04\"/>\n", p.x, -p.y);
  }
  svg += "</g>\n<g id=\"ground-truth\" fill=\"none\" stroke=\"black\" stroke-width=\"0.06\">\n";
  for (const Box7& b : scene.gt_boxes) svg += polygon(b, "");
  svg += "</g>\n";
  if (result) {
    svg +=
        "<g id=\"known\" fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"0.06\" "
        "stroke-dasharray=\"0.3 0.15\">\n";
    for (const Detection& d : result->result.known) svg += polygon(d.box, "");
    svg += "</g>\n<g id=\"unknown\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"0.12\">\n";
    for (const UnknownBox& u : result->result.unknown) svg += polygon(u.box, "");
    svg += "</g>\n";
  }
  svg += "<circle cx=\"0\" cy=\"0\" r=\"0.2\" fill=\"#2ca02c\"/>\n</svg>\n";
  return svg;
}

}  // namespace osd::cli
