#include "nemvis/svg.hpp"
#include "nemvis/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace nemvis {

namespace {

constexpr std::array<Rgb, 9> kViridis{{{68, 1, 84},
                                       {71, 45, 123},
                                       {59, 82, 139},
                                       {44, 114, 142},
                                       {33, 145, 140},
                                       {40, 174, 128},
                                       {94, 201, 98},
                                       {173, 220, 48},
                                       {253, 231, 37}}};

// Fixed three-decimal output without negative zero.
std::string num(double v) {
  std::string s = fmt::format("{:.3f}", v);
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string pointList(const CanvasTransform& tf, const std::vector<Vec2>& pts) {
  std::string out;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Vec2 q = tf.apply(pts[k]);
    if (k) out += ' ';
    out += num(q.x()) + ',' + num(q.y());
  }
  return out;
}

}  // namespace

Rgb viridis(double t) {
  if (!(t >= 0.0)) t = 0.0;
  t = std::min(t, 1.0);
  const double x = t * (kViridis.size() - 1);
  const std::size_t k = std::min(static_cast<std::size_t>(x), kViridis.size() - 2);
  const double f = x - static_cast<double>(k);
  auto mix = [f](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(std::lround(a + f * (static_cast<double>(b) - a)));
  };
  const Rgb &a = kViridis[k], &b = kViridis[k + 1];
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

std::string to_hex(Rgb c) { return fmt::format("#{:02x}{:02x}{:02x}", c.r, c.g, c.b); }

CanvasTransform::CanvasTransform(const Scene& scene) : lower_(scene.lower), margin_(scene.margin_px) {
  const Vec2 ext = scene.upper - scene.lower;
  if (!(ext.x() > 0.0) || !(ext.y() > 0.0) || scene.width_px <= 2 * scene.margin_px)
    throw std::invalid_argument("svg: degenerate viewport");
  width_ = scene.width_px;
  scale_ = (width_ - 2.0 * margin_) / ext.x();
  height_ = static_cast<int>(std::lround(ext.y() * scale_ + 2.0 * margin_));
}

Vec2 CanvasTransform::apply(const Vec2& p) const {
  return {margin_ + (p.x() - lower_.x()) * scale_, height_ - margin_ - (p.y() - lower_.y()) * scale_};
}

std::pair<std::vector<Vec2>, std::vector<Vec2>> ribbon_outline(const Hyperstreamline& line) {
  const auto& s = line.samples;
  std::vector<Vec2> left, right;
  left.reserve(s.size());
  right.reserve(s.size());
  Vec2 normal = s.empty() ? Vec2(0.0, 1.0) : s.front().cross_axis;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1, b = std::min(k + 1, s.size() - 1);
    const Vec2 t = s[b].position - s[a].position;
    // Zero-length steps keep the previous normal.
    if (t.norm() > 1e-14) normal = Vec2(-t.y(), t.x()).normalized();
    left.push_back(s[k].position + s[k].half_width * normal);
    right.push_back(s[k].position - s[k].half_width * normal);
  }
  return {left, right};
}

std::string format_svg(const Scene& scene) {
  const CanvasTransform tf(scene);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& l : scene.streamlines)
    for (const auto& s : l.samples) {
      lo = std::min(lo, s.color);
      hi = std::max(hi, s.color);
    }
  const bool anyColor = lo <= hi;
  auto colorOf = [&](double v) {
    if (!anyColor || hi - lo < 1e-12) return viridis(0.5);
    return viridis((v - lo) / (hi - lo));
  };

  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
  fmt::format_to(out,
                 "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{1}\" "
                 "viewBox=\"0 0 {0} {1}\">\n",
                 tf.width(), tf.height());
  if (anyColor)
    fmt::format_to(out, "<metadata>color=lambda_n colormap=viridis min={:.9g} max={:.9g}</metadata>\n", lo, hi);
  else
    fmt::format_to(out, "<metadata>color=lambda_n colormap=viridis</metadata>\n");
  fmt::format_to(out, "<rect class=\"background\" x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n",
                 tf.width(), tf.height());

  if (!scene.streamlines.empty()) {
    fmt::format_to(out, "<g id=\"ribbons\" stroke=\"none\">\n");
    for (std::size_t i = 0; i < scene.streamlines.size(); ++i) {
      const auto& line = scene.streamlines[i];
      fmt::format_to(out, "<g class=\"ribbon\" data-seed=\"{}\">", i);
      if (line.samples.size() >= 2) {
        const auto [left, right] = ribbon_outline(line);
        std::size_t k = 0;
        const std::size_t intervals = line.samples.size() - 1;
        while (k < intervals) {
          const Rgb c = colorOf(0.5 * (line.samples[k].color + line.samples[k + 1].color));
          std::size_t e = k + 1;
          while (e < intervals && colorOf(0.5 * (line.samples[e].color + line.samples[e + 1].color)) == c) ++e;
          std::vector<Vec2> poly(left.begin() + static_cast<std::ptrdiff_t>(k),
                                 left.begin() + static_cast<std::ptrdiff_t>(e + 1));
          for (std::size_t m = e + 1; m-- > k;) poly.push_back(right[m]);
          fmt::format_to(out, "<polygon fill=\"{}\" points=\"{}\"/>", to_hex(c), pointList(tf, poly));
          k = e;
        }
      }
      fmt::format_to(out, "</g>\n");
    }
    fmt::format_to(out, "</g>\n");
  }

  if (scene.overlay_template && (!scene.tmpl.curves.empty() || !scene.tmpl.graph.vertices.empty())) {
    fmt::format_to(out, "<g id=\"template\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\" "
                        "stroke-dasharray=\"4 3\">\n");
    for (const auto& v : scene.tmpl.graph.vertices) {
      const Vec2 c = tf.apply(v.position);
      fmt::format_to(out, "<circle class=\"template-circle\" cx=\"{}\" cy=\"{}\" r=\"{}\"/>\n", num(c.x()),
                     num(c.y()), num(scene.tmpl.params.vertex_radius * tf.scale()));
    }
    for (const auto& curve : scene.tmpl.curves) {
      if (curve.kind == CurveKind::vertex_circle) continue;
      const char* cls = curve.kind == CurveKind::edge_segment ? "template-edge" : "template-boundary";
      fmt::format_to(out, "<{} class=\"{}\" points=\"{}\"/>\n", curve.closed ? "polygon" : "polyline", cls,
                     pointList(tf, curve.points));
    }
    fmt::format_to(out, "</g>\n");
  }

  if (!scene.tmpl.graph.vertices.empty()) {
    fmt::format_to(out, "<g id=\"defects\" fill=\"#d62728\" stroke=\"#000000\" stroke-width=\"0.5\">\n");
    for (const auto& v : scene.tmpl.graph.vertices) {
      const Vec2 c = tf.apply(v.position);
      fmt::format_to(out, "<circle class=\"defect\" cx=\"{}\" cy=\"{}\" r=\"3\"/>\n", num(c.x()), num(c.y()));
    }
    fmt::format_to(out, "</g>\n");
  }

  if (!scene.seeds.empty()) {
    fmt::format_to(out, "<g id=\"seeds\" fill=\"#000000\">\n");
    for (const auto& s : scene.seeds) {
      const Vec2 c = tf.apply(s.position);
      fmt::format_to(out, "<circle class=\"seed\" cx=\"{}\" cy=\"{}\" r=\"1.5\"/>\n", num(c.x()), num(c.y()));
    }
    fmt::format_to(out, "</g>\n");
  }
  fmt::format_to(out, "</svg>\n");
  return fmt::to_string(buf);
}

void write_svg(const Scene& scene, const std::filesystem::path& path) { write_atomic(path, format_svg(scene)); }

}  // namespace nemvis
