#pragma once

#include "nemvis/integrator.hpp"
#include "nemvis/seeding.hpp"
#include "nemvis/topology.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace nemvis {

struct Rgb {
  std::uint8_t r, g, b;
  bool operator==(const Rgb&) const = default;
};

/// Viridis, sampled at nine evenly spaced control points and interpolated
/// linearly in sRGB. Lightness increases monotonically. t is clamped to [0, 1].
Rgb viridis(double t);
std::string to_hex(Rgb c);

struct Scene {
  std::vector<Hyperstreamline> streamlines;  // one per seed, possibly empty
  TopologicalTemplate tmpl;
  std::vector<SeedPoint> seeds;
  Vec2 lower{0.0, 0.0}, upper{1.0, 1.0};  // domain bounding box
  int width_px = 800;
  double margin_px = 10.0;
  bool overlay_template = true;
};

/// Maps domain coordinates to the viewport, preserving aspect ratio and
/// flipping y so that +y points up.
class CanvasTransform {
 public:
  explicit CanvasTransform(const Scene& scene);
  Vec2 apply(const Vec2& p) const;
  double scale() const { return scale_; }
  int width() const { return width_; }
  int height() const { return height_; }

 private:
  Vec2 lower_;
  double scale_, margin_;
  int width_, height_;
};

/// One <g class="ribbon"> per streamline, holding the filled quad strip
/// split into runs of equal color. Template curves are dashed overlays,
/// defects are markers.
std::string format_svg(const Scene& scene);
void write_svg(const Scene& scene, const std::filesystem::path& path);

/// Left and right ribbon outlines (offset by half_width along the local
/// normal of the centerline).
std::pair<std::vector<Vec2>, std::vector<Vec2>> ribbon_outline(const Hyperstreamline& line);

}  // namespace nemvis
