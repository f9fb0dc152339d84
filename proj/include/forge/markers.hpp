// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forge/geometry.hpp"
#include "forge/image.hpp"

namespace forge {

enum class MarkerStyle { arrow, cross, circle };

MarkerStyle marker_style_from_string(const std::string& s);
std::string to_string(MarkerStyle s);

struct MarkerSpec {
  MarkerStyle style = MarkerStyle::arrow;
  int stroke_width = 5;
  int size = 40;                           // tip-to-tail extent in pixels
  std::array<std::uint8_t, 3> color{255, 0, 0};
  std::string label;                       // drawn next to the marker; <= 8 chars

  void validate() const;
};

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
};

/// Draw one marker whose tip coincides with p. Pixels outside marker_bbox are
/// untouched. Throws std::out_of_range when p lies outside the image.
Image render_marker(const Image& image, const Pixel& p, const MarkerSpec& spec);

/// Draw one marker per point. Labels must be unique; arrows auto-flip near the
/// borders so the body stays inside the frame.
Image render_multi(const Image& image,
                   std::span<const std::pair<Pixel, MarkerSpec>> points);

/// Conservative bound on the pixels render_marker may touch, clipped to the image.
PixelBox marker_bbox(const Image& image, const Pixel& p, const MarkerSpec& spec);

}  // namespace forge
