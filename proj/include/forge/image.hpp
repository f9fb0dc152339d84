// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace forge {

/// Interleaved 8-bit raster, row-major. channels is 1 (gray), 3 (RGB) or 4 (RGBA).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c) {
    data.assign(static_cast<std::size_t>(w) * h * c, 0);
  }

  std::uint8_t* pixel(int x, int y) {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * channels;
  }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * channels;
  }
  bool contains(double u, double v) const {
    return u >= 0 && v >= 0 && u < width && v < height;
  }
  bool empty() const { return data.empty(); }
};

/// Per-pixel principal-axis depth in meters plus a validity mask.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> meters;        // row-major
  std::vector<std::uint8_t> valid;  // 1 = trustworthy label

  DepthMap() = default;
  DepthMap(int w, int h) : width(w), height(h) {
    meters.assign(static_cast<std::size_t>(w) * h, 0.f);
    valid.assign(static_cast<std::size_t>(w) * h, 0);
  }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  float at(int x, int y) const { return meters[index(x, y)]; }
  bool is_valid(int x, int y) const { return valid[index(x, y)] != 0; }
  std::size_t valid_count() const;
};

// Bilinear resize of 8-bit rasters with half-pixel-center alignment.
// resize_bilinear runs the row loop under OpenMP; resize_bilinear_serial is the
// reference kernel the tests and the benchmark compare against. Both produce
// bit-identical output.
Image resize_bilinear(const Image& src, int out_w, int out_h);
Image resize_bilinear_serial(const Image& src, int out_w, int out_h);

/// Crop to the rectangle [x, x+w) x [y, y+h); must lie inside the image.
Image crop_image(const Image& src, int x, int y, int w, int h);

}  // namespace forge
