// SPDX-License-Identifier: Apache-2.0

#include "forge/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace forge {

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

namespace {

// One output row of the bilinear kernel. Shared by the serial and OpenMP
// entry points so the two stay bit-identical.
void resize_row(const Image& src, Image& dst, int y, double sx, double sy) {
  const int c = src.channels;
  const double src_y = (y + 0.5) * sy - 0.5;
  const double fy = std::clamp(src_y, 0.0, static_cast<double>(src.height - 1));
  const int y0 = static_cast<int>(fy);
  const int y1 = std::min(y0 + 1, src.height - 1);
  const double wy = fy - y0;
  std::uint8_t* out = dst.pixel(0, y);
  for (int x = 0; x < dst.width; ++x) {
    const double src_x = (x + 0.5) * sx - 0.5;
    const double fx = std::clamp(src_x, 0.0, static_cast<double>(src.width - 1));
    const int x0 = static_cast<int>(fx);
    const int x1 = std::min(x0 + 1, src.width - 1);
    const double wx = fx - x0;
    const std::uint8_t* p00 = src.pixel(x0, y0);
    const std::uint8_t* p10 = src.pixel(x1, y0);
    const std::uint8_t* p01 = src.pixel(x0, y1);
    const std::uint8_t* p11 = src.pixel(x1, y1);
    for (int ch = 0; ch < c; ++ch) {
      const double top = p00[ch] + (p10[ch] - p00[ch]) * wx;
      const double bot = p01[ch] + (p11[ch] - p01[ch]) * wx;
      const double v = top + (bot - top) * wy;
      out[x * c + ch] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
  }
}

void check_resize_args(const Image& src, int out_w, int out_h) {
  if (src.empty()) throw std::invalid_argument("resize: empty source image");
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize: output dims must be >= 1");
}

}  // namespace

Image resize_bilinear(const Image& src, int out_w, int out_h) {
  check_resize_args(src, out_w, out_h);
  if (out_w == src.width && out_h == src.height) return src;
  Image dst(out_w, out_h, src.channels);
  const double sx = static_cast<double>(src.width) / out_w;
  const double sy = static_cast<double>(src.height) / out_h;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < out_h; ++y) {
    resize_row(src, dst, y, sx, sy);
  }
  return dst;
}

Image resize_bilinear_serial(const Image& src, int out_w, int out_h) {
  check_resize_args(src, out_w, out_h);
  if (out_w == src.width && out_h == src.height) return src;
  Image dst(out_w, out_h, src.channels);
  const double sx = static_cast<double>(src.width) / out_w;
  const double sy = static_cast<double>(src.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    resize_row(src, dst, y, sx, sy);
  }
  return dst;
}

Image crop_image(const Image& src, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > src.width || y + h > src.height) {
    throw std::invalid_argument("crop rectangle outside image");
  }
  Image dst(w, h, src.channels);
  const std::size_t row_bytes = static_cast<std::size_t>(w) * src.channels;
  for (int r = 0; r < h; ++r) {
    std::memcpy(dst.pixel(0, r), src.pixel(x, y + r), row_bytes);
  }
  return dst;
}

}  // namespace forge
