// SPDX-License-Identifier: Apache-2.0

#include "forge/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "forge/errors.hpp"

namespace forge {

void AugmentConfig::validate() const {
  if (!(f_uni > 0) || !std::isfinite(f_uni)) throw ConfigError("augment: f_uni must be > 0");
  if (crop_width_min < 1 || crop_height_min < 1 || crop_width_min > crop_width_max ||
      crop_height_min > crop_height_max) {
    throw ConfigError("augment: crop ranges must be positive with min <= max");
  }
  if (max_dim_guard < 0) throw ConfigError("augment: max_dim_guard must be >= 0");
}

Pixel transform_pixel(const Pixel& p, const PixelTransform& t) {
  return {p.u * t.scale_x - t.offset_x, p.v * t.scale_y - t.offset_y};
}

Pixel inverse_transform_pixel(const Pixel& p, const PixelTransform& t) {
  return {(p.u + t.offset_x) / t.scale_x, (p.v + t.offset_y) / t.scale_y};
}

namespace {

// Round-half-up to the nearest integer.
int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

}  // namespace

UnifyResult unify_focal(const ImageDims& dims, const Intrinsics& k, double f_uni,
                        int max_dim_guard) {
  if (dims.width < 1 || dims.height < 1) throw std::invalid_argument("unify_focal: bad dims");
  if (!k.valid()) throw std::invalid_argument("unify_focal: bad intrinsics");
  if (!(f_uni > 0) || !std::isfinite(f_uni)) {
    throw std::invalid_argument("unify_focal: f_uni must be > 0");
  }

  double sx = f_uni / k.fx;
  double sy = f_uni / k.fy;
  double focal = f_uni;
  if (max_dim_guard > 0) {
    const double w = sx * dims.width;
    const double h = sy * dims.height;
    const double largest = std::max(w, h);
    if (largest > max_dim_guard) {
      const double g = max_dim_guard / largest;
      sx *= g;
      sy *= g;
      focal *= g;
    }
  }

  UnifyResult out;
  out.dims.width = round_half_up(sx * dims.width);
  out.dims.height = round_half_up(sy * dims.height);
  if (out.dims.width < 1 || out.dims.height < 1) {
    throw std::invalid_argument("unify_focal: degenerate output size");
  }
  out.k = {focal, focal, k.cx * sx, k.cy * sy};
  out.transform = {sx, sy, 0.0, 0.0};
  return out;
}

namespace {

struct AxisPlacement {
  int size = 0;
  int lo = 0;  // inclusive feasible origin range
  int hi = 0;
};

// Pick a side length and the feasible origin interval along one axis.
AxisPlacement place_axis(Rng& rng, int image_extent, int range_min, int range_max,
                         std::span<const Pixel> pixels, bool horizontal) {
  AxisPlacement out;
  const int lo_size = std::min(range_min, image_extent);
  const int hi_size = std::min(range_max, image_extent);
  out.size = static_cast<int>(rng.uniform_int(lo_size, hi_size));

  double min_c = 0.0;
  double max_c = 0.0;
  if (!pixels.empty()) {
    min_c = horizontal ? pixels[0].u : pixels[0].v;
    max_c = min_c;
    for (const Pixel& p : pixels) {
      const double c = horizontal ? p.u : p.v;
      min_c = std::min(min_c, c);
      max_c = std::max(max_c, c);
    }
    if (min_c < 0 || max_c >= image_extent) {
      throw std::invalid_argument("sample_crop: must_contain pixel outside image");
    }
    // Containment needs origin <= c and origin > c - size for every pixel.
    int needed = static_cast<int>(std::floor(max_c)) - static_cast<int>(std::floor(min_c)) + 1;
    needed = std::min(needed, image_extent);
    out.size = std::max(out.size, needed);
  }

  int lo = 0;
  int hi = image_extent - out.size;
  if (!pixels.empty()) {
    lo = std::max(lo, static_cast<int>(std::floor(max_c - out.size)) + 1);
    hi = std::min(hi, static_cast<int>(std::floor(min_c)));
  }
  if (lo > hi) throw std::invalid_argument("sample_crop: no feasible crop placement");
  out.lo = lo;
  out.hi = hi;
  return out;
}

}  // namespace

CropRect sample_crop(Rng& rng, const ImageDims& dims, const AugmentConfig& cfg,
                     std::span<const Pixel> must_contain) {
  cfg.validate();
  if (dims.width < 1 || dims.height < 1) throw std::invalid_argument("sample_crop: bad dims");

  const AxisPlacement x = place_axis(rng, dims.width, cfg.crop_width_min, cfg.crop_width_max,
                                     must_contain, /*horizontal=*/true);
  const AxisPlacement y = place_axis(rng, dims.height, cfg.crop_height_min, cfg.crop_height_max,
                                     must_contain, /*horizontal=*/false);

  CropRect rect;
  rect.width = x.size;
  rect.height = y.size;
  rect.x = static_cast<int>(rng.uniform_int(x.lo, x.hi));
  rect.y = static_cast<int>(rng.uniform_int(y.lo, y.hi));
  return rect;
}

AugmentedSample apply_augment(const Image& image, const Intrinsics& k,
                              std::span<const Pixel> query_pixels,
                              const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  for (const Pixel& p : query_pixels) {
    if (!image.contains(p.u, p.v)) {
      throw std::invalid_argument("apply_augment: query pixel outside image");
    }
  }

  const ImageDims dims{image.width, image.height};
  const UnifyResult uni = unify_focal(dims, k, cfg.f_uni, cfg.max_dim_guard);

  AugmentedSample out;
  out.resized_dims = uni.dims;
  out.transform = uni.transform;
  out.k = uni.k;
  out.image = resize_bilinear(image, uni.dims.width, uni.dims.height);

  std::vector<Pixel> moved;
  moved.reserve(query_pixels.size());
  for (const Pixel& p : query_pixels) moved.push_back(transform_pixel(p, uni.transform));

  if (cfg.crop_enabled) {
    const CropRect rect = sample_crop(rng, uni.dims, cfg, moved);
    out.crop = rect;
    out.image = crop_image(out.image, rect.x, rect.y, rect.width, rect.height);
    out.transform.offset_x = rect.x;
    out.transform.offset_y = rect.y;
    out.k.cx -= rect.x;
    out.k.cy -= rect.y;
    for (Pixel& p : moved) {
      p.u -= rect.x;
      p.v -= rect.y;
    }
  } else {
    out.crop = {0, 0, uni.dims.width, uni.dims.height};
  }

  // The exact-scale coordinate map can land a border pixel half a raster cell
  // outside the rounded output; nudge it back in.
  for (Pixel& p : moved) {
    p.u = std::clamp(p.u, 0.0, std::nextafter(static_cast<double>(out.image.width), 0.0));
    p.v = std::clamp(p.v, 0.0, std::nextafter(static_cast<double>(out.image.height), 0.0));
  }
  out.query_pixels = std::move(moved);
  return out;
}

}  // namespace forge
