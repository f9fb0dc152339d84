// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "forge/geometry.hpp"
#include "forge/image.hpp"
#include "forge/rng.hpp"

namespace forge {

struct ImageDims {
  int width = 0;
  int height = 0;
};

/// Intrinsic-conditioned augmentation settings. Defaults mirror the training
/// recipe: unified focal length 1000 px, crop width 1000-1400, height 700-1200.
struct AugmentConfig {
  double f_uni = 1000.0;
  int crop_width_min = 1000;
  int crop_width_max = 1400;
  int crop_height_min = 700;
  int crop_height_max = 1200;
  bool crop_enabled = true;
  // Guard against runaway output sizes when tiny-focal images are unified.
  // 0 disables the guard (parity runs). When it triggers, both axes shrink by a
  // common factor and the resulting focal length is f_uni * factor.
  int max_dim_guard = 4096;

  void validate() const;
};

/// Composition of the resize and crop in pixel space:
/// out = (u * scale_x - offset_x, v * scale_y - offset_y).
struct PixelTransform {
  double scale_x = 1.0;
  double scale_y = 1.0;
  double offset_x = 0.0;
  double offset_y = 0.0;
};

Pixel transform_pixel(const Pixel& p, const PixelTransform& t);
Pixel inverse_transform_pixel(const Pixel& p, const PixelTransform& t);

struct UnifyResult {
  ImageDims dims;       // resized raster size (rounded half-up)
  Intrinsics k;         // fx = fy = f_uni (times the guard factor if it fired)
  PixelTransform transform;
};

// Resize plan that maps the image onto the unified focal length:
// W' = round(f_uni/fx * W), H' = round(f_uni/fy * H). Pixel coordinates and the
// principal point scale by the exact per-axis factors f_uni/fx and f_uni/fy so
// back-projected 3D points are preserved to machine precision; the raster dims
// are the rounded values.
UnifyResult unify_focal(const ImageDims& dims, const Intrinsics& k, double f_uni,
                        int max_dim_guard = 0);

struct CropRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

// Sample a crop rectangle: side lengths uniform over the configured ranges
// clamped to the image, origin uniform over the placements that keep every
// must_contain pixel inside. If no placement fits the sampled size, the side
// grows to the minimal feasible length (never past the image).
CropRect sample_crop(Rng& rng, const ImageDims& dims, const AugmentConfig& cfg,
                     std::span<const Pixel> must_contain);

struct AugmentedSample {
  Image image;
  Intrinsics k;
  std::vector<Pixel> query_pixels;
  PixelTransform transform;
  ImageDims resized_dims;  // before crop
  CropRect crop;           // full frame when cropping is disabled
};

// Full augmentation: bilinear resize to the unified focal length, then random
// crop tracking the query pixels. Ground-truth depths attached to a query pixel
// are not touched; the 3D point behind each pixel is invariant.
AugmentedSample apply_augment(const Image& image, const Intrinsics& k,
                              std::span<const Pixel> query_pixels,
                              const AugmentConfig& cfg, Rng& rng);

}  // namespace forge
