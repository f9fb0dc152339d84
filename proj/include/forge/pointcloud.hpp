// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "forge/augment.hpp"
#include "forge/geometry.hpp"
#include "forge/image.hpp"

namespace forge {

/// Metric point cloud in the camera frame; colors and source pixels are
/// index-aligned with points.
struct PointCloud {
  std::vector<Point3> points;
  std::vector<std::array<std::uint8_t, 3>> colors;
  std::vector<Pixel> source_pixels;
};

/// Roughly n pixels on a uniform lattice at cell centers:
/// rows = round(sqrt(n * H / W)), cols = round(n / rows). Count lands within
/// 5% of n. Throws when n < 1 or n > W * H.
std::vector<Pixel> grid_pixels(const ImageDims& dims, int n);

struct AssembleResult {
  PointCloud cloud;
  std::size_t failures = 0;  // skipped queries (NaN / non-positive answers)
};

// Turn per-pixel euclidean-distance answers into 3D points: convert each
// answer to principal-axis depth for its pixel, back-project, and color from
// the image. Failed queries are marked NaN in answers and only counted.
// assemble parallelizes over pixels; assemble_serial is the reference kernel.
AssembleResult assemble(const Image& image, const Intrinsics& k,
                        std::span<const Pixel> pixels, std::span<const double> answers);
AssembleResult assemble_serial(const Image& image, const Intrinsics& k,
                               std::span<const Pixel> pixels, std::span<const double> answers);

/// Binary little-endian PLY: x, y, z as float32 plus uchar red, green, blue.
void write_ply(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud read_ply(const std::filesystem::path& path);

}  // namespace forge
