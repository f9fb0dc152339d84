// SPDX-License-Identifier: Apache-2.0

#include "forge/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace forge {

std::vector<Pixel> grid_pixels(const ImageDims& dims, int n) {
  if (n < 1) throw std::invalid_argument("grid_pixels: n must be >= 1");
  const std::int64_t total = static_cast<std::int64_t>(dims.width) * dims.height;
  if (n > total) throw std::invalid_argument("grid_pixels: n exceeds pixel count");

  const double w = dims.width;
  const double h = dims.height;
  int rows = static_cast<int>(std::lround(std::sqrt(n * h / w)));
  rows = std::clamp(rows, 1, dims.height);
  int cols = static_cast<int>(std::lround(static_cast<double>(n) / rows));
  cols = std::clamp(cols, 1, dims.width);

  std::vector<Pixel> out;
  out.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      out.push_back({(c + 0.5) * w / cols, (r + 0.5) * h / rows});
    }
  }
  return out;
}

namespace {

struct Slot {
  Point3 point;
  std::array<std::uint8_t, 3> color;
  bool ok = false;
};

// One grid query: euclidean answer -> principal depth -> 3D point plus color.
Slot assemble_one(const Image& image, const Intrinsics& k, const Pixel& p, double answer) {
  Slot s;
  if (!(answer > 0) || !std::isfinite(answer)) return s;
  const double z = principal_from_euclid(p, answer, k);
  s.point = back_project(p, z, k);
  const int x = std::clamp(static_cast<int>(p.u), 0, image.width - 1);
  const int y = std::clamp(static_cast<int>(p.v), 0, image.height - 1);
  const std::uint8_t* px = image.pixel(x, y);
  if (image.channels >= 3) {
    s.color = {px[0], px[1], px[2]};
  } else {
    s.color = {px[0], px[0], px[0]};
  }
  s.ok = true;
  return s;
}

AssembleResult gather(std::vector<Slot>&& slots, std::span<const Pixel> pixels) {
  AssembleResult out;
  out.cloud.points.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i].ok) {
      ++out.failures;
      continue;
    }
    out.cloud.points.push_back(slots[i].point);
    out.cloud.colors.push_back(slots[i].color);
    out.cloud.source_pixels.push_back(pixels[i]);
  }
  return out;
}

void check_assemble_args(const Image& image, std::span<const Pixel> pixels,
                         std::span<const double> answers) {
  if (image.empty()) throw std::invalid_argument("assemble: empty image");
  if (pixels.size() != answers.size()) {
    throw std::invalid_argument("assemble: pixels and answers must align");
  }
}

}  // namespace

AssembleResult assemble(const Image& image, const Intrinsics& k,
                        std::span<const Pixel> pixels, std::span<const double> answers) {
  check_assemble_args(image, pixels, answers);
  std::vector<Slot> slots(pixels.size());
  const std::int64_t n = static_cast<std::int64_t>(pixels.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    slots[i] = assemble_one(image, k, pixels[i], answers[i]);
  }
  return gather(std::move(slots), pixels);
}

AssembleResult assemble_serial(const Image& image, const Intrinsics& k,
                               std::span<const Pixel> pixels, std::span<const double> answers) {
  check_assemble_args(image, pixels, answers);
  std::vector<Slot> slots(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    slots[i] = assemble_one(image, k, pixels[i], answers[i]);
  }
  return gather(std::move(slots), pixels);
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path) {
  if (!cloud.colors.empty() && cloud.colors.size() != cloud.points.size()) {
    throw std::invalid_argument("write_ply: colors must match point count");
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "ply\nformat binary_little_endian 1.0\n"
    << "element vertex " << cloud.points.size() << "\n"
    << "property float x\nproperty float y\nproperty float z\n"
    << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
    << "end_header\n";
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const float xyz[3] = {static_cast<float>(cloud.points[i].x),
                          static_cast<float>(cloud.points[i].y),
                          static_cast<float>(cloud.points[i].z)};
    f.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    const std::array<std::uint8_t, 3> rgb =
        i < cloud.colors.size() ? cloud.colors[i] : std::array<std::uint8_t, 3>{255, 255, 255};
    f.write(reinterpret_cast<const char*>(rgb.data()), 3);
  }
  if (!f) throw std::runtime_error("short write on " + path.string());
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  if (!std::getline(f, line) || line != "ply") throw std::runtime_error("ply: bad magic");
  std::size_t vertex_count = 0;
  bool little_endian = false;
  bool header_done = false;
  std::vector<std::string> properties;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      little_endian = fmt == "binary_little_endian";
    } else if (word == "element") {
      std::string what;
      ss >> what >> vertex_count;
      if (what != "vertex") throw std::runtime_error("ply: only vertex elements supported");
    } else if (word == "property") {
      std::string type, name;
      ss >> type >> name;
      properties.push_back(type + ":" + name);
    } else if (word == "end_header") {
      header_done = true;
      break;
    } else if (word != "comment" && word != "ply") {
      throw std::runtime_error("ply: unexpected header line: " + line);
    }
  }
  if (!header_done || !little_endian) throw std::runtime_error("ply: malformed header");
  const std::vector<std::string> expected = {"float:x", "float:y",  "float:z",
                                             "uchar:red", "uchar:green", "uchar:blue"};
  if (properties != expected) throw std::runtime_error("ply: unsupported vertex layout");

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  cloud.colors.reserve(vertex_count);
  for (std::size_t i = 0; i < vertex_count; ++i) {
    float xyz[3];
    std::uint8_t rgb[3];
    f.read(reinterpret_cast<char*>(xyz), sizeof(xyz));
    f.read(reinterpret_cast<char*>(rgb), sizeof(rgb));
    if (!f) throw std::runtime_error("ply: truncated vertex data");
    cloud.points.push_back({xyz[0], xyz[1], xyz[2]});
    cloud.colors.push_back({rgb[0], rgb[1], rgb[2]});
  }
  return cloud;
}

}  // namespace forge
