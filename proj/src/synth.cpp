// SPDX-License-Identifier: Apache-2.0

#include "forge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "forge/errors.hpp"
#include "forge/png_io.hpp"

namespace forge {

namespace {

struct Sphere {
  Point3 center;
  double radius;
  std::array<std::uint8_t, 3> color;
};

struct Scene {
  // Background plane n . X = c with n = (nx, ny, 1).
  double nx = 0, ny = 0, c = 10;
  std::array<std::uint8_t, 3> plane_color{180, 180, 180};
  std::vector<Sphere> spheres;
};

std::array<std::uint8_t, 3> random_color(Rng& rng) {
  return {static_cast<std::uint8_t>(rng.uniform_int(40, 230)),
          static_cast<std::uint8_t>(rng.uniform_int(40, 230)),
          static_cast<std::uint8_t>(rng.uniform_int(40, 230))};
}

Scene make_scene(const SynthConfig& cfg, Rng& rng) {
  Scene scene;
  const double z_bg = rng.uniform(8.0, std::min(60.0, cfg.max_depth * 0.75));
  // Tilt small enough that every ray still hits the plane in front of the camera.
  scene.nx = rng.uniform(-0.15, 0.15);
  scene.ny = rng.uniform(-0.15, 0.15);
  scene.c = z_bg;
  scene.plane_color = random_color(rng);

  const int n_spheres =
      cfg.mode == SynthConfig::Mode::plane
          ? 0
          : static_cast<int>(rng.uniform_int(std::min(1, cfg.max_spheres), cfg.max_spheres));
  for (int i = 0; i < n_spheres; ++i) {
    Sphere s;
    const double z = rng.uniform(1.5, std::max(2.5, 0.6 * z_bg));
    s.center = {rng.uniform(-0.25, 0.25) * z, rng.uniform(-0.2, 0.2) * z, z};
    s.radius = rng.uniform(0.15, 0.12 * z);
    s.color = random_color(rng);
    scene.spheres.push_back(s);
  }
  return scene;
}

// Depth along the ray through the pixel plus a flat-shaded color.
void trace(const Scene& scene, double dx, double dy, double& z_out,
           std::array<std::uint8_t, 3>& color_out, bool checker) {
  const double denom = scene.nx * dx + scene.ny * dy + 1.0;
  double best_t = scene.c / denom;
  color_out = scene.plane_color;
  if (checker) {
    color_out[0] = static_cast<std::uint8_t>(color_out[0] * 0.75);
    color_out[1] = static_cast<std::uint8_t>(color_out[1] * 0.75);
    color_out[2] = static_cast<std::uint8_t>(color_out[2] * 0.75);
  }
  const double d2 = dx * dx + dy * dy + 1.0;
  for (const Sphere& s : scene.spheres) {
    const double dc = dx * s.center.x + dy * s.center.y + s.center.z;
    const double c2 = s.center.x * s.center.x + s.center.y * s.center.y + s.center.z * s.center.z;
    const double disc = dc * dc - d2 * (c2 - s.radius * s.radius);
    if (disc <= 0) continue;
    const double t = (dc - std::sqrt(disc)) / d2;
    if (t > 0 && t < best_t) {
      best_t = t;
      color_out = s.color;
    }
  }
  z_out = best_t;
}

}  // namespace

SynthSample make_synth_sample(const SynthConfig& cfg, std::uint64_t index) {
  Rng rng(derive_seed(cfg.seed, index));
  SynthSample out;
  out.image = Image(cfg.width, cfg.height, 3);
  out.depth.assign(static_cast<std::size_t>(cfg.width) * cfg.height, 0.f);

  out.intrinsics.fx = rng.uniform(0.7, 1.6) * cfg.width;
  out.intrinsics.fy = out.intrinsics.fx * rng.uniform(0.95, 1.05);
  out.intrinsics.cx = cfg.width / 2.0 + rng.uniform(-0.03, 0.03) * cfg.width;
  out.intrinsics.cy = cfg.height / 2.0 + rng.uniform(-0.03, 0.03) * cfg.height;

  // A gently drifting camera path; rotation stays identity.
  out.pose = {1, 0, 0, 0.8 * static_cast<double>(index),
              0, 1, 0, 0.15 * static_cast<double>(index),
              0, 0, 1, 1.1 * static_cast<double>(index),
              0, 0, 0, 1};

  if (cfg.mode == SynthConfig::Mode::random_depth) {
    const double lo = std::log(cfg.lu_min);
    const double hi = std::log(cfg.lu_max);
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * cfg.width + x;
        out.depth[i] = static_cast<float>(std::exp(rng.uniform(lo, hi)));
        std::uint8_t* px = out.image.pixel(x, y);
        px[0] = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
        px[1] = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
        px[2] = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
      }
    }
  } else {
    const Scene scene = make_scene(cfg, rng);
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        const double dx = (x + 0.5 - out.intrinsics.cx) / out.intrinsics.fx;
        const double dy = (y + 0.5 - out.intrinsics.cy) / out.intrinsics.fy;
        double z = 0;
        std::array<std::uint8_t, 3> color{};
        const bool checker = ((x / 16) + (y / 16)) % 2 == 0;
        trace(scene, dx, dy, z, color, checker);
        z = std::clamp(z, cfg.min_depth, cfg.max_depth);
        const std::size_t i = static_cast<std::size_t>(y) * cfg.width + x;
        out.depth[i] = static_cast<float>(z);
        std::uint8_t* px = out.image.pixel(x, y);
        px[0] = color[0];
        px[1] = color[1];
        px[2] = color[2];
      }
    }
  }

  if (cfg.invalid_fraction > 0) {
    const auto n = static_cast<std::size_t>(cfg.invalid_fraction * out.depth.size());
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t at = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(out.depth.size()) - 1));
      out.depth[at] = 0.f;
    }
  }
  return out;
}

DatasetIndex generate_synthetic(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.count < 1) throw ConfigError("synth: count must be >= 1");
  std::filesystem::create_directories(out_dir);

  DatasetIndex index;
  for (int i = 0; i < cfg.count; ++i) {
    const SynthSample sample = make_synth_sample(cfg, static_cast<std::uint64_t>(i));
    char name[32];
    std::snprintf(name, sizeof(name), "%s_%05d", cfg.dataset.c_str(), i);

    SampleManifestEntry e;
    e.id = name;
    e.dataset = cfg.dataset;
    e.split = cfg.split;
    e.intrinsics = sample.intrinsics;
    e.depth_scale = cfg.depth_scale;
    e.depth_encoding = cfg.encoding;
    if (cfg.with_pose) e.pose = sample.pose;
    e.image_path = std::string(name) + ".png";
    save_png(out_dir / e.image_path, sample.image);

    switch (cfg.encoding) {
      case DepthEncoding::png16: {
        std::vector<std::uint16_t> raw(sample.depth.size());
        for (std::size_t j = 0; j < raw.size(); ++j) {
          const double units = sample.depth[j] / cfg.depth_scale;
          raw[j] = static_cast<std::uint16_t>(std::clamp(units, 0.0, 65535.0) + 0.5);
        }
        e.depth_path = std::string(name) + "_depth.png";
        write_file(out_dir / e.depth_path, encode_png_gray16(raw, cfg.width, cfg.height));
        break;
      }
      case DepthEncoding::pfm: {
        std::vector<float> units(sample.depth.size());
        for (std::size_t j = 0; j < units.size(); ++j) {
          units[j] = static_cast<float>(sample.depth[j] / cfg.depth_scale);
        }
        e.depth_path = std::string(name) + "_depth.pfm";
        write_file(out_dir / e.depth_path, encode_pfm(units, cfg.width, cfg.height));
        break;
      }
      case DepthEncoding::npy: {
        std::vector<float> units(sample.depth.size());
        for (std::size_t j = 0; j < units.size(); ++j) {
          units[j] = static_cast<float>(sample.depth[j] / cfg.depth_scale);
        }
        e.depth_path = std::string(name) + "_depth.npy";
        write_file(out_dir / e.depth_path, encode_npy(units, cfg.width, cfg.height));
        break;
      }
    }
    index.by_dataset[e.dataset].push_back(index.entries.size());
    index.entries.push_back(std::move(e));
  }
  save_manifest(index, out_dir / "manifest.jsonl");
  return index;
}

}  // namespace forge
