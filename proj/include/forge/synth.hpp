// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>

#include "forge/data.hpp"

namespace forge {

// Synthetic depth scenes (random planes and spheres ray-cast to a depth grid)
// so every pipeline stage can run and be tested without licensed datasets.
struct SynthConfig {
  int count = 16;
  int width = 320;
  int height = 240;
  std::uint64_t seed = 0;
  enum class Mode {
    scene,         // tilted background plane plus a few spheres
    plane,         // background plane only
    random_depth,  // i.i.d. log-uniform depth per pixel
  };
  Mode mode = Mode::scene;
  int max_spheres = 3;
  double min_depth = 0.5;   // scene geometry is kept above this
  double max_depth = 80.0;
  double lu_min = 0.5;      // random_depth log-uniform range, meters
  double lu_max = 10.0;
  double invalid_fraction = 0.0;  // pixels masked invalid (raw 0)
  DepthEncoding encoding = DepthEncoding::png16;
  double depth_scale = 0.0025;
  std::string dataset = "synthetic";
  Split split = Split::eval;
  bool with_pose = true;
};

struct SynthSample {
  Image image;
  std::vector<float> depth;  // principal-axis meters, exact (pre-quantization)
  Intrinsics intrinsics;
  std::array<double, 16> pose;
};

/// Deterministic in-memory sample for tests; index seeds the per-sample stream.
SynthSample make_synth_sample(const SynthConfig& cfg, std::uint64_t index);

/// Write count samples (image + depth + manifest.jsonl) under out_dir and
/// return the loaded index.
DatasetIndex generate_synthetic(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace forge
