// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forge/augment.hpp"
#include "forge/data.hpp"
#include "forge/markers.hpp"
#include "forge/prompts.hpp"
#include "forge/task_kind.hpp"

namespace forge {

struct LoadedSample {
  SampleManifestEntry meta;
  Image image;
  DepthMap depth;
};

LoadedSample load_sample(const SampleManifestEntry& entry,
                         const std::filesystem::path& base_dir, double max_depth = 300.0);

/// k distinct pixels uniform over the validity mask, at cell centers.
/// Deterministic per generator state; throws when fewer than k pixels are valid.
std::vector<Pixel> sample_query_pixels(const DepthMap& depth, int k, Rng& rng);

struct TaskParams {
  double time_min = 2.0;    // seconds, speed task
  double time_max = 20.0;
  double speed_min = 0.5;   // m/s, time task
  double speed_max = 10.0;
  double pose_min_disp = 0.5;   // meters, pose pair gate
  double pose_max_disp = 50.0;
  int max_pixel_retries = 16;
};

/// One SFT sample: rendered image(s), question, answer, ground truth, provenance.
struct QaRecord {
  TaskKind task = TaskKind::distance;
  PromptVariant variant = PromptVariant::marker_plain;
  std::string sample_id;
  std::string dataset;
  std::vector<Image> images;             // two for pose, one otherwise
  std::vector<std::string> image_files;  // assigned at export time
  std::string question;
  std::string answer;
  double gt_value = 0;  // full precision; rounding happens in the answer text
  std::string unit;
  std::vector<Pixel> query_pixels_original;
  std::vector<Pixel> query_pixels;  // in the exported image frame
  std::optional<double> given_speed;
  std::optional<double> given_time;
  PixelTransform transform;
  Intrinsics intrinsics;  // of the exported image frame
  std::uint64_t seed = 0;
};

struct QaContext {
  AugmentConfig augment;
  MarkerSpec marker;
  PromptVariant variant = PromptVariant::marker_plain;
  TaskParams params;
  const TemplateTable* templates = nullptr;  // null -> builtin
};

/// Build one QA record for a single-image task. query_pixels are positions in
/// the original frame (one pixel, or two for two_point_distance); pixels whose
/// depth label is invalid are resampled from the mask a bounded number of times.
QaRecord make_qa(const LoadedSample& sample, TaskKind task,
                 std::span<const Pixel> query_pixels, const QaContext& ctx, Rng& rng);

/// Camera-pose QA over a frame pair; both entries need pose labels. Images are
/// unified to the same focal length and never cropped.
QaRecord make_qa_pose(const LoadedSample& first, const LoadedSample& second,
                      const QaContext& ctx, Rng& rng);

}  // namespace forge
