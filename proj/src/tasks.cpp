// SPDX-License-Identifier: Apache-2.0

#include "forge/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "forge/errors.hpp"

namespace forge {

LoadedSample load_sample(const SampleManifestEntry& entry,
                         const std::filesystem::path& base_dir, double max_depth) {
  LoadedSample s;
  s.meta = entry;
  s.image = load_entry_image(entry, base_dir);
  s.depth = read_depth(entry, base_dir, max_depth);
  return s;
}

std::vector<Pixel> sample_query_pixels(const DepthMap& depth, int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("sample_query_pixels: k must be >= 1");
  std::vector<std::uint32_t> valid;
  valid.reserve(depth.meters.size());
  for (std::uint32_t i = 0; i < depth.meters.size(); ++i) {
    if (depth.valid[i]) valid.push_back(i);
  }
  if (valid.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("sample_query_pixels: only " + std::to_string(valid.size()) +
                                " valid pixels, need " + std::to_string(k));
  }
  // Partial Fisher-Yates: the first k slots become the sample.
  std::vector<Pixel> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) {
    const std::size_t j = static_cast<std::size_t>(
        rng.uniform_int(i, static_cast<std::int64_t>(valid.size()) - 1));
    std::swap(valid[i], valid[j]);
    const std::uint32_t idx = valid[i];
    const int y = static_cast<int>(idx / depth.width);
    const int x = static_cast<int>(idx % depth.width);
    out.push_back({x + 0.5, y + 0.5});
  }
  return out;
}

namespace {

double depth_at(const DepthMap& depth, const Pixel& p) {
  const int x = std::clamp(static_cast<int>(p.u), 0, depth.width - 1);
  const int y = std::clamp(static_cast<int>(p.v), 0, depth.height - 1);
  return depth.is_valid(x, y) ? depth.at(x, y) : 0.0;
}

double round1(double v) { return static_cast<double>(std::llround(v * 10.0)) / 10.0; }

const TemplateTable& table_of(const QaContext& ctx) {
  return ctx.templates ? *ctx.templates : TemplateTable::builtin();
}

int pixels_needed(TaskKind task) { return task == TaskKind::two_point_distance ? 2 : 1; }

}  // namespace

QaRecord make_qa(const LoadedSample& sample, TaskKind task,
                 std::span<const Pixel> query_pixels, const QaContext& ctx, Rng& rng) {
  if (task == TaskKind::pose) {
    throw std::invalid_argument("make_qa: pose task needs two frames, use make_qa_pose");
  }
  const int need = pixels_needed(task);
  if (static_cast<int>(query_pixels.size()) != need) {
    throw std::invalid_argument("make_qa: task " + to_string(task) + " needs " +
                                std::to_string(need) + " query pixel(s)");
  }

  // Replace pixels that carry no usable depth label.
  std::vector<Pixel> pixels(query_pixels.begin(), query_pixels.end());
  for (Pixel& p : pixels) {
    int tries = 0;
    while (depth_at(sample.depth, p) <= 0) {
      if (++tries > ctx.params.max_pixel_retries) {
        throw std::invalid_argument("make_qa: no valid depth at query pixel after " +
                                    std::to_string(ctx.params.max_pixel_retries) + " retries");
      }
      p = sample_query_pixels(sample.depth, 1, rng)[0];
    }
  }

  AugmentedSample aug = apply_augment(sample.image, sample.meta.intrinsics, pixels, ctx.augment, rng);

  QaRecord rec;
  rec.task = task;
  rec.variant = ctx.variant;
  rec.sample_id = sample.meta.id;
  rec.dataset = sample.meta.dataset;
  rec.query_pixels_original = pixels;
  rec.query_pixels = aug.query_pixels;
  rec.transform = aug.transform;
  rec.intrinsics = aug.k;
  rec.unit = task_unit(task);

  // Ground truth from the original frame; augmentation does not touch it.
  const Intrinsics& k0 = sample.meta.intrinsics;
  const double z0 = depth_at(sample.depth, pixels[0]);
  const double euclid0 = euclid_from_principal(pixels[0], z0, k0);
  switch (task) {
    case TaskKind::distance:
      rec.gt_value = euclid0;
      break;
    case TaskKind::principal_axis_distance:
      rec.gt_value = z0;
      break;
    case TaskKind::speed: {
      rec.given_time = round1(rng.uniform(ctx.params.time_min, ctx.params.time_max));
      rec.gt_value = euclid0 / *rec.given_time;
      break;
    }
    case TaskKind::time: {
      rec.given_speed = round1(rng.uniform(ctx.params.speed_min, ctx.params.speed_max));
      rec.gt_value = euclid0 / *rec.given_speed;
      break;
    }
    case TaskKind::two_point_distance: {
      const double z1 = depth_at(sample.depth, pixels[1]);
      const Point3 a = back_project(pixels[0], z0, k0);
      const Point3 b = back_project(pixels[1], z1, k0);
      rec.gt_value = (a - b).norm();
      break;
    }
    default:
      break;
  }

  // Render the pixel reference; the text_coordinate variant speaks in
  // coordinates instead of drawing a marker.
  if (ctx.variant == PromptVariant::text_coordinate) {
    rec.images.push_back(std::move(aug.image));
  } else if (task == TaskKind::two_point_distance) {
    MarkerSpec a = ctx.marker;
    a.label = "A";
    MarkerSpec b = ctx.marker;
    b.label = "B";
    const std::pair<Pixel, MarkerSpec> points[] = {{aug.query_pixels[0], a},
                                                   {aug.query_pixels[1], b}};
    rec.images.push_back(render_multi(aug.image, points));
  } else {
    rec.images.push_back(render_marker(aug.image, aug.query_pixels[0], ctx.marker));
  }

  QuestionContext qctx;
  qctx.width = rec.images[0].width;
  qctx.height = rec.images[0].height;
  qctx.pixel = aug.query_pixels[0];
  qctx.intrinsics = aug.k;
  qctx.given_speed = rec.given_speed;
  qctx.given_time = rec.given_time;
  rec.question = build_question(task, ctx.variant, qctx, table_of(ctx));

  AnswerValues values;
  values.value = rec.gt_value;
  if (ctx.variant == PromptVariant::ray_then_depth) {
    const RayAngles angles = ray_angles(aug.query_pixels[0], aug.k);
    values.horizontal_deg = angles.horizontal_deg;
    values.vertical_deg = angles.vertical_deg;
  }
  rec.answer = build_answer(task, ctx.variant, values, table_of(ctx));
  return rec;
}

QaRecord make_qa_pose(const LoadedSample& first, const LoadedSample& second,
                      const QaContext& ctx, Rng& rng) {
  if (!first.meta.pose || !second.meta.pose) {
    throw std::invalid_argument("pose task: both frames need pose labels (entries '" +
                                first.meta.id + "', '" + second.meta.id + "')");
  }
  const Point3 delta = camera_center(*first.meta.pose) - camera_center(*second.meta.pose);
  const double dist = delta.norm();
  if (dist < ctx.params.pose_min_disp || dist > ctx.params.pose_max_disp) {
    throw std::invalid_argument("pose task: displacement " + std::to_string(dist) +
                                " m outside [" + std::to_string(ctx.params.pose_min_disp) +
                                ", " + std::to_string(ctx.params.pose_max_disp) + "]");
  }

  // Identical unified focal length, no cropping, for both frames.
  AugmentConfig cfg = ctx.augment;
  cfg.crop_enabled = false;

  QaRecord rec;
  rec.task = TaskKind::pose;
  rec.variant = ctx.variant;
  rec.sample_id = first.meta.id + "+" + second.meta.id;
  rec.dataset = first.meta.dataset;
  rec.unit = task_unit(TaskKind::pose);
  rec.gt_value = dist;

  for (const LoadedSample* s : {&first, &second}) {
    AugmentedSample aug = apply_augment(s->image, s->meta.intrinsics, {}, cfg, rng);
    rec.images.push_back(std::move(aug.image));
    rec.transform = aug.transform;  // per-frame scale; frames share f_uni
    rec.intrinsics = aug.k;
  }

  QuestionContext qctx;
  qctx.width = rec.images[0].width;
  qctx.height = rec.images[0].height;
  rec.question = build_question(TaskKind::pose, ctx.variant, qctx, table_of(ctx));
  rec.answer = build_answer(TaskKind::pose, ctx.variant, {rec.gt_value, {}, {}}, table_of(ctx));
  return rec;
}

}  // namespace forge
