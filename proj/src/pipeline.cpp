// SPDX-License-Identifier: Apache-2.0

#include "forge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "forge/client.hpp"
#include "forge/errors.hpp"
#include "forge/png_io.hpp"
#include "forge/sft.hpp"
#include "forge/tasks.hpp"

namespace forge {

namespace {

int pixels_needed(TaskKind task) { return task == TaskKind::two_point_distance ? 2 : 1; }

// Entries of one dataset restricted to a split, falling back to all entries
// when the manifest does not mark that split.
std::vector<std::size_t> entries_for(const DatasetIndex& index, const std::string& dataset,
                                     Split want) {
  std::vector<std::size_t> out;
  for (std::size_t idx : index.by_dataset.at(dataset)) {
    if (index.entries[idx].split == want) out.push_back(idx);
  }
  if (out.empty()) out = index.by_dataset.at(dataset);
  return out;
}

// Ordered pose pairs: adjacent same-dataset frames that both carry pose labels
// and pass the displacement gate.
std::vector<std::pair<std::size_t, std::size_t>> pose_pairs(
    const DatasetIndex& index, const std::vector<std::size_t>& entries,
    const TaskParams& params) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
    const SampleManifestEntry& a = index.entries[entries[i]];
    const SampleManifestEntry& b = index.entries[entries[i + 1]];
    if (!a.pose || !b.pose) continue;
    const double d = (camera_center(*a.pose) - camera_center(*b.pose)).norm();
    if (d < params.pose_min_disp || d > params.pose_max_disp) continue;
    pairs.emplace_back(entries[i], entries[i + 1]);
  }
  return pairs;
}

// Oracle stream keyed by both the global seed and the oracle's own seed, so
// every subcommand honors the global seed while staying reproducible from the
// resolved config.
OracleConfig effective_oracle(const PipelineConfig& cfg) {
  OracleConfig oracle = cfg.oracle;
  oracle.seed = derive_seed(cfg.seed, cfg.oracle.seed);
  return oracle;
}

QaContext make_context(const PipelineConfig& cfg, bool for_eval) {
  QaContext ctx;
  ctx.augment = cfg.augment;
  if (for_eval) ctx.augment.crop_enabled = false;  // evaluation never crops
  ctx.marker = cfg.marker;
  ctx.variant = cfg.variant;
  ctx.params = cfg.task_params;
  ctx.templates = &cfg.templates();
  return ctx;
}

// Run fn(0..n-1) on a fixed-size thread pool; used for network-bound loops.
void parallel_indexed(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const int count = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  for (int t = 0; t < count; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

PrepareStats run_prepare(const PipelineConfig& cfg, const DatasetIndex& index,
                         const std::filesystem::path& manifest_dir,
                         const std::filesystem::path& out_dir, const PrepareOptions& options) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const QaContext ctx = make_context(cfg, /*for_eval=*/false);

  std::vector<QaRecord> records;
  const auto emit_single = [&](const SampleManifestEntry& entry, TaskKind task, int repeat) {
    const std::uint64_t seed = derive_seed(
        cfg.seed, "prepare/" + entry.id + "/" + to_string(task) + "/" + std::to_string(repeat));
    Rng rng(seed);
    const LoadedSample sample = load_sample(entry, manifest_dir, cfg.max_depth);
    const std::vector<Pixel> pixels =
        sample_query_pixels(sample.depth, pixels_needed(task), rng);
    QaRecord rec = make_qa(sample, task, pixels, ctx, rng);
    rec.seed = seed;
    records.push_back(std::move(rec));
  };
  const auto emit_pose = [&](const SampleManifestEntry& a, const SampleManifestEntry& b) {
    const std::uint64_t seed = derive_seed(cfg.seed, "prepare/" + a.id + "+" + b.id + "/pose");
    Rng rng(seed);
    QaRecord rec = make_qa_pose(load_sample(a, manifest_dir, cfg.max_depth),
                                load_sample(b, manifest_dir, cfg.max_depth), ctx, rng);
    rec.seed = seed;
    records.push_back(std::move(rec));
  };

  const bool wants_pose =
      std::find(cfg.tasks.begin(), cfg.tasks.end(), TaskKind::pose) != cfg.tasks.end();
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> pairs_by_dataset;
  if (wants_pose) {
    for (const auto& [name, _] : index.by_dataset) {
      auto pairs = pose_pairs(index, entries_for(index, name, Split::train), cfg.task_params);
      if (!pairs.empty()) pairs_by_dataset[name] = std::move(pairs);
    }
    if (pairs_by_dataset.empty()) {
      throw ConfigError("task pose: no eligible frame pairs with pose labels in the manifest");
    }
  }

  if (options.count) {
    if (*options.count < 1) throw ConfigError("prepare: count must be >= 1");
    MixtureSpec spec;
    spec.seed = derive_seed(cfg.seed, std::string_view("prepare/mixture"));
    spec.weights = cfg.mixture_weights;
    if (spec.weights.empty()) {
      for (const auto& [name, _] : index.by_dataset) spec.weights[name] = 1.0;
    }
    MixtureStream stream(spec, index);
    Rng pair_rng(derive_seed(cfg.seed, std::string_view("prepare/pose-pick")));
    for (int j = 0; j < *options.count; ++j) {
      const TaskKind task = cfg.tasks[j % cfg.tasks.size()];
      if (task == TaskKind::pose) {
        const SampleManifestEntry& drawn = stream.next();
        const auto it = pairs_by_dataset.find(drawn.dataset);
        const auto& pairs =
            it != pairs_by_dataset.end() ? it->second : pairs_by_dataset.begin()->second;
        const auto& [ia, ib] =
            pairs[pair_rng.uniform_int(0, static_cast<std::int64_t>(pairs.size()) - 1)];
        emit_pose(index.entries[ia], index.entries[ib]);
      } else {
        emit_single(stream.next(), task, j);
      }
    }
  } else {
    for (const auto& [name, _] : index.by_dataset) {
      for (std::size_t idx : entries_for(index, name, Split::train)) {
        for (TaskKind task : cfg.tasks) {
          if (task == TaskKind::pose) continue;
          for (int r = 0; r < cfg.pixels_per_image; ++r) {
            emit_single(index.entries[idx], task, r);
          }
        }
      }
    }
    if (wants_pose) {
      for (const auto& [name, pairs] : pairs_by_dataset) {
        for (const auto& [ia, ib] : pairs) emit_pose(index.entries[ia], index.entries[ib]);
      }
    }
  }

  const SftExportStats stats = export_sft(records, out_dir);
  write_pipeline_config(cfg, out_dir / "resolved.ini");

  PrepareStats out;
  out.records = stats.records;
  out.per_task = stats.per_task;
  return out;
}

namespace {

struct EvalPlanItem {
  std::string dataset;
  std::size_t entry_a = 0;
  std::size_t entry_b = 0;  // pose only
  int ordinal = 0;          // per-dataset draw index; seeds the record
};

std::vector<EvalPlanItem> plan_eval(const PipelineConfig& cfg, const DatasetIndex& index,
                                    TaskKind task) {
  std::vector<EvalPlanItem> plan;
  for (const auto& [name, _] : index.by_dataset) {
    const std::vector<std::size_t> entries = entries_for(index, name, Split::eval);
    if (task == TaskKind::pose) {
      const auto pairs = pose_pairs(index, entries, cfg.task_params);
      if (pairs.empty()) {
        throw ConfigError("eval pose: no eligible frame pairs in dataset '" + name + "'");
      }
      Rng order_rng(derive_seed(cfg.seed, "eval-order/" + name));
      std::vector<std::size_t> order(pairs.size());
      for (int i = 0; i < cfg.eval_count; ++i) {
        const std::size_t n = pairs.size();
        if (i % n == 0) {
          for (std::size_t j = 0; j < n; ++j) order[j] = j;
          for (std::size_t j = n; j > 1; --j) {
            std::swap(order[j - 1],
                      order[order_rng.uniform_int(0, static_cast<std::int64_t>(j) - 1)]);
          }
        }
        const auto& [a, b] = pairs[order[i % n]];
        plan.push_back({name, a, b, i});
      }
      continue;
    }
    Rng order_rng(derive_seed(cfg.seed, "eval-order/" + name));
    std::vector<std::size_t> order(entries.size());
    for (int i = 0; i < cfg.eval_count; ++i) {
      const std::size_t n = entries.size();
      if (i % n == 0) {
        // Fresh shuffle each pass so later epochs see fresh pixels per image.
        for (std::size_t j = 0; j < n; ++j) order[j] = j;
        for (std::size_t j = n; j > 1; --j) {
          std::swap(order[j - 1],
                    order[order_rng.uniform_int(0, static_cast<std::int64_t>(j) - 1)]);
        }
      }
      plan.push_back({name, entries[order[i % n]], 0, i});
    }
  }
  return plan;
}

}  // namespace

MetricReport run_eval(const PipelineConfig& cfg, const DatasetIndex& index,
                      const std::filesystem::path& manifest_dir,
                      const std::filesystem::path& out_dir, const EvalOptions& options) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const QaContext ctx = make_context(cfg, /*for_eval=*/true);
  const TaskKind task = options.task;

  const std::vector<EvalPlanItem> plan = plan_eval(cfg, index, task);
  std::vector<SampleRecord> records(plan.size());
  std::atomic<std::size_t> transport_failures{0};

  std::unique_ptr<VlmClient> client;
  const bool use_endpoint = cfg.mode == ClientMode::endpoint && !options.constant;
  if (use_endpoint) client = std::make_unique<VlmClient>(cfg.endpoint);

  const auto process = [&](std::size_t i) {
    const EvalPlanItem& item = plan[i];
    const std::uint64_t seed =
        derive_seed(cfg.seed, "eval/" + item.dataset + "/" + std::to_string(item.ordinal));
    Rng rng(seed);

    QaRecord rec;
    if (task == TaskKind::pose) {
      rec = make_qa_pose(load_sample(index.entries[item.entry_a], manifest_dir, cfg.max_depth),
                         load_sample(index.entries[item.entry_b], manifest_dir, cfg.max_depth),
                         ctx, rng);
    } else {
      const LoadedSample sample =
          load_sample(index.entries[item.entry_a], manifest_dir, cfg.max_depth);
      const std::vector<Pixel> pixels =
          sample_query_pixels(sample.depth, pixels_needed(task), rng);
      rec = make_qa(sample, task, pixels, ctx, rng);
    }
    const std::string key = item.dataset + "/" + rec.sample_id + "#" + std::to_string(item.ordinal);

    SampleRecord& out = records[i];
    out.sample_id = key;
    out.task = task;
    out.dataset = item.dataset;
    out.gt = rec.gt_value;

    std::string raw;
    bool transport_ok = true;
    if (options.constant) {
      raw = build_answer(task, cfg.variant, {*options.constant, 0.0, 0.0}, cfg.templates());
    } else if (cfg.mode == ClientMode::oracle) {
      AnswerValues extras;
      if (cfg.variant == PromptVariant::ray_then_depth && !rec.query_pixels.empty()) {
        const RayAngles a = ray_angles(rec.query_pixels[0], rec.intrinsics);
        extras.horizontal_deg = a.horizontal_deg;
        extras.vertical_deg = a.vertical_deg;
      }
      raw = oracle_answer(task, cfg.variant, rec.gt_value, effective_oracle(cfg), key, &extras,
                          cfg.templates());
    } else {
      try {
        std::vector<std::vector<std::uint8_t>> pngs;
        for (const Image& img : rec.images) pngs.push_back(encode_png(img));
        raw = client->query_images(pngs, rec.question);
      } catch (const TransportError& ex) {
        transport_ok = false;
        raw = std::string("[transport error] ") + ex.what();
        transport_failures.fetch_add(1);
      }
    }

    if (!transport_ok) {
      out.parse_status = ParseStatus::no_number;
      out.pred = 0;
      return;
    }
    const ParseResult parsed = parse_answer(raw, cfg.variant, cfg.templates());
    out.parse_status = parsed.status;
    out.ladder_level = parsed.answer.ladder_level;
    out.pred = parsed.ok() ? parsed.answer.value : 0.0;
  };

  if (use_endpoint) {
    parallel_indexed(plan.size(), cfg.endpoint.max_concurrency, process);
  } else {
    const std::int64_t n = static_cast<std::int64_t>(plan.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < n; ++i) {
      process(static_cast<std::size_t>(i));
    }
  }

  MetricReport report = aggregate(std::move(records), cfg.delta1_rule);
  write_report_csv(report, out_dir / "report.csv");
  write_text_file(out_dir / "report.txt", format_report_table(report));
  write_records_jsonl(report, out_dir / "records.jsonl");
  write_pipeline_config(cfg, out_dir / "resolved.ini");

  if (transport_failures.load() * 2 > plan.size()) {
    throw TransportError("aborted: " + std::to_string(transport_failures.load()) + " of " +
                             std::to_string(plan.size()) +
                             " queries failed in transport; partial report written to " +
                             out_dir.string(),
                         0);
  }
  return report;
}

RewardStats run_reward(const PipelineConfig& cfg, const std::filesystem::path& rollouts_path,
                       const std::filesystem::path& out_path) {
  cfg.validate();
  std::ifstream in(rollouts_path);
  if (!in) throw ConfigError("cannot open rollouts " + rollouts_path.string());

  struct Rollout {
    std::string sample_id;
    double gt = 0;
    std::string output;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Rollout>> groups;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError("rollouts line " + std::to_string(line_no) + ": invalid JSON: " +
                        ex.what());
    }
    Rollout r;
    try {
      r.sample_id = j.at("sample_id").get<std::string>();
      r.gt = j.at("gt_value").get<double>();
      r.output = j.at("output").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("rollouts line " + std::to_string(line_no) +
                        ": needs sample_id, gt_value, output");
    }
    if (!(r.gt > 0)) {
      throw ConfigError("rollouts line " + std::to_string(line_no) + ": gt_value must be > 0");
    }
    if (groups.find(r.sample_id) == groups.end()) order.push_back(r.sample_id);
    groups[r.sample_id].push_back(std::move(r));
  }
  if (order.empty()) throw ConfigError("rollouts file is empty: " + rollouts_path.string());

  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + out_path.string());

  RewardStats stats;
  for (const std::string& id : order) {
    const std::vector<Rollout>& group = groups[id];
    if (static_cast<int>(group.size()) != cfg.grpo.group_size) {
      throw ConfigError("reward: sample id '" + id + "' has " + std::to_string(group.size()) +
                        " rollouts, expected group_size = " + std::to_string(cfg.grpo.group_size));
    }
    std::vector<double> rewards;
    std::vector<ParseResult> parses;
    for (const Rollout& r : group) {
      // Rollouts come from GRPO sampling; the tag template is their format.
      ParseResult p = parse_answer(r.output, PromptVariant::marker_grpo, cfg.templates());
      rewards.push_back(grpo_reward(cfg.grpo, p, r.gt, cfg.delta1_rule));
      parses.push_back(std::move(p));
    }
    const std::vector<double> advantages = group_advantages(rewards, cfg.grpo.group_size);
    for (std::size_t i = 0; i < group.size(); ++i) {
      const bool floored = rewards[i] == cfg.grpo.format_fail_reward && !parses[i].ok();
      nlohmann::ordered_json j;
      j["sample_id"] = id;
      j["index"] = i;
      j["reward"] = rewards[i];
      j["advantage"] = advantages[i];
      j["parse_status"] = to_string(parses[i].status);
      j["format_ok"] = parses[i].answer.format_ok;
      if (parses[i].ok()) j["parsed_value"] = parses[i].answer.value;
      j["flagged"] = floored || (cfg.grpo.format_required && !parses[i].answer.format_ok);
      out << j.dump() << '\n';
      if (j["flagged"].get<bool>()) ++stats.floored;
      ++stats.rollouts;
    }
    ++stats.groups;
  }
  return stats;
}

PointcloudStats run_pointcloud(const PipelineConfig& cfg_in, const DatasetIndex& index,
                               const std::filesystem::path& manifest_dir,
                               const PointcloudOptions& options,
                               const std::filesystem::path& out_ply) {
  PipelineConfig cfg = cfg_in;
  cfg.validate();
  // Grid queries are plain single-marker distance questions.
  if (cfg.variant != PromptVariant::marker_plain && cfg.variant != PromptVariant::marker_grpo) {
    cfg.variant = PromptVariant::marker_plain;
  }
  if (options.entry_id.empty()) throw ConfigError("pointcloud: entry id required");
  const auto it = std::find_if(index.entries.begin(), index.entries.end(),
                               [&](const auto& e) { return e.id == options.entry_id; });
  if (it == index.entries.end()) {
    throw ConfigError("pointcloud: no manifest entry with id '" + options.entry_id + "'");
  }

  const LoadedSample sample = load_sample(*it, manifest_dir, cfg.max_depth);
  const UnifyResult uni = unify_focal({sample.image.width, sample.image.height},
                                      sample.meta.intrinsics, cfg.augment.f_uni,
                                      cfg.augment.max_dim_guard);
  const Image shown = resize_bilinear(sample.image, uni.dims.width, uni.dims.height);
  const std::vector<Pixel> grid = grid_pixels(uni.dims, options.count);

  // Resume: completed pixels from an earlier run are not queried again.
  const std::filesystem::path log_path = out_ply.string() + ".queries.jsonl";
  std::map<std::size_t, double> done;
  if (std::filesystem::exists(log_path)) {
    std::ifstream log_in(log_path);
    std::string line;
    while (std::getline(log_in, line)) {
      if (line.empty()) continue;
      try {
        const nlohmann::json j = nlohmann::json::parse(line);
        const std::size_t idx = j.at("pixel_index").get<std::size_t>();
        done[idx] = j.at("ok").get<bool>() ? j.at("value").get<double>()
                                           : std::numeric_limits<double>::quiet_NaN();
      } catch (const nlohmann::json::exception&) {
        break;  // truncated tail from an interrupted run; requery from here
      }
    }
  }

  std::vector<double> answers(grid.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto hit = done.find(i);
    if (hit != done.end()) {
      answers[i] = hit->second;
    } else {
      pending.push_back(i);
    }
  }

  std::unique_ptr<VlmClient> client;
  if (cfg.mode == ClientMode::endpoint) client = std::make_unique<VlmClient>(cfg.endpoint);
  const std::string question =
      build_question(TaskKind::distance, cfg.variant, QuestionContext{}, cfg.templates());

  std::ofstream log_out(log_path, std::ios::app);
  std::mutex log_mutex;
  const auto record_answer = [&](std::size_t i, double value) {
    answers[i] = value;
    std::lock_guard lock(log_mutex);
    nlohmann::ordered_json j;
    j["pixel_index"] = i;
    j["u"] = grid[i].u;
    j["v"] = grid[i].v;
    j["ok"] = std::isfinite(value);
    if (std::isfinite(value)) j["value"] = value;
    log_out << j.dump() << '\n';
  };

  const auto query_one = [&](std::size_t i) {
    const Pixel& p = grid[i];
    if (cfg.mode == ClientMode::oracle) {
      const Pixel orig = inverse_transform_pixel(p, uni.transform);
      const int x = std::clamp(static_cast<int>(orig.u), 0, sample.depth.width - 1);
      const int y = std::clamp(static_cast<int>(orig.v), 0, sample.depth.height - 1);
      if (!sample.depth.is_valid(x, y)) {
        record_answer(i, std::numeric_limits<double>::quiet_NaN());
        return;
      }
      const double gt =
          euclid_from_principal(orig, sample.depth.at(x, y), sample.meta.intrinsics);
      const std::string raw =
          oracle_answer(TaskKind::distance, cfg.variant, gt, effective_oracle(cfg),
                        options.entry_id + "#" + std::to_string(i), nullptr, cfg.templates());
      const ParseResult parsed = parse_answer(raw, cfg.variant, cfg.templates());
      record_answer(i, parsed.ok() ? parsed.answer.value
                                   : std::numeric_limits<double>::quiet_NaN());
      return;
    }
    const Image marked = render_marker(shown, p, cfg.marker);
    const std::string raw = client->query(encode_png(marked), question);
    const ParseResult parsed = parse_answer(raw, cfg.variant, cfg.templates());
    record_answer(i, parsed.ok() ? parsed.answer.value
                                 : std::numeric_limits<double>::quiet_NaN());
  };

  if (cfg.mode == ClientMode::endpoint) {
    parallel_indexed(pending.size(), cfg.endpoint.max_concurrency,
                     [&](std::size_t j) { query_one(pending[j]); });
  } else {
    for (std::size_t j : pending) query_one(j);
  }

  const AssembleResult assembled = assemble(shown, uni.k, grid, answers);
  write_ply(assembled.cloud, out_ply);

  PointcloudStats stats;
  stats.points = assembled.cloud.points.size();
  stats.failures = assembled.failures;
  std::vector<double> parsed_values;
  for (double a : answers) {
    if (std::isfinite(a)) parsed_values.push_back(a);
  }
  if (!parsed_values.empty()) {
    std::nth_element(parsed_values.begin(), parsed_values.begin() + parsed_values.size() / 2,
                     parsed_values.end());
    stats.median_distance = parsed_values[parsed_values.size() / 2];
  }
  return stats;
}

}  // namespace forge
