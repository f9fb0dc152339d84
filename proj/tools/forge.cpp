// SPDX-License-Identifier: Apache-2.0

// forge: prepare SFT data, evaluate predictors, score GRPO rollouts, build
// point clouds and render marker prompts, all driven by one config file.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "forge/errors.hpp"
#include "forge/pipeline.hpp"
#include "forge/png_io.hpp"
#include "forge/synth.hpp"
#include "forge/tasks.hpp"

namespace fs = std::filesystem;
using namespace forge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTransport = 3;
constexpr int kExitInternal = 4;

struct CommonArgs {
  std::string config_path;
  std::string manifest_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<std::string> task;
  std::optional<std::string> marker_style;
  std::optional<std::string> oracle_or_endpoint;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_manifest) {
  cmd->add_option("--config", args.config_path, "Config file (sections of key = value)");
  if (needs_manifest) {
    cmd->add_option("--manifest", args.manifest_path, "Dataset manifest (JSONL)")->required();
  }
  cmd->add_option("--seed", args.seed, "Override the global seed");
  cmd->add_option("--variant", args.variant,
                  "Prompt variant: marker_plain|marker_grpo|text_coordinate|"
                  "intrinsics_in_text|ray_then_depth");
  cmd->add_option("--task", args.task,
                  "Task: distance|principal_axis_distance|speed|time|two_point_distance|pose");
  cmd->add_option("--marker", args.marker_style, "Marker style: arrow|cross|circle");
  cmd->add_option("--client", args.oracle_or_endpoint, "Client mode: oracle|endpoint");
}

// Precedence: flag > config file > default.
PipelineConfig resolve_config(const CommonArgs& args) {
  PipelineConfig cfg;
  if (!args.config_path.empty()) cfg = load_pipeline_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.variant) cfg.variant = prompt_variant_from_string(*args.variant);
  if (args.task) cfg.tasks = {task_kind_from_string(*args.task)};
  if (args.marker_style) cfg.marker.style = marker_style_from_string(*args.marker_style);
  if (args.oracle_or_endpoint) {
    if (*args.oracle_or_endpoint == "oracle") {
      cfg.mode = ClientMode::oracle;
    } else if (*args.oracle_or_endpoint == "endpoint") {
      cfg.mode = ClientMode::endpoint;
    } else {
      throw ConfigError("--client must be oracle or endpoint");
    }
  }
  cfg.validate();
  return cfg;
}

TaskKind single_task(const PipelineConfig& cfg) {
  if (cfg.tasks.size() != 1) {
    throw ConfigError("this subcommand evaluates one task; pass --task or configure exactly one");
  }
  return cfg.tasks[0];
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Metric-depth visual-prompting data and evaluation pipeline"};
  app.require_subcommand(1);

  // prepare
  CommonArgs prep_args;
  std::optional<int> prep_count;
  CLI::App* prepare = app.add_subcommand("prepare", "Render SFT samples from a manifest");
  add_common(prepare, prep_args, true);
  prepare->add_option("--out", prep_args.out_path, "Output directory")->required();
  prepare->add_option("--count", prep_count, "Draw N samples from the weighted mixture");

  // eval
  CommonArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate the oracle or an endpoint");
  add_common(eval, eval_args, true);
  eval->add_option("--out", eval_args.out_path, "Output directory")->required();

  // baseline
  CommonArgs base_args;
  double constant = 2.0;
  CLI::App* baseline = app.add_subcommand("baseline", "Evaluate a constant predictor");
  add_common(baseline, base_args, true);
  baseline->add_option("--out", base_args.out_path, "Output directory")->required();
  baseline->add_option("constant", constant, "Constant answer in task units")->required();

  // reward
  CommonArgs reward_args;
  std::string rollouts_path;
  CLI::App* reward = app.add_subcommand("reward", "Score rollouts with GRPO rewards/advantages");
  add_common(reward, reward_args, false);
  reward->add_option("--rollouts", rollouts_path, "Rollouts JSONL")->required();
  reward->add_option("--out", reward_args.out_path, "Output JSONL")->required();

  // pointcloud
  CommonArgs pc_args;
  std::string pc_id;
  int pc_count = 10'000;
  CLI::App* pointcloud = app.add_subcommand("pointcloud", "Grid-query one image into a PLY");
  add_common(pointcloud, pc_args, true);
  pointcloud->add_option("--id", pc_id, "Manifest entry id")->required();
  pointcloud->add_option("-n,--count", pc_count, "Target number of grid pixels");
  pointcloud->add_option("--out", pc_args.out_path, "Output PLY path")->required();

  // render
  CommonArgs render_args;
  std::string render_image;
  std::vector<std::string> render_pixels;
  std::vector<std::string> render_labels;
  CLI::App* render = app.add_subcommand("render", "Draw marker prompts on an image");
  add_common(render, render_args, false);
  render->add_option("--image", render_image, "Input PNG")->required();
  render->add_option("--pixel", render_pixels, "Query pixel as u,v (repeatable)")->required();
  render->add_option("--labels", render_labels, "Labels, one per pixel");
  render->add_option("--out", render_args.out_path, "Output PNG")->required();

  // synth
  CommonArgs synth_args;
  int synth_count = 16;
  int synth_w = 320, synth_h = 240;
  std::string synth_mode = "scene";
  std::string synth_split = "eval";
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic manifest for offline runs");
  add_common(synth, synth_args, false);
  synth->add_option("--out", synth_args.out_path, "Output directory")->required();
  synth->add_option("--count", synth_count, "Number of samples");
  synth->add_option("--width", synth_w, "Image width");
  synth->add_option("--height", synth_h, "Image height");
  synth->add_option("--mode", synth_mode, "scene|plane|random_depth");
  synth->add_option("--split", synth_split, "train|eval");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  if (prepare->parsed()) {
    const PipelineConfig cfg = resolve_config(prep_args);
    const DatasetIndex index = load_manifest(prep_args.manifest_path);
    const fs::path manifest_dir = fs::path(prep_args.manifest_path).parent_path();
    PrepareOptions opts;
    opts.count = prep_count;
    const PrepareStats stats = run_prepare(cfg, index, manifest_dir, prep_args.out_path, opts);
    std::cout << "records: " << stats.records << "\n";
    for (const auto& [task, n] : stats.per_task) std::cout << "  " << task << ": " << n << "\n";
    return kExitOk;
  }

  if (eval->parsed() || baseline->parsed()) {
    const CommonArgs& args = eval->parsed() ? eval_args : base_args;
    const PipelineConfig cfg = resolve_config(args);
    const DatasetIndex index = load_manifest(args.manifest_path);
    const fs::path manifest_dir = fs::path(args.manifest_path).parent_path();
    EvalOptions opts;
    opts.task = single_task(cfg);
    if (baseline->parsed()) opts.constant = constant;
    const MetricReport report = run_eval(cfg, index, manifest_dir, args.out_path, opts);
    std::cout << format_report_table(report);
    std::cout << "reports written to " << args.out_path << "\n";
    return kExitOk;
  }

  if (reward->parsed()) {
    const PipelineConfig cfg = resolve_config(reward_args);
    const RewardStats stats = run_reward(cfg, rollouts_path, reward_args.out_path);
    std::cout << "groups: " << stats.groups << "  rollouts: " << stats.rollouts
              << "  floored: " << stats.floored << "\n";
    return kExitOk;
  }

  if (pointcloud->parsed()) {
    const PipelineConfig cfg = resolve_config(pc_args);
    const DatasetIndex index = load_manifest(pc_args.manifest_path);
    const fs::path manifest_dir = fs::path(pc_args.manifest_path).parent_path();
    PointcloudOptions opts;
    opts.entry_id = pc_id;
    opts.count = pc_count;
    const PointcloudStats stats = run_pointcloud(cfg, index, manifest_dir, opts, pc_args.out_path);
    std::cout << "points: " << stats.points << "  failures: " << stats.failures
              << "  median distance: " << stats.median_distance << " m\n";
    return kExitOk;
  }

  if (render->parsed()) {
    const PipelineConfig cfg = resolve_config(render_args);
    const Image input = load_png(render_image);
    std::vector<std::pair<Pixel, MarkerSpec>> points;
    for (std::size_t i = 0; i < render_pixels.size(); ++i) {
      double u = 0, v = 0;
      if (std::sscanf(render_pixels[i].c_str(), "%lf,%lf", &u, &v) != 2) {
        throw ConfigError("--pixel expects u,v: got '" + render_pixels[i] + "'");
      }
      MarkerSpec spec = cfg.marker;
      if (i < render_labels.size()) spec.label = render_labels[i];
      points.emplace_back(Pixel{u, v}, spec);
    }
    Image out;
    if (points.size() == 1 && points[0].second.label.empty()) {
      out = render_marker(input, points[0].first, points[0].second);
    } else {
      out = render_multi(input, points);
    }
    save_png(render_args.out_path, out);
    std::cout << "wrote " << render_args.out_path << "\n";
    return kExitOk;
  }

  if (synth->parsed()) {
    SynthConfig scfg;
    scfg.count = synth_count;
    scfg.width = synth_w;
    scfg.height = synth_h;
    scfg.split = split_from_string(synth_split);
    if (synth_args.seed) scfg.seed = *synth_args.seed;
    if (synth_mode == "scene") {
      scfg.mode = SynthConfig::Mode::scene;
    } else if (synth_mode == "plane") {
      scfg.mode = SynthConfig::Mode::plane;
    } else if (synth_mode == "random_depth") {
      scfg.mode = SynthConfig::Mode::random_depth;
      scfg.depth_scale = 0.001;
    } else {
      throw ConfigError("--mode must be scene, plane or random_depth");
    }
    const DatasetIndex index = generate_synthetic(scfg, synth_args.out_path);
    std::cout << "wrote " << index.entries.size() << " samples to " << synth_args.out_path
              << " (manifest.jsonl)\n";
    return kExitOk;
  }

  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const TransportError& ex) {
    std::cerr << "transport error: " << ex.what() << "\n";
    return kExitTransport;
  } catch (const ProtocolError& ex) {
    std::cerr << "protocol error: " << ex.what() << "\n";
    return kExitTransport;
  } catch (const ConfigError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const std::out_of_range& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& ex) {
    std::cerr << "internal error: " << ex.what() << "\n";
    return kExitInternal;
  }
}
