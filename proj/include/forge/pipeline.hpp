// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "forge/config.hpp"
#include "forge/data.hpp"
#include "forge/metrics.hpp"
#include "forge/pointcloud.hpp"

namespace forge {

// Library entry points behind the CLI subcommands. Each run writes the fully
// resolved config next to its outputs so it can be reproduced from that file.

struct PrepareOptions {
  // When set, draw this many samples from the weighted mixture instead of
  // sweeping the manifest.
  std::optional<int> count;
};

struct PrepareStats {
  std::map<std::string, std::size_t> per_task;
  std::size_t records = 0;
};

PrepareStats run_prepare(const PipelineConfig& cfg, const DatasetIndex& index,
                         const std::filesystem::path& manifest_dir,
                         const std::filesystem::path& out_dir,
                         const PrepareOptions& options = {});

struct EvalOptions {
  TaskKind task = TaskKind::distance;
  // Constant predictor in meters; bypasses oracle/endpoint entirely.
  std::optional<double> constant;
};

/// Per-dataset evaluation: sample, render, query, parse, aggregate. Writes
/// report.csv, report.txt, records.jsonl and resolved.ini under out_dir.
/// Aborts with TransportError (partial report already written) when more than
/// half of the queries fail at the transport layer.
MetricReport run_eval(const PipelineConfig& cfg, const DatasetIndex& index,
                      const std::filesystem::path& manifest_dir,
                      const std::filesystem::path& out_dir, const EvalOptions& options = {});

struct RewardStats {
  std::size_t groups = 0;
  std::size_t rollouts = 0;
  std::size_t floored = 0;
};

/// Score externally generated rollouts: per-rollout reward plus group-relative
/// advantage, written as JSONL for the trainer.
RewardStats run_reward(const PipelineConfig& cfg, const std::filesystem::path& rollouts_path,
                       const std::filesystem::path& out_path);

struct PointcloudOptions {
  std::string entry_id;  // manifest entry to query (oracle mode needs its depth)
  int count = 10000;     // target grid size
};

struct PointcloudStats {
  std::size_t points = 0;
  std::size_t failures = 0;
  double median_distance = 0;  // meters, over parsed answers
};

/// Grid-query one image and write the assembled metric point cloud as PLY.
/// A JSONL query log next to the output makes reruns resume completed pixels.
PointcloudStats run_pointcloud(const PipelineConfig& cfg, const DatasetIndex& index,
                               const std::filesystem::path& manifest_dir,
                               const PointcloudOptions& options,
                               const std::filesystem::path& out_ply);

}  // namespace forge
