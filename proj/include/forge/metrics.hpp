// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "forge/prompts.hpp"
#include "forge/task_kind.hpp"

namespace forge {

enum class MetricKind { delta1, abs_rel, l1, l2 };

MetricKind metric_kind_from_string(const std::string& s);
std::string to_string(MetricKind k);

// delta1 comes in two readings: the standard symmetric ratio test (default)
// and the literal one-sided relative difference, kept for sensitivity runs.
enum class Delta1Rule { max_ratio, one_sided };

/// delta1 is the strict inlier indicator; the others are error magnitudes.
/// pred <= 0 scores delta1 = 0 and plain |pred - gt| on the L metrics.
double per_sample_metric(MetricKind kind, double pred, double gt,
                         Delta1Rule rule = Delta1Rule::max_ratio);

struct GrpoConfig {
  int group_size = 8;
  double beta = 0.0;  // KL weight; informational, the trainer consumes it
  MetricKind reward_kind = MetricKind::l1;  // negated unless delta1
  bool format_required = true;
  double format_fail_reward = -10.0;

  void validate() const;
};

/// Parse failures and (when required) format violations get the floor reward;
/// otherwise the negated error metric, or the delta1 indicator as-is.
double grpo_reward(const GrpoConfig& cfg, const ParseResult& parsed, double gt,
                   Delta1Rule rule = Delta1Rule::max_ratio);

/// Group-normalized advantages: (r - mean) / population std; all zeros when the
/// group is degenerate. Throws if rewards.size() != group_size.
std::vector<double> group_advantages(std::span<const double> rewards, int group_size);

struct SampleRecord {
  std::string sample_id;
  TaskKind task = TaskKind::distance;
  std::string dataset;
  double pred = 0;
  double gt = 0;
  ParseStatus parse_status = ParseStatus::ok;
  int ladder_level = 0;
  // Filled by compute_sample_metrics.
  double delta1 = 0, abs_rel = 0, l1 = 0, l2 = 0;
};

// Fill the per-record metric fields. Parse failures score delta1 = 0 and are
// excluded from the error metrics. The OpenMP and serial kernels are
// bit-identical; the serial one is the test/benchmark reference.
void compute_sample_metrics(std::span<SampleRecord> records, Delta1Rule rule);
void compute_sample_metrics_serial(std::span<SampleRecord> records, Delta1Rule rule);

struct DatasetAggregate {
  std::string dataset;
  std::size_t count = 0;
  std::size_t parse_failures = 0;
  double delta1 = 0;
  double abs_rel = 0;  // over parsed records
  double l1 = 0;
  double l2 = 0;
  double parse_fail_rate = 0;
};

struct MetricReport {
  std::vector<SampleRecord> records;
  std::vector<DatasetAggregate> per_dataset;  // sorted by dataset name
  DatasetAggregate overall;                   // unweighted mean of dataset rows
};

/// Aggregate finished records into per-dataset rows plus the unweighted
/// across-dataset average. Throws on an empty record set.
MetricReport aggregate(std::vector<SampleRecord> records,
                       Delta1Rule rule = Delta1Rule::max_ratio);

/// Aligned text table: datasets as columns, Average last, one row per metric.
std::string format_report_table(const MetricReport& report);
void write_report_csv(const MetricReport& report, const std::filesystem::path& path);
void write_records_jsonl(const MetricReport& report, const std::filesystem::path& path);

}  // namespace forge
