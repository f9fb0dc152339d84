// SPDX-License-Identifier: Apache-2.0

#include "forge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "forge/errors.hpp"

namespace forge {

MetricKind metric_kind_from_string(const std::string& s) {
  if (s == "delta1") return MetricKind::delta1;
  if (s == "abs_rel" || s == "absrel") return MetricKind::abs_rel;
  if (s == "l1" || s == "neg_l1") return MetricKind::l1;
  if (s == "l2" || s == "neg_l2") return MetricKind::l2;
  throw std::invalid_argument("unknown metric kind: " + s);
}

std::string to_string(MetricKind k) {
  switch (k) {
    case MetricKind::delta1: return "delta1";
    case MetricKind::abs_rel: return "abs_rel";
    case MetricKind::l1: return "l1";
    case MetricKind::l2: return "l2";
  }
  return "l1";
}

double per_sample_metric(MetricKind kind, double pred, double gt, Delta1Rule rule) {
  if (!(gt > 0) || !std::isfinite(gt)) throw std::domain_error("metric: gt must be > 0");
  if (!std::isfinite(pred)) throw std::domain_error("metric: pred must be finite");
  switch (kind) {
    case MetricKind::delta1: {
      if (pred <= 0) return 0.0;
      if (rule == Delta1Rule::one_sided) return std::abs(pred - gt) / gt < 0.25 ? 1.0 : 0.0;
      return std::max(pred / gt, gt / pred) < 1.25 ? 1.0 : 0.0;
    }
    case MetricKind::abs_rel:
      return std::abs(pred - gt) / gt;
    case MetricKind::l1:
      return std::abs(pred - gt);
    case MetricKind::l2:
      return (pred - gt) * (pred - gt);
  }
  return 0.0;
}

void GrpoConfig::validate() const {
  if (group_size < 2) throw ConfigError("grpo: group_size must be >= 2");
  if (!std::isfinite(beta) || beta < 0) throw ConfigError("grpo: beta must be >= 0");
  if (!std::isfinite(format_fail_reward)) throw ConfigError("grpo: bad format_fail_reward");
}

double grpo_reward(const GrpoConfig& cfg, const ParseResult& parsed, double gt,
                   Delta1Rule rule) {
  if (!(gt > 0) || !std::isfinite(gt)) throw std::domain_error("grpo_reward: gt must be > 0");
  if (!parsed.ok()) return cfg.format_fail_reward;
  if (cfg.format_required && !parsed.answer.format_ok) return cfg.format_fail_reward;
  const double m = per_sample_metric(cfg.reward_kind, parsed.answer.value, gt, rule);
  return cfg.reward_kind == MetricKind::delta1 ? m : -m;
}

std::vector<double> group_advantages(std::span<const double> rewards, int group_size) {
  if (static_cast<int>(rewards.size()) != group_size) {
    throw std::invalid_argument("group_advantages: expected " + std::to_string(group_size) +
                                " rewards, got " + std::to_string(rewards.size()));
  }
  double mean = 0;
  for (double r : rewards) mean += r;
  mean /= rewards.size();
  double var = 0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= rewards.size();  // population variance
  const double std_dev = std::sqrt(var);
  std::vector<double> out(rewards.size(), 0.0);
  if (std_dev == 0) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / std_dev;
  return out;
}

namespace {

void fill_record(SampleRecord& r, Delta1Rule rule) {
  if (r.parse_status != ParseStatus::ok) {
    r.delta1 = 0;
    r.abs_rel = r.l1 = r.l2 = 0;
    return;
  }
  r.delta1 = per_sample_metric(MetricKind::delta1, r.pred, r.gt, rule);
  r.abs_rel = per_sample_metric(MetricKind::abs_rel, r.pred, r.gt, rule);
  r.l1 = per_sample_metric(MetricKind::l1, r.pred, r.gt, rule);
  r.l2 = per_sample_metric(MetricKind::l2, r.pred, r.gt, rule);
}

}  // namespace

void compute_sample_metrics(std::span<SampleRecord> records, Delta1Rule rule) {
  const std::int64_t n = static_cast<std::int64_t>(records.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    fill_record(records[i], rule);
  }
}

void compute_sample_metrics_serial(std::span<SampleRecord> records, Delta1Rule rule) {
  for (SampleRecord& r : records) fill_record(r, rule);
}

MetricReport aggregate(std::vector<SampleRecord> records, Delta1Rule rule) {
  if (records.empty()) throw std::invalid_argument("aggregate: empty record set");
  compute_sample_metrics(records, rule);

  MetricReport report;
  report.records = std::move(records);
  std::map<std::string, std::vector<const SampleRecord*>> by_dataset;
  for (const SampleRecord& r : report.records) by_dataset[r.dataset].push_back(&r);

  for (const auto& [name, rows] : by_dataset) {
    DatasetAggregate agg;
    agg.dataset = name;
    agg.count = rows.size();
    std::size_t parsed = 0;
    for (const SampleRecord* r : rows) {
      agg.delta1 += r->delta1;  // failures contribute 0
      if (r->parse_status == ParseStatus::ok) {
        agg.abs_rel += r->abs_rel;
        agg.l1 += r->l1;
        agg.l2 += r->l2;
        ++parsed;
      } else {
        ++agg.parse_failures;
      }
    }
    agg.delta1 /= rows.size();
    if (parsed > 0) {
      agg.abs_rel /= parsed;
      agg.l1 /= parsed;
      agg.l2 /= parsed;
    }
    agg.parse_fail_rate = static_cast<double>(agg.parse_failures) / rows.size();
    report.per_dataset.push_back(agg);
  }

  DatasetAggregate& overall = report.overall;
  overall.dataset = "Average";
  for (const DatasetAggregate& d : report.per_dataset) {
    overall.count += d.count;
    overall.parse_failures += d.parse_failures;
    overall.delta1 += d.delta1;
    overall.abs_rel += d.abs_rel;
    overall.l1 += d.l1;
    overall.l2 += d.l2;
    overall.parse_fail_rate += d.parse_fail_rate;
  }
  const double n = static_cast<double>(report.per_dataset.size());
  overall.delta1 /= n;
  overall.abs_rel /= n;
  overall.l1 /= n;
  overall.l2 /= n;
  overall.parse_fail_rate /= n;
  return report;
}

namespace {

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string format_report_table(const MetricReport& report) {
  std::vector<std::string> columns;
  for (const DatasetAggregate& d : report.per_dataset) columns.push_back(d.dataset);
  columns.push_back("Average");

  const std::vector<std::pair<std::string, const double DatasetAggregate::*>> rows = {
      {"delta1", &DatasetAggregate::delta1},
      {"abs_rel", &DatasetAggregate::abs_rel},
      {"l1", &DatasetAggregate::l1},
      {"l2", &DatasetAggregate::l2},
      {"parse_fail", &DatasetAggregate::parse_fail_rate},
  };

  std::size_t label_w = 0;
  for (const auto& [name, ptr] : rows) label_w = std::max(label_w, name.size());

  // Column widths sized to the widest cell they will hold.
  std::vector<std::size_t> widths;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const DatasetAggregate& agg =
        i < report.per_dataset.size() ? report.per_dataset[i] : report.overall;
    std::size_t w = std::max<std::size_t>(columns[i].size(), 7);
    for (const auto& [name, ptr] : rows) w = std::max(w, fmt3(agg.*ptr).size());
    widths.push_back(w);
  }

  const auto pad = [](std::size_t width, const std::string& cell) {
    return std::string(width > cell.size() ? width - cell.size() : 0, ' ') + cell;
  };

  std::ostringstream out;
  out << std::string(label_w, ' ');
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out << "  " << pad(widths[i], columns[i]);
  }
  out << '\n';
  for (const auto& [name, ptr] : rows) {
    out << name << std::string(label_w - name.size(), ' ');
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const DatasetAggregate& agg =
          i < report.per_dataset.size() ? report.per_dataset[i] : report.overall;
      out << "  " << pad(widths[i], fmt3(agg.*ptr));
    }
    out << '\n';
  }
  return out.str();
}

void write_report_csv(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "metric";
  for (const DatasetAggregate& d : report.per_dataset) f << ',' << d.dataset;
  f << ",Average\n";
  const std::vector<std::pair<std::string, const double DatasetAggregate::*>> rows = {
      {"delta1", &DatasetAggregate::delta1},
      {"abs_rel", &DatasetAggregate::abs_rel},
      {"l1", &DatasetAggregate::l1},
      {"l2", &DatasetAggregate::l2},
      {"parse_fail", &DatasetAggregate::parse_fail_rate},
  };
  for (const auto& [name, ptr] : rows) {
    f << name;
    for (const DatasetAggregate& d : report.per_dataset) f << ',' << fmt3(d.*ptr);
    f << ',' << fmt3(report.overall.*ptr) << '\n';
  }
  f << "count";
  for (const DatasetAggregate& d : report.per_dataset) f << ',' << d.count;
  f << ',' << report.overall.count << '\n';
}

void write_records_jsonl(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  for (const SampleRecord& r : report.records) {
    nlohmann::ordered_json j;
    j["sample_id"] = r.sample_id;
    j["task"] = to_string(r.task);
    j["dataset"] = r.dataset;
    j["pred"] = r.pred;
    j["gt"] = r.gt;
    j["parse_status"] = to_string(r.parse_status);
    j["ladder_level"] = r.ladder_level;
    j["delta1"] = r.delta1;
    j["abs_rel"] = r.abs_rel;
    j["l1"] = r.l1;
    j["l2"] = r.l2;
    f << j.dump() << '\n';
  }
}

}  // namespace forge
