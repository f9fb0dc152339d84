// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "forge/metrics.hpp"
#include "forge/rng.hpp"
#include "oracles.hpp"

using namespace forge;

namespace {

ParseResult parsed_value(double v) {
  ParseResult r;
  r.status = ParseStatus::ok;
  r.answer.value = v;
  r.answer.format_ok = true;
  return r;
}

ParseResult parse_failure() {
  ParseResult r;
  r.status = ParseStatus::no_number;
  return r;
}

}  // namespace

TEST_CASE("per-sample metrics: exact prediction") {
  CHECK(per_sample_metric(MetricKind::delta1, 2.0, 2.0) == 1.0);
  CHECK(per_sample_metric(MetricKind::abs_rel, 2.0, 2.0) == 0.0);
  CHECK(per_sample_metric(MetricKind::l1, 2.0, 2.0) == 0.0);
  CHECK(per_sample_metric(MetricKind::l2, 2.0, 2.0) == 0.0);
}

TEST_CASE("delta1 boundary at exactly 1.25 is an outlier") {
  CHECK(per_sample_metric(MetricKind::delta1, 2.5, 2.0) == 0.0);
  CHECK(per_sample_metric(MetricKind::delta1, 2.0, 2.5) == 0.0);
  CHECK(per_sample_metric(MetricKind::delta1, 2.4999999, 2.0) == 1.0);
}

TEST_CASE("error metrics by hand") {
  CHECK(per_sample_metric(MetricKind::abs_rel, 3.0, 2.0) == 0.5);
  CHECK(per_sample_metric(MetricKind::l1, 3.0, 2.0) == 1.0);
  CHECK(per_sample_metric(MetricKind::l2, 3.0, 2.0) == 1.0);
}

TEST_CASE("non-positive predictions are outliers but keep their L errors") {
  CHECK(per_sample_metric(MetricKind::delta1, -1.0, 2.0) == 0.0);
  CHECK(per_sample_metric(MetricKind::delta1, 0.0, 2.0) == 0.0);
  CHECK(per_sample_metric(MetricKind::l1, -1.0, 2.0) == 3.0);
  CHECK_THROWS_AS(per_sample_metric(MetricKind::delta1, 1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(per_sample_metric(MetricKind::delta1, 1.0, -2.0), std::domain_error);
}

TEST_CASE("one-sided delta1 variant") {
  // 2.4 / 2.0: |err|/gt = 0.2 < 0.25 -> inlier either way.
  CHECK(per_sample_metric(MetricKind::delta1, 2.4, 2.0, Delta1Rule::one_sided) == 1.0);
  // 1.7 / 2.0: ratio 2.0/1.7 = 1.176 (inlier), one-sided 0.15 (inlier).
  CHECK(per_sample_metric(MetricKind::delta1, 1.7, 2.0, Delta1Rule::one_sided) == 1.0);
  // 1.55 / 2.0: ratio 1.29 (outlier), one-sided 0.225 (inlier): the rules differ.
  CHECK(per_sample_metric(MetricKind::delta1, 1.55, 2.0) == 0.0);
  CHECK(per_sample_metric(MetricKind::delta1, 1.55, 2.0, Delta1Rule::one_sided) == 1.0);
}

TEST_CASE("property: delta1 matches the log-domain oracle on 10k pairs") {
  Rng rng(11);
  for (int i = 0; i < 10'000; ++i) {
    const double gt = rng.uniform(0.05, 120.0);
    const double pred = rng.uniform(0.01, 150.0);
    CHECK(per_sample_metric(MetricKind::delta1, pred, gt) == oracle::delta1(pred, gt));
    CHECK(per_sample_metric(MetricKind::abs_rel, pred, gt) == oracle::abs_rel(pred, gt));
    CHECK(per_sample_metric(MetricKind::l1, pred, gt) == oracle::l1(pred, gt));
    CHECK(per_sample_metric(MetricKind::l2, pred, gt) == oracle::l2(pred, gt));
  }
}

TEST_CASE("property: delta1 scale invariance and symmetry") {
  Rng rng(12);
  for (int i = 0; i < 10'000; ++i) {
    const double gt = rng.uniform(0.05, 120.0);
    const double pred = rng.uniform(0.01, 150.0);
    const double c = rng.uniform(0.001, 1000.0);
    CHECK(per_sample_metric(MetricKind::delta1, pred, gt) ==
          per_sample_metric(MetricKind::delta1, c * pred, c * gt));
    CHECK(per_sample_metric(MetricKind::delta1, pred, gt) ==
          per_sample_metric(MetricKind::delta1, gt, pred));
  }
}

TEST_CASE("grpo rewards") {
  GrpoConfig cfg;
  CHECK(grpo_reward(cfg, parsed_value(3.0), 2.0) == -1.0);
  CHECK(grpo_reward(cfg, parsed_value(2.0), 2.0) == 0.0);
  CHECK(grpo_reward(cfg, parse_failure(), 2.0) == -10.0);

  GrpoConfig d1 = cfg;
  d1.reward_kind = MetricKind::delta1;
  CHECK(grpo_reward(d1, parsed_value(2.0), 2.0) == 1.0);
  CHECK(grpo_reward(d1, parsed_value(9.0), 2.0) == 0.0);

  // Format enforcement: a parsed-but-untagged answer gets the floor.
  ParseResult untagged = parsed_value(2.0);
  untagged.answer.format_ok = false;
  CHECK(grpo_reward(cfg, untagged, 2.0) == -10.0);
  GrpoConfig lax = cfg;
  lax.format_required = false;
  CHECK(grpo_reward(lax, untagged, 2.0) == 0.0);
}

TEST_CASE("reward ordering follows error ordering") {
  GrpoConfig cfg;
  Rng rng(13);
  for (int i = 0; i < 1'000; ++i) {
    const double gt = rng.uniform(0.5, 50.0);
    const double a = rng.uniform(0.1, 60.0);
    const double b = rng.uniform(0.1, 60.0);
    const double ra = grpo_reward(cfg, parsed_value(a), gt);
    const double rb = grpo_reward(cfg, parsed_value(b), gt);
    CHECK((ra > rb) == (std::abs(a - gt) < std::abs(b - gt)));
  }
}

TEST_CASE("group advantages: degenerate and hand-checked groups") {
  const std::vector<double> equal(8, 3.25);
  for (double a : group_advantages(equal, 8)) CHECK(a == 0.0);

  const std::vector<double> two = {0.0, -2.0};
  const std::vector<double> adv2 = group_advantages(two, 2);
  CHECK(adv2[0] == doctest::Approx(1.0));
  CHECK(adv2[1] == doctest::Approx(-1.0));

  const std::vector<double> four = {1, 2, 3, 4};
  const std::vector<double> adv4 = group_advantages(four, 4);
  CHECK(adv4[0] == doctest::Approx(-1.3416407865));
  CHECK(adv4[1] == doctest::Approx(-0.4472135955));
  CHECK(adv4[2] == doctest::Approx(0.4472135955));
  CHECK(adv4[3] == doctest::Approx(1.3416407865));

  CHECK_THROWS(group_advantages(two, 8));
}

TEST_CASE("property: advantages are normalized and match the oracle") {
  Rng rng(14);
  for (int i = 0; i < 2'000; ++i) {
    std::vector<double> rewards;
    for (int j = 0; j < 8; ++j) rewards.push_back(rng.uniform(-10, 0));
    const std::vector<double> ours = group_advantages(rewards, 8);
    const std::vector<double> ref = oracle::advantages(rewards);
    double mean = 0, var = 0;
    for (std::size_t j = 0; j < ours.size(); ++j) {
      CHECK(ours[j] == doctest::Approx(ref[j]).epsilon(1e-12));
      mean += ours[j];
    }
    mean /= 8;
    for (double a : ours) var += (a - mean) * (a - mean);
    CHECK(std::abs(mean) <= 1e-12);
    CHECK(std::abs(std::sqrt(var / 8) - 1.0) <= 1e-9);
  }
}

TEST_CASE("aggregate: per-dataset means and the unweighted average") {
  std::vector<SampleRecord> records;
  // Dataset A: delta1 0.2 over 5 records; dataset B: 0.8 over 10 records.
  for (int i = 0; i < 5; ++i) {
    SampleRecord r;
    r.dataset = "A";
    r.gt = 2.0;
    r.pred = i < 1 ? 2.0 : 9.0;
    records.push_back(r);
  }
  for (int i = 0; i < 10; ++i) {
    SampleRecord r;
    r.dataset = "B";
    r.gt = 2.0;
    r.pred = i < 8 ? 2.0 : 9.0;
    records.push_back(r);
  }
  const MetricReport report = aggregate(std::move(records));
  REQUIRE(report.per_dataset.size() == 2);
  CHECK(report.per_dataset[0].delta1 == doctest::Approx(0.2));
  CHECK(report.per_dataset[1].delta1 == doctest::Approx(0.8));
  CHECK(report.overall.delta1 == doctest::Approx(0.5));  // unweighted across datasets
  CHECK(report.overall.count == 15);
}

TEST_CASE("aggregate: parse failures score zero and are reported") {
  std::vector<SampleRecord> records;
  for (int i = 0; i < 4; ++i) {
    SampleRecord r;
    r.dataset = "A";
    r.gt = 2.0;
    r.pred = 2.0;
    if (i < 2) r.parse_status = ParseStatus::no_number;
    records.push_back(r);
  }
  const MetricReport report = aggregate(std::move(records));
  CHECK(report.per_dataset[0].delta1 == doctest::Approx(0.5));
  CHECK(report.per_dataset[0].parse_fail_rate == doctest::Approx(0.5));
  CHECK(report.per_dataset[0].parse_failures == 2);
}

TEST_CASE("aggregate: empty input is an error") {
  CHECK_THROWS(aggregate({}));
}

TEST_CASE("property: aggregate equals a one-pass brute-force recomputation") {
  Rng rng(15);
  std::vector<SampleRecord> records;
  const char* datasets[] = {"alpha", "beta", "gamma"};
  for (int i = 0; i < 10'000; ++i) {
    SampleRecord r;
    r.dataset = datasets[rng.uniform_int(0, 2)];
    r.gt = rng.uniform(0.1, 50.0);
    r.pred = rng.uniform(0.05, 60.0);
    if (rng.uniform() < 0.05) r.parse_status = ParseStatus::no_number;
    records.push_back(r);
  }
  const std::vector<SampleRecord> copy = records;
  const MetricReport report = aggregate(std::move(records));

  for (const DatasetAggregate& agg : report.per_dataset) {
    double d1 = 0, l1 = 0;
    std::size_t n = 0, parsed = 0;
    for (const SampleRecord& r : copy) {
      if (r.dataset != agg.dataset) continue;
      ++n;
      if (r.parse_status == ParseStatus::ok) {
        d1 += oracle::delta1(r.pred, r.gt);
        l1 += oracle::l1(r.pred, r.gt);
        ++parsed;
      }
    }
    CHECK(agg.count == n);
    CHECK(agg.delta1 == d1 / n);
    CHECK(agg.l1 == l1 / parsed);
  }
  double avg = 0;
  for (const DatasetAggregate& agg : report.per_dataset) avg += agg.delta1;
  CHECK(report.overall.delta1 == avg / report.per_dataset.size());
}

TEST_CASE("parallel metric kernel matches the serial reference") {
  Rng rng(16);
  std::vector<SampleRecord> a;
  for (int i = 0; i < 5'000; ++i) {
    SampleRecord r;
    r.dataset = "d";
    r.gt = rng.uniform(0.1, 50.0);
    r.pred = rng.uniform(0.05, 60.0);
    a.push_back(r);
  }
  std::vector<SampleRecord> b = a;
  compute_sample_metrics(a, Delta1Rule::max_ratio);
  compute_sample_metrics_serial(b, Delta1Rule::max_ratio);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].delta1 == b[i].delta1);
    CHECK(a[i].abs_rel == b[i].abs_rel);
    CHECK(a[i].l1 == b[i].l1);
    CHECK(a[i].l2 == b[i].l2);
  }
}

TEST_CASE("report table survives wide cells from large errors") {
  std::vector<SampleRecord> records;
  SampleRecord r;
  r.dataset = "far";
  r.gt = 100.0;
  r.pred = 2.0;  // l2 = 9604, wider than the default column
  records.push_back(r);
  const MetricReport report = aggregate(std::move(records));
  const std::string table = format_report_table(report);
  CHECK(table.find("9604") != std::string::npos);
}

TEST_CASE("report table and csv have datasets as columns with Average last") {
  std::vector<SampleRecord> records;
  SampleRecord r;
  r.dataset = "indoor";
  r.gt = 2.0;
  r.pred = 2.0;
  records.push_back(r);
  r.dataset = "outdoor";
  r.pred = 9.0;
  records.push_back(r);
  const MetricReport report = aggregate(std::move(records));
  const std::string table = format_report_table(report);
  const std::size_t indoor = table.find("indoor");
  const std::size_t outdoor = table.find("outdoor");
  const std::size_t average = table.find("Average");
  CHECK(indoor != std::string::npos);
  CHECK(outdoor != std::string::npos);
  CHECK(average != std::string::npos);
  CHECK(indoor < average);
  CHECK(outdoor < average);
  CHECK(table.find("delta1") != std::string::npos);
}
