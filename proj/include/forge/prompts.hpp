// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "forge/geometry.hpp"
#include "forge/task_kind.hpp"

namespace forge {

/// How the query pixel and the expected answer are phrased.
enum class PromptVariant {
  marker_plain,        // visual marker, plain sentence answer
  marker_grpo,         // visual marker, <think>/<answer> tagged output
  text_coordinate,     // pixel coordinates written into the question text
  intrinsics_in_text,  // camera intrinsics written into the question text
  ray_then_depth,      // answer states the ray direction before the distance
};

constexpr std::array<PromptVariant, 5> kAllVariants = {
    PromptVariant::marker_plain, PromptVariant::marker_grpo, PromptVariant::text_coordinate,
    PromptVariant::intrinsics_in_text, PromptVariant::ray_then_depth};

PromptVariant prompt_variant_from_string(const std::string& s);
std::string to_string(PromptVariant v);

// Question/answer wordings live in one versioned table. Entries marked locked
// are byte-frozen (tests pin them); the rest can be swapped via an override
// file without touching code.
class TemplateTable {
 public:
  static const TemplateTable& builtin();
  static TemplateTable from_json_text(const std::string& json_text);
  static TemplateTable from_file(const std::string& path);

  std::string question(TaskKind task, PromptVariant v) const;
  std::string answer_template(TaskKind task, PromptVariant v) const;
  bool question_locked(TaskKind task, PromptVariant v) const;
  int version() const { return version_; }

  struct Entry {
    std::string text;
    bool locked = false;
  };

 private:
  int version_ = 0;
  // key: "<task>/<variant>"
  std::map<std::string, Entry> questions_;
  std::map<std::string, Entry> answers_;
  const Entry& lookup(const std::map<std::string, Entry>& table, TaskKind task,
                      PromptVariant v, const char* what) const;
};

/// Everything a question template may interpolate.
struct QuestionContext {
  std::optional<int> width, height;
  std::optional<Pixel> pixel;
  std::optional<Intrinsics> intrinsics;
  std::optional<double> given_speed;  // m/s, 1 decimal
  std::optional<double> given_time;   // s, 1 decimal
};

std::string build_question(TaskKind task, PromptVariant v, const QuestionContext& ctx,
                           const TemplateTable& table = TemplateTable::builtin());

struct AnswerValues {
  double value = 0;  // meters / m/s / seconds depending on task
  std::optional<double> horizontal_deg;  // ray_then_depth only, signed (+ = right)
  std::optional<double> vertical_deg;    // signed (+ = above)
};

std::string build_answer(TaskKind task, PromptVariant v, const AnswerValues& values,
                         const TemplateTable& table = TemplateTable::builtin());

enum class ParseStatus { ok, no_number, ambiguous, domain };
std::string to_string(ParseStatus s);

struct ParsedAnswer {
  double value = 0;
  std::string raw_text;
  std::optional<std::pair<double, double>> ray_degrees;  // (horizontal, vertical), signed
  // 0 = strict template / tag match, 1 = unit-proximity heuristic, 2 = last number.
  int ladder_level = 0;
  // True when a grpo-tagged output carried both <think> and a parsable <answer>.
  bool format_ok = false;
};

struct ParseResult {
  ParseStatus status = ParseStatus::no_number;
  ParsedAnswer answer;
  bool ok() const { return status == ParseStatus::ok; }
};

ParseResult parse_answer(std::string_view text, PromptVariant v,
                         const TemplateTable& table = TemplateTable::builtin());

/// Round half away from zero to two decimals; the project-wide answer rounding.
double round2(double v);
/// Fixed two-decimal rendering of round2(v), e.g. 2 -> "2.00".
std::string format_fixed2(double v);
/// One-decimal rendering used for given speed/time values.
std::string format_fixed1(double v);
/// Trim-trailing-zeros rendering used for intrinsics inside question text.
std::string format_trimmed(double v);

}  // namespace forge
