// SPDX-License-Identifier: Apache-2.0

#include "forge/prompts.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "forge/png_io.hpp"

namespace forge {

namespace {

// Default wording table. Locked entries are frozen verbatim; the rest are
// project wordings that an override file may replace.
constexpr const char* kDefaultTemplates = R"json({
  "schema_version": 1,
  "questions": {
    "distance": {
      "marker_plain": {"text": "How many meters is this point from the camera?", "locked": true},
      "marker_grpo": {"text": "How far is this point from the camera? Output the thinking process in <think> </think> and final answer (the meter number only, without the unit) in <answer> </answer> tags.", "locked": true},
      "text_coordinate": {"text": "Given this image of size (width = {width}, height = {height}), how far is the pixel at ({u}, {v}) from the camera?", "locked": true},
      "intrinsics_in_text": {"text": "Given this image of size (width = {width}, height = {height}), where the camera intrinsics are (fx = {fx}, fy = {fy}, cx = {cx}, cy = {cy}) and the images are without distortions, how many meters is this point away from the camera?", "locked": true},
      "ray_then_depth": {"text": "How many meters is this point from the camera?", "locked": true}
    },
    "principal_axis_distance": {
      "marker_plain": {"text": "How many meters is this point from the camera along the camera's forward axis?"},
      "marker_grpo": {"text": "How many meters is this point from the camera along the camera's forward axis? Output the thinking process in <think> </think> and final answer (the meter number only, without the unit) in <answer> </answer> tags."}
    },
    "speed": {
      "marker_plain": {"text": "What speed in meters per second is needed to reach this point from the camera in {time} seconds?"},
      "marker_grpo": {"text": "What speed in meters per second is needed to reach this point from the camera in {time} seconds? Output the thinking process in <think> </think> and final answer (the number only, without the unit) in <answer> </answer> tags."}
    },
    "time": {
      "marker_plain": {"text": "How many seconds are needed to reach this point from the camera at a speed of {speed} meters per second?"},
      "marker_grpo": {"text": "How many seconds are needed to reach this point from the camera at a speed of {speed} meters per second? Output the thinking process in <think> </think> and final answer (the number only, without the unit) in <answer> </answer> tags."}
    },
    "two_point_distance": {
      "marker_plain": {"text": "How many meters apart are the two points marked A and B?"},
      "marker_grpo": {"text": "How many meters apart are the two points marked A and B? Output the thinking process in <think> </think> and final answer (the meter number only, without the unit) in <answer> </answer> tags."}
    },
    "pose": {
      "marker_plain": {"text": "How many meters has the camera moved between these two images?"},
      "marker_grpo": {"text": "How many meters has the camera moved between these two images? Output the thinking process in <think> </think> and final answer (the meter number only, without the unit) in <answer> </answer> tags."}
    }
  },
  "answers": {
    "distance": {
      "marker_plain": {"text": "The point is around {value} meters away from the camera.", "locked": true},
      "marker_grpo": {"text": "<think> The point is located about {value} meters from the camera. </think> <answer> {value} </answer>"},
      "ray_then_depth": {"text": "The point is around {h_deg} degrees to the {h_dir}, {v_deg} degrees {v_dir} and {value} meters away from the camera.", "locked": true}
    },
    "principal_axis_distance": {
      "marker_plain": {"text": "The point is around {value} meters away from the camera along its forward axis."},
      "marker_grpo": {"text": "<think> The point is located about {value} meters from the camera along its forward axis. </think> <answer> {value} </answer>"}
    },
    "speed": {
      "marker_plain": {"text": "The speed needed is around {value} meters per second."},
      "marker_grpo": {"text": "<think> The speed needed is about {value} meters per second. </think> <answer> {value} </answer>"}
    },
    "time": {
      "marker_plain": {"text": "The time needed is around {value} seconds."},
      "marker_grpo": {"text": "<think> The time needed is about {value} seconds. </think> <answer> {value} </answer>"}
    },
    "two_point_distance": {
      "marker_plain": {"text": "The two points are around {value} meters apart."},
      "marker_grpo": {"text": "<think> The two points are about {value} meters apart. </think> <answer> {value} </answer>"}
    },
    "pose": {
      "marker_plain": {"text": "The camera has moved around {value} meters."},
      "marker_grpo": {"text": "<think> The camera has moved about {value} meters. </think> <answer> {value} </answer>"}
    }
  }
})json";

std::string table_key(TaskKind task, PromptVariant v) {
  return to_string(task) + "/" + to_string(v);
}

// Variants that only change the question side share the marker_plain answer.
PromptVariant answer_variant(PromptVariant v) {
  switch (v) {
    case PromptVariant::text_coordinate:
    case PromptVariant::intrinsics_in_text:
      return PromptVariant::marker_plain;
    default:
      return v;
  }
}

}  // namespace

PromptVariant prompt_variant_from_string(const std::string& s) {
  for (PromptVariant v : kAllVariants) {
    if (to_string(v) == s) return v;
  }
  throw std::invalid_argument("unknown prompt variant: " + s);
}

std::string to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::marker_plain: return "marker_plain";
    case PromptVariant::marker_grpo: return "marker_grpo";
    case PromptVariant::text_coordinate: return "text_coordinate";
    case PromptVariant::intrinsics_in_text: return "intrinsics_in_text";
    case PromptVariant::ray_then_depth: return "ray_then_depth";
  }
  return "marker_plain";
}

std::string to_string(ParseStatus s) {
  switch (s) {
    case ParseStatus::ok: return "ok";
    case ParseStatus::no_number: return "no_number";
    case ParseStatus::ambiguous: return "ambiguous";
    case ParseStatus::domain: return "domain";
  }
  return "no_number";
}

const TemplateTable& TemplateTable::builtin() {
  static const TemplateTable table = from_json_text(kDefaultTemplates);
  return table;
}

TemplateTable TemplateTable::from_json_text(const std::string& json_text) {
  const nlohmann::json doc = nlohmann::json::parse(json_text);
  TemplateTable table;
  table.version_ = doc.at("schema_version").get<int>();
  const auto read_section = [](const nlohmann::json& section,
                               std::map<std::string, Entry>& out) {
    for (const auto& [task, variants] : section.items()) {
      for (const auto& [variant, entry] : variants.items()) {
        Entry e;
        e.text = entry.at("text").get<std::string>();
        e.locked = entry.value("locked", false);
        out[task + "/" + variant] = std::move(e);
      }
    }
  };
  read_section(doc.at("questions"), table.questions_);
  read_section(doc.at("answers"), table.answers_);
  return table;
}

TemplateTable TemplateTable::from_file(const std::string& path) {
  return from_json_text(read_text_file(path));
}

const TemplateTable::Entry& TemplateTable::lookup(const std::map<std::string, Entry>& table,
                                                  TaskKind task, PromptVariant v,
                                                  const char* what) const {
  const auto it = table.find(table_key(task, v));
  if (it == table.end()) {
    throw std::invalid_argument(std::string("no ") + what + " template for " +
                                table_key(task, v));
  }
  return it->second;
}

std::string TemplateTable::question(TaskKind task, PromptVariant v) const {
  return lookup(questions_, task, v, "question").text;
}

std::string TemplateTable::answer_template(TaskKind task, PromptVariant v) const {
  return lookup(answers_, task, answer_variant(v), "answer").text;
}

bool TemplateTable::question_locked(TaskKind task, PromptVariant v) const {
  return lookup(questions_, task, v, "question").locked;
}

double round2(double v) {
  return std::copysign(static_cast<double>(std::llround(std::abs(v) * 100.0)) / 100.0, v);
}

std::string format_fixed2(double v) {
  const long long cents = std::llround(std::abs(v) * 100.0);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%lld.%02lld", v < 0 && cents > 0 ? "-" : "", cents / 100,
                cents % 100);
  return buf;
}

std::string format_fixed1(double v) {
  const long long tenths = std::llround(std::abs(v) * 10.0);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%lld.%lld", v < 0 && tenths > 0 ? "-" : "", tenths / 10,
                tenths % 10);
  return buf;
}

std::string format_trimmed(double v) {
  std::string s = format_fixed2(v);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

namespace {

std::string substitute(const std::string& tmpl,
                       const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string::npos) throw std::invalid_argument("template: unbalanced brace");
    out.append(tmpl, pos, open - pos);
    const std::string key = tmpl.substr(open + 1, close - open - 1);
    const auto it = values.find(key);
    if (it == values.end()) {
      throw std::invalid_argument("template: missing value for placeholder {" + key + "}");
    }
    out += it->second;
    pos = close + 1;
  }
  return out;
}

}  // namespace

std::string build_question(TaskKind task, PromptVariant v, const QuestionContext& ctx,
                           const TemplateTable& table) {
  std::map<std::string, std::string> values;
  if (ctx.width) values["width"] = std::to_string(*ctx.width);
  if (ctx.height) values["height"] = std::to_string(*ctx.height);
  if (ctx.pixel) {
    values["u"] = std::to_string(static_cast<long long>(std::llround(ctx.pixel->u)));
    values["v"] = std::to_string(static_cast<long long>(std::llround(ctx.pixel->v)));
  }
  if (ctx.intrinsics) {
    values["fx"] = format_trimmed(ctx.intrinsics->fx);
    values["fy"] = format_trimmed(ctx.intrinsics->fy);
    values["cx"] = format_trimmed(ctx.intrinsics->cx);
    values["cy"] = format_trimmed(ctx.intrinsics->cy);
  }
  if (ctx.given_speed) values["speed"] = format_fixed1(*ctx.given_speed);
  if (ctx.given_time) values["time"] = format_fixed1(*ctx.given_time);
  return substitute(table.question(task, v), values);
}

std::string build_answer(TaskKind task, PromptVariant v, const AnswerValues& values,
                         const TemplateTable& table) {
  if (!(values.value > 0) || !std::isfinite(values.value)) {
    throw std::domain_error("build_answer: value must be finite and > 0");
  }
  std::map<std::string, std::string> slots;
  slots["value"] = format_fixed2(values.value);
  if (v == PromptVariant::ray_then_depth) {
    if (!values.horizontal_deg || !values.vertical_deg ||
        !std::isfinite(*values.horizontal_deg) || !std::isfinite(*values.vertical_deg)) {
      throw std::domain_error("build_answer: ray_then_depth needs finite angles");
    }
    slots["h_deg"] = format_fixed2(std::abs(*values.horizontal_deg));
    slots["v_deg"] = format_fixed2(std::abs(*values.vertical_deg));
    slots["h_dir"] = *values.horizontal_deg >= 0 ? "right" : "left";
    slots["v_dir"] = *values.vertical_deg >= 0 ? "above" : "below";
  }
  return substitute(table.answer_template(task, v), slots);
}

namespace {

struct NumberToken {
  double value = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

bool is_number_start(char c) { return (c >= '0' && c <= '9'); }

// Scan every decimal/scientific number token in the text.
std::vector<NumberToken> scan_numbers(std::string_view text) {
  std::vector<NumberToken> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t start = i;
    char c = text[i];
    if (c == '+' || c == '-') {
      if (i + 1 < text.size() && is_number_start(text[i + 1])) {
        ++i;
        c = text[i];
      } else {
        ++i;
        continue;
      }
    }
    if (!is_number_start(c)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    if (j < text.size() && text[j] == '.' && j + 1 < text.size() &&
        std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
      ++j;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    }
    if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
      if (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) {
        ++k;
        while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
        j = k;
      }
    }
    NumberToken tok;
    tok.begin = start;
    tok.end = j;
    tok.value = std::strtod(std::string(text.substr(start, j - start)).c_str(), nullptr);
    out.push_back(tok);
    i = j;
  }
  return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Positions of whole-word unit tokens ("meters", "seconds", ...).
std::vector<std::size_t> find_unit_tokens(std::string_view text) {
  static const char* kUnits[] = {"meters", "meter", "seconds", "second"};
  std::vector<std::size_t> out;
  for (const char* unit : kUnits) {
    const std::size_t len = std::strlen(unit);
    std::size_t pos = 0;
    while ((pos = text.find(unit, pos)) != std::string_view::npos) {
      const bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
      const bool right_ok = pos + len >= text.size() || !is_word_char(text[pos + len]);
      if (left_ok && right_ok) out.push_back(pos);
      pos += len;
    }
  }
  return out;
}

struct TemplateMatch {
  std::map<std::string, std::string> slots;
};

// Strict full-string match of text against a template with {slot} holes.
std::optional<TemplateMatch> match_template(std::string_view text, const std::string& tmpl) {
  std::vector<std::string> literals;
  std::vector<std::string> slots;
  std::size_t pos = 0;
  while (pos <= tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      literals.push_back(tmpl.substr(pos));
      break;
    }
    const std::size_t close = tmpl.find('}', open);
    literals.push_back(tmpl.substr(pos, open - pos));
    slots.push_back(tmpl.substr(open + 1, close - open - 1));
    pos = close + 1;
  }

  TemplateMatch match;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < literals.size(); ++i) {
    const std::string& lit = literals[i];
    if (i == 0) {
      if (text.substr(0, lit.size()) != lit) return std::nullopt;
      cursor = lit.size();
      continue;
    }
    const std::size_t found = lit.empty() ? text.size() : text.find(lit, cursor);
    if (found == std::string_view::npos) return std::nullopt;
    const std::string captured(text.substr(cursor, found - cursor));
    const std::string& slot = slots[i - 1];
    const auto it = match.slots.find(slot);
    if (it != match.slots.end()) {
      if (it->second != captured) return std::nullopt;  // repeated slot must agree
    } else {
      match.slots[slot] = captured;
    }
    cursor = found + lit.size();
  }
  if (cursor != text.size()) return std::nullopt;
  return match;
}

std::optional<double> parse_single_number(const std::string& s) {
  const std::vector<NumberToken> nums = scan_numbers(s);
  if (nums.size() != 1) return std::nullopt;
  // Reject if the captured slot has non-numeric noise around the token.
  const NumberToken& t = nums[0];
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i >= t.begin && i < t.end) continue;
    if (!std::isspace(static_cast<unsigned char>(s[i]))) return std::nullopt;
  }
  return t.value;
}

ParseResult finish(double value, int ladder, bool format_ok, std::string_view text,
                   std::optional<std::pair<double, double>> ray = std::nullopt) {
  ParseResult out;
  if (!(value > 0) || !std::isfinite(value)) {
    out.status = ParseStatus::domain;
    out.answer.raw_text = std::string(text);
    return out;
  }
  out.status = ParseStatus::ok;
  out.answer.value = value;
  out.answer.raw_text = std::string(text);
  out.answer.ladder_level = ladder;
  out.answer.format_ok = format_ok;
  out.answer.ray_degrees = ray;
  return out;
}

// Strict pass over the known sentence templates (all tasks).
std::optional<ParseResult> try_strict_sentence(std::string_view text,
                                               const TemplateTable& table) {
  for (TaskKind task : kAllTasks) {
    for (PromptVariant v : {PromptVariant::marker_plain, PromptVariant::ray_then_depth}) {
      std::string tmpl;
      try {
        tmpl = table.answer_template(task, v);
      } catch (const std::invalid_argument&) {
        continue;
      }
      const auto match = match_template(text, tmpl);
      if (!match) continue;
      const auto value_it = match->slots.find("value");
      if (value_it == match->slots.end()) continue;
      const auto value = parse_single_number(value_it->second);
      if (!value) continue;
      std::optional<std::pair<double, double>> ray;
      if (v == PromptVariant::ray_then_depth) {
        const auto h = parse_single_number(match->slots.at("h_deg"));
        const auto vdeg = parse_single_number(match->slots.at("v_deg"));
        const std::string& hdir = match->slots.at("h_dir");
        const std::string& vdir = match->slots.at("v_dir");
        if (!h || !vdeg || (hdir != "right" && hdir != "left") ||
            (vdir != "above" && vdir != "below")) {
          continue;
        }
        ray = {{hdir == "left" ? -*h : *h, vdir == "below" ? -*vdeg : *vdeg}};
      }
      return finish(*value, 0, false, text, ray);
    }
  }
  return std::nullopt;
}

}  // namespace

ParseResult parse_answer(std::string_view text, PromptVariant v, const TemplateTable& table) {
  bool format_ok = false;
  if (v == PromptVariant::marker_grpo) {
    const std::size_t open = text.rfind("<answer>");
    if (open != std::string_view::npos) {
      const std::size_t close = text.find("</answer>", open);
      if (close != std::string_view::npos) {
        const std::string_view inner = text.substr(open + 8, close - open - 8);
        const std::vector<NumberToken> nums = scan_numbers(inner);
        if (nums.size() > 1) {
          ParseResult out;
          out.status = ParseStatus::ambiguous;
          out.answer.raw_text = std::string(text);
          return out;
        }
        if (nums.size() == 1) {
          format_ok = text.find("<think>") != std::string_view::npos &&
                      text.find("</think>") != std::string_view::npos;
          return finish(nums[0].value, 0, format_ok, text);
        }
      }
    }
    // No usable tag; fall through the leniency ladder with format_ok = false.
  } else {
    if (auto strict = try_strict_sentence(text, table)) return *strict;
  }

  const std::vector<NumberToken> nums = scan_numbers(text);
  if (nums.empty()) {
    ParseResult out;
    out.status = ParseStatus::no_number;
    out.answer.raw_text = std::string(text);
    return out;
  }

  // Ladder level 1: number nearest to a unit token, scanning left of it.
  const std::vector<std::size_t> units = find_unit_tokens(text);
  const NumberToken* best = nullptr;
  std::size_t best_gap = std::string::npos;
  for (const std::size_t upos : units) {
    for (const NumberToken& n : nums) {
      if (n.end > upos) continue;
      const std::size_t gap = upos - n.end;
      if (gap < best_gap) {
        best_gap = gap;
        best = &n;
      }
    }
  }
  if (best) return finish(best->value, 1, format_ok, text);

  // Ladder level 2: last number anywhere.
  return finish(nums.back().value, 2, format_ok, text);
}

}  // namespace forge
