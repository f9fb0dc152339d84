// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "forge/prompts.hpp"
#include "forge/rng.hpp"

using namespace forge;

TEST_CASE("frozen question wordings are byte-exact") {
  QuestionContext ctx;
  CHECK(build_question(TaskKind::distance, PromptVariant::marker_plain, ctx) ==
        "How many meters is this point from the camera?");
  CHECK(build_question(TaskKind::distance, PromptVariant::marker_grpo, ctx) ==
        "How far is this point from the camera? Output the thinking process in <think> "
        "</think> and final answer (the meter number only, without the unit) in <answer> "
        "</answer> tags.");

  ctx.width = 800;
  ctx.height = 600;
  ctx.pixel = Pixel{10, 20};
  CHECK(build_question(TaskKind::distance, PromptVariant::text_coordinate, ctx) ==
        "Given this image of size (width = 800, height = 600), how far is the pixel at "
        "(10, 20) from the camera?");

  ctx.intrinsics = Intrinsics{1000, 995.5, 400, 300};
  CHECK(build_question(TaskKind::distance, PromptVariant::intrinsics_in_text, ctx) ==
        "Given this image of size (width = 800, height = 600), where the camera intrinsics "
        "are (fx = 1000, fy = 995.5, cx = 400, cy = 300) and the images are without "
        "distortions, how many meters is this point away from the camera?");
}

TEST_CASE("missing metadata is an error") {
  QuestionContext ctx;  // no dims, no pixel
  CHECK_THROWS(build_question(TaskKind::distance, PromptVariant::text_coordinate, ctx));
  CHECK_THROWS(build_question(TaskKind::speed, PromptVariant::marker_plain, ctx));
}

TEST_CASE("answers render with two half-away-from-zero decimals") {
  CHECK(build_answer(TaskKind::distance, PromptVariant::marker_plain, {3.456, {}, {}}) ==
        "The point is around 3.46 meters away from the camera.");
  CHECK(build_answer(TaskKind::distance, PromptVariant::marker_plain, {2.0, {}, {}}) ==
        "The point is around 2.00 meters away from the camera.");
  CHECK(build_answer(TaskKind::distance, PromptVariant::marker_plain, {0.005, {}, {}}) ==
        "The point is around 0.01 meters away from the camera.");
  CHECK_THROWS(build_answer(TaskKind::distance, PromptVariant::marker_plain, {0.0, {}, {}}));
  CHECK_THROWS(build_answer(TaskKind::distance, PromptVariant::marker_plain, {-3.0, {}, {}}));
}

TEST_CASE("ray answer maps signs onto direction words") {
  AnswerValues v{5.0, -3.1, 2.0};
  CHECK(build_answer(TaskKind::distance, PromptVariant::ray_then_depth, v) ==
        "The point is around 3.10 degrees to the left, 2.00 degrees above and 5.00 meters "
        "away from the camera.");
  v.horizontal_deg = 3.1;
  v.vertical_deg = -2.0;
  CHECK(build_answer(TaskKind::distance, PromptVariant::ray_then_depth, v) ==
        "The point is around 3.10 degrees to the right, 2.00 degrees below and 5.00 meters "
        "away from the camera.");
  v.vertical_deg = {};
  CHECK_THROWS(build_answer(TaskKind::distance, PromptVariant::ray_then_depth, v));
}

TEST_CASE("grpo answer wraps the value in tags") {
  const std::string text =
      build_answer(TaskKind::distance, PromptVariant::marker_grpo, {4.2, {}, {}});
  CHECK(text.find("<think>") != std::string::npos);
  CHECK(text.find("<answer> 4.20 </answer>") != std::string::npos);
}

TEST_CASE("parse: paper-template sentence") {
  const ParseResult r =
      parse_answer("The point is around 12.50 meters away from the camera.",
                   PromptVariant::marker_plain);
  REQUIRE(r.ok());
  CHECK(r.answer.value == 12.50);
  CHECK(r.answer.ladder_level == 0);
}

TEST_CASE("parse: grpo tagged output") {
  const ParseResult r = parse_answer(
      "<think> The point is located about 4.2 meters from the camera. </think> <answer> 4.2 "
      "</answer>",
      PromptVariant::marker_grpo);
  REQUIRE(r.ok());
  CHECK(r.answer.value == 4.2);
  CHECK(r.answer.ladder_level == 0);
  CHECK(r.answer.format_ok);
}

TEST_CASE("parse: grpo with a comma between the tag blocks") {
  const ParseResult r = parse_answer(
      "<think> The point is located about 7 meters from the camera. </think>, <answer> 7 "
      "</answer>",
      PromptVariant::marker_grpo);
  REQUIRE(r.ok());
  CHECK(r.answer.value == 7.0);
}

TEST_CASE("parse: last answer tag wins") {
  const ParseResult r = parse_answer(
      "<answer> 3 </answer> revised: <answer> 5.5 </answer>", PromptVariant::marker_grpo);
  REQUIRE(r.ok());
  CHECK(r.answer.value == 5.5);
  CHECK_FALSE(r.answer.format_ok);  // no think block
}

TEST_CASE("parse: multiple numbers inside one answer tag are ambiguous") {
  const ParseResult r =
      parse_answer("<answer> 3 or 5 </answer>", PromptVariant::marker_grpo);
  CHECK(r.status == ParseStatus::ambiguous);
}

TEST_CASE("parse: refusals carry no number") {
  const ParseResult r =
      parse_answer("I cannot determine the distance.", PromptVariant::marker_plain);
  CHECK(r.status == ParseStatus::no_number);
}

TEST_CASE("parse: non-positive values are domain errors") {
  CHECK(parse_answer("It is around 0.00 meters away.", PromptVariant::marker_plain).status ==
        ParseStatus::domain);
  CHECK(parse_answer("about -4 meters", PromptVariant::marker_plain).status ==
        ParseStatus::domain);
}

TEST_CASE("parse: leniency ladder levels are recorded") {
  // Free-form text with a unit word: level 1.
  const ParseResult l1 =
      parse_answer("My best guess would be roughly 7.3 meters, give or take.",
                   PromptVariant::marker_plain);
  REQUIRE(l1.ok());
  CHECK(l1.answer.value == 7.3);
  CHECK(l1.answer.ladder_level == 1);

  // No unit word at all: level 2 takes the last number.
  const ParseResult l2 = parse_answer("First 3, then 4, final 6.5", PromptVariant::marker_plain);
  REQUIRE(l2.ok());
  CHECK(l2.answer.value == 6.5);
  CHECK(l2.answer.ladder_level == 2);
}

TEST_CASE("parse: ray sentence fills the extras") {
  const ParseResult r = parse_answer(
      "The point is around 3.10 degrees to the left, 2.00 degrees above and 5.00 meters away "
      "from the camera.",
      PromptVariant::ray_then_depth);
  REQUIRE(r.ok());
  CHECK(r.answer.value == 5.0);
  REQUIRE(r.answer.ray_degrees.has_value());
  CHECK(r.answer.ray_degrees->first == -3.10);
  CHECK(r.answer.ray_degrees->second == 2.00);
}

TEST_CASE("parse: scientific notation is accepted") {
  const ParseResult r = parse_answer("around 1.5e1 meters", PromptVariant::marker_plain);
  REQUIRE(r.ok());
  CHECK(r.answer.value == 15.0);
}

TEST_CASE("property: build/parse round trip over all variants and tasks") {
  Rng rng(1234);
  for (int i = 0; i < 10'000; ++i) {
    const double v = rng.uniform(0.05, 300.0);
    const double expect = round2(v);
    if (expect <= 0) continue;
    for (const PromptVariant variant : kAllVariants) {
      AnswerValues values{v, {}, {}};
      if (variant == PromptVariant::ray_then_depth) {
        values.horizontal_deg = rng.uniform(-45, 45);
        values.vertical_deg = rng.uniform(-45, 45);
      }
      const std::string text = build_answer(TaskKind::distance, variant, values);
      const ParseResult parsed = parse_answer(text, variant);
      REQUIRE(parsed.ok());
      CHECK(parsed.answer.value == expect);
    }
    // Non-distance wordings round trip through their own templates.
    for (const TaskKind task : {TaskKind::speed, TaskKind::time, TaskKind::two_point_distance,
                                TaskKind::pose, TaskKind::principal_axis_distance}) {
      const std::string text =
          build_answer(task, PromptVariant::marker_plain, {v, {}, {}});
      const ParseResult parsed = parse_answer(text, PromptVariant::marker_plain);
      REQUIRE(parsed.ok());
      CHECK(parsed.answer.value == expect);
    }
  }
}

TEST_CASE("template table: override file swaps wording, builtin stays locked") {
  const TemplateTable& builtin = TemplateTable::builtin();
  CHECK(builtin.question_locked(TaskKind::distance, PromptVariant::marker_plain));
  CHECK_FALSE(builtin.question_locked(TaskKind::speed, PromptVariant::marker_plain));

  const TemplateTable custom = TemplateTable::from_json_text(R"({
    "schema_version": 2,
    "questions": {"distance": {"marker_plain": {"text": "Distance in meters?"}}},
    "answers": {"distance": {"marker_plain": {"text": "Roughly {value} meters."}}}
  })");
  CHECK(custom.version() == 2);
  CHECK(build_question(TaskKind::distance, PromptVariant::marker_plain, {}, custom) ==
        "Distance in meters?");
  CHECK(build_answer(TaskKind::distance, PromptVariant::marker_plain, {2.5, {}, {}}, custom) ==
        "Roughly 2.50 meters.");
  CHECK_THROWS(build_question(TaskKind::speed, PromptVariant::marker_plain, {}, custom));
}

TEST_CASE("round2 and fixed formatting") {
  CHECK(round2(3.456) == 3.46);
  CHECK(round2(2.0) == 2.0);
  CHECK(format_fixed2(2.0) == "2.00");
  CHECK(format_fixed2(0.005) == "0.01");
  CHECK(format_fixed1(2.04) == "2.0");
  CHECK(format_trimmed(1000.0) == "1000");
  CHECK(format_trimmed(995.50) == "995.5");
  CHECK(format_trimmed(400.25) == "400.25");
}
