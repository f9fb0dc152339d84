// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "forge/augment.hpp"
#include "forge/client.hpp"
#include "forge/markers.hpp"
#include "forge/metrics.hpp"
#include "forge/tasks.hpp"

namespace forge {

enum class ClientMode { oracle, endpoint };

/// Everything a pipeline run needs, mirrored 1:1 by the config file sections.
/// Defaults match the reference training/evaluation constants.
struct PipelineConfig {
  // [global]
  std::uint64_t seed = 0;
  int eval_count = 8192;   // per dataset
  double max_depth = 300;  // meters; deeper labels are masked invalid
  // [augment]
  AugmentConfig augment;
  // [marker]
  MarkerSpec marker;
  // [prompt]
  PromptVariant variant = PromptVariant::marker_plain;
  std::string templates_file;  // optional override of the builtin table
  // [tasks]
  std::vector<TaskKind> tasks{TaskKind::distance};
  int pixels_per_image = 1;
  TaskParams task_params;
  // [mixture] — empty means weight 1 for every dataset in the manifest
  std::map<std::string, double> mixture_weights;
  // [client]
  ClientMode mode = ClientMode::oracle;
  EndpointConfig endpoint;
  OracleConfig oracle;
  // [metrics]
  Delta1Rule delta1_rule = Delta1Rule::max_ratio;
  GrpoConfig grpo;

  void validate() const;
  const TemplateTable& templates() const;
};

/// Parse the sectioned key = value config file. Unknown keys are errors.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Serialize the fully-resolved config; loading it back reproduces the run.
void write_pipeline_config(const PipelineConfig& cfg, const std::filesystem::path& path);
std::string pipeline_config_text(const PipelineConfig& cfg);

}  // namespace forge
