// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "forge/prompts.hpp"
#include "forge/task_kind.hpp"

namespace forge {

/// OpenAI-compatible chat-completions endpoint settings. base_url carries any
/// path prefix, e.g. "http://host:8000/v1"; the api key comes from
/// DEPTHLM_API_KEY unless set explicitly.
struct EndpointConfig {
  std::string base_url;
  std::string api_key;
  std::string model_name;
  int max_concurrency = 8;
  double request_timeout_s = 120.0;
  int max_retries = 3;
  double temperature = 0.0;
  double backoff_base_s = 1.0;  // doubles per retry, with additive jitter
  std::string log_path;         // JSONL audit log, images elided; empty = off

  void validate() const;
};

/// Thread-safe chat-completions client. At most max_concurrency requests are
/// in flight across all threads; transient failures (connect errors, timeouts,
/// 429, 5xx) retry with exponential backoff.
class VlmClient {
 public:
  explicit VlmClient(EndpointConfig cfg);
  ~VlmClient();
  VlmClient(const VlmClient&) = delete;
  VlmClient& operator=(const VlmClient&) = delete;

  /// One user turn carrying the PNG image (base64 data URL) and the prompt.
  /// Returns the assistant text verbatim. Pass an empty image for text-only.
  std::string query(const std::vector<std::uint8_t>& png_bytes, const std::string& prompt);

  /// Multi-image turn (e.g. camera-pose questions over a frame pair).
  std::string query_images(const std::vector<std::vector<std::uint8_t>>& pngs,
                           const std::string& prompt);

  const EndpointConfig& config() const { return cfg_; }

 private:
  class Permit;
  EndpointConfig cfg_;
  std::string host_;     // scheme://host:port
  std::string path_prefix_;
  std::mutex slots_mutex_;
  std::condition_variable slots_cv_;
  int slots_in_use_ = 0;
  std::mutex log_mutex_;

  void log_exchange(const std::string& prompt, const std::string& outcome, int status,
                    int attempts);
};

/// Mock model for offline runs: answers from the ground truth with optional
/// multiplicative log-normal noise and a refusal probability.
struct OracleConfig {
  double noise_sigma = 0.0;
  double refusal_rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Deterministic per (cfg.seed, sample_key). With zero noise this is exactly
/// build_answer over the ground truth.
std::string oracle_answer(TaskKind task, PromptVariant variant, double gt_value,
                          const OracleConfig& cfg, std::string_view sample_key,
                          const AnswerValues* extras = nullptr,
                          const TemplateTable& table = TemplateTable::builtin());

}  // namespace forge
