// SPDX-License-Identifier: Apache-2.0

#include "forge/client.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "forge/errors.hpp"
#include "forge/rng.hpp"

namespace forge {

void EndpointConfig::validate() const {
  if (base_url.empty()) throw ConfigError("endpoint: base_url is required");
  if (model_name.empty()) throw ConfigError("endpoint: model_name is required");
  if (max_concurrency < 1) throw ConfigError("endpoint: max_concurrency must be >= 1");
  if (!(request_timeout_s > 0)) throw ConfigError("endpoint: request_timeout must be > 0");
  if (max_retries < 0) throw ConfigError("endpoint: max_retries must be >= 0");
  if (!(backoff_base_s >= 0)) throw ConfigError("endpoint: backoff_base must be >= 0");
}

void OracleConfig::validate() const {
  if (!(noise_sigma >= 0)) throw ConfigError("oracle: noise_sigma must be >= 0");
  if (!(refusal_rate >= 0) || !(refusal_rate <= 1)) {
    throw ConfigError("oracle: refusal_rate must be in [0, 1]");
  }
}

namespace {

const char kBase64Chars[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<std::uint8_t>& data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < data.size(); i += 3) {
    const std::uint32_t n = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out.push_back(kBase64Chars[(n >> 18) & 63]);
    out.push_back(kBase64Chars[(n >> 12) & 63]);
    out.push_back(kBase64Chars[(n >> 6) & 63]);
    out.push_back(kBase64Chars[n & 63]);
  }
  if (i + 1 == data.size()) {
    const std::uint32_t n = data[i] << 16;
    out.push_back(kBase64Chars[(n >> 18) & 63]);
    out.push_back(kBase64Chars[(n >> 12) & 63]);
    out += "==";
  } else if (i + 2 == data.size()) {
    const std::uint32_t n = (data[i] << 16) | (data[i + 1] << 8);
    out.push_back(kBase64Chars[(n >> 18) & 63]);
    out.push_back(kBase64Chars[(n >> 12) & 63]);
    out.push_back(kBase64Chars[(n >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

// Split "http://host:port/prefix" into the httplib host part and the path prefix.
void split_url(const std::string& url, std::string& host, std::string& prefix) {
  std::size_t scheme_end = url.find("://");
  const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const std::size_t slash = url.find('/', host_start);
  if (slash == std::string::npos) {
    host = url;
    prefix.clear();
  } else {
    host = url.substr(0, slash);
    prefix = url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  }
}

bool transient_status(int status) { return status == 429 || (status >= 500 && status < 600); }

}  // namespace

// RAII slot in the bounded-concurrency pool.
class VlmClient::Permit {
 public:
  explicit Permit(VlmClient& c) : client_(c) {
    std::unique_lock lock(client_.slots_mutex_);
    client_.slots_cv_.wait(lock, [&] { return client_.slots_in_use_ < client_.cfg_.max_concurrency; });
    ++client_.slots_in_use_;
  }
  ~Permit() {
    {
      std::lock_guard lock(client_.slots_mutex_);
      --client_.slots_in_use_;
    }
    client_.slots_cv_.notify_one();
  }

 private:
  VlmClient& client_;
};

VlmClient::VlmClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.api_key.empty()) {
    if (const char* env = std::getenv("DEPTHLM_API_KEY")) cfg_.api_key = env;
  }
  cfg_.validate();
  split_url(cfg_.base_url, host_, path_prefix_);
}

VlmClient::~VlmClient() = default;

void VlmClient::log_exchange(const std::string& prompt, const std::string& outcome, int status,
                             int attempts) {
  if (cfg_.log_path.empty()) return;
  std::lock_guard lock(log_mutex_);
  std::ofstream f(cfg_.log_path, std::ios::app);
  nlohmann::ordered_json j;
  j["model"] = cfg_.model_name;
  j["prompt"] = prompt;
  j["image"] = "<elided>";
  j["status"] = status;
  j["attempts"] = attempts;
  j["outcome"] = outcome;
  f << j.dump() << '\n';
}

std::string VlmClient::query(const std::vector<std::uint8_t>& png_bytes,
                             const std::string& prompt) {
  std::vector<std::vector<std::uint8_t>> images;
  if (!png_bytes.empty()) images.push_back(png_bytes);
  return query_images(images, prompt);
}

std::string VlmClient::query_images(const std::vector<std::vector<std::uint8_t>>& pngs,
                                    const std::string& prompt) {
  Permit permit(*this);

  nlohmann::json content = nlohmann::json::array();
  for (const std::vector<std::uint8_t>& png : pngs) {
    content.push_back({{"type", "image_url"},
                       {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
  }
  content.push_back({{"type", "text"}, {"text", prompt}});
  nlohmann::json body = {
      {"model", cfg_.model_name},
      {"temperature", cfg_.temperature},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})},
  };
  const std::string payload = body.dump();

  // Jitter stream seeded per request so retry delays are not lock-step.
  static std::atomic<std::uint64_t> request_counter{0};
  Rng jitter(derive_seed(0x9d2c5680, request_counter.fetch_add(1)));

  int last_status = 0;
  std::string last_error = "connection failed";
  const int attempts_allowed = cfg_.max_retries + 1;
  for (int attempt = 0; attempt < attempts_allowed; ++attempt) {
    if (attempt > 0) {
      const double base = cfg_.backoff_base_s * std::pow(2.0, attempt - 1);
      const double delay = base * (1.0 + 0.1 * jitter.uniform());
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }

    httplib::Client http(host_);
    const auto timeout = std::chrono::duration<double>(cfg_.request_timeout_s);
    http.set_connection_timeout(timeout);
    http.set_read_timeout(timeout);
    http.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    httplib::Result res =
        http.Post(path_prefix_ + "/chat/completions", headers, payload, "application/json");
    if (!res) {
      last_status = 0;
      last_error = "transport: " + httplib::to_string(res.error());
      continue;  // connection-level failures are transient
    }
    last_status = res->status;
    if (res->status >= 200 && res->status < 300) {
      try {
        const nlohmann::json reply = nlohmann::json::parse(res->body);
        std::string text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        log_exchange(prompt, "ok", res->status, attempt + 1);
        return text;
      } catch (const nlohmann::json::exception& ex) {
        log_exchange(prompt, std::string("bad body: ") + ex.what(), res->status, attempt + 1);
        throw ProtocolError(std::string("malformed completion response: ") + ex.what(),
                            res->status);
      }
    }
    if (!transient_status(res->status)) {
      log_exchange(prompt, "protocol error", res->status, attempt + 1);
      throw ProtocolError("endpoint returned status " + std::to_string(res->status),
                          res->status);
    }
    last_error = "status " + std::to_string(res->status);
  }

  log_exchange(prompt, "retries exhausted: " + last_error, last_status, attempts_allowed);
  throw TransportError("retries exhausted (" + std::to_string(attempts_allowed) +
                           " attempts): " + last_error,
                       last_status);
}

std::string oracle_answer(TaskKind task, PromptVariant variant, double gt_value,
                          const OracleConfig& cfg, std::string_view sample_key,
                          const AnswerValues* extras, const TemplateTable& table) {
  cfg.validate();
  if (!(gt_value > 0)) throw std::domain_error("oracle_answer: gt_value must be > 0");
  Rng rng(derive_seed(cfg.seed, sample_key));
  if (cfg.refusal_rate > 0 && rng.uniform() < cfg.refusal_rate) {
    return "I cannot tell.";
  }
  double value = gt_value;
  if (cfg.noise_sigma > 0) value = gt_value * std::exp(rng.normal(0.0, cfg.noise_sigma));
  AnswerValues values;
  if (extras) values = *extras;
  values.value = value;
  return build_answer(task, variant, values, table);
}

}  // namespace forge
