// SPDX-License-Identifier: Apache-2.0

#include "forge/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include "forge/errors.hpp"
#include "forge/png_io.hpp"

namespace forge {

void PipelineConfig::validate() const {
  if (eval_count < 1) throw ConfigError("global: eval_count must be >= 1");
  if (!(max_depth > 0)) throw ConfigError("global: max_depth must be > 0");
  augment.validate();
  marker.validate();
  if (pixels_per_image < 1) throw ConfigError("tasks: pixels_per_image must be >= 1");
  if (tasks.empty()) throw ConfigError("tasks: at least one task required");
  grpo.validate();
  if (mode == ClientMode::endpoint) endpoint.validate();
  oracle.validate();
}

const TemplateTable& PipelineConfig::templates() const {
  if (templates_file.empty()) return TemplateTable::builtin();
  static std::map<std::string, TemplateTable> cache;
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  auto it = cache.find(templates_file);
  if (it == cache.end()) {
    it = cache.emplace(templates_file, TemplateTable::from_file(templates_file)).first;
  }
  return it->second;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + value + "'");
  }
}

std::int64_t to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + value + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + value + "'");
}

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

void apply_key(PipelineConfig& cfg, const std::string& section, const std::string& key,
               const std::string& value) {
  const std::string full = section + "." + key;
  if (section == "global") {
    if (key == "seed") return void(cfg.seed = to_u64(full, value));
    if (key == "eval_count") return void(cfg.eval_count = static_cast<int>(to_int(full, value)));
    if (key == "max_depth") return void(cfg.max_depth = to_double(full, value));
  } else if (section == "augment") {
    AugmentConfig& a = cfg.augment;
    if (key == "f_uni") return void(a.f_uni = to_double(full, value));
    if (key == "crop_width_min") return void(a.crop_width_min = static_cast<int>(to_int(full, value)));
    if (key == "crop_width_max") return void(a.crop_width_max = static_cast<int>(to_int(full, value)));
    if (key == "crop_height_min") return void(a.crop_height_min = static_cast<int>(to_int(full, value)));
    if (key == "crop_height_max") return void(a.crop_height_max = static_cast<int>(to_int(full, value)));
    if (key == "crop") return void(a.crop_enabled = to_bool(full, value));
    if (key == "max_dim_guard") return void(a.max_dim_guard = static_cast<int>(to_int(full, value)));
  } else if (section == "marker") {
    MarkerSpec& m = cfg.marker;
    if (key == "style") return void(m.style = marker_style_from_string(value));
    if (key == "stroke_width") return void(m.stroke_width = static_cast<int>(to_int(full, value)));
    if (key == "size") return void(m.size = static_cast<int>(to_int(full, value)));
    if (key == "color") {
      int r = 0, g = 0, b = 0;
      if (std::sscanf(value.c_str(), "%d,%d,%d", &r, &g, &b) != 3 || r < 0 || r > 255 ||
          g < 0 || g > 255 || b < 0 || b > 255) {
        throw ConfigError("config: marker.color must be R,G,B in 0..255");
      }
      m.color = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                 static_cast<std::uint8_t>(b)};
      return;
    }
  } else if (section == "prompt") {
    if (key == "variant") return void(cfg.variant = prompt_variant_from_string(value));
    if (key == "templates_file") return void(cfg.templates_file = value);
  } else if (section == "tasks") {
    TaskParams& t = cfg.task_params;
    if (key == "tasks") {
      cfg.tasks.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) cfg.tasks.push_back(task_kind_from_string(item));
      }
      if (cfg.tasks.empty()) throw ConfigError("config: tasks.tasks must name at least one task");
      return;
    }
    if (key == "pixels_per_image") return void(cfg.pixels_per_image = static_cast<int>(to_int(full, value)));
    if (key == "time_min") return void(t.time_min = to_double(full, value));
    if (key == "time_max") return void(t.time_max = to_double(full, value));
    if (key == "speed_min") return void(t.speed_min = to_double(full, value));
    if (key == "speed_max") return void(t.speed_max = to_double(full, value));
    if (key == "pose_min_disp") return void(t.pose_min_disp = to_double(full, value));
    if (key == "pose_max_disp") return void(t.pose_max_disp = to_double(full, value));
  } else if (section == "mixture") {
    const double w = to_double(full, value);
    if (!(w >= 0)) throw ConfigError("config: mixture weight must be >= 0: " + key);
    cfg.mixture_weights[key] = w;
    return;
  } else if (section == "client") {
    if (key == "mode") {
      if (value == "oracle") return void(cfg.mode = ClientMode::oracle);
      if (value == "endpoint") return void(cfg.mode = ClientMode::endpoint);
      throw ConfigError("config: client.mode must be oracle or endpoint");
    }
  } else if (section == "endpoint") {
    EndpointConfig& e = cfg.endpoint;
    if (key == "base_url") return void(e.base_url = value);
    if (key == "model") return void(e.model_name = value);
    if (key == "max_concurrency") return void(e.max_concurrency = static_cast<int>(to_int(full, value)));
    if (key == "timeout") return void(e.request_timeout_s = to_double(full, value));
    if (key == "max_retries") return void(e.max_retries = static_cast<int>(to_int(full, value)));
    if (key == "temperature") return void(e.temperature = to_double(full, value));
    if (key == "backoff_base") return void(e.backoff_base_s = to_double(full, value));
    if (key == "log_path") return void(e.log_path = value);
  } else if (section == "oracle") {
    OracleConfig& o = cfg.oracle;
    if (key == "noise_sigma") return void(o.noise_sigma = to_double(full, value));
    if (key == "refusal_rate") return void(o.refusal_rate = to_double(full, value));
    if (key == "seed") return void(o.seed = to_u64(full, value));
  } else if (section == "metrics") {
    if (key == "delta1") {
      if (value == "max_ratio") return void(cfg.delta1_rule = Delta1Rule::max_ratio);
      if (value == "one_sided") return void(cfg.delta1_rule = Delta1Rule::one_sided);
      throw ConfigError("config: metrics.delta1 must be max_ratio or one_sided");
    }
    if (key == "group_size") return void(cfg.grpo.group_size = static_cast<int>(to_int(full, value)));
    if (key == "reward") return void(cfg.grpo.reward_kind = metric_kind_from_string(value));
    if (key == "format_required") return void(cfg.grpo.format_required = to_bool(full, value));
    if (key == "format_fail_reward") return void(cfg.grpo.format_fail_reward = to_double(full, value));
    if (key == "beta") return void(cfg.grpo.beta = to_double(full, value));
  } else {
    throw ConfigError("config: unknown section [" + section + "]");
  }
  throw ConfigError("config: unknown key '" + key + "' in section [" + section + "]");
}

}  // namespace

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  PipelineConfig cfg;
  std::string line;
  std::string section = "global";
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_key(cfg, section, key, value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  cfg.validate();
  return cfg;
}

std::string pipeline_config_text(const PipelineConfig& cfg) {
  std::ostringstream out;
  out << "[global]\n";
  out << "seed = " << cfg.seed << "\n";
  out << "eval_count = " << cfg.eval_count << "\n";
  out << "max_depth = " << fmt_double(cfg.max_depth) << "\n";
  out << "\n[augment]\n";
  out << "f_uni = " << fmt_double(cfg.augment.f_uni) << "\n";
  out << "crop_width_min = " << cfg.augment.crop_width_min << "\n";
  out << "crop_width_max = " << cfg.augment.crop_width_max << "\n";
  out << "crop_height_min = " << cfg.augment.crop_height_min << "\n";
  out << "crop_height_max = " << cfg.augment.crop_height_max << "\n";
  out << "crop = " << (cfg.augment.crop_enabled ? "true" : "false") << "\n";
  out << "max_dim_guard = " << cfg.augment.max_dim_guard << "\n";
  out << "\n[marker]\n";
  out << "style = " << to_string(cfg.marker.style) << "\n";
  out << "stroke_width = " << cfg.marker.stroke_width << "\n";
  out << "size = " << cfg.marker.size << "\n";
  out << "color = " << static_cast<int>(cfg.marker.color[0]) << ","
      << static_cast<int>(cfg.marker.color[1]) << "," << static_cast<int>(cfg.marker.color[2])
      << "\n";
  out << "\n[prompt]\n";
  out << "variant = " << to_string(cfg.variant) << "\n";
  if (!cfg.templates_file.empty()) out << "templates_file = " << cfg.templates_file << "\n";
  out << "\n[tasks]\n";
  out << "tasks = ";
  for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
    if (i) out << ",";
    out << to_string(cfg.tasks[i]);
  }
  out << "\n";
  out << "pixels_per_image = " << cfg.pixels_per_image << "\n";
  out << "time_min = " << fmt_double(cfg.task_params.time_min) << "\n";
  out << "time_max = " << fmt_double(cfg.task_params.time_max) << "\n";
  out << "speed_min = " << fmt_double(cfg.task_params.speed_min) << "\n";
  out << "speed_max = " << fmt_double(cfg.task_params.speed_max) << "\n";
  out << "pose_min_disp = " << fmt_double(cfg.task_params.pose_min_disp) << "\n";
  out << "pose_max_disp = " << fmt_double(cfg.task_params.pose_max_disp) << "\n";
  out << "\n[mixture]\n";
  for (const auto& [name, w] : cfg.mixture_weights) {
    out << name << " = " << fmt_double(w) << "\n";
  }
  out << "\n[client]\n";
  out << "mode = " << (cfg.mode == ClientMode::oracle ? "oracle" : "endpoint") << "\n";
  out << "\n[endpoint]\n";
  if (!cfg.endpoint.base_url.empty()) out << "base_url = " << cfg.endpoint.base_url << "\n";
  if (!cfg.endpoint.model_name.empty()) out << "model = " << cfg.endpoint.model_name << "\n";
  out << "max_concurrency = " << cfg.endpoint.max_concurrency << "\n";
  out << "timeout = " << fmt_double(cfg.endpoint.request_timeout_s) << "\n";
  out << "max_retries = " << cfg.endpoint.max_retries << "\n";
  out << "temperature = " << fmt_double(cfg.endpoint.temperature) << "\n";
  out << "backoff_base = " << fmt_double(cfg.endpoint.backoff_base_s) << "\n";
  if (!cfg.endpoint.log_path.empty()) out << "log_path = " << cfg.endpoint.log_path << "\n";
  out << "\n[oracle]\n";
  out << "noise_sigma = " << fmt_double(cfg.oracle.noise_sigma) << "\n";
  out << "refusal_rate = " << fmt_double(cfg.oracle.refusal_rate) << "\n";
  out << "seed = " << cfg.oracle.seed << "\n";
  out << "\n[metrics]\n";
  out << "delta1 = " << (cfg.delta1_rule == Delta1Rule::max_ratio ? "max_ratio" : "one_sided")
      << "\n";
  out << "group_size = " << cfg.grpo.group_size << "\n";
  out << "reward = " << to_string(cfg.grpo.reward_kind) << "\n";
  out << "format_required = " << (cfg.grpo.format_required ? "true" : "false") << "\n";
  out << "format_fail_reward = " << fmt_double(cfg.grpo.format_fail_reward) << "\n";
  out << "beta = " << fmt_double(cfg.grpo.beta) << "\n";
  return out.str();
}

void write_pipeline_config(const PipelineConfig& cfg, const std::filesystem::path& path) {
  write_text_file(path, pipeline_config_text(cfg));
}

}  // namespace forge
