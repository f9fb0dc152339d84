// SPDX-License-Identifier: Apache-2.0

#include "forge/sft.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "forge/errors.hpp"
#include "forge/png_io.hpp"

namespace forge {

namespace {

std::string sanitize(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  }
  return out;
}

}  // namespace

SftExportStats export_sft(std::span<const QaRecord> records,
                          const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "images");
  std::ofstream jsonl(out_dir / "sft.jsonl", std::ios::trunc);
  if (!jsonl) throw ConfigError("cannot write " + (out_dir / "sft.jsonl").string());

  SftExportStats stats;
  std::set<std::string> used_names;
  std::size_t ordinal = 0;
  for (const QaRecord& rec : records) {
    std::vector<std::string> files;
    for (std::size_t i = 0; i < rec.images.size(); ++i) {
      char prefix[16];
      std::snprintf(prefix, sizeof(prefix), "%06zu", ordinal);
      std::string name = std::string("images/") + prefix + "_" + sanitize(rec.sample_id) + "_" +
                         to_string(rec.task);
      if (rec.images.size() > 1) name += i == 0 ? "_a" : "_b";
      name += ".png";
      if (!used_names.insert(name).second) {
        throw ConfigError("export_sft: image filename collision: " + name);
      }
      save_png(out_dir / name, rec.images[i]);
      files.push_back(name);
      ++stats.images;
    }

    nlohmann::ordered_json j;
    j["schema_version"] = "1";
    j["id"] = rec.sample_id;
    j["task"] = to_string(rec.task);
    j["variant"] = to_string(rec.variant);
    j["image_files"] = files;
    j["question"] = rec.question;
    j["answer"] = rec.answer;
    j["gt_value"] = rec.gt_value;
    j["unit"] = rec.unit;
    nlohmann::ordered_json meta;
    meta["dataset"] = rec.dataset;
    meta["seed"] = rec.seed;
    if (rec.given_speed) meta["given_speed"] = *rec.given_speed;
    if (rec.given_time) meta["given_time"] = *rec.given_time;
    meta["transform"] = {{"scale_x", rec.transform.scale_x},
                         {"scale_y", rec.transform.scale_y},
                         {"offset_x", rec.transform.offset_x},
                         {"offset_y", rec.transform.offset_y}};
    nlohmann::ordered_json qp = nlohmann::ordered_json::array();
    for (const Pixel& p : rec.query_pixels) qp.push_back({p.u, p.v});
    nlohmann::ordered_json qpo = nlohmann::ordered_json::array();
    for (const Pixel& p : rec.query_pixels_original) qpo.push_back({p.u, p.v});
    meta["query_pixels"] = qp;
    meta["query_pixels_original"] = qpo;
    j["meta"] = meta;
    jsonl << j.dump() << '\n';

    ++stats.records;
    ++stats.per_task[to_string(rec.task)];
    ++ordinal;
  }
  return stats;
}

}  // namespace forge
