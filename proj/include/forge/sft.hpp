// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>

#include "forge/tasks.hpp"

namespace forge {

struct SftExportStats {
  std::map<std::string, std::size_t> per_task;
  std::size_t records = 0;
  std::size_t images = 0;
};

// Write QA records as an SFT dataset: images/NNNNNN_<id>_<task>[_a|_b].png plus
// one JSONL line per record in sft.jsonl. Field order is fixed, image bytes are
// deterministic, so same-seed re-exports are byte-identical.
SftExportStats export_sft(std::span<const QaRecord> records,
                          const std::filesystem::path& out_dir);

}  // namespace forge
