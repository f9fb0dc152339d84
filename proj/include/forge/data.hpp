// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forge/geometry.hpp"
#include "forge/image.hpp"
#include "forge/rng.hpp"

namespace forge {

enum class DepthEncoding { png16, pfm, npy };
enum class Split { train, eval };

DepthEncoding depth_encoding_from_string(const std::string& s);
std::string to_string(DepthEncoding e);
Split split_from_string(const std::string& s);
std::string to_string(Split s);

/// One line of a dataset manifest. Pose, when present, is a 4x4 row-major
/// world-from-camera matrix with an orthonormal rotation block.
struct SampleManifestEntry {
  std::string id;
  std::string image_path;
  std::string depth_path;
  DepthEncoding depth_encoding = DepthEncoding::png16;
  double depth_scale = 0.001;  // meters per raw unit
  Intrinsics intrinsics;
  std::optional<std::array<double, 16>> pose;
  std::string dataset;
  Split split = Split::train;
};

/// Camera center (translation column) of a world-from-camera pose.
Point3 camera_center(const std::array<double, 16>& pose);

struct DatasetIndex {
  std::vector<SampleManifestEntry> entries;
  std::map<std::string, std::vector<std::size_t>> by_dataset;  // indices into entries

  std::map<std::string, std::size_t> dataset_counts() const;
};

/// Load and validate a JSONL manifest. Errors name the offending line and field.
DatasetIndex load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetIndex& index, const std::filesystem::path& path);

/// Decode the entry's depth file into meters. Raw zeros, non-finite values and
/// anything above max_depth are masked invalid. Paths are resolved relative to
/// base_dir when they are not absolute.
DepthMap read_depth(const SampleManifestEntry& entry, const std::filesystem::path& base_dir,
                    double max_depth = 300.0);

Image load_entry_image(const SampleManifestEntry& entry, const std::filesystem::path& base_dir);

// Raw depth-grid codecs used by read_depth and the synthetic generator.
std::vector<std::uint8_t> encode_pfm(const std::vector<float>& data, int width, int height);
std::vector<float> decode_pfm(const std::vector<std::uint8_t>& raw, int& width, int& height);
std::vector<std::uint8_t> encode_npy(const std::vector<float>& data, int width, int height);
std::vector<float> decode_npy(const std::vector<std::uint8_t>& raw, int& width, int& height);

struct MixtureSpec {
  std::map<std::string, double> weights;  // dataset -> nonnegative weight
  std::uint64_t seed = 0;
};

// Infinite deterministic sample stream: datasets drawn proportionally to
// weight; within a dataset, uniform without replacement per epoch with a fresh
// shuffle each epoch.
class MixtureStream {
 public:
  MixtureStream(const MixtureSpec& spec, const DatasetIndex& index);
  const SampleManifestEntry& next();

 private:
  struct DatasetState {
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    Rng shuffle_rng{0};
  };
  const DatasetIndex& index_;
  std::vector<std::string> names_;
  std::vector<double> cumulative_;  // normalized cumulative weights
  std::vector<DatasetState> states_;
  Rng pick_rng_{0};

  void reshuffle(std::size_t which);
};

}  // namespace forge
