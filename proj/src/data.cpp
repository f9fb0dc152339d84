// SPDX-License-Identifier: Apache-2.0

#include "forge/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "forge/errors.hpp"
#include "forge/png_io.hpp"

namespace forge {

DepthEncoding depth_encoding_from_string(const std::string& s) {
  if (s == "png16") return DepthEncoding::png16;
  if (s == "pfm") return DepthEncoding::pfm;
  if (s == "npy") return DepthEncoding::npy;
  throw ConfigError("unknown depth_encoding: " + s);
}

std::string to_string(DepthEncoding e) {
  switch (e) {
    case DepthEncoding::png16: return "png16";
    case DepthEncoding::pfm: return "pfm";
    case DepthEncoding::npy: return "npy";
  }
  return "png16";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "eval") return Split::eval;
  throw ConfigError("unknown split: " + s);
}

std::string to_string(Split s) { return s == Split::train ? "train" : "eval"; }

Point3 camera_center(const std::array<double, 16>& pose) {
  return {pose[3], pose[7], pose[11]};
}

std::map<std::string, std::size_t> DatasetIndex::dataset_counts() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& [name, idx] : by_dataset) counts[name] = idx.size();
  return counts;
}

namespace {

void check_rotation_orthonormal(const std::array<double, 16>& m, int line) {
  // R * R^T must be the identity within 1e-4.
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0;
      for (int k = 0; k < 3; ++k) dot += m[i * 4 + k] * m[j * 4 + k];
      const double expect = i == j ? 1.0 : 0.0;
      if (std::abs(dot - expect) > 1e-4) {
        throw ConfigError("manifest line " + std::to_string(line) +
                          ": pose rotation block is not orthonormal");
      }
    }
  }
  if (std::abs(m[12]) > 1e-9 || std::abs(m[13]) > 1e-9 || std::abs(m[14]) > 1e-9 ||
      std::abs(m[15] - 1.0) > 1e-9) {
    throw ConfigError("manifest line " + std::to_string(line) +
                      ": pose bottom row must be [0, 0, 0, 1]");
  }
}

SampleManifestEntry parse_entry(const nlohmann::json& j, int line) {
  const auto fail = [line](const std::string& field, const std::string& why) -> void {
    throw ConfigError("manifest line " + std::to_string(line) + ", field '" + field +
                      "': " + why);
  };
  const auto need = [&](const char* field) -> const nlohmann::json& {
    const auto it = j.find(field);
    if (it == j.end()) fail(field, "missing");
    return *it;
  };

  SampleManifestEntry e;
  try {
    e.id = need("id").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    fail("id", "must be a string");
  }
  if (e.id.empty()) fail("id", "must be non-empty");
  try {
    e.image_path = need("image_path").get<std::string>();
    e.depth_path = need("depth_path").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    fail("image_path/depth_path", "must be strings");
  }
  if (e.image_path.empty()) fail("image_path", "must be non-empty");
  if (e.depth_path.empty()) fail("depth_path", "must be non-empty");

  try {
    e.depth_encoding = depth_encoding_from_string(need("depth_encoding").get<std::string>());
  } catch (const nlohmann::json::exception&) {
    fail("depth_encoding", "must be a string");
  }
  try {
    e.depth_scale = need("depth_scale").get<double>();
  } catch (const nlohmann::json::exception&) {
    fail("depth_scale", "must be a number");
  }
  if (!(e.depth_scale > 0) || !std::isfinite(e.depth_scale)) fail("depth_scale", "must be > 0");

  const nlohmann::json& k = need("intrinsics");
  if (!k.is_object()) fail("intrinsics", "must be an object with fx, fy, cx, cy");
  try {
    e.intrinsics = {k.at("fx").get<double>(), k.at("fy").get<double>(),
                    k.at("cx").get<double>(), k.at("cy").get<double>()};
  } catch (const nlohmann::json::exception&) {
    fail("intrinsics", "must contain numeric fx, fy, cx, cy");
  }
  if (!e.intrinsics.valid()) fail("intrinsics", "fx and fy must be finite and > 0");

  if (j.contains("pose") && !j.at("pose").is_null()) {
    const nlohmann::json& p = j.at("pose");
    if (!p.is_array() || p.size() != 16) fail("pose", "must be a 16-element row-major array");
    std::array<double, 16> m{};
    for (int i = 0; i < 16; ++i) {
      try {
        m[i] = p.at(i).get<double>();
      } catch (const nlohmann::json::exception&) {
        fail("pose", "must contain only numbers");
      }
      if (!std::isfinite(m[i])) fail("pose", "must be finite");
    }
    check_rotation_orthonormal(m, line);
    e.pose = m;
  }

  try {
    e.dataset = need("dataset").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    fail("dataset", "must be a string");
  }
  if (e.dataset.empty()) fail("dataset", "must be non-empty");
  try {
    e.split = split_from_string(need("split").get<std::string>());
  } catch (const nlohmann::json::exception&) {
    fail("split", "must be \"train\" or \"eval\"");
  }
  return e;
}

}  // namespace

DatasetIndex load_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open manifest " + path.string());
  DatasetIndex index;
  std::set<std::string> seen_ids;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError("manifest line " + std::to_string(line_no) +
                        ": invalid JSON: " + ex.what());
    }
    SampleManifestEntry e = parse_entry(j, line_no);
    if (!seen_ids.insert(e.id).second) {
      throw ConfigError("manifest line " + std::to_string(line_no) + ": duplicate id '" +
                        e.id + "'");
    }
    index.by_dataset[e.dataset].push_back(index.entries.size());
    index.entries.push_back(std::move(e));
  }
  if (index.entries.empty()) throw ConfigError("empty manifest: " + path.string());
  return index;
}

void save_manifest(const DatasetIndex& index, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ConfigError("cannot write manifest " + path.string());
  for (const SampleManifestEntry& e : index.entries) {
    nlohmann::ordered_json j;
    j["schema_version"] = "1";
    j["id"] = e.id;
    j["image_path"] = e.image_path;
    j["depth_path"] = e.depth_path;
    j["depth_encoding"] = to_string(e.depth_encoding);
    j["depth_scale"] = e.depth_scale;
    j["intrinsics"] = {{"fx", e.intrinsics.fx},
                       {"fy", e.intrinsics.fy},
                       {"cx", e.intrinsics.cx},
                       {"cy", e.intrinsics.cy}};
    if (e.pose) j["pose"] = *e.pose;
    j["dataset"] = e.dataset;
    j["split"] = to_string(e.split);
    f << j.dump() << '\n';
  }
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path fp(p);
  return fp.is_absolute() ? fp : base / fp;
}

}  // namespace

Image load_entry_image(const SampleManifestEntry& entry, const std::filesystem::path& base_dir) {
  return load_png(resolve(base_dir, entry.image_path));
}

DepthMap read_depth(const SampleManifestEntry& entry, const std::filesystem::path& base_dir,
                    double max_depth) {
  const std::vector<std::uint8_t> raw = read_file(resolve(base_dir, entry.depth_path));
  int w = 0;
  int h = 0;
  std::vector<float> values;
  switch (entry.depth_encoding) {
    case DepthEncoding::png16: {
      const std::vector<std::uint16_t> px = decode_png_gray16(raw.data(), raw.size(), w, h);
      values.assign(px.begin(), px.end());
      break;
    }
    case DepthEncoding::pfm:
      values = decode_pfm(raw, w, h);
      break;
    case DepthEncoding::npy:
      values = decode_npy(raw, w, h);
      break;
  }

  // The image raster must agree with the depth grid.
  const std::vector<std::uint8_t> img_raw = read_file(resolve(base_dir, entry.image_path));
  int iw = 0;
  int ih = 0;
  if (!png_dims(img_raw.data(), img_raw.size(), iw, ih)) {
    throw ConfigError("entry '" + entry.id + "': image is not a PNG");
  }
  if (iw != w || ih != h) {
    throw ConfigError("entry '" + entry.id + "': depth grid " + std::to_string(w) + "x" +
                      std::to_string(h) + " does not match image " + std::to_string(iw) + "x" +
                      std::to_string(ih));
  }

  DepthMap depth(w, h);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double meters = static_cast<double>(values[i]) * entry.depth_scale;
    if (values[i] == 0 || !std::isfinite(meters) || meters > max_depth || meters < 0) {
      depth.meters[i] = 0.f;
      depth.valid[i] = 0;
    } else {
      depth.meters[i] = static_cast<float>(meters);
      depth.valid[i] = 1;
    }
  }
  return depth;
}

// --- PFM (grayscale, little-endian via negative scale) ---

std::vector<std::uint8_t> encode_pfm(const std::vector<float>& data, int width, int height) {
  if (data.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("pfm: raster size mismatch");
  }
  std::string header = "Pf\n" + std::to_string(width) + " " + std::to_string(height) + "\n-1.0\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  // PFM stores rows bottom-to-top.
  for (int y = height - 1; y >= 0; --y) {
    const auto* row = reinterpret_cast<const std::uint8_t*>(data.data() + static_cast<std::size_t>(y) * width);
    out.insert(out.end(), row, row + static_cast<std::size_t>(width) * sizeof(float));
  }
  return out;
}

std::vector<float> decode_pfm(const std::vector<std::uint8_t>& raw, int& width, int& height) {
  std::string text(raw.begin(), raw.begin() + std::min<std::size_t>(raw.size(), 128));
  std::istringstream head(text);
  std::string magic;
  double scale = 0;
  if (!(head >> magic >> width >> height >> scale) || magic != "Pf" || width < 1 || height < 1) {
    throw ConfigError("pfm: bad header");
  }
  // Data starts after the single whitespace that terminates the scale token.
  const std::size_t offset = static_cast<std::size_t>(head.tellg()) + 1;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (raw.size() < offset + n * sizeof(float)) throw ConfigError("pfm: truncated data");
  std::vector<float> data(n);
  const bool little_endian = scale < 0;
  for (int y = 0; y < height; ++y) {
    const int src_row = height - 1 - y;
    const std::uint8_t* src = raw.data() + offset + static_cast<std::size_t>(src_row) * width * sizeof(float);
    for (int x = 0; x < width; ++x) {
      std::uint8_t b[4];
      std::memcpy(b, src + static_cast<std::size_t>(x) * 4, 4);
      if (!little_endian) std::swap(b[0], b[3]), std::swap(b[1], b[2]);
      float v;
      std::memcpy(&v, b, 4);
      data[static_cast<std::size_t>(y) * width + x] = v;
    }
  }
  return data;
}

// --- NPY v1.0, C-order float32/float64 2-D grids ---

std::vector<std::uint8_t> encode_npy(const std::vector<float>& data, int width, int height) {
  if (data.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("npy: raster size mismatch");
  }
  std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (" +
                     std::to_string(height) + ", " + std::to_string(width) + "), }";
  // Pad with spaces so header length (magic + dict) is a multiple of 64.
  const std::size_t base = 10 + dict.size() + 1;
  dict.append((64 - base % 64) % 64, ' ');
  dict.push_back('\n');
  std::vector<std::uint8_t> out = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
  out.push_back(static_cast<std::uint8_t>(dict.size() & 0xff));
  out.push_back(static_cast<std::uint8_t>(dict.size() >> 8));
  out.insert(out.end(), dict.begin(), dict.end());
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(data.data());
  out.insert(out.end(), bytes, bytes + data.size() * sizeof(float));
  return out;
}

namespace {

// Pull "key: value" fields out of the tiny python-dict header.
std::string dict_field(const std::string& dict, const std::string& key) {
  const std::size_t kpos = dict.find("'" + key + "'");
  if (kpos == std::string::npos) throw ConfigError("npy: header missing " + key);
  std::size_t colon = dict.find(':', kpos);
  if (colon == std::string::npos) throw ConfigError("npy: malformed header");
  std::size_t end = dict.find_first_of(",}", colon);
  // Shape tuples contain commas; capture through the closing parenthesis.
  const std::size_t paren = dict.find('(', colon);
  if (paren != std::string::npos && paren < end) end = dict.find(')', paren) + 1;
  std::string value = dict.substr(colon + 1, end - colon - 1);
  const auto strip = [](std::string s) {
    const auto a = s.find_first_not_of(" '\"");
    const auto b = s.find_last_not_of(" '\"");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  return strip(value);
}

}  // namespace

std::vector<float> decode_npy(const std::vector<std::uint8_t>& raw, int& width, int& height) {
  static const std::uint8_t magic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
  if (raw.size() < 10 || std::memcmp(raw.data(), magic, 6) != 0) {
    throw ConfigError("npy: bad magic");
  }
  if (raw[6] != 1) throw ConfigError("npy: only format version 1.x supported");
  const std::size_t header_len = raw[8] | (static_cast<std::size_t>(raw[9]) << 8);
  if (raw.size() < 10 + header_len) throw ConfigError("npy: truncated header");
  const std::string dict(raw.begin() + 10, raw.begin() + 10 + header_len);

  const std::string descr = dict_field(dict, "descr");
  const std::string order = dict_field(dict, "fortran_order");
  const std::string shape = dict_field(dict, "shape");
  if (order != "False") throw ConfigError("npy: fortran_order arrays unsupported");
  if (descr != "<f4" && descr != "<f8") throw ConfigError("npy: dtype must be <f4 or <f8");

  int rows = 0;
  int cols = 0;
  if (std::sscanf(shape.c_str(), "( %d , %d", &rows, &cols) != 2 &&
      std::sscanf(shape.c_str(), "(%d, %d", &rows, &cols) != 2) {
    throw ConfigError("npy: expected a 2-D shape, got " + shape);
  }
  if (rows < 1 || cols < 1) throw ConfigError("npy: bad shape");
  height = rows;
  width = cols;

  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  const std::size_t item = descr == "<f4" ? 4 : 8;
  if (raw.size() < 10 + header_len + n * item) throw ConfigError("npy: truncated data");
  const std::uint8_t* body = raw.data() + 10 + header_len;
  std::vector<float> out(n);
  if (item == 4) {
    std::memcpy(out.data(), body, n * 4);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      double v;
      std::memcpy(&v, body + i * 8, 8);
      out[i] = static_cast<float>(v);
    }
  }
  return out;
}

// --- mixture stream ---

MixtureStream::MixtureStream(const MixtureSpec& spec, const DatasetIndex& index)
    : index_(index), pick_rng_(derive_seed(spec.seed, std::string_view("mixture/pick"))) {
  if (spec.weights.empty()) throw ConfigError("mixture: no weights given");
  double total = 0;
  for (const auto& [name, w] : spec.weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw ConfigError("mixture: bad weight for " + name);
    if (w == 0) continue;
    const auto it = index.by_dataset.find(name);
    if (it == index.by_dataset.end()) {
      throw ConfigError("mixture: weight references unknown dataset '" + name + "'");
    }
    if (it->second.empty()) throw ConfigError("mixture: dataset '" + name + "' is empty");
    names_.push_back(name);
    total += w;
  }
  if (names_.empty() || total <= 0) throw ConfigError("mixture: needs a positive weight");

  double acc = 0;
  for (const std::string& name : names_) {
    acc += spec.weights.at(name) / total;
    cumulative_.push_back(acc);
  }
  cumulative_.back() = 1.0;

  for (const std::string& name : names_) {
    DatasetState st;
    st.order = index.by_dataset.at(name);
    st.shuffle_rng = Rng(derive_seed(spec.seed, "mixture/" + name));
    states_.push_back(std::move(st));
    reshuffle(states_.size() - 1);
  }
}

void MixtureStream::reshuffle(std::size_t which) {
  DatasetState& st = states_[which];
  // Fisher-Yates with our deterministic generator.
  for (std::size_t i = st.order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(st.shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(st.order[i - 1], st.order[j]);
  }
  st.cursor = 0;
}

const SampleManifestEntry& MixtureStream::next() {
  const double x = pick_rng_.uniform();
  std::size_t which = 0;
  while (which + 1 < cumulative_.size() && x >= cumulative_[which]) ++which;
  DatasetState& st = states_[which];
  if (st.cursor >= st.order.size()) reshuffle(which);
  return index_.entries[st.order[st.cursor++]];
}

}  // namespace forge
