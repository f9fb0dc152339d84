// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "forge/image.hpp"

namespace forge {

// Minimal PNG codec over zlib. Writes filter-None scanlines at a fixed
// compression level so identical rasters always produce identical bytes.
// Reads non-interlaced gray / gray+alpha / RGB / RGBA at bit depth 8 or 16.

std::vector<std::uint8_t> encode_png(const Image& img);

/// 16-bit grayscale, values stored as-is (big-endian per the PNG format).
std::vector<std::uint8_t> encode_png_gray16(const std::vector<std::uint16_t>& raw,
                                            int width, int height);

/// Decode to 8-bit; 16-bit sources are reduced by dropping the low byte,
/// alpha is preserved. Throws std::runtime_error on malformed input.
Image decode_png(const std::uint8_t* data, std::size_t size);

/// Decode a 16-bit grayscale PNG exactly; throws if the file is anything else.
std::vector<std::uint16_t> decode_png_gray16(const std::uint8_t* data, std::size_t size,
                                             int& width, int& height);

/// Cheap header peek; returns false if the buffer is not a PNG.
bool png_dims(const std::uint8_t* data, std::size_t size, int& width, int& height);

// Whole-file helpers used across the toolkit.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::uint8_t* data, std::size_t size);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& data);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

Image load_png(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const Image& img);

}  // namespace forge
