// SPDX-License-Identifier: Apache-2.0

#include "forge/png_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace forge {

namespace {

constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::uint8_t* data, std::size_t size) {
  put_u32(out, static_cast<std::uint32_t>(size));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data, data + size);
  const uLong crc = crc32(crc32(0L, nullptr, 0), out.data() + crc_start, static_cast<uInt>(size + 4));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

std::vector<std::uint8_t> deflate_buffer(const std::vector<std::uint8_t>& raw) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> out(bound);
  if (compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw std::runtime_error("png: deflate failed");
  }
  out.resize(bound);
  return out;
}

std::vector<std::uint8_t> inflate_buffer(const std::uint8_t* data, std::size_t size,
                                         std::size_t expected) {
  std::vector<std::uint8_t> out(expected);
  uLongf out_len = static_cast<uLongf>(expected);
  const int rc = uncompress(out.data(), &out_len, data, static_cast<uLong>(size));
  if (rc != Z_OK || out_len != expected) throw std::runtime_error("png: inflate failed");
  return out;
}

std::vector<std::uint8_t> encode_raw(const std::uint8_t* raster, int width, int height,
                                     int bytes_per_pixel, int bit_depth, int color_type) {
  const std::size_t stride = static_cast<std::size_t>(width) * bytes_per_pixel;
  std::vector<std::uint8_t> raw;
  raw.reserve((stride + 1) * height);
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);  // filter: None
    raw.insert(raw.end(), raster + y * stride, raster + (y + 1) * stride);
  }
  std::vector<std::uint8_t> idat = deflate_buffer(raw);

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kSignature, kSignature + 8);
  std::uint8_t ihdr[13];
  ihdr[0] = static_cast<std::uint8_t>(width >> 24);
  ihdr[1] = static_cast<std::uint8_t>(width >> 16);
  ihdr[2] = static_cast<std::uint8_t>(width >> 8);
  ihdr[3] = static_cast<std::uint8_t>(width);
  ihdr[4] = static_cast<std::uint8_t>(height >> 24);
  ihdr[5] = static_cast<std::uint8_t>(height >> 16);
  ihdr[6] = static_cast<std::uint8_t>(height >> 8);
  ihdr[7] = static_cast<std::uint8_t>(height);
  ihdr[8] = static_cast<std::uint8_t>(bit_depth);
  ihdr[9] = static_cast<std::uint8_t>(color_type);
  ihdr[10] = 0;  // compression
  ihdr[11] = 0;  // filter method
  ihdr[12] = 0;  // no interlace
  append_chunk(out, "IHDR", ihdr, sizeof(ihdr));
  append_chunk(out, "IDAT", idat.data(), idat.size());
  append_chunk(out, "IEND", nullptr, 0);
  return out;
}

struct PngHeader {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
  int channels = 0;
};

struct RawPng {
  PngHeader hdr;
  std::vector<std::uint8_t> scanlines;  // unfiltered raster, 16-bit stays big-endian
  std::size_t stride = 0;               // bytes per row
};

int channels_for_color_type(int color_type) {
  switch (color_type) {
    case 0: return 1;  // gray
    case 2: return 3;  // rgb
    case 4: return 2;  // gray + alpha
    case 6: return 4;  // rgba
    default: return 0;
  }
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

RawPng decode_raw(const std::uint8_t* data, std::size_t size) {
  if (size < 8 || std::memcmp(data, kSignature, 8) != 0) {
    throw std::runtime_error("png: bad signature");
  }
  RawPng png;
  std::vector<std::uint8_t> idat;
  std::size_t pos = 8;
  bool saw_ihdr = false;
  bool saw_iend = false;
  while (pos + 8 <= size && !saw_iend) {
    const std::uint32_t len = get_u32(data + pos);
    if (pos + 12 + len > size) throw std::runtime_error("png: truncated chunk");
    const char* type = reinterpret_cast<const char*>(data + pos + 4);
    const std::uint8_t* payload = data + pos + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw std::runtime_error("png: bad IHDR");
      png.hdr.width = static_cast<int>(get_u32(payload));
      png.hdr.height = static_cast<int>(get_u32(payload + 4));
      png.hdr.bit_depth = payload[8];
      png.hdr.color_type = payload[9];
      if (payload[12] != 0) throw std::runtime_error("png: interlaced images unsupported");
      png.hdr.channels = channels_for_color_type(png.hdr.color_type);
      if (png.hdr.channels == 0) throw std::runtime_error("png: palette images unsupported");
      if (png.hdr.bit_depth != 8 && png.hdr.bit_depth != 16) {
        throw std::runtime_error("png: only bit depths 8 and 16 supported");
      }
      if (png.hdr.width <= 0 || png.hdr.height <= 0) throw std::runtime_error("png: bad dims");
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_iend = true;
    }
    pos += 12 + len;
  }
  if (!saw_ihdr || idat.empty()) throw std::runtime_error("png: missing IHDR or IDAT");

  const int bpp = png.hdr.channels * png.hdr.bit_depth / 8;  // filter unit, bytes
  png.stride = static_cast<std::size_t>(png.hdr.width) * bpp;
  const std::size_t expected = (png.stride + 1) * png.hdr.height;
  std::vector<std::uint8_t> raw = inflate_buffer(idat.data(), idat.size(), expected);

  png.scanlines.assign(png.stride * png.hdr.height, 0);
  const std::uint8_t* prev = nullptr;
  for (int y = 0; y < png.hdr.height; ++y) {
    const std::uint8_t filter = raw[(png.stride + 1) * y];
    const std::uint8_t* in = raw.data() + (png.stride + 1) * y + 1;
    std::uint8_t* out = png.scanlines.data() + png.stride * y;
    for (std::size_t i = 0; i < png.stride; ++i) {
      const int a = i >= static_cast<std::size_t>(bpp) ? out[i - bpp] : 0;
      const int b = prev ? prev[i] : 0;
      const int c = (prev && i >= static_cast<std::size_t>(bpp)) ? prev[i - bpp] : 0;
      int v = in[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw std::runtime_error("png: unknown filter type");
      }
      out[i] = static_cast<std::uint8_t>(v);
    }
    prev = out;
  }
  return png;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.empty()) throw std::runtime_error("png: cannot encode empty image");
  int color_type;
  switch (img.channels) {
    case 1: color_type = 0; break;
    case 3: color_type = 2; break;
    case 4: color_type = 6; break;
    default: throw std::runtime_error("png: unsupported channel count");
  }
  return encode_raw(img.data.data(), img.width, img.height, img.channels, 8, color_type);
}

std::vector<std::uint8_t> encode_png_gray16(const std::vector<std::uint16_t>& raw,
                                            int width, int height) {
  if (raw.size() != static_cast<std::size_t>(width) * height) {
    throw std::runtime_error("png: raster size mismatch");
  }
  std::vector<std::uint8_t> be(raw.size() * 2);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    be[i * 2] = static_cast<std::uint8_t>(raw[i] >> 8);
    be[i * 2 + 1] = static_cast<std::uint8_t>(raw[i] & 0xff);
  }
  return encode_raw(be.data(), width, height, 2, 16, 0);
}

Image decode_png(const std::uint8_t* data, std::size_t size) {
  RawPng png = decode_raw(data, size);
  Image img(png.hdr.width, png.hdr.height, png.hdr.channels);
  const std::size_t n = static_cast<std::size_t>(png.hdr.width) * png.hdr.height * png.hdr.channels;
  if (png.hdr.bit_depth == 8) {
    std::memcpy(img.data.data(), png.scanlines.data(), n);
  } else {
    for (std::size_t i = 0; i < n; ++i) img.data[i] = png.scanlines[i * 2];
  }
  return img;
}

std::vector<std::uint16_t> decode_png_gray16(const std::uint8_t* data, std::size_t size,
                                             int& width, int& height) {
  RawPng png = decode_raw(data, size);
  if (png.hdr.color_type != 0 || png.hdr.bit_depth != 16) {
    throw std::runtime_error("png: expected 16-bit grayscale");
  }
  width = png.hdr.width;
  height = png.hdr.height;
  std::vector<std::uint16_t> out(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint16_t>((png.scanlines[i * 2] << 8) | png.scanlines[i * 2 + 1]);
  }
  return out;
}

bool png_dims(const std::uint8_t* data, std::size_t size, int& width, int& height) {
  if (size < 24 || std::memcmp(data, kSignature, 8) != 0) return false;
  if (std::memcmp(data + 12, "IHDR", 4) != 0) return false;
  width = static_cast<int>(get_u32(data + 16));
  height = static_cast<int>(get_u32(data + 20));
  return width > 0 && height > 0;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  f.seekg(0, std::ios::end);
  const std::streamoff len = f.tellg();
  f.seekg(0);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(len));
  f.read(reinterpret_cast<char*>(out.data()), len);
  if (!f) throw std::runtime_error("short read on " + path.string());
  return out;
}

void write_file(const std::filesystem::path& path, const std::uint8_t* data, std::size_t size) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!f) throw std::runtime_error("short write on " + path.string());
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& data) {
  write_file(path, data.data(), data.size());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file(path, reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
}

std::string read_text_file(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> raw = read_file(path);
  return std::string(raw.begin(), raw.end());
}

Image load_png(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> raw = read_file(path);
  return decode_png(raw.data(), raw.size());
}

void save_png(const std::filesystem::path& path, const Image& img) {
  write_file(path, encode_png(img));
}

}  // namespace forge
