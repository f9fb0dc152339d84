// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <zlib.h>

#include <cmath>

#include "forge/image.hpp"
#include "forge/png_io.hpp"
#include "forge/rng.hpp"

using namespace forge;

namespace {

Image random_image(Rng& rng, int w, int h, int c) {
  Image img(w, h, c);
  for (std::uint8_t& b : img.data) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return img;
}

}  // namespace

TEST_CASE("png round trip: rgb8") {
  Rng rng(1);
  const Image img = random_image(rng, 37, 21, 3);
  const std::vector<std::uint8_t> bytes = encode_png(img);
  const Image back = decode_png(bytes.data(), bytes.size());
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.channels == 3);
  CHECK(back.data == img.data);
}

TEST_CASE("png round trip: gray16 is lossless") {
  Rng rng(2);
  std::vector<std::uint16_t> raw(64 * 48);
  for (std::uint16_t& v : raw) v = static_cast<std::uint16_t>(rng.uniform_int(0, 65535));
  const std::vector<std::uint8_t> bytes = encode_png_gray16(raw, 64, 48);
  int w = 0, h = 0;
  const std::vector<std::uint16_t> back = decode_png_gray16(bytes.data(), bytes.size(), w, h);
  CHECK(w == 64);
  CHECK(h == 48);
  CHECK(back == raw);
}

TEST_CASE("png encoding is deterministic") {
  Rng rng(3);
  const Image img = random_image(rng, 50, 40, 3);
  CHECK(encode_png(img) == encode_png(img));
}

TEST_CASE("png header peek") {
  Rng rng(4);
  const Image img = random_image(rng, 13, 9, 1);
  const std::vector<std::uint8_t> bytes = encode_png(img);
  int w = 0, h = 0;
  CHECK(png_dims(bytes.data(), bytes.size(), w, h));
  CHECK(w == 13);
  CHECK(h == 9);
  const std::vector<std::uint8_t> junk = {1, 2, 3, 4};
  CHECK_FALSE(png_dims(junk.data(), junk.size(), w, h));
}

TEST_CASE("png decoder rejects malformed input") {
  std::vector<std::uint8_t> bytes = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n', 0, 0};
  int w = 0, h = 0;
  CHECK_THROWS(decode_png(bytes.data(), bytes.size()));
  CHECK_THROWS(decode_png_gray16(bytes.data(), bytes.size(), w, h));
}

TEST_CASE("gray16 decode refuses an rgb8 file") {
  Rng rng(5);
  const Image img = random_image(rng, 8, 8, 3);
  const std::vector<std::uint8_t> bytes = encode_png(img);
  int w = 0, h = 0;
  CHECK_THROWS(decode_png_gray16(bytes.data(), bytes.size(), w, h));
}

namespace {

// Build a PNG whose rows use the given filter types, so the decoder's
// unfiltering paths get exercised beyond the filter-0 files our encoder emits.
std::vector<std::uint8_t> png_with_filters(const Image& img,
                                           const std::vector<int>& row_filters) {
  const int bpp = img.channels;
  const std::size_t stride = static_cast<std::size_t>(img.width) * bpp;
  std::vector<std::uint8_t> raw;
  const auto paeth = [](int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    return pb <= pc ? b : c;
  };
  for (int y = 0; y < img.height; ++y) {
    const int filter = row_filters[y % row_filters.size()];
    raw.push_back(static_cast<std::uint8_t>(filter));
    const std::uint8_t* row = img.data.data() + stride * y;
    const std::uint8_t* prev = y > 0 ? img.data.data() + stride * (y - 1) : nullptr;
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= static_cast<std::size_t>(bpp) ? row[i - bpp] : 0;
      const int b = prev ? prev[i] : 0;
      const int c = (prev && i >= static_cast<std::size_t>(bpp)) ? prev[i - bpp] : 0;
      int v = row[i];
      switch (filter) {
        case 1: v -= a; break;
        case 2: v -= b; break;
        case 3: v -= (a + b) / 2; break;
        case 4: v -= paeth(a, b, c); break;
        default: break;
      }
      raw.push_back(static_cast<std::uint8_t>(v));
    }
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> idat(bound);
  REQUIRE(compress2(idat.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) == Z_OK);
  idat.resize(bound);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  const auto put_u32 = [&out](std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
  };
  const auto chunk = [&](const char type[4], const std::vector<std::uint8_t>& payload) {
    put_u32(static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const uLong crc =
        crc32(crc32(0L, nullptr, 0), out.data() + crc_start, static_cast<uInt>(payload.size() + 4));
    put_u32(static_cast<std::uint32_t>(crc));
  };
  std::vector<std::uint8_t> ihdr(13, 0);
  ihdr[0] = static_cast<std::uint8_t>(img.width >> 24);
  ihdr[1] = static_cast<std::uint8_t>(img.width >> 16);
  ihdr[2] = static_cast<std::uint8_t>(img.width >> 8);
  ihdr[3] = static_cast<std::uint8_t>(img.width);
  ihdr[4] = static_cast<std::uint8_t>(img.height >> 24);
  ihdr[5] = static_cast<std::uint8_t>(img.height >> 16);
  ihdr[6] = static_cast<std::uint8_t>(img.height >> 8);
  ihdr[7] = static_cast<std::uint8_t>(img.height);
  ihdr[8] = 8;
  ihdr[9] = img.channels == 3 ? 2 : 0;
  chunk("IHDR", ihdr);
  chunk("IDAT", idat);
  chunk("IEND", {});
  return out;
}

}  // namespace

TEST_CASE("png decoder handles all five scanline filters") {
  Rng rng(20);
  const Image img = random_image(rng, 23, 17, 3);
  for (const std::vector<int>& filters :
       {std::vector<int>{0}, {1}, {2}, {3}, {4}, {0, 1, 2, 3, 4}}) {
    const std::vector<std::uint8_t> bytes = png_with_filters(img, filters);
    const Image back = decode_png(bytes.data(), bytes.size());
    CHECK(back.data == img.data);
  }
}

TEST_CASE("resize: identity when dims match") {
  Rng rng(6);
  const Image img = random_image(rng, 33, 17, 3);
  const Image out = resize_bilinear(img, 33, 17);
  CHECK(out.data == img.data);
}

TEST_CASE("resize: constant image stays constant at any scale") {
  Image img(20, 10, 3);
  for (std::uint8_t& b : img.data) b = 77;
  const Image out = resize_bilinear(img, 63, 41);
  for (std::uint8_t b : out.data) CHECK(b == 77);
}

TEST_CASE("resize: parallel kernel matches the serial reference bit-for-bit") {
  Rng rng(7);
  for (const auto [w, h, ow, oh] :
       {std::tuple{64, 48, 200, 150}, std::tuple{123, 77, 40, 60}, std::tuple{11, 9, 300, 12}}) {
    const Image img = random_image(rng, w, h, 3);
    CHECK(resize_bilinear(img, ow, oh).data == resize_bilinear_serial(img, ow, oh).data);
  }
}

TEST_CASE("resize argument checks") {
  Image img(4, 4, 3);
  CHECK_THROWS(resize_bilinear(img, 0, 4));
  CHECK_THROWS(resize_bilinear(Image{}, 4, 4));
}

TEST_CASE("crop copies the exact rectangle") {
  Rng rng(8);
  const Image img = random_image(rng, 30, 20, 3);
  const Image out = crop_image(img, 5, 3, 10, 8);
  CHECK(out.width == 10);
  CHECK(out.height == 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 10; ++x) {
      for (int c = 0; c < 3; ++c) {
        CHECK(out.pixel(x, y)[c] == img.pixel(x + 5, y + 3)[c]);
      }
    }
  }
  CHECK_THROWS(crop_image(img, 25, 0, 10, 5));
}
