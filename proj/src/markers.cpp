// SPDX-License-Identifier: Apache-2.0

#include "forge/markers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>
#include <variant>

namespace forge {

MarkerStyle marker_style_from_string(const std::string& s) {
  if (s == "arrow") return MarkerStyle::arrow;
  if (s == "cross") return MarkerStyle::cross;
  if (s == "circle") return MarkerStyle::circle;
  throw std::invalid_argument("unknown marker style: " + s);
}

std::string to_string(MarkerStyle s) {
  switch (s) {
    case MarkerStyle::arrow: return "arrow";
    case MarkerStyle::cross: return "cross";
    case MarkerStyle::circle: return "circle";
  }
  return "arrow";
}

void MarkerSpec::validate() const {
  if (stroke_width < 1) throw std::invalid_argument("marker: stroke_width must be >= 1");
  if (size < stroke_width) throw std::invalid_argument("marker: size must be >= stroke_width");
  if (label.size() > 8) throw std::invalid_argument("marker: label must be <= 8 characters");
}

namespace {

// Classic 5x7 bitmap font, digits and uppercase letters. Each row is the low
// five bits, MSB on the left.
constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;

const std::uint8_t* glyph_rows(char c) {
  static const std::uint8_t digits[10][7] = {
      {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}, {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e},
      {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}, {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e},
      {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}, {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e},
      {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}, {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
      {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}, {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}};
  static const std::uint8_t letters[26][7] = {
      {0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}, {0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e},
      {0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e}, {0x1c, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1c},
      {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f}, {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10},
      {0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0f}, {0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11},
      {0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e}, {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c},
      {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f},
      {0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11}, {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},
      {0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}, {0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10},
      {0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d}, {0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11},
      {0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e}, {0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
      {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}, {0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04},
      {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0a}, {0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11},
      {0x11, 0x11, 0x11, 0x0a, 0x04, 0x04, 0x04}, {0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f}};
  static const std::uint8_t box[7] = {0x1f, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1f};
  if (c >= '0' && c <= '9') return digits[c - '0'];
  if (c >= 'A' && c <= 'Z') return letters[c - 'A'];
  if (c >= 'a' && c <= 'z') return letters[c - 'a'];
  return box;
}

constexpr int kLabelScale = 2;
constexpr int kLabelPad = 2;

struct Segment {
  double ax, ay, bx, by, half_width;
};
struct Disc {
  double cx, cy, r;
};
struct Ring {
  double cx, cy, r, half_width;
};
struct Plate {
  int x, y;  // top-left
  std::string text;
};
using Element = std::variant<Segment, Disc, Ring, Plate>;

struct Plan {
  std::vector<Element> elements;
  PixelBox bbox;  // union, clipped to the image
};

PixelBox clip_box(PixelBox b, int w, int h) {
  b.x0 = std::max(b.x0, 0);
  b.y0 = std::max(b.y0, 0);
  b.x1 = std::min(b.x1, w);
  b.y1 = std::min(b.y1, h);
  return b;
}

PixelBox box_union(const PixelBox& a, const PixelBox& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  return {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1), std::max(a.y1, b.y1)};
}

PixelBox element_box(const Element& e) {
  const auto pad = [](double lo, double hi, double m) {
    return std::pair<int, int>{static_cast<int>(std::floor(lo - m)),
                               static_cast<int>(std::ceil(hi + m)) + 1};
  };
  if (const auto* s = std::get_if<Segment>(&e)) {
    auto [x0, x1] = pad(std::min(s->ax, s->bx), std::max(s->ax, s->bx), s->half_width + 1);
    auto [y0, y1] = pad(std::min(s->ay, s->by), std::max(s->ay, s->by), s->half_width + 1);
    return {x0, y0, x1, y1};
  }
  if (const auto* d = std::get_if<Disc>(&e)) {
    auto [x0, x1] = pad(d->cx, d->cx, d->r + 1);
    auto [y0, y1] = pad(d->cy, d->cy, d->r + 1);
    return {x0, y0, x1, y1};
  }
  if (const auto* r = std::get_if<Ring>(&e)) {
    auto [x0, x1] = pad(r->cx, r->cx, r->r + r->half_width + 1);
    auto [y0, y1] = pad(r->cy, r->cy, r->r + r->half_width + 1);
    return {x0, y0, x1, y1};
  }
  const auto& p = std::get<Plate>(e);
  const int w = static_cast<int>(p.text.size()) * (kGlyphW + 1) * kLabelScale + 2 * kLabelPad;
  const int h = kGlyphH * kLabelScale + 2 * kLabelPad;
  return {p.x, p.y, p.x + w, p.y + h};
}

int plate_width(const std::string& text) {
  return static_cast<int>(text.size()) * (kGlyphW + 1) * kLabelScale + 2 * kLabelPad;
}
int plate_height() { return kGlyphH * kLabelScale + 2 * kLabelPad; }

// Label anchor: clamp the plate fully inside the image.
Plate make_plate(const Image& img, double x, double y, const std::string& text) {
  Plate p;
  p.text = text;
  p.x = std::clamp(static_cast<int>(std::lround(x)), 0, std::max(0, img.width - plate_width(text)));
  p.y = std::clamp(static_cast<int>(std::lround(y)), 0, std::max(0, img.height - plate_height()));
  return p;
}

Plan plan_marker(const Image& img, const Pixel& p, const MarkerSpec& spec) {
  Plan plan;
  const double hw = spec.stroke_width / 2.0;
  const double size = spec.size;

  if (spec.style == MarkerStyle::arrow) {
    // Body along a diagonal, tip at p; flip each axis so the tail stays inside.
    const double reach = size / std::numbers::sqrt2;
    const double margin = hw + 2;
    const double dx = (p.u - reach - margin >= 0 || p.u + reach + margin > img.width) ? -1 : 1;
    const double dy = (p.v - reach - margin >= 0 || p.v + reach + margin > img.height) ? -1 : 1;
    const double tx = p.u + dx * reach;
    const double ty = p.v + dy * reach;
    plan.elements.push_back(Segment{tx, ty, p.u, p.v, hw});
    // Barbs at roughly +-30 degrees off the shaft.
    const double barb = std::max(size * 0.35, 3.0 * spec.stroke_width);
    const double ang = std::atan2(dy, dx);
    for (const double off : {0.5, -0.5}) {
      plan.elements.push_back(Segment{p.u + std::cos(ang + off) * barb,
                                      p.v + std::sin(ang + off) * barb, p.u, p.v, hw});
    }
    plan.elements.push_back(Disc{p.u, p.v, std::max(hw, 0.8)});
    if (!spec.label.empty()) {
      plan.elements.push_back(
          make_plate(img, tx + dx * 4 - (dx < 0 ? plate_width(spec.label) : 0),
                     ty + dy * 4 - (dy < 0 ? plate_height() : 0), spec.label));
    }
  } else if (spec.style == MarkerStyle::cross) {
    const double half = size / 2.0;
    plan.elements.push_back(Segment{p.u - half, p.v, p.u + half, p.v, hw});
    plan.elements.push_back(Segment{p.u, p.v - half, p.u, p.v + half, hw});
    plan.elements.push_back(Disc{p.u, p.v, std::max(hw, 0.8)});
  } else {
    const double r = size / 2.0;
    plan.elements.push_back(Ring{p.u, p.v, r, hw});
    // Center dot so the queried pixel itself is marked.
    plan.elements.push_back(Disc{p.u, p.v, std::max(hw, 0.8)});
  }

  if (spec.style != MarkerStyle::arrow && !spec.label.empty()) {
    const double off = size / 2.0 + 3;
    const double x = (p.u + off + plate_width(spec.label) <= img.width)
                         ? p.u + off
                         : p.u - off - plate_width(spec.label);
    const double y = (p.v + off + plate_height() <= img.height) ? p.v + off
                                                                : p.v - off - plate_height();
    plan.elements.push_back(make_plate(img, x, y, spec.label));
  }

  for (const Element& e : plan.elements) {
    plan.bbox = box_union(plan.bbox, clip_box(element_box(e), img.width, img.height));
  }
  return plan;
}

double dist_point_segment(double px, double py, const Segment& s) {
  const double vx = s.bx - s.ax;
  const double vy = s.by - s.ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - s.ax) * vx + (py - s.ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (s.ax + t * vx);
  const double dy = py - (s.ay + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

void put_color(Image& img, int x, int y, const std::array<std::uint8_t, 3>& c) {
  std::uint8_t* px = img.pixel(x, y);
  if (img.channels == 1) {
    px[0] = static_cast<std::uint8_t>((c[0] * 299 + c[1] * 587 + c[2] * 114) / 1000);
    return;
  }
  px[0] = c[0];
  px[1] = c[1];
  px[2] = c[2];
  if (img.channels == 4) px[3] = 255;
}

void paint(Image& img, const Element& e, const std::array<std::uint8_t, 3>& color) {
  const PixelBox box = clip_box(element_box(e), img.width, img.height);
  if (const auto* plate = std::get_if<Plate>(&e)) {
    const int w = plate_width(plate->text);
    const int h = plate_height();
    for (int y = plate->y; y < plate->y + h; ++y) {
      for (int x = plate->x; x < plate->x + w; ++x) {
        if (x >= 0 && y >= 0 && x < img.width && y < img.height) put_color(img, x, y, color);
      }
    }
    const std::array<std::uint8_t, 3> white{255, 255, 255};
    for (std::size_t i = 0; i < plate->text.size(); ++i) {
      const std::uint8_t* rows = glyph_rows(plate->text[i]);
      const int gx = plate->x + kLabelPad + static_cast<int>(i) * (kGlyphW + 1) * kLabelScale;
      const int gy = plate->y + kLabelPad;
      for (int r = 0; r < kGlyphH; ++r) {
        for (int cbit = 0; cbit < kGlyphW; ++cbit) {
          if (!(rows[r] & (1 << (kGlyphW - 1 - cbit)))) continue;
          for (int sy = 0; sy < kLabelScale; ++sy) {
            for (int sx = 0; sx < kLabelScale; ++sx) {
              const int x = gx + cbit * kLabelScale + sx;
              const int y = gy + r * kLabelScale + sy;
              if (x >= 0 && y >= 0 && x < img.width && y < img.height) {
                put_color(img, x, y, white);
              }
            }
          }
        }
      }
    }
    return;
  }
  for (int y = box.y0; y < box.y1; ++y) {
    for (int x = box.x0; x < box.x1; ++x) {
      const double cx = x + 0.5;
      const double cy = y + 0.5;
      bool hit = false;
      if (const auto* s = std::get_if<Segment>(&e)) {
        hit = dist_point_segment(cx, cy, *s) <= s->half_width;
      } else if (const auto* d = std::get_if<Disc>(&e)) {
        const double dx = cx - d->cx;
        const double dy = cy - d->cy;
        hit = dx * dx + dy * dy <= d->r * d->r;
      } else if (const auto* r = std::get_if<Ring>(&e)) {
        const double dx = cx - r->cx;
        const double dy = cy - r->cy;
        hit = std::abs(std::sqrt(dx * dx + dy * dy) - r->r) <= r->half_width;
      }
      if (hit) put_color(img, x, y, color);
    }
  }
}

void render_into(Image& img, const Pixel& p, const MarkerSpec& spec) {
  spec.validate();
  if (!img.contains(p.u, p.v)) {
    throw std::out_of_range("render_marker: pixel outside image bounds");
  }
  const Plan plan = plan_marker(img, p, spec);
  for (const Element& e : plan.elements) paint(img, e, spec.color);
}

}  // namespace

Image render_marker(const Image& image, const Pixel& p, const MarkerSpec& spec) {
  Image out = image;
  render_into(out, p, spec);
  return out;
}

Image render_multi(const Image& image,
                   std::span<const std::pair<Pixel, MarkerSpec>> points) {
  if (points.empty()) throw std::invalid_argument("render_multi: no points");
  std::set<std::string> labels;
  for (const auto& [p, spec] : points) {
    if (!labels.insert(spec.label).second) {
      throw std::invalid_argument("render_multi: duplicate marker label '" + spec.label + "'");
    }
  }
  Image out = image;
  for (const auto& [p, spec] : points) render_into(out, p, spec);
  return out;
}

PixelBox marker_bbox(const Image& image, const Pixel& p, const MarkerSpec& spec) {
  spec.validate();
  return plan_marker(image, p, spec).bbox;
}

}  // namespace forge
