#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "dmk/geometry.hpp"

namespace dmk {

struct ImageBuffer;

// Dense class grid, 0 = background, 1..4 = damage levels.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h, 0) {}
  uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  uint8_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  bool operator==(const Mask&) const = default;
};

// Same layout restricted to {0,1}.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h, 0) {}
  uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  uint8_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  bool operator==(const BinaryMask&) const = default;
};

struct CropSpec {
  double padding_fraction = 0.1;
  int output_side = 64;  // >= 8
};

// Even-odd scanline fill; a pixel belongs to the polygon iff its center
// lies inside. Later entries overwrite earlier ones.
Mask rasterize(std::span<const std::pair<Polygon, int>> buildings, int width, int height);
void fill_polygon(Mask& mask, const Polygon& poly, int cls);

BinaryMask binarize(const Mask& mask);

// One maximal 8-connected foreground blob; pixels in row-major order.
struct Component {
  std::vector<std::pair<int, int>> pixels;  // (x, y)
};

// Components labeled 1..n in first-encounter row-major order; the result
// index i holds label i+1.
std::vector<Component> connected_components(const BinaryMask& mask);

// Outer pixel-edge boundary of a component: rectilinear, counterclockwise,
// collinear vertices merged, coordinates on pixel corners.
Polygon trace_boundary(const Component& component);

// Mask -> building outlines. Class of a polygon is the majority class of
// its pixels, ties toward higher damage.
std::vector<std::pair<Polygon, int>> polygonize(const Mask& mask, int min_area = 4);

// Padded axis-aligned crop around a footprint, resized to
// spec.output_side squared. Padding per side is
// ceil(padding_fraction * max(bbox_w, bbox_h)) pixels, clamped to bounds.
ImageBuffer crop_building(const ImageBuffer& image, const Polygon& footprint,
                          const CropSpec& spec);

// Invokes fn(x, y) for every pixel whose center is inside the polygon,
// row-major. Shared by rasterization and building-level scoring.
void for_each_interior_pixel(const Polygon& poly, int width, int height,
                             const std::function<void(int, int)>& fn);

}  // namespace dmk
