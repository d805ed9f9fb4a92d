#include "dmk/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dmk/imaging.hpp"
#include "dmk/kernels.hpp"

namespace dmk {

namespace {

std::vector<kernels::ScanEdge> collect_edges(const Polygon& poly) {
  std::vector<kernels::ScanEdge> edges;
  auto add_ring = [&edges](const Ring& ring) {
    const size_t n = ring.size();
    for (size_t i = 0; i < n; ++i) {
      const Point& a = ring[i];
      const Point& b = ring[(i + 1) % n];
      edges.push_back({a.x, a.y, b.x, b.y});
    }
  };
  add_ring(poly.exterior);
  for (const Ring& hole : poly.holes) add_ring(hole);
  return edges;
}

void validate_polygon(const Polygon& poly) {
  if (poly.exterior.size() < 3)
    throw std::invalid_argument("rasterize: degenerate polygon (<3 vertices)");
  for (const Ring& hole : poly.holes)
    if (hole.size() < 3) throw std::invalid_argument("rasterize: degenerate hole (<3 vertices)");
}

}  // namespace

void fill_polygon(Mask& mask, const Polygon& poly, int cls) {
  validate_polygon(poly);
  if (cls < 1 || cls > 4) throw std::invalid_argument("rasterize: class must be in 1..4");
  const Box bb = bounding_box(poly);
  const int row0 = std::max(0, static_cast<int>(std::floor(bb.y0)));
  const int row1 = std::min(mask.height - 1, static_cast<int>(std::ceil(bb.y1)));
  if (row0 > row1) return;
  const auto edges = collect_edges(poly);
  kernels::scanline_fill(edges.data(), static_cast<int>(edges.size()),
                         static_cast<uint8_t>(cls), mask.data.data(), mask.width, mask.height,
                         row0, row1);
}

Mask rasterize(std::span<const std::pair<Polygon, int>> buildings, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("rasterize: bad dimensions");
  Mask mask(width, height);
  for (const auto& [poly, cls] : buildings) fill_polygon(mask, poly, cls);
  return mask;
}

void for_each_interior_pixel(const Polygon& poly, int width, int height,
                             const std::function<void(int, int)>& fn) {
  validate_polygon(poly);
  const Box bb = bounding_box(poly);
  const int row0 = std::max(0, static_cast<int>(std::floor(bb.y0)));
  const int row1 = std::min(height - 1, static_cast<int>(std::ceil(bb.y1)));
  const auto edges = collect_edges(poly);
  std::vector<double> xs;
  for (int row = row0; row <= row1; ++row) {
    const double yc = row + 0.5;
    xs.clear();
    for (const auto& e : edges) {
      const bool crosses = (e.y0 <= yc && e.y1 > yc) || (e.y1 <= yc && e.y0 > yc);
      if (!crosses) continue;
      xs.push_back(e.x0 + (yc - e.y0) * (e.x1 - e.x0) / (e.y1 - e.y0));
    }
    std::sort(xs.begin(), xs.end());
    for (size_t i = 0; i + 1 < xs.size(); i += 2) {
      int c0 = std::max(static_cast<int>(std::ceil(xs[i] - 0.5)), 0);
      int c1 = std::min(static_cast<int>(std::ceil(xs[i + 1] - 0.5)) - 1, width - 1);
      for (int c = c0; c <= c1; ++c) fn(c, row);
    }
  }
}

BinaryMask binarize(const Mask& mask) {
  BinaryMask out(mask.width, mask.height);
  for (size_t i = 0; i < mask.data.size(); ++i) out.data[i] = mask.data[i] >= 1 ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------------
// Connected components: two-pass union-find over 8-neighborhoods.

namespace {

struct UnionFind {
  std::vector<int> parent;
  int add() {
    parent.push_back(static_cast<int>(parent.size()));
    return parent.back();
  }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<Component> connected_components(const BinaryMask& mask) {
  const int w = mask.width, h = mask.height;
  for (uint8_t v : mask.data)
    if (v > 1) throw std::invalid_argument("connected_components: mask is not binary");
  std::vector<int> labels(static_cast<size_t>(w) * h, -1);
  UnionFind uf;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      // Scan-order neighbors: W, NW, N, NE.
      static constexpr std::array<std::pair<int, int>, 4> prev{{{-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
      int lbl = -1;
      for (const auto& [dx, dy] : prev) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const int nl = labels[static_cast<size_t>(ny) * w + nx];
        if (nl < 0) continue;
        if (lbl < 0)
          lbl = nl;
        else
          uf.unite(lbl, nl);
      }
      if (lbl < 0) lbl = uf.add();
      labels[static_cast<size_t>(y) * w + x] = lbl;
    }
  }
  // Relabel roots 1..n in first-encounter row-major order.
  std::vector<int> root_to_index(uf.parent.size(), -1);
  std::vector<Component> components;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int lbl = labels[static_cast<size_t>(y) * w + x];
      if (lbl < 0) continue;
      const int root = uf.find(lbl);
      if (root_to_index[root] < 0) {
        root_to_index[root] = static_cast<int>(components.size());
        components.emplace_back();
      }
      components[root_to_index[root]].pixels.emplace_back(x, y);
    }
  }
  return components;
}

// ---------------------------------------------------------------------------
// Boundary tracing on pixel corners.

Polygon trace_boundary(const Component& component) {
  if (component.pixels.empty())
    throw std::invalid_argument("trace_boundary: empty component");

  int minx = component.pixels[0].first, miny = component.pixels[0].second;
  int maxx = minx, maxy = miny;
  for (const auto& [x, y] : component.pixels) {
    minx = std::min(minx, x);
    miny = std::min(miny, y);
    maxx = std::max(maxx, x);
    maxy = std::max(maxy, y);
  }
  const int bw = maxx - minx + 1, bh = maxy - miny + 1;
  std::vector<uint8_t> grid(static_cast<size_t>(bw) * bh, 0);
  for (const auto& [x, y] : component.pixels)
    grid[static_cast<size_t>(y - miny) * bw + (x - minx)] = 1;
  auto in_set = [&](int x, int y) {
    x -= minx;
    y -= miny;
    return x >= 0 && y >= 0 && x < bw && y < bh && grid[static_cast<size_t>(y) * bw + x] != 0;
  };

  // Directed boundary edges keep the interior on the consistent side:
  //   +x exists at corner (cx,cy) iff pixel (cx,cy) set and (cx,cy-1) not
  //   +y iff (cx-1,cy) set and (cx,cy) not
  //   -x iff (cx-1,cy-1) set and (cx-1,cy) not
  //   -y iff (cx,cy-1) set and (cx-1,cy-1) not
  auto has_dir = [&](int cx, int cy, int dx, int dy) {
    if (dx == 1) return in_set(cx, cy) && !in_set(cx, cy - 1);
    if (dy == 1) return in_set(cx - 1, cy) && !in_set(cx, cy);
    if (dx == -1) return in_set(cx - 1, cy - 1) && !in_set(cx - 1, cy);
    return in_set(cx, cy - 1) && !in_set(cx - 1, cy - 1);
  };

  // Row-major-first pixel starts the outer loop at a genuine corner.
  const auto [sx, sy] = *std::min_element(
      component.pixels.begin(), component.pixels.end(),
      [](const auto& a, const auto& b) { return std::tie(a.second, a.first) < std::tie(b.second, b.first); });

  Ring ring;
  int cx = sx, cy = sy;
  int dx = 1, dy = 0;
  ring.push_back({static_cast<double>(cx), static_cast<double>(cy)});
  while (true) {
    cx += dx;
    cy += dy;
    if (cx == sx && cy == sy) break;
    // Prefer the sharp turn (dy,-dx): at checkerboard corners this keeps
    // the trace on the outer ring.
    const std::array<std::pair<int, int>, 3> candidates{
        {{dy, -dx}, {dx, dy}, {-dy, dx}}};
    bool moved = false;
    for (const auto& [ndx, ndy] : candidates) {
      if (has_dir(cx, cy, ndx, ndy)) {
        if (ndx != dx || ndy != dy)
          ring.push_back({static_cast<double>(cx), static_cast<double>(cy)});
        dx = ndx;
        dy = ndy;
        moved = true;
        break;
      }
    }
    if (!moved) throw std::logic_error("trace_boundary: broken boundary walk");
  }
  return Polygon{std::move(ring), {}};
}

// ---------------------------------------------------------------------------

std::vector<std::pair<Polygon, int>> polygonize(const Mask& mask, int min_area) {
  const BinaryMask fg = binarize(mask);
  std::vector<std::pair<Polygon, int>> result;
  for (const Component& comp : connected_components(fg)) {
    if (static_cast<int>(comp.pixels.size()) < min_area) continue;
    std::array<int64_t, 5> votes{};
    for (const auto& [x, y] : comp.pixels) ++votes[mask.at(x, y)];
    int cls = 1;
    for (int c = 1; c <= 4; ++c)
      if (votes[c] >= votes[cls]) cls = c;  // ties toward higher damage
    result.emplace_back(trace_boundary(comp), cls);
  }
  return result;
}

ImageBuffer crop_building(const ImageBuffer& image, const Polygon& footprint,
                          const CropSpec& spec) {
  if (spec.output_side < 8) throw std::invalid_argument("crop_building: output_side must be >= 8");
  if (image.width < 1 || image.height < 1)
    throw std::invalid_argument("crop_building: empty image");
  const Box bb = bounding_box(footprint);
  const double pad = std::ceil(spec.padding_fraction * std::max(bb.width(), bb.height()));
  const double x0 = std::clamp(bb.x0 - pad, 0.0, static_cast<double>(image.width));
  const double x1 = std::clamp(bb.x1 + pad, 0.0, static_cast<double>(image.width));
  const double y0 = std::clamp(bb.y0 - pad, 0.0, static_cast<double>(image.height));
  const double y1 = std::clamp(bb.y1 + pad, 0.0, static_cast<double>(image.height));
  const int ix0 = static_cast<int>(std::floor(x0));
  const int ix1 = static_cast<int>(std::ceil(x1));
  const int iy0 = static_cast<int>(std::floor(y0));
  const int iy1 = static_cast<int>(std::ceil(y1));
  if (ix1 <= ix0 || iy1 <= iy0)
    throw std::invalid_argument("crop_building: zero-area bounding box");
  ImageBuffer sub(ix1 - ix0, iy1 - iy0, image.channels);
  for (int y = iy0; y < iy1; ++y)
    for (int x = ix0; x < ix1; ++x)
      for (int c = 0; c < image.channels; ++c)
        sub.at(x - ix0, y - iy0, c) = image.at(x, y, c);
  return resize_bilinear(sub, spec.output_side, spec.output_side);
}

}  // namespace dmk
