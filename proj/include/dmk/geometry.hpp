#pragma once

#include <vector>

namespace dmk {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

using Ring = std::vector<Point>;

// Pixel-space polygon: exterior ring plus optional holes. Rings are open
// (closure implicit, the first vertex is not repeated at the end).
struct Polygon {
  Ring exterior;
  std::vector<Ring> holes;
  bool operator==(const Polygon&) const = default;
};

struct Box {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

// Signed shoelace area; positive for the counterclockwise orientation
// used by trace_boundary.
double ring_area(const Ring& ring);

Box bounding_box(const Polygon& poly);

}  // namespace dmk
