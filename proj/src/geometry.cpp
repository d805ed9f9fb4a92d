#include "dmk/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace dmk {

double ring_area(const Ring& ring) {
  double sum = 0.0;
  const size_t n = ring.size();
  for (size_t i = 0; i < n; ++i) {
    const Point& a = ring[i];
    const Point& b = ring[(i + 1) % n];
    sum += a.x * b.y - b.x * a.y;
  }
  return 0.5 * sum;
}

Box bounding_box(const Polygon& poly) {
  if (poly.exterior.empty()) throw std::invalid_argument("bounding_box: empty polygon");
  Box b{poly.exterior[0].x, poly.exterior[0].y, poly.exterior[0].x, poly.exterior[0].y};
  for (const Point& p : poly.exterior) {
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  return b;
}

}  // namespace dmk
