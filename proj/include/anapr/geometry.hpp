// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <ostream>

namespace anapr {

enum class Axis : std::uint8_t { horizontal = 0, vertical = 1 };

inline Axis other(Axis a) { return a == Axis::horizontal ? Axis::vertical : Axis::horizontal; }

struct Point {
  int x = 0;
  int y = 0;
  auto operator<=>(const Point&) const = default;
};

// Half-open integer rectangle [x0, x1) x [y0, y1) in grid cells.
struct CellRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  long long area() const { return static_cast<long long>(width()) * height(); }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool contains(const CellRect& o) const {
    return o.x0 >= x0 && o.y0 >= y0 && o.x1 <= x1 && o.y1 <= y1;
  }
  bool intersects(const CellRect& o) const {
    return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
  }
  CellRect united(const CellRect& o) const {
    if (empty()) return o;
    if (o.empty()) return *this;
    return {std::min(x0, o.x0), std::min(y0, o.y0), std::max(x1, o.x1), std::max(y1, o.y1)};
  }
  auto operator<=>(const CellRect&) const = default;
};

// Closed physical rectangle in routing-grid units. Coordinates are always
// multiples of 0.5 for the geometry this library produces, so comparisons
// are exact.
struct Rect {
  double xlo = 0;
  double ylo = 0;
  double xhi = 0;
  double yhi = 0;

  double width() const { return xhi - xlo; }
  double height() const { return yhi - ylo; }
  // True when the interiors overlap; touching edges do not count.
  bool overlaps(const Rect& o) const {
    return xlo < o.xhi && o.xlo < xhi && ylo < o.yhi && o.ylo < yhi;
  }
  Rect expanded(double d) const { return {xlo - d, ylo - d, xhi + d, yhi + d}; }
  auto operator<=>(const Rect&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const Rect& r) {
  return os << "[" << r.xlo << "," << r.ylo << " " << r.xhi << "," << r.yhi << "]";
}

}  // namespace anapr
