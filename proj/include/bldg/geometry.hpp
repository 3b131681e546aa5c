#pragma once

// Planar geometry over projected footprints: shoelace areas, outline node
// counts, even-odd containment and zonal raster statistics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "bldg/error.hpp"
#include "bldg/geodata_io.hpp"

namespace bldg {

struct ZonalStats {
  double mean = 0.0;
  double max = 0.0;
  double std = 0.0;  // population
  std::size_t count = 0;
};

struct BoundingBox {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();
};

inline void check_ring(const Ring& ring) {
  if (ring.size() < 4) throw Error(Errc::DegenerateRing, "ring has " + std::to_string(ring.size()) + " points");
}

inline double polygon_area_sqm(const Geometry& geom) {
  double total = 0.0;
  for (const auto& part : geom.parts) {
    if (part.empty()) throw Error(Errc::DegenerateRing, "polygon part without rings");
    double part_area = 0.0;
    for (std::size_t r = 0; r < part.size(); ++r) {
      check_ring(part[r]);
      double a = 0.5 * std::abs(ring_signed_area2(part[r]));
      part_area += r == 0 ? a : -a;
    }
    total += part_area;
  }
  return std::max(total, 0.0);
}

// Distinct outline vertices: the repeated closing coordinate is never
// counted; hole rings only when include_holes is set.
inline std::size_t node_count(const Geometry& geom, bool include_holes = false) {
  std::size_t n = 0;
  for (const auto& part : geom.parts) {
    if (part.empty()) throw Error(Errc::DegenerateRing, "polygon part without rings");
    for (std::size_t r = 0; r < part.size(); ++r) {
      check_ring(part[r]);
      if (r == 0 || include_holes) n += part[r].size() - 1;
    }
  }
  return n;
}

namespace detail {

// Crossing parity of a +x ray against one polygon part (all its rings).
// Edges are half-open in y (ymin <= y < ymax) and the crossing test is strict
// in x, so a point on a shared edge belongs to exactly one side.
inline bool part_contains(const Polygon& part, Point pt) {
  bool inside = false;
  for (const auto& ring : part) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      const Point& a = ring[i];
      const Point& b = ring[i + 1];
      const bool a_below = a.y <= pt.y;
      const bool b_below = b.y <= pt.y;
      if (a_below == b_below) continue;
      // Cross-multiplied form of pt.x < x-intercept; avoids the division so
      // that translating everything by the same vector gives the same answer.
      const double lhs = (pt.x - a.x) * (b.y - a.y);
      const double rhs = (pt.y - a.y) * (b.x - a.x);
      const bool crosses = b.y > a.y ? lhs < rhs : lhs > rhs;
      if (crosses) inside = !inside;
    }
  }
  return inside;
}

}  // namespace detail

inline bool point_in_polygon(Point pt, const Geometry& geom) {
  for (const auto& part : geom.parts) {
    if (detail::part_contains(part, pt)) return true;
  }
  return false;
}

inline BoundingBox bounding_box(const Geometry& geom) {
  BoundingBox bb;
  for (const auto& part : geom.parts) {
    if (part.empty()) continue;
    for (const auto& p : part.front()) {
      bb.min_x = std::min(bb.min_x, p.x);
      bb.min_y = std::min(bb.min_y, p.y);
      bb.max_x = std::max(bb.max_x, p.x);
      bb.max_y = std::max(bb.max_y, p.y);
    }
  }
  return bb;
}

// Accumulates statistics in the order values are pushed. Two passes over the
// retained values keep the variance non-negative and exact for constants.
class ZonalAccumulator {
 public:
  void push(double v) { values_.push_back(v); }
  std::size_t count() const { return values_.size(); }

  ZonalStats finish() const {
    ZonalStats s;
    s.count = values_.size();
    if (values_.empty()) return s;
    double sum = 0.0;
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : values_) {
      sum += v;
      mx = std::max(mx, v);
    }
    s.mean = sum / static_cast<double>(values_.size());
    double ss = 0.0;
    for (double v : values_) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values_.size()));
    s.max = mx;
    return s;
  }

 private:
  std::vector<double> values_;
};

/// Mean, max and population std of the valid cells whose centers fall inside
/// the geometry. Only the geometry's bounding box is scanned, row-major, so
/// results match an exhaustive scan bit for bit.
inline ZonalStats zonal_stats(const DemGrid& grid, const Geometry& geom) {
  const BoundingBox bb = bounding_box(geom);
  ZonalAccumulator acc;
  if (std::isfinite(bb.min_x)) {
    const double cs = grid.cellsize;
    auto clamp_col = [&](double c) { return static_cast<int>(std::clamp(c, 0.0, grid.ncols - 1.0)); };
    auto clamp_row = [&](double r) { return static_cast<int>(std::clamp(r, 0.0, grid.nrows - 1.0)); };
    // One cell of slack on each side; containment is the final arbiter.
    const int c0 = clamp_col(std::floor((bb.min_x - grid.xll) / cs - 0.5) - 1);
    const int c1 = clamp_col(std::ceil((bb.max_x - grid.xll) / cs - 0.5) + 1);
    const int r0 = clamp_row(std::floor(grid.nrows - 0.5 - (bb.max_y - grid.yll) / cs) - 1);
    const int r1 = clamp_row(std::ceil(grid.nrows - 0.5 - (bb.min_y - grid.yll) / cs) + 1);
    const bool overlaps = bb.max_x >= grid.xll && bb.min_x <= grid.xll + grid.ncols * cs &&
                          bb.max_y >= grid.yll && bb.min_y <= grid.yll + grid.nrows * cs;
    if (overlaps) {
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
          const double v = grid.at(r, c);
          if (grid.is_nodata(v)) continue;
          if (point_in_polygon(cell_center(grid, r, c), geom)) acc.push(v);
        }
      }
    }
  }
  if (acc.count() == 0) throw Error(Errc::NoCellsCovered, "no valid cell centers inside the footprint");
  return acc.finish();
}

}  // namespace bldg
