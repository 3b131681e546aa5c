#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "bldg/geometry.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace bldg;

namespace {

Ring square(double x0, double y0, double side) {
  return {{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}, {x0, y0}};
}

Geometry single(Ring r) {
  Geometry g;
  g.parts.push_back({std::move(r)});
  return g;
}

DemGrid make_grid(int ncols, int nrows, std::vector<double> values, double cs = 1.0, double xll = 0, double yll = 0) {
  DemGrid g;
  g.ncols = ncols;
  g.nrows = nrows;
  g.cellsize = cs;
  g.xll = xll;
  g.yll = yll;
  g.values = std::move(values);
  return g;
}

// Star-shaped random polygon around (cx, cy).
Ring random_polygon(std::mt19937_64& rng, double cx, double cy, double rmax, int n) {
  std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi), rad(0.2 * rmax, rmax);
  std::vector<double> angles(n);
  for (auto& a : angles) a = ang(rng);
  std::sort(angles.begin(), angles.end());
  Ring r;
  for (double a : angles) {
    double rr = rad(rng);
    r.push_back({cx + rr * std::cos(a), cy + rr * std::sin(a)});
  }
  r.push_back(r.front());
  return r;
}

}  // namespace

TEST(Area, UnitSquare) { EXPECT_EQ(polygon_area_sqm(single(square(0, 0, 1))), 1.0); }

TEST(Area, Triangle) { EXPECT_EQ(polygon_area_sqm(single({{0, 0}, {4, 0}, {0, 3}, {0, 0}})), 6.0); }

TEST(Area, SquareWithHole) {
  Geometry g;
  g.parts.push_back({square(0, 0, 10), square(4, 4, 2)});
  EXPECT_EQ(polygon_area_sqm(g), 96.0);
}

TEST(Area, OrientationAndRotationInvariant) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    Ring r = random_polygon(rng, 0, 0, 10, 3 + t % 10);
    const double a = polygon_area_sqm(single(r));
    Ring rev(r.rbegin(), r.rend());
    EXPECT_NEAR(polygon_area_sqm(single(rev)), a, 1e-9 * a);
    // same ring starting from its second vertex
    Ring rot(r.begin() + 1, r.end());
    rot.push_back(r[1]);
    EXPECT_NEAR(polygon_area_sqm(single(rot)), a, 1e-9 * a);
  }
}

TEST(Area, MultiPolygonSumsParts) {
  Geometry g;
  g.parts.push_back({square(0, 0, 2)});
  g.parts.push_back({square(5, 5, 3)});
  EXPECT_EQ(polygon_area_sqm(g), 13.0);
}

TEST(Area, DegenerateRingRejected) {
  EXPECT_ERRC(polygon_area_sqm(single({{0, 0}, {1, 0}, {0, 0}})), DegenerateRing);
}

TEST(Nodes, ClosingVertexExcluded) { EXPECT_EQ(node_count(single(square(0, 0, 1))), 4u); }

TEST(Nodes, MultiPolygonOfTwoSquares) {
  Geometry g;
  g.parts.push_back({square(0, 0, 1)});
  g.parts.push_back({square(3, 3, 1)});
  EXPECT_EQ(node_count(g), 8u);
}

TEST(Nodes, HolesOnlyWhenAsked) {
  Geometry g;
  g.parts.push_back({square(0, 0, 10), square(4, 4, 2)});
  EXPECT_EQ(node_count(g), 4u);
  EXPECT_EQ(node_count(g, true), 8u);
}

TEST(PointInPolygon, Basics) {
  Geometry unit = single(square(0, 0, 1));
  EXPECT_TRUE(point_in_polygon({0.5, 0.5}, unit));
  EXPECT_FALSE(point_in_polygon({2, 2}, unit));
  Geometry holed;
  holed.parts.push_back({square(0, 0, 10), square(4, 4, 2)});
  EXPECT_FALSE(point_in_polygon({5, 5}, holed));
  EXPECT_TRUE(point_in_polygon({1, 1}, holed));
}

TEST(PointInPolygon, SharedEdgeBelongsToExactlyOneSide) {
  Geometry left = single(square(0, 0, 1)), right = single(square(1, 0, 1));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Point p{1.0, u(rng)};
    EXPECT_NE(point_in_polygon(p, left), point_in_polygon(p, right));
  }
}

TEST(PointInPolygon, AgreesWithDivisionOracleOffBoundary) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-12, 12);
  for (int t = 0; t < 100; ++t) {
    Geometry g = single(random_polygon(rng, 0, 0, 10, 3 + t % 12));
    for (int k = 0; k < 200; ++k) {
      Point p{u(rng), u(rng)};
      EXPECT_EQ(point_in_polygon(p, g), oracle::inside(g, p));
    }
  }
}

TEST(Zonal, HandExample) {
  DemGrid g = make_grid(2, 2, {1, 2, 3, 4});
  ZonalStats s = zonal_stats(g, single(square(0, 0, 2)));
  EXPECT_EQ(s.count, 4u);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_EQ(s.max, 4.0);
  EXPECT_NEAR(s.std, std::sqrt(5.0 / 4.0), 1e-12);
  EXPECT_NEAR(s.std, 1.118034, 1e-6);
}

TEST(Zonal, SingleCell) {
  DemGrid g = make_grid(3, 3, {0, 0, 0, 0, 7, 0, 0, 0, 0});
  ZonalStats s = zonal_stats(g, single(square(1, 1, 1)));
  EXPECT_EQ(s.count, 1u);
  EXPECT_EQ(s.mean, 7.0);
  EXPECT_EQ(s.max, 7.0);
  EXPECT_EQ(s.std, 0.0);
}

TEST(Zonal, AllNodataAndOutsideRaiseNoCellsCovered) {
  DemGrid g = make_grid(2, 2, {-9999, -9999, -9999, -9999});
  g.nodata = -9999;
  EXPECT_ERRC(zonal_stats(g, single(square(0, 0, 2))), NoCellsCovered);
  DemGrid h = make_grid(2, 2, {1, 2, 3, 4});
  EXPECT_ERRC(zonal_stats(h, single(square(50, 50, 2))), NoCellsCovered);
  EXPECT_ERRC(zonal_stats(h, single({{0.1, 0.1}, {0.4, 0.1}, {0.4, 0.4}, {0.1, 0.1}})), NoCellsCovered);
}

TEST(Zonal, MatchesBruteForceOnRandomInstances) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> dim(1, 40);
  std::uniform_real_distribution<double> val(0, 60), unit(0, 1);
  int compared = 0;
  for (int t = 0; t < 300; ++t) {
    const int nc = dim(rng), nr = dim(rng);
    DemGrid g = make_grid(nc, nr, {}, 0.5 + unit(rng), 1000 * unit(rng), 1000 * unit(rng));
    for (int i = 0; i < nc * nr; ++i) g.values.push_back(unit(rng) < 0.1 ? g.nodata : val(rng));
    const double w = nc * g.cellsize, h = nr * g.cellsize;
    Geometry geom = single(random_polygon(rng, g.xll + w * unit(rng), g.yll + h * unit(rng),
                                          0.6 * std::max(w, h), 3 + t % 10));
    ZonalAccumulator acc;
    for (int r = 0; r < nr; ++r) {
      for (int c = 0; c < nc; ++c) {
        if (!g.is_nodata(g.at(r, c)) && oracle::inside(geom, cell_center(g, r, c))) acc.push(g.at(r, c));
      }
    }
    if (acc.count() == 0) {
      EXPECT_ERRC(zonal_stats(g, geom), NoCellsCovered);
      continue;
    }
    ZonalStats want = acc.finish(), got = zonal_stats(g, geom);
    EXPECT_EQ(got.count, want.count);
    EXPECT_EQ(got.mean, want.mean);
    EXPECT_EQ(got.max, want.max);
    EXPECT_EQ(got.std, want.std);
    ++compared;
  }
  EXPECT_GT(compared, 150);
}

TEST(Zonal, TranslationInvariantOnDyadicCoordinates) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> val(0, 30);
  std::uniform_int_distribution<int> q(0, 64);
  for (int t = 0; t < 50; ++t) {
    DemGrid g = make_grid(16, 16, {});
    for (int i = 0; i < 256; ++i) g.values.push_back(val(rng));
    Ring r;
    for (int k = 0; k < 6; ++k) r.push_back({q(rng) / 4.0, q(rng) / 4.0});
    r.push_back(r.front());
    Geometry geom = single(r);
    if (polygon_area_sqm(geom) == 0.0) continue;
    ZonalStats a;
    try {
      a = zonal_stats(g, geom);
    } catch (const Error&) {
      continue;
    }
    DemGrid g2 = g;
    g2.xll += 4096;
    g2.yll -= 2048;
    Geometry moved = geom;
    for (auto& p : moved.parts[0][0]) p = {p.x + 4096, p.y - 2048};
    ZonalStats b = zonal_stats(g2, moved);
    EXPECT_EQ(a.count, b.count);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.std, b.std);
  }
}

TEST(Zonal, ConstantShiftMovesMeanNotStd) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> val(0, 30);
  DemGrid g = make_grid(20, 20, {});
  for (int i = 0; i < 400; ++i) g.values.push_back(val(rng));
  Geometry geom = single(random_polygon(rng, 10, 10, 8, 9));
  ZonalStats a = zonal_stats(g, geom);
  for (auto& v : g.values) v += 5.0;
  ZonalStats b = zonal_stats(g, geom);
  EXPECT_EQ(a.count, b.count);
  EXPECT_NEAR(b.mean, a.mean + 5.0, 1e-9);
  EXPECT_NEAR(b.max, a.max + 5.0, 1e-12);
  EXPECT_NEAR(b.std, a.std, 1e-9);
}
