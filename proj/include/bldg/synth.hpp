#pragma once

// Seeded synthetic building tables and raster scenes. Feature marginals are
// fitted to a target (mean, std, max) profile and labels come from a planted
// two-threshold rule, so a perfect classifier is known to exist.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "bldg/error.hpp"
#include "bldg/features.hpp"
#include "bldg/geodata_io.hpp"

namespace bldg {

struct FeatureTarget {
  double mean = 0.0;
  double std = 0.0;
  double max = 0.0;
};

// Dataset-level statistics of the reference survey (15,999 buildings).
struct SynthProfile {
  FeatureTarget ht{7.7176, 3.3335, 61.2562};
  FeatureTarget area_sqft{1552.0230, 4037.1331, 191268.2879};
  FeatureTarget nodes{5.1131, 3.5721, 106.0};
};

struct PlantedRule {
  double area_threshold = 0.0;    // sqft
  double height_threshold = 0.0;  // m
  // Fraction of the minority rows labelled through the height clause.
  double height_share = 0.3;
  // Empty band (in log-value units, before the marginal fit) inserted at
  // each threshold so the classes are separated by a margin.
  double log_gap = 0.5;

  // 0 = non-residential
  int classify(double area_sqft, double ht) const {
    return (area_sqft > area_threshold || ht > height_threshold) ? 0 : 1;
  }
};

struct SynthConfig {
  int n = 15999;
  double minority_fraction = 0.0261;
  std::uint64_t seed = 42;
  double noise_rate = 0.0;
  SynthProfile profile;
  PlantedRule rule;
  double ground_elev = kDefaultGroundElev;
  double floor_height = kDefaultFloorHeight;
  double sqft_per_sqm = kSqftPerSqm;
  std::vector<std::string> roof_colors = {"White", "Grey", "Red", "Blue"};
  std::vector<double> roof_color_weights = {0.4, 0.3, 0.2, 0.1};

  // Floor, so that 15999 x 0.0261 gives the surveyed 417.
  int minority_count() const {
    return static_cast<int>(std::floor(static_cast<double>(n) * minority_fraction + 1e-9));
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(Errc::InfeasibleConfig, m); };
    if (n < 2) fail("n must be at least 2");
    if (!(minority_fraction > 0.0 && minority_fraction < 0.5)) fail("minority_fraction must lie in (0, 0.5)");
    if (minority_count() < 1) fail("n * minority_fraction must give at least one minority row");
    if (!(noise_rate >= 0.0 && noise_rate < 0.5)) fail("noise_rate must lie in [0, 0.5)");
    if (!(rule.height_share >= 0.0 && rule.height_share <= 1.0)) fail("height_share must lie in [0, 1]");
    if (rule.log_gap < 0.0) fail("log_gap must be non-negative");
    if (roof_colors.empty() || roof_colors.size() != roof_color_weights.size()) fail("roof color weights mismatch");
    if (!(floor_height > 0.0)) fail("floor_height must be positive");
  }
};

struct SynthResult {
  AttributeTable table;
  std::vector<int> oracle;  // planted-rule labels before noise, 1 = residential
  PlantedRule rule;         // thresholds realized on this draw
};

namespace detail {

inline double sample_mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

// Finds scale a and exponent b so that post(min(a * base^b, cap)) has the
// target mean and (approximately) std. base must be positive. The map is
// monotone in base, so ranks are preserved.
inline std::vector<double> fit_power_transform(const std::vector<double>& log_base, const FeatureTarget& target,
                                               double cap, const std::function<double(double)>& post) {
  auto apply = [&](double log_a, double b) {
    std::vector<double> out(log_base.size());
    for (std::size_t i = 0; i < log_base.size(); ++i) out[i] = post(std::min(std::exp(log_a + b * log_base[i]), cap));
    return out;
  };
  auto fit_scale = [&](double b) {
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (sample_mean(apply(mid, b)) < target.mean ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  double lo = 0.01, hi = 4.0;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (sample_std(apply(fit_scale(mid), mid)) < target.std ? lo : hi) = mid;
  }
  const double b = 0.5 * (lo + hi);
  return apply(fit_scale(b), b);
}

inline std::string synth_uid(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "B%06d", i + 1);
  return buf;
}

}  // namespace detail

/// Draws a labelled table with exactly minority_count() rule-positive
/// (non-residential) rows; `noise_rate` then flips observed labels.
inline SynthResult generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::discrete_distribution<int> roof(cfg.roof_color_weights.begin(), cfg.roof_color_weights.end());

  std::vector<double> z_ht(n), z_area(n), z_nodes(n), z_spread(n), u_max(n), u_noise(n);
  std::vector<int> roof_idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    z_ht[i] = normal(rng);
    z_area[i] = normal(rng);
    z_nodes[i] = normal(rng);
    z_spread[i] = normal(rng);
    u_max[i] = unit(rng);
    u_noise[i] = unit(rng);
    roof_idx[i] = roof(rng);
  }

  // Planted rule on ranks: the k_h tallest buildings, then the k_a largest of
  // the rest. Margins go in before the marginal fit, which is monotone and
  // therefore keeps both the ranks and a positive gap.
  const int m = cfg.minority_count();
  const int k_h = static_cast<int>(std::lround(cfg.rule.height_share * m));
  const int k_a = m - k_h;
  std::vector<std::size_t> by_ht(n);
  std::iota(by_ht.begin(), by_ht.end(), 0);
  std::sort(by_ht.begin(), by_ht.end(),
            [&](auto a, auto b) { return z_ht[a] > z_ht[b] || (z_ht[a] == z_ht[b] && a < b); });
  std::vector<bool> tall(n, false), large(n, false);
  for (int i = 0; i < k_h; ++i) tall[by_ht[static_cast<std::size_t>(i)]] = true;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i) {
    if (!tall[i]) rest.push_back(i);
  }
  std::sort(rest.begin(), rest.end(),
            [&](auto a, auto b) { return z_area[a] > z_area[b] || (z_area[a] == z_area[b] && a < b); });
  if (k_a > 0) {
    const double cut = z_area[rest[static_cast<std::size_t>(k_a) - 1]];
    if (!(cut > z_area[rest[static_cast<std::size_t>(k_a)]])) {
      throw Error(Errc::InfeasibleConfig, "tied areas at the area threshold");
    }
    for (std::size_t i = 0; i < n; ++i) large[i] = z_area[i] >= cut;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (tall[i]) z_ht[i] += cfg.rule.log_gap;
    if (large[i]) z_area[i] += cfg.rule.log_gap;
  }

  const auto& p = cfg.profile;
  auto identity = [](double v) { return v; };
  const std::vector<double> ht = detail::fit_power_transform(z_ht, p.ht, p.ht.max, identity);
  const std::vector<double> area = detail::fit_power_transform(z_area, p.area_sqft, p.area_sqft.max, identity);
  const double min_nodes = 4.0;
  const FeatureTarget excess{p.nodes.mean - min_nodes, p.nodes.std, p.nodes.max - min_nodes};
  const std::vector<double> nodes = detail::fit_power_transform(z_nodes, excess, excess.max + 0.999,
                                                                [](double v) { return std::floor(v); });

  // Thresholds halfway across each gap in value space.
  auto midpoint = [&](const std::vector<double>& v, const std::vector<bool>& pos) {
    double hi_neg = -std::numeric_limits<double>::infinity();
    double lo_pos = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (pos[i]) lo_pos = std::min(lo_pos, v[i]);
      else hi_neg = std::max(hi_neg, v[i]);
    }
    if (!std::isfinite(lo_pos)) return hi_neg;  // clause selects nothing
    if (!(lo_pos > hi_neg)) throw Error(Errc::InfeasibleConfig, "marginal fit closed the class gap");
    return 0.5 * (hi_neg + lo_pos);
  };
  PlantedRule rule = cfg.rule;
  rule.height_threshold = midpoint(ht, tall);
  rule.area_threshold = midpoint(area, large);

  SynthResult out;
  out.rule = rule;
  out.oracle.resize(n);
  out.table.rows.resize(n);
  int minority = 0;
  for (std::size_t i = 0; i < n; ++i) {
    AttributeRow& r = out.table.rows[i];
    r.uid = detail::synth_uid(static_cast<int>(i));
    r.ht = ht[i];
    r.zonal_mean = ht[i] + cfg.ground_elev;
    r.zonal_std = std::exp(std::log(0.5) + 0.5 * z_spread[i]);
    r.zonal_max = r.zonal_mean + r.zonal_std * (1.5 + 1.5 * u_max[i]);
    r.floor = r.zonal_mean / cfg.floor_height;
    r.area_sqm = area[i] / cfg.sqft_per_sqm;
    r.area_sqft = r.area_sqm * cfg.sqft_per_sqm;
    r.nodes = static_cast<long long>(min_nodes + nodes[i]);
    r.roof_color = cfg.roof_colors[static_cast<std::size_t>(roof_idx[i])];
    const int truth = rule.classify(r.area_sqft, r.ht);
    minority += truth == 0;
    out.oracle[i] = truth;
    const int observed = u_noise[i] < cfg.noise_rate ? 1 - truth : truth;
    r.res = observed;
    r.build_type = observed == 1 ? "Residential" : "Non-Residential";
  }
  if (minority != m) throw Error(Errc::InfeasibleConfig, "planted rule realized " + std::to_string(minority) +
                                                             " minority rows, wanted " + std::to_string(m));
  return out;
}

// ---------------------------------------------------------------------------
// Raster scenes

struct SceneBuilding {
  std::string uid;
  int width_cells = 1;
  int depth_cells = 1;
  double ht = 0.0;
  std::optional<std::string> roof_color;
  std::optional<int> res;
};

struct SceneConfig {
  std::vector<SceneBuilding> buildings;
  int ncols = 100;
  int nrows = 100;
  double cellsize = 1.0;
  double xll = 0.0;
  double yll = 0.0;
  double ground_elev = kDefaultGroundElev;
  double nodata = -9999.0;
  int spacing = 2;  // empty cells between neighbours and around the border
};

struct SceneResult {
  DemGrid grid;
  std::vector<FootprintRecord> footprints;
};

/// Flat ground at ground_elev with one plateau of ground_elev + ht per
/// building. Footprints are axis-aligned rectangles on cell boundaries,
/// packed left to right in shelves from the north edge.
inline SceneResult rasterize_synthetic_scene(const SceneConfig& cfg) {
  if (cfg.ncols < 1 || cfg.nrows < 1 || !(cfg.cellsize > 0.0) || cfg.spacing < 0) {
    throw Error(Errc::InvalidConfig, "scene extent must be positive");
  }
  SceneResult out;
  DemGrid& g = out.grid;
  g.ncols = cfg.ncols;
  g.nrows = cfg.nrows;
  g.xll = cfg.xll;
  g.yll = cfg.yll;
  g.cellsize = cfg.cellsize;
  g.nodata = cfg.nodata;
  g.values.assign(static_cast<std::size_t>(cfg.ncols) * static_cast<std::size_t>(cfg.nrows), cfg.ground_elev);

  int cursor_col = cfg.spacing;
  int shelf_row = cfg.spacing;
  int shelf_depth = 0;
  for (const auto& b : cfg.buildings) {
    if (b.width_cells < 1 || b.depth_cells < 1) throw Error(Errc::InvalidConfig, "building " + b.uid + " is empty");
    if (cursor_col + b.width_cells + cfg.spacing > cfg.ncols) {
      shelf_row += shelf_depth + cfg.spacing;
      cursor_col = cfg.spacing;
      shelf_depth = 0;
    }
    if (cursor_col + b.width_cells + cfg.spacing > cfg.ncols ||
        shelf_row + b.depth_cells + cfg.spacing > cfg.nrows) {
      throw Error(Errc::SceneOverflow, "building " + b.uid + " does not fit the scene");
    }
    for (int r = shelf_row; r < shelf_row + b.depth_cells; ++r) {
      for (int c = cursor_col; c < cursor_col + b.width_cells; ++c) g.at(r, c) = cfg.ground_elev + b.ht;
    }
    const double x0 = cfg.xll + cursor_col * cfg.cellsize;
    const double x1 = cfg.xll + (cursor_col + b.width_cells) * cfg.cellsize;
    const double y1 = cfg.yll + (cfg.nrows - shelf_row) * cfg.cellsize;
    const double y0 = cfg.yll + (cfg.nrows - shelf_row - b.depth_cells) * cfg.cellsize;
    FootprintRecord rec;
    rec.uid = b.uid;
    rec.geometry.parts.push_back({Ring{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}});
    rec.attributes["UID"] = b.uid;
    if (b.roof_color) rec.attributes["RoofColor"] = *b.roof_color;
    if (b.res) {
      rec.attributes["res"] = static_cast<long long>(*b.res);
      rec.attributes["BuildType"] = std::string(*b.res == 1 ? "Residential" : "Non-Residential");
    }
    out.footprints.push_back(std::move(rec));
    cursor_col += b.width_cells + cfg.spacing;
    shelf_depth = std::max(shelf_depth, b.depth_cells);
  }
  return out;
}

/// Square buildings of about each row's area; the scene grows until every
/// building fits.
inline SceneConfig scene_from_table(const AttributeTable& table, double cellsize = 1.0,
                                    double ground_elev = kDefaultGroundElev) {
  SceneConfig cfg;
  cfg.cellsize = cellsize;
  cfg.ground_elev = ground_elev;
  double cells = 0.0;
  int widest = 1;
  for (const auto& r : table.rows) {
    SceneBuilding b;
    b.uid = r.uid;
    const int side = std::max(1, static_cast<int>(std::lround(std::sqrt(r.area_sqm) / cellsize)));
    b.width_cells = side;
    b.depth_cells = side;
    b.ht = r.ht;
    b.roof_color = r.roof_color;
    b.res = r.res;
    widest = std::max(widest, side);
    cells += static_cast<double>(side + cfg.spacing) * static_cast<double>(side + cfg.spacing);
    cfg.buildings.push_back(std::move(b));
  }
  int extent = std::max(widest + 2 * cfg.spacing, static_cast<int>(std::ceil(std::sqrt(cells * 1.1))) + cfg.spacing);
  for (;;) {
    cfg.ncols = cfg.nrows = extent;
    try {
      (void)rasterize_synthetic_scene(cfg);
      return cfg;
    } catch (const Error& e) {
      if (e.code() != Errc::SceneOverflow) throw;
      extent += std::max(1, extent / 8);
    }
  }
}

}  // namespace bldg
