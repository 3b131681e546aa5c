#pragma once

// ESRI ASCII Grid rasters and GeoJSON footprint collections.
//
// Coordinates are taken to be projected meters; nothing here reprojects.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bldg/error.hpp"
#include "bldg/text.hpp"

namespace bldg {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

// Closed ring: front() == back(), at least 4 stored coordinates.
using Ring = std::vector<Point>;
// rings[0] is the exterior, the rest are holes.
using Polygon = std::vector<Ring>;

struct Geometry {
  std::vector<Polygon> parts;
  bool multi = false;  // serialized as MultiPolygon when set
};

/// Georeferenced elevation raster. values[0..ncols) is the northernmost row.
struct DemGrid {
  int ncols = 0;
  int nrows = 0;
  double xll = 0.0;
  double yll = 0.0;
  double cellsize = 1.0;
  double nodata = -9999.0;
  std::vector<double> values;

  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(ncols) +
                  static_cast<std::size_t>(col)];
  }
  double& at(int row, int col) {
    return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(ncols) +
                  static_cast<std::size_t>(col)];
  }
  bool is_nodata(double v) const { return v == nodata; }

  friend bool operator==(const DemGrid&, const DemGrid&) = default;
};

using Scalar = std::variant<std::monostate, bool, long long, double, std::string>;

struct FootprintRecord {
  std::string uid;
  Geometry geometry;
  std::map<std::string, Scalar> attributes;
};

enum class BuildingClass { residential, non_residential };

inline std::string_view class_name(BuildingClass c) {
  return c == BuildingClass::residential ? "residential" : "non_residential";
}

struct Prediction {
  double probability = 0.0;
  BuildingClass label = BuildingClass::residential;
};

// Twice the signed shoelace area (positive for counter-clockwise rings).
inline double ring_signed_area2(const Ring& ring) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    acc += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// ASCII Grid

inline DemGrid parse_ascii_grid(std::string_view text) {
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string_view {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    return text.substr(start, pos - start);
  };

  std::optional<long long> ncols, nrows;
  std::optional<double> xll, yll, cellsize, nodata;
  bool x_is_center = false, y_is_center = false;

  for (;;) {
    std::size_t save = pos;
    auto key_tok = next_token();
    if (key_tok.empty()) break;
    auto c0 = static_cast<unsigned char>(key_tok.front());
    if (!std::isalpha(c0)) {
      pos = save;
      break;
    }
    std::string key = to_lower(key_tok);
    auto value_tok = next_token();
    if (value_tok.empty()) throw Error(Errc::MissingHeaderKey, "no value for header key '" + key + "'");
    auto bad = [&] { return Error(Errc::NonNumericToken, "header '" + key + "' value '" + std::string(value_tok) + "'"); };
    if (key == "ncols" || key == "nrows") {
      auto v = parse_int(value_tok);
      if (!v) throw bad();
      (key == "ncols" ? ncols : nrows) = *v;
    } else {
      auto v = parse_double(value_tok);
      if (!v) throw bad();
      if (key == "xllcorner") xll = *v;
      else if (key == "yllcorner") yll = *v;
      else if (key == "xllcenter") { xll = *v; x_is_center = true; }
      else if (key == "yllcenter") { yll = *v; y_is_center = true; }
      else if (key == "cellsize") cellsize = *v;
      else if (key == "nodata_value") nodata = *v;
      else throw Error(Errc::NonNumericToken, "unrecognized header key '" + std::string(key_tok) + "'");
    }
  }

  if (!ncols) throw Error(Errc::MissingHeaderKey, "ncols");
  if (!nrows) throw Error(Errc::MissingHeaderKey, "nrows");
  if (!xll) throw Error(Errc::MissingHeaderKey, "xllcorner");
  if (!yll) throw Error(Errc::MissingHeaderKey, "yllcorner");
  if (!cellsize) throw Error(Errc::MissingHeaderKey, "cellsize");
  if (!nodata) throw Error(Errc::MissingHeaderKey, "NODATA_value");
  if (*ncols <= 0 || *nrows <= 0 || *ncols > (1 << 20) || *nrows > (1 << 20)) {
    throw Error(Errc::MalformedDocument, "grid dimensions must be positive");
  }
  if (!(*cellsize > 0.0) || !std::isfinite(*cellsize)) {
    throw Error(Errc::MalformedDocument, "cellsize must be positive");
  }

  DemGrid grid;
  grid.ncols = static_cast<int>(*ncols);
  grid.nrows = static_cast<int>(*nrows);
  grid.cellsize = *cellsize;
  grid.xll = x_is_center ? *xll - 0.5 * *cellsize : *xll;
  grid.yll = y_is_center ? *yll - 0.5 * *cellsize : *yll;
  grid.nodata = *nodata;

  const std::size_t expected = static_cast<std::size_t>(grid.ncols) * static_cast<std::size_t>(grid.nrows);
  grid.values.reserve(expected);
  for (auto tok = next_token(); !tok.empty(); tok = next_token()) {
    auto v = parse_double(tok);
    if (!v) throw Error(Errc::NonNumericToken, "'" + std::string(tok) + "'");
    if (!std::isfinite(*v) && *v != grid.nodata) {
      throw Error(Errc::NonNumericToken, "non-finite value '" + std::string(tok) + "'");
    }
    if (grid.values.size() == expected) {
      throw Error(Errc::CountMismatch, "more than " + std::to_string(expected) + " values");
    }
    grid.values.push_back(*v);
  }
  if (grid.values.size() != expected) {
    throw Error(Errc::CountMismatch, "expected " + std::to_string(expected) + " values, found " +
                                         std::to_string(grid.values.size()));
  }
  return grid;
}

inline std::string write_ascii_grid(const DemGrid& grid) {
  std::string out;
  out += "ncols " + std::to_string(grid.ncols) + "\n";
  out += "nrows " + std::to_string(grid.nrows) + "\n";
  out += "xllcorner " + format_double(grid.xll) + "\n";
  out += "yllcorner " + format_double(grid.yll) + "\n";
  out += "cellsize " + format_double(grid.cellsize) + "\n";
  out += "NODATA_value " + format_double(grid.nodata) + "\n";
  for (int r = 0; r < grid.nrows; ++r) {
    for (int c = 0; c < grid.ncols; ++c) {
      if (c) out.push_back(' ');
      out += format_double(grid.at(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

inline Point cell_center(const DemGrid& grid, int row, int col) {
  if (row < 0 || row >= grid.nrows || col < 0 || col >= grid.ncols) {
    throw Error(Errc::IndexOutOfRange, "cell (" + std::to_string(row) + ", " + std::to_string(col) + ")");
  }
  return {grid.xll + (col + 0.5) * grid.cellsize, grid.yll + (grid.nrows - row - 0.5) * grid.cellsize};
}

// ---------------------------------------------------------------------------
// GeoJSON

namespace detail {

using nlohmann::json;

inline Ring parse_ring(const json& j) {
  if (!j.is_array()) throw Error(Errc::MalformedDocument, "ring is not an array");
  Ring ring;
  ring.reserve(j.size());
  for (const auto& pt : j) {
    if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number()) {
      throw Error(Errc::MalformedDocument, "position is not a numeric pair");
    }
    ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
  }
  if (ring.empty() || !(ring.front() == ring.back())) {
    throw Error(Errc::UnclosedRing, "first and last positions differ");
  }
  if (ring.size() < 4) throw Error(Errc::DegenerateRing, "ring has fewer than 4 positions");
  return ring;
}

inline Polygon parse_polygon(const json& j) {
  if (!j.is_array() || j.empty()) throw Error(Errc::MalformedDocument, "polygon has no rings");
  Polygon poly;
  for (const auto& r : j) poly.push_back(parse_ring(r));
  if (ring_signed_area2(poly.front()) == 0.0) {
    throw Error(Errc::DegenerateRing, "exterior ring has zero area");
  }
  return poly;
}

inline Scalar to_scalar(const json& v, const std::string& key) {
  switch (v.type()) {
    case json::value_t::null: return std::monostate{};
    case json::value_t::boolean: return v.get<bool>();
    case json::value_t::number_integer: return v.get<long long>();
    case json::value_t::number_unsigned: return static_cast<long long>(v.get<unsigned long long>());
    case json::value_t::number_float: return v.get<double>();
    case json::value_t::string: return v.get<std::string>();
    default: throw Error(Errc::MalformedDocument, "property '" + key + "' is not a scalar");
  }
}

inline nlohmann::ordered_json from_scalar(const Scalar& s) {
  return std::visit(
      [](const auto& v) -> nlohmann::ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else return v;
      },
      s);
}

inline nlohmann::ordered_json ring_json(const Ring& ring) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& p : ring) arr.push_back({p.x, p.y});
  return arr;
}

}  // namespace detail

inline std::string scalar_to_string(const Scalar& s) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "";
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else if constexpr (std::is_same_v<T, long long>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, double>) return format_double(v);
        else return v;
      },
      s);
}

inline std::vector<FootprintRecord> parse_footprints(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedDocument, e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw Error(Errc::MalformedDocument, "expected a FeatureCollection with a features array");
  }

  std::vector<FootprintRecord> out;
  const auto& features = doc["features"];
  out.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    if (!f.is_object() || f.value("type", "") != "Feature") {
      throw Error(Errc::MalformedDocument, "features[" + std::to_string(i) + "] is not a Feature");
    }
    FootprintRecord rec;
    if (f.contains("properties") && f["properties"].is_object()) {
      for (const auto& [k, v] : f["properties"].items()) rec.attributes[k] = detail::to_scalar(v, k);
    }
    if (auto it = rec.attributes.find("UID"); it != rec.attributes.end() &&
                                              !std::holds_alternative<std::monostate>(it->second)) {
      rec.uid = scalar_to_string(it->second);
    } else {
      rec.uid = "fid-" + std::to_string(i);
    }

    if (!f.contains("geometry") || !f["geometry"].is_object()) {
      throw Error(Errc::UnsupportedGeometryType, "feature " + rec.uid + " has no geometry");
    }
    const auto& g = f["geometry"];
    const std::string type = g.value("type", "");
    if (!g.contains("coordinates")) {
      if (type == "Polygon" || type == "MultiPolygon") {
        throw Error(Errc::MalformedDocument, "geometry without coordinates");
      }
      throw Error(Errc::UnsupportedGeometryType, "'" + type + "' in feature " + rec.uid);
    }
    const auto& coords = g["coordinates"];
    if (type == "Polygon") {
      rec.geometry.parts.push_back(detail::parse_polygon(coords));
    } else if (type == "MultiPolygon") {
      if (!coords.is_array() || coords.empty()) throw Error(Errc::MalformedDocument, "empty MultiPolygon");
      rec.geometry.multi = true;
      for (const auto& p : coords) rec.geometry.parts.push_back(detail::parse_polygon(p));
    } else {
      throw Error(Errc::UnsupportedGeometryType, "'" + type + "' in feature " + rec.uid);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline nlohmann::ordered_json geometry_json(const Geometry& geom) {
  nlohmann::ordered_json g;
  auto polygon_json = [](const Polygon& poly) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : poly) arr.push_back(detail::ring_json(r));
    return arr;
  };
  if (geom.multi || geom.parts.size() != 1) {
    g["type"] = "MultiPolygon";
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : geom.parts) arr.push_back(polygon_json(p));
    g["coordinates"] = std::move(arr);
  } else {
    g["type"] = "Polygon";
    g["coordinates"] = polygon_json(geom.parts.front());
  }
  return g;
}

inline std::string write_footprints(const std::vector<FootprintRecord>& records) {
  nlohmann::ordered_json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = nlohmann::ordered_json::array();
  for (const auto& rec : records) {
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    f["properties"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : rec.attributes) f["properties"][k] = detail::from_scalar(v);
    f["geometry"] = geometry_json(rec.geometry);
    doc["features"].push_back(std::move(f));
  }
  return doc.dump() + "\n";
}

inline std::string write_predictions(const std::vector<FootprintRecord>& records,
                                     const std::vector<Prediction>& labels) {
  if (records.size() != labels.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(records.size()) + " records vs " +
                                          std::to_string(labels.size()) + " labels");
  }
  std::vector<FootprintRecord> annotated = records;
  for (std::size_t i = 0; i < annotated.size(); ++i) {
    annotated[i].attributes["pred_prob"] = labels[i].probability;
    annotated[i].attributes["pred_class"] = std::string(class_name(labels[i].label));
  }
  return write_footprints(annotated);
}

}  // namespace bldg
