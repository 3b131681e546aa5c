#pragma once

// Per-building attribute table, correlation-based feature pruning, feature
// encoding and stratified splitting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bldg/error.hpp"
#include "bldg/geodata_io.hpp"
#include "bldg/geometry.hpp"
#include "bldg/text.hpp"

namespace bldg {

inline constexpr double kSqftPerSqm = 10.76391;
inline constexpr double kDefaultGroundElev = 17.5;
inline constexpr double kDefaultFloorHeight = 3.0;

struct AttributeRow {
  std::string uid;
  std::optional<std::string> build_type;
  std::optional<std::string> roof_color;
  double zonal_mean = 0.0;
  double zonal_max = 0.0;
  double zonal_std = 0.0;
  double floor = 0.0;
  double area_sqft = 0.0;
  double area_sqm = 0.0;
  long long nodes = 0;
  std::optional<int> res;  // 1 residential, 0 non-residential
  double ht = 0.0;

  friend bool operator==(const AttributeRow&, const AttributeRow&) = default;
};

struct AttributeTable {
  std::vector<AttributeRow> rows;
  std::size_t size() const { return rows.size(); }
};

enum class FloorSource { zonal_mean, ht };

struct ExtractConfig {
  double ground_elev = kDefaultGroundElev;
  double floor_height = kDefaultFloorHeight;
  double sqft_per_sqm = kSqftPerSqm;
  FloorSource floor_source = FloorSource::zonal_mean;
  bool require_labels = false;
  bool include_hole_nodes = false;
};

struct RowError {
  std::string uid;
  Errc code;
  std::string message;
};

struct ExtractResult {
  AttributeTable table;
  std::vector<RowError> errors;
};

// Accepted spellings: 1/1.0/"1"/"residential"/"yes" and 0/"0"/"non-residential"/"no".
inline std::optional<int> parse_label(const Scalar& v) {
  if (const auto* d = std::get_if<double>(&v)) {
    if (*d == 1.0) return 1;
    if (*d == 0.0) return 0;
    return std::nullopt;
  }
  if (const auto* i = std::get_if<long long>(&v)) {
    if (*i == 1) return 1;
    if (*i == 0) return 0;
    return std::nullopt;
  }
  if (const auto* b = std::get_if<bool>(&v)) return *b ? 1 : 0;
  if (const auto* s = std::get_if<std::string>(&v)) {
    const std::string t = to_lower(trim(*s));
    if (t == "1" || t == "1.0" || t == "residential" || t == "yes") return 1;
    if (t == "0" || t == "0.0" || t == "non-residential" || t == "non_residential" || t == "nonresidential" ||
        t == "no") {
      return 0;
    }
  }
  return std::nullopt;
}

inline std::optional<int> parse_label_text(std::string_view s) { return parse_label(Scalar{std::string(s)}); }

namespace detail {

inline std::optional<std::string> string_attribute(const FootprintRecord& rec, const std::string& key) {
  auto it = rec.attributes.find(key);
  if (it == rec.attributes.end() || std::holds_alternative<std::monostate>(it->second)) return std::nullopt;
  return scalar_to_string(it->second);
}

inline std::optional<int> record_label(const FootprintRecord& rec) {
  if (auto it = rec.attributes.find("res"); it != rec.attributes.end()) {
    if (auto l = parse_label(it->second)) return l;
  }
  if (auto it = rec.attributes.find("BuildType"); it != rec.attributes.end()) {
    if (auto l = parse_label(it->second)) return l;
  }
  return std::nullopt;
}

}  // namespace detail

inline AttributeRow derive_row(const std::string& uid, const ZonalStats& zs, double area_sqm, std::size_t nodes,
                               const ExtractConfig& cfg) {
  AttributeRow row;
  row.uid = uid;
  row.zonal_mean = zs.mean;
  row.zonal_max = zs.max;
  row.zonal_std = zs.std;
  row.ht = zs.mean - cfg.ground_elev;
  row.floor = (cfg.floor_source == FloorSource::zonal_mean ? zs.mean : row.ht) / cfg.floor_height;
  row.area_sqm = area_sqm;
  row.area_sqft = area_sqm * cfg.sqft_per_sqm;
  row.nodes = static_cast<long long>(nodes);
  return row;
}

/// One row per footprint; rows that cannot be derived are reported in
/// `errors` (with the uid) and left out of the table. Duplicate uids throw.
inline ExtractResult build_attribute_table(const DemGrid& grid, const std::vector<FootprintRecord>& footprints,
                                           const ExtractConfig& cfg = {}) {
  if (footprints.empty()) throw Error(Errc::EmptySet, "no footprints");
  std::unordered_set<std::string> seen;
  ExtractResult out;
  out.table.rows.reserve(footprints.size());
  for (const auto& rec : footprints) {
    if (!seen.insert(rec.uid).second) throw Error(Errc::DuplicateUid, rec.uid);
    try {
      const ZonalStats zs = zonal_stats(grid, rec.geometry);
      AttributeRow row =
          derive_row(rec.uid, zs, polygon_area_sqm(rec.geometry), node_count(rec.geometry, cfg.include_hole_nodes), cfg);
      row.build_type = detail::string_attribute(rec, "BuildType");
      row.roof_color = detail::string_attribute(rec, "RoofColor");
      row.res = detail::record_label(rec);
      if (cfg.require_labels && !row.res) throw Error(Errc::MissingLabel, "no usable res/BuildType");
      out.table.rows.push_back(std::move(row));
    } catch (const Error& e) {
      out.errors.push_back({rec.uid, e.code(), e.what()});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature CSV

inline const std::vector<std::string>& feature_csv_header() {
  static const std::vector<std::string> h = {"UID",       "BuildType", "RoofColor", "zonal_mean",
                                             "zonal_max", "zonal_std", "floor",     "area_sqft",
                                             "area_sqm",  "nodes",     "res",       "ht"};
  return h;
}

inline std::vector<std::string> feature_csv_fields(const AttributeRow& r) {
  return {r.uid,
          r.build_type.value_or(""),
          r.roof_color.value_or(""),
          format_double(r.zonal_mean),
          format_double(r.zonal_max),
          format_double(r.zonal_std),
          format_double(r.floor),
          format_double(r.area_sqft),
          format_double(r.area_sqm),
          std::to_string(r.nodes),
          r.res ? std::to_string(*r.res) : std::string(),
          format_double(r.ht)};
}

inline std::string write_feature_csv(const AttributeTable& table) {
  std::string out;
  append_csv_row(out, feature_csv_header());
  for (const auto& r : table.rows) append_csv_row(out, feature_csv_fields(r));
  return out;
}

// Column name used in the feature CSV for a canonical feature name.
inline std::string csv_column_name(std::string_view canonical) {
  if (canonical == "roof_color") return "RoofColor";
  if (canonical == "build_type") return "BuildType";
  return std::string(canonical);
}

/// Strict mode requires every feature-CSV column. Lenient mode only needs UID;
/// absent numeric columns read as NaN and absent text columns as empty.
inline AttributeTable table_from_csv(const CsvDocument& doc, bool strict = true) {
  std::vector<std::optional<std::size_t>> col;
  for (const auto& name : feature_csv_header()) {
    auto c = doc.column(name);
    if (!c && (strict || name == "UID")) throw Error(Errc::MalformedCsv, "missing column '" + name + "'");
    col.push_back(c);
  }
  AttributeTable table;
  table.rows.reserve(doc.rows.size());
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < doc.rows.size(); ++i) {
    const auto& f = doc.rows[i];
    const std::string row_tag = "row " + std::to_string(i + 1);
    auto num = [&](std::size_t k) {
      if (!col[k]) return std::numeric_limits<double>::quiet_NaN();
      const auto& tok = f[*col[k]];
      auto v = parse_double(tok);
      if (!v || !std::isfinite(*v)) {
        throw Error(Errc::MalformedCsv,
                    row_tag + " column " + feature_csv_header()[k] + ": '" + tok + "' is not a finite number");
      }
      return *v;
    };
    auto opt_str = [&](std::size_t k) -> std::optional<std::string> {
      if (!col[k] || f[*col[k]].empty()) return std::nullopt;
      return f[*col[k]];
    };
    AttributeRow r;
    r.uid = f[*col[0]];
    if (r.uid.empty()) throw Error(Errc::MalformedCsv, row_tag + " has an empty UID");
    if (!seen.insert(r.uid).second) throw Error(Errc::DuplicateUid, r.uid);
    r.build_type = opt_str(1);
    r.roof_color = opt_str(2);
    r.zonal_mean = num(3);
    r.zonal_max = num(4);
    r.zonal_std = num(5);
    r.floor = num(6);
    r.area_sqft = num(7);
    r.area_sqm = num(8);
    if (col[9]) {
      auto nodes = parse_int(f[*col[9]]);
      if (!nodes) throw Error(Errc::MalformedCsv, row_tag + " nodes '" + f[*col[9]] + "'");
      r.nodes = *nodes;
    }
    if (auto res = opt_str(10)) {
      r.res = parse_label_text(*res);
      if (!r.res) throw Error(Errc::MissingLabel, r.uid + ": unrecognized res '" + *res + "'");
    }
    r.ht = num(11);
    table.rows.push_back(std::move(r));
  }
  return table;
}

inline AttributeTable read_feature_csv(std::string_view text) { return table_from_csv(parse_csv(text)); }

// ---------------------------------------------------------------------------
// Column access

inline const std::vector<std::string>& numeric_feature_names() {
  static const std::vector<std::string> n = {"zonal_mean", "zonal_max", "zonal_std", "floor",
                                             "area_sqft",  "area_sqm",  "nodes",     "ht"};
  return n;
}

inline std::string canonical_feature_name(std::string_view name) {
  static const std::map<std::string, std::string, std::less<>> aliases = {
      {"_mean", "zonal_mean"},    {"mean", "zonal_mean"},       {"Floor", "floor"},
      {"Area_sqft", "area_sqft"}, {"Area_sqm", "area_sqm"},     {"RoofColor", "roof_color"},
      {"BuildType", "build_type"}, {"height", "ht"},            {"max", "zonal_max"},
      {"std", "zonal_std"}};
  if (auto it = aliases.find(name); it != aliases.end()) return it->second;
  return std::string(name);
}

inline bool is_numeric_feature(std::string_view name) {
  const auto c = canonical_feature_name(name);
  const auto& n = numeric_feature_names();
  return std::find(n.begin(), n.end(), c) != n.end();
}

inline bool is_categorical_feature(std::string_view name) {
  const auto c = canonical_feature_name(name);
  return c == "roof_color" || c == "build_type";
}

inline double numeric_value(const AttributeRow& r, const std::string& canonical) {
  if (canonical == "zonal_mean") return r.zonal_mean;
  if (canonical == "zonal_max") return r.zonal_max;
  if (canonical == "zonal_std") return r.zonal_std;
  if (canonical == "floor") return r.floor;
  if (canonical == "area_sqft") return r.area_sqft;
  if (canonical == "area_sqm") return r.area_sqm;
  if (canonical == "nodes") return static_cast<double>(r.nodes);
  if (canonical == "ht") return r.ht;
  if (is_categorical_feature(canonical)) throw Error(Errc::NonNumericFeature, canonical);
  throw Error(Errc::UnknownFeature, canonical);
}

inline std::vector<double> numeric_column(const AttributeTable& table, std::string_view name) {
  const auto c = canonical_feature_name(name);
  if (is_categorical_feature(c)) throw Error(Errc::NonNumericFeature, std::string(name));
  if (!is_numeric_feature(c)) throw Error(Errc::UnknownFeature, std::string(name));
  std::vector<double> out;
  out.reserve(table.size());
  for (const auto& r : table.rows) out.push_back(numeric_value(r, c));
  return out;
}

inline std::optional<std::string> categorical_value(const AttributeRow& r, const std::string& canonical) {
  if (canonical == "roof_color") return r.roof_color;
  if (canonical == "build_type") return r.build_type;
  throw Error(Errc::UnknownFeature, canonical);
}

inline std::vector<int> table_labels(const AttributeTable& table) {
  std::vector<int> y;
  y.reserve(table.size());
  for (const auto& r : table.rows) {
    if (!r.res) throw Error(Errc::MissingLabel, r.uid);
    y.push_back(*r.res);
  }
  return y;
}

// ---------------------------------------------------------------------------
// Correlation and pruning

struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<std::optional<double>> values;  // row-major d x d; nullopt where undefined

  std::size_t dim() const { return names.size(); }
  const std::optional<double>& at(std::size_t i, std::size_t j) const { return values[i * names.size() + j]; }
};

inline std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Pearson matrix over the named numeric columns. Entries touching a
/// zero-variance column are undefined (nullopt), including the diagonal.
inline CorrelationMatrix correlation_matrix(const AttributeTable& table, const std::vector<std::string>& features) {
  if (table.size() < 2) throw Error(Errc::InsufficientRows, std::to_string(table.size()) + " rows");
  std::vector<std::vector<double>> cols;
  for (const auto& f : features) cols.push_back(numeric_column(table, f));
  CorrelationMatrix m;
  m.names = features;
  const std::size_t d = features.size();
  m.values.assign(d * d, std::nullopt);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      std::optional<double> r = pearson(cols[i], cols[j]);
      if (i == j && r) r = 1.0;
      m.values[i * d + j] = r;
      m.values[j * d + i] = r;
    }
  }
  return m;
}

struct PruneResult {
  std::vector<std::string> kept;
  std::vector<std::string> dropped;
};

/// Keep-listed features are retained first; the remaining features are then
/// visited in input order and dropped when |corr| with any retained feature
/// exceeds `threshold`. A feature whose correlation with a retained feature
/// is undefined (zero variance) is dropped as well. Output lists follow the
/// input order.
inline PruneResult prune_features(const CorrelationMatrix& corr, double threshold,
                                  const std::vector<std::string>& keep) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(Errc::InvalidConfig, "threshold must lie in (0, 1], got " + format_double(threshold));
  }
  const std::size_t d = corr.dim();
  std::vector<bool> retained(d, false);
  for (const auto& k : keep) {
    auto it = std::find(corr.names.begin(), corr.names.end(), k);
    if (it == corr.names.end()) throw Error(Errc::UnknownKeepFeature, k);
    retained[static_cast<std::size_t>(it - corr.names.begin())] = true;
  }
  std::vector<bool> is_keep = retained;
  for (std::size_t i = 0; i < d; ++i) {
    if (is_keep[i]) continue;
    bool drop = !corr.at(i, i).has_value();
    for (std::size_t j = 0; j < d && !drop; ++j) {
      if (j == i || !retained[j]) continue;
      const auto& r = corr.at(i, j);
      if (!r || std::abs(*r) > threshold) drop = true;
    }
    retained[i] = !drop;
  }
  PruneResult out;
  for (std::size_t i = 0; i < d; ++i) (retained[i] ? out.kept : out.dropped).push_back(corr.names[i]);
  return out;
}

inline nlohmann::ordered_json correlation_json(const CorrelationMatrix& m) {
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.dim(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t j = 0; j < m.dim(); ++j) {
      const auto& v = m.at(i, j);
      if (v) row.push_back(*v);
      else row.push_back(nullptr);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CorrelationMatrix sub_matrix(const CorrelationMatrix& m, const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    auto it = std::find(m.names.begin(), m.names.end(), n);
    if (it == m.names.end()) throw Error(Errc::UnknownFeature, n);
    idx.push_back(static_cast<std::size_t>(it - m.names.begin()));
  }
  CorrelationMatrix s;
  s.names = names;
  for (auto i : idx) {
    for (auto j : idx) s.values.push_back(m.at(i, j));
  }
  return s;
}

inline std::string eda_report_json(const CorrelationMatrix& corr, const PruneResult& prune, double threshold) {
  nlohmann::ordered_json j;
  j["feature_names"] = corr.names;
  j["correlation"] = correlation_json(corr);
  j["dropped"] = prune.dropped;
  j["kept"] = prune.kept;
  j["threshold"] = threshold;
  j["kept_correlation"] = correlation_json(sub_matrix(corr, prune.kept));
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Encoding

struct FeatureSpec {
  std::vector<std::string> numeric = {"ht", "area_sqft", "nodes"};
  std::vector<std::string> categorical = {"roof_color"};
  bool standardize = true;
};

/// Column layout and standardization fitted on a subset of rows, reusable
/// on any table with the same attributes.
struct FeatureEncoder {
  FeatureSpec spec;
  std::vector<std::vector<std::string>> categories;  // per categorical, first-appearance order
  std::vector<std::string> feature_names;
  std::vector<double> mean;
  std::vector<double> scale;

  std::size_t dim() const { return feature_names.size(); }

  static FeatureEncoder fit(const AttributeTable& table, const FeatureSpec& spec,
                            const std::vector<std::size_t>& fit_indices) {
    if (fit_indices.empty()) throw Error(Errc::EmptyFitSet, "no rows to fit the encoding on");
    FeatureEncoder enc;
    enc.spec = spec;
    for (auto& n : enc.spec.numeric) {
      n = canonical_feature_name(n);
      if (!is_numeric_feature(n)) {
        throw Error(is_categorical_feature(n) ? Errc::NonNumericFeature : Errc::UnknownFeature, n);
      }
      enc.feature_names.push_back(n);
    }
    for (auto& c : enc.spec.categorical) {
      c = canonical_feature_name(c);
      if (!is_categorical_feature(c)) throw Error(Errc::UnknownFeature, c);
      std::vector<std::string> cats;
      for (auto i : fit_indices) {
        if (i >= table.size()) throw Error(Errc::IndexOutOfRange, "fit index " + std::to_string(i));
        auto v = categorical_value(table.rows[i], c);
        if (v && std::find(cats.begin(), cats.end(), *v) == cats.end()) cats.push_back(*v);
      }
      for (const auto& v : cats) enc.feature_names.push_back(c + "=" + v);
      enc.categories.push_back(std::move(cats));
    }
    const std::size_t nnum = enc.spec.numeric.size();
    enc.mean.assign(enc.dim(), 0.0);
    enc.scale.assign(enc.dim(), 1.0);
    if (spec.standardize) {
      const double n = static_cast<double>(fit_indices.size());
      for (std::size_t j = 0; j < nnum; ++j) {
        double m = 0.0;
        for (auto i : fit_indices) m += numeric_value(table.rows[i], enc.spec.numeric[j]);
        m /= n;
        double ss = 0.0;
        for (auto i : fit_indices) {
          const double d = numeric_value(table.rows[i], enc.spec.numeric[j]) - m;
          ss += d * d;
        }
        const double sd = std::sqrt(ss / n);
        enc.mean[j] = m;
        enc.scale[j] = sd > 0.0 ? sd : 1.0;
      }
    }
    return enc;
  }

  Eigen::MatrixXd transform(const AttributeTable& table) const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(dim()));
    x.setZero();
    const std::size_t nnum = spec.numeric.size();
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto& row = table.rows[i];
      const auto r = static_cast<Eigen::Index>(i);
      for (std::size_t j = 0; j < nnum; ++j) {
        x(r, static_cast<Eigen::Index>(j)) = (numeric_value(row, spec.numeric[j]) - mean[j]) / scale[j];
      }
      std::size_t offset = nnum;
      for (std::size_t c = 0; c < spec.categorical.size(); ++c) {
        const auto& cats = categories[c];
        if (auto v = categorical_value(row, spec.categorical[c])) {
          auto it = std::find(cats.begin(), cats.end(), *v);
          if (it != cats.end()) {
            const auto col = offset + static_cast<std::size_t>(it - cats.begin());
            x(r, static_cast<Eigen::Index>(col)) = (1.0 - mean[col]) / scale[col];
          }
        }
        offset += cats.size();
      }
    }
    return x;
  }
};

struct FeatureMatrix {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> feature_names;
  FeatureEncoder encoder;
};

inline FeatureMatrix encode_features(const AttributeTable& table, const FeatureSpec& spec,
                                     const std::vector<std::size_t>& fit_indices) {
  FeatureMatrix fm;
  fm.encoder = FeatureEncoder::fit(table, spec, fit_indices);
  fm.x = fm.encoder.transform(table);
  fm.feature_names = fm.encoder.feature_names;
  const auto labels = table_labels(table);
  fm.y.resize(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) fm.y(static_cast<Eigen::Index>(i)) = labels[i];
  return fm;
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Per class: shuffle, take floor(test*n_c) for test, floor(val*n_c) for val,
/// the remainder for train. Index lists are returned sorted.
inline SplitIndices stratified_split(const std::vector<int>& labels, SplitRatios ratios, std::uint64_t seed) {
  if (ratios.val < 0.0 || ratios.test < 0.0 || ratios.val + ratios.test >= 1.0) {
    throw Error(Errc::InvalidConfig, "val and test ratios must be non-negative and sum below 1");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error(Errc::MissingLabel, "label at row " + std::to_string(i));
    by_class[labels[i]].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < 3) {
      throw Error(Errc::ClassTooSmall, "class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                                           " members (need 3)");
    }
  }
  std::mt19937_64 rng(seed);
  SplitIndices s;
  for (int c = 0; c < 2; ++c) {
    auto& idx = by_class[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    const double n = static_cast<double>(idx.size());
    const auto n_test = static_cast<std::size_t>(std::floor(ratios.test * n + 1e-9));
    const auto n_val = static_cast<std::size_t>(std::floor(ratios.val * n + 1e-9));
    s.test.insert(s.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.val.insert(s.val.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test),
                 idx.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
    s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

}  // namespace bldg
