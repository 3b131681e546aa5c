#pragma once

// Command-line front end: extract -> analyze -> train -> predict -> evaluate,
// plus synth. Each command returns a process exit code.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bldg/error.hpp"
#include "bldg/features.hpp"
#include "bldg/geodata_io.hpp"
#include "bldg/model_file.hpp"
#include "bldg/neuralnet.hpp"
#include "bldg/synth.hpp"
#include "bldg/text.hpp"
#include "bldg/trainer.hpp"

namespace bldg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitDiverged = 2;

inline const std::vector<std::string>& default_analysis_features() {
  static const std::vector<std::string> f = {"zonal_mean", "floor", "ht", "area_sqft", "area_sqm", "nodes"};
  return f;
}

/// Everything a run can be configured with. Unknown JSON keys are rejected.
struct RunConfig {
  TrainConfig train;
  double leaky_alpha = kDefaultLeakySlope;
  std::vector<int> hidden_layers = {1024, 512, 128, 64, 32, 16, 8};
  FeatureSpec features;
  SplitRatios split;
  ExtractConfig extract;
  double prune_threshold = 0.9;
  std::vector<std::string> keep = {"ht", "area_sqft"};
  std::vector<std::string> analysis_features = default_analysis_features();

  std::vector<int> layer_sizes(int d_in) const {
    std::vector<int> s = {d_in};
    s.insert(s.end(), hidden_layers.begin(), hidden_layers.end());
    s.push_back(1);
    return s;
  }
};

inline RunConfig parse_run_config(std::string_view text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, e.what());
  }
  if (!j.is_object()) throw Error(Errc::InvalidConfig, "config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "learning_rate") c.train.learning_rate = v.get<double>();
      else if (key == "batch_size") c.train.batch_size = v.get<int>();
      else if (key == "max_epochs") c.train.max_epochs = v.get<int>();
      else if (key == "patience") c.train.patience = v.get<int>();
      else if (key == "threshold") c.train.threshold = v.get<double>();
      else if (key == "seed") c.train.seed = v.get<std::uint64_t>();
      else if (key == "beta1") c.train.beta1 = v.get<double>();
      else if (key == "beta2") c.train.beta2 = v.get<double>();
      else if (key == "epsilon") c.train.epsilon = v.get<double>();
      else if (key == "bias_correction") c.train.bias_correction = v.get<bool>();
      else if (key == "monitor") {
        auto m = parse_monitor(v.get<std::string>());
        if (!m) throw Error(Errc::InvalidConfig, "unknown monitor '" + v.get<std::string>() + "'");
        c.train.monitor = *m;
      } else if (key == "leaky_alpha") c.leaky_alpha = v.get<double>();
      else if (key == "hidden_layers") c.hidden_layers = v.get<std::vector<int>>();
      else if (key == "numeric_features") c.features.numeric = v.get<std::vector<std::string>>();
      else if (key == "categorical_features") c.features.categorical = v.get<std::vector<std::string>>();
      else if (key == "standardize") c.features.standardize = v.get<bool>();
      else if (key == "val_ratio") c.split.val = v.get<double>();
      else if (key == "test_ratio") c.split.test = v.get<double>();
      else if (key == "ground_elev") c.extract.ground_elev = v.get<double>();
      else if (key == "floor_height") c.extract.floor_height = v.get<double>();
      else if (key == "floor_source") {
        const auto s = v.get<std::string>();
        if (s == "zonal_mean") c.extract.floor_source = FloorSource::zonal_mean;
        else if (s == "ht") c.extract.floor_source = FloorSource::ht;
        else throw Error(Errc::InvalidConfig, "floor_source must be zonal_mean or ht");
      } else if (key == "prune_threshold") c.prune_threshold = v.get<double>();
      else if (key == "keep") c.keep = v.get<std::vector<std::string>>();
      else if (key == "analysis_features") c.analysis_features = v.get<std::vector<std::string>>();
      else throw Error(Errc::InvalidConfig, "unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, e.what());
  }
  return c;
}

inline void validate_run_config(const RunConfig& c) {
  c.train.validate();
  if (!(c.leaky_alpha > 0.0 && c.leaky_alpha < 1.0)) throw Error(Errc::InvalidConfig, "leaky_alpha must lie in (0, 1)");
  if (!(c.extract.floor_height > 0.0)) throw Error(Errc::InvalidConfig, "floor_height must be positive");
  if (c.hidden_layers.empty()) throw Error(Errc::InvalidConfig, "hidden_layers must not be empty");
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Reads a JSON/CSV output back; throws if it does not parse.
inline void verify_json_file(const std::string& path) { auto j = nlohmann::json::parse(read_file(path)); (void)j; }
inline void verify_csv_file(const std::string& path) { (void)parse_csv(read_file(path)); }

inline std::string predicted_class_name(int label) {
  return std::string(class_name(label == 1 ? BuildingClass::residential : BuildingClass::non_residential));
}

inline std::optional<int> parse_class_name(const std::string& s) {
  if (s == "residential") return 1;
  if (s == "non_residential") return 0;
  return parse_label_text(s);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// extract

struct ExtractArgs {
  std::string dem_path;
  std::string footprints_path;
  std::string out_csv;
  ExtractConfig config;
};

inline int cmd_extract(const ExtractArgs& a, std::ostream& out, std::ostream& err) {
  try {
    const DemGrid grid = parse_ascii_grid(read_file(a.dem_path));
    const auto footprints = parse_footprints(read_file(a.footprints_path));
    const ExtractResult res = build_attribute_table(grid, footprints, a.config);
    for (const auto& e : res.errors) err << "warning: skipped " << e.uid << ": " << e.message << "\n";
    write_file(a.out_csv, write_feature_csv(res.table));
    (void)read_feature_csv(read_file(a.out_csv));
    out << "extracted " << res.table.size() << " of " << footprints.size() << " buildings";
    if (!res.errors.empty()) out << " (" << res.errors.size() << " skipped)";
    out << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::string features_csv;
  std::string out_json;
  double threshold = 0.9;
  std::vector<std::string> keep = {"ht", "area_sqft"};
  std::vector<std::string> columns = default_analysis_features();
};

inline int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  try {
    const AttributeTable table = read_feature_csv(read_file(a.features_csv));
    const CorrelationMatrix corr = correlation_matrix(table, a.columns);
    const PruneResult pr = prune_features(corr, a.threshold, a.keep);
    write_file(a.out_json, eda_report_json(corr, pr, a.threshold));
    detail::verify_json_file(a.out_json);
    out << "kept:";
    for (const auto& k : pr.kept) out << " " << k;
    out << "\ndropped:";
    for (const auto& d : pr.dropped) out << " " << d;
    out << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string features_csv;
  std::string out_model;
  std::string out_metrics;
  std::string out_history;
  RunConfig config;
};

inline int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  try {
    validate_run_config(a.config);
    const RunConfig& c = a.config;
    const AttributeTable table = read_feature_csv(read_file(a.features_csv));
    const SplitIndices split = stratified_split(table_labels(table), c.split, c.train.seed);
    const FeatureMatrix fm = encode_features(table, c.features, split.train);
    Mlp mlp = init_mlp(c.layer_sizes(static_cast<int>(fm.encoder.dim())), c.leaky_alpha, c.train.seed);
    OptimizerState state = OptimizerState::create(mlp, c.train.adam());
    TrainResult result = train(std::move(mlp), state, fm, split, c.train);

    if (split.test.empty()) throw Error(Errc::EmptySplit, "test split is empty");
    const ClassificationReport test = evaluate(result.best, gather_rows(fm.x, split.test), gather(fm.y, split.test),
                                               c.train.threshold);
    write_file(a.out_model, save_model({result.best, fm.encoder, c.train.threshold, c.train.seed}));
    write_file(a.out_metrics, metrics_json(test, c.train.seed));
    write_file(a.out_history, history_csv(result.history));
    (void)load_model(read_file(a.out_model));
    detail::verify_json_file(a.out_metrics);
    detail::verify_csv_file(a.out_history);
    out << "best epoch " << result.history.best_epoch << " (stopped at " << result.history.stopped_epoch
        << "), test weighted F1 " << format_double(test.weighted_avg.f1) << "\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::DivergedLoss ? kExitDiverged : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
  std::string model_json;
  std::string features_csv;     // CSV mode
  std::string footprints_path;  // GeoJSON mode, with dem_path
  std::string dem_path;
  std::string out;
  std::optional<double> threshold;
  ExtractConfig extract;
};

inline int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream& err) {
  try {
    const ModelBundle model = load_model(read_file(a.model_json));
    const double threshold = a.threshold.value_or(model.threshold);
    if (!(threshold > 0.0 && threshold < 1.0)) throw Error(Errc::InvalidConfig, "threshold must lie in (0, 1)");

    if (!a.features_csv.empty()) {
      const CsvDocument doc = parse_csv(read_file(a.features_csv));
      for (const auto& f : model.encoder.spec.numeric) {
        if (!doc.column(csv_column_name(f))) throw Error(Errc::UnknownFeature, "input lacks model feature column '" + csv_column_name(f) + "'");
      }
      for (const auto& f : model.encoder.spec.categorical) {
        if (!doc.column(csv_column_name(f))) throw Error(Errc::UnknownFeature, "input lacks model feature column '" + csv_column_name(f) + "'");
      }
      const AttributeTable table = table_from_csv(doc, false);
      const PredictionSet p = predict(model.mlp, model.encoder.transform(table), threshold);
      std::string csv;
      std::vector<std::string> header = doc.header;
      header.push_back("pred_prob");
      header.push_back("pred_class");
      append_csv_row(csv, header);
      for (std::size_t i = 0; i < doc.rows.size(); ++i) {
        auto fields = doc.rows[i];
        fields.push_back(format_double(p.probabilities(static_cast<Eigen::Index>(i))));
        fields.push_back(std::string(class_name(p.classes[i])));
        append_csv_row(csv, fields);
      }
      write_file(a.out, csv);
      detail::verify_csv_file(a.out);
      out << "predicted " << doc.rows.size() << " rows\n";
      return kExitOk;
    }

    if (a.footprints_path.empty() || a.dem_path.empty()) {
      throw Error(Errc::InvalidConfig, "predict needs --features, or --footprints together with --dem");
    }
    const DemGrid grid = parse_ascii_grid(read_file(a.dem_path));
    const auto footprints = parse_footprints(read_file(a.footprints_path));
    const ExtractResult res = build_attribute_table(grid, footprints, a.extract);
    for (const auto& e : res.errors) err << "warning: skipped " << e.uid << ": " << e.message << "\n";
    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < res.table.size(); ++i) row_of[res.table.rows[i].uid] = i;
    const PredictionSet p = predict(model.mlp, model.encoder.transform(res.table), threshold);
    std::vector<FootprintRecord> kept;
    std::vector<Prediction> labels;
    for (const auto& rec : footprints) {
      auto it = row_of.find(rec.uid);
      if (it == row_of.end()) continue;
      kept.push_back(rec);
      labels.push_back({p.probabilities(static_cast<Eigen::Index>(it->second)), p.classes[it->second]});
    }
    write_file(a.out, write_predictions(kept, labels));
    (void)parse_footprints(read_file(a.out));
    out << "predicted " << kept.size() << " of " << footprints.size() << " footprints\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string predictions_csv;
  std::string labels_csv;  // empty: use the res column of the predictions
  std::string out_json;
};

inline int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  try {
    const CsvDocument pred = parse_csv(read_file(a.predictions_csv));
    const auto uid_col = pred.column("UID");
    const auto class_col = pred.column("pred_class");
    if (!uid_col || !class_col) throw Error(Errc::MalformedCsv, "predictions need UID and pred_class columns");
    const auto prob_col = pred.column("pred_prob");

    std::unordered_map<std::string, int> truth;
    auto load_labels = [&](const CsvDocument& doc, const std::string& source) {
      const auto u = doc.column("UID");
      const auto r = doc.column("res");
      if (!u || !r) throw Error(Errc::MalformedCsv, source + " needs UID and res columns");
      for (const auto& row : doc.rows) {
        auto l = parse_label_text(row[*r]);
        if (!l) throw Error(Errc::MissingLabel, row[*u]);
        if (!truth.emplace(row[*u], *l).second) throw Error(Errc::DuplicateUid, row[*u]);
      }
    };
    if (a.labels_csv.empty()) load_labels(pred, "predictions");
    else load_labels(parse_csv(read_file(a.labels_csv)), "labels");

    std::vector<int> y_true, y_pred;
    Vector prob(static_cast<Eigen::Index>(pred.rows.size()));
    std::set<std::string> seen;
    for (std::size_t i = 0; i < pred.rows.size(); ++i) {
      const auto& row = pred.rows[i];
      const std::string& uid = row[*uid_col];
      if (!seen.insert(uid).second) throw Error(Errc::DuplicateUid, uid);
      auto t = truth.find(uid);
      if (t == truth.end()) throw Error(Errc::LengthMismatch, "uid '" + uid + "' has no label");
      auto c = detail::parse_class_name(row[*class_col]);
      if (!c) throw Error(Errc::MalformedCsv, "uid '" + uid + "' pred_class '" + row[*class_col] + "'");
      y_true.push_back(t->second);
      y_pred.push_back(*c);
      double pv = *c;
      if (prob_col) {
        auto v = parse_double(row[*prob_col]);
        if (!v) throw Error(Errc::MalformedCsv, "uid '" + uid + "' pred_prob");
        pv = *v;
      }
      prob(static_cast<Eigen::Index>(i)) = pv;
    }
    Vector yt(static_cast<Eigen::Index>(y_true.size()));
    for (std::size_t i = 0; i < y_true.size(); ++i) yt(static_cast<Eigen::Index>(i)) = y_true[i];
    const ClassificationReport rep =
        classification_report(y_true, y_pred, y_true.empty() ? 0.0 : bce_loss(prob, yt));
    write_file(a.out_json, metrics_json(rep));
    detail::verify_json_file(a.out_json);
    out << "accuracy " << format_double(rep.accuracy) << ", weighted F1 " << format_double(rep.weighted_avg.f1)
        << ", non-residential F1 " << format_double(rep.non_residential.f1) << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  SynthConfig config;
  std::string out_csv;
  std::string oracle_csv;    // optional UID,res of the planted rule
  std::string scene_prefix;  // optional: <prefix>.asc and <prefix>.geojson
};

inline int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  try {
    const SynthResult s = generate(a.config);
    write_file(a.out_csv, write_feature_csv(s.table));
    (void)read_feature_csv(read_file(a.out_csv));
    if (!a.oracle_csv.empty()) {
      std::string csv = "UID,res\n";
      for (std::size_t i = 0; i < s.table.size(); ++i) {
        append_csv_row(csv, {s.table.rows[i].uid, std::to_string(s.oracle[i])});
      }
      write_file(a.oracle_csv, csv);
      detail::verify_csv_file(a.oracle_csv);
    }
    if (!a.scene_prefix.empty()) {
      const SceneResult scene =
          rasterize_synthetic_scene(scene_from_table(s.table, 1.0, a.config.ground_elev));
      write_file(a.scene_prefix + ".asc", write_ascii_grid(scene.grid));
      write_file(a.scene_prefix + ".geojson", write_footprints(scene.footprints));
      (void)parse_ascii_grid(read_file(a.scene_prefix + ".asc"));
      (void)parse_footprints(read_file(a.scene_prefix + ".geojson"));
    }
    long long minority = 0;
    for (const auto& r : s.table.rows) minority += r.res == 0;
    out << "wrote " << s.table.size() << " rows (" << minority << " non-residential), seed " << a.config.seed
        << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

// ---------------------------------------------------------------------------
// Argument parsing

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Residential / non-residential building classification from DEM rasters and footprints"};
  app.require_subcommand(1);

  // extract
  ExtractArgs ex;
  std::string ex_floor_source = "zonal_mean";
  auto* extract = app.add_subcommand("extract", "Derive the per-building feature CSV from a DEM and footprints");
  extract->add_option("--dem", ex.dem_path, "ESRI ASCII Grid DEM")->required();
  extract->add_option("--footprints", ex.footprints_path, "GeoJSON FeatureCollection of footprints")->required();
  extract->add_option("--out", ex.out_csv, "Output feature CSV")->required();
  extract->add_option("--ground-elev", ex.config.ground_elev, "Ground elevation subtracted for ht (m)")
      ->capture_default_str();
  extract->add_option("--floor-height", ex.config.floor_height, "Storey height (m)")->capture_default_str();
  extract->add_option("--floor-source", ex_floor_source, "zonal_mean or ht")
      ->check(CLI::IsMember({"zonal_mean", "ht"}))
      ->capture_default_str();

  // analyze
  AnalyzeArgs an;
  std::string an_keep = "ht,area_sqft";
  std::string an_columns = "zonal_mean,floor,ht,area_sqft,area_sqm,nodes";
  auto* analyze = app.add_subcommand("analyze", "Correlation matrix and correlated-feature pruning");
  analyze->add_option("--features", an.features_csv, "Feature CSV")->required();
  analyze->add_option("--out", an.out_json, "Output EDA report JSON")->required();
  analyze->add_option("--threshold", an.threshold, "Drop when |corr| exceeds this")->capture_default_str();
  analyze->add_option("--keep", an_keep, "Comma-separated features never dropped")->capture_default_str();
  analyze->add_option("--columns", an_columns, "Comma-separated features to analyze")->capture_default_str();

  // train
  TrainArgs tr;
  std::string tr_config;
  std::optional<std::uint64_t> tr_seed;
  std::optional<double> tr_lr;
  std::optional<int> tr_batch, tr_epochs, tr_patience;
  auto* train_cmd = app.add_subcommand(
      "train",
      "Train the classifier. Precedence: built-in defaults < --config file < command-line flags.\n"
      "Defaults: learning_rate 0.001, batch_size 8, max_epochs 500, patience 50, threshold 0.5,\n"
      "LeakyReLU slope 0.01, AMSGrad beta1 0.9 beta2 0.999 epsilon 1e-7, split 80/10/10, seed 42,\n"
      "hidden layers 1024,512,128,64,32,16,8, features ht,area_sqft,nodes + roof_color one-hot.");
  train_cmd->add_option("--features", tr.features_csv, "Labelled feature CSV")->required();
  train_cmd->add_option("--config", tr_config, "RunConfig JSON");
  train_cmd->add_option("--model", tr.out_model, "Output model JSON")->required();
  train_cmd->add_option("--metrics", tr.out_metrics, "Output test-split metrics JSON")->required();
  train_cmd->add_option("--history", tr.out_history, "Output per-epoch history CSV")->required();
  train_cmd->add_option("--seed", tr_seed, "Seed for split, init and shuffling");
  train_cmd->add_option("--learning-rate", tr_lr, "Learning rate");
  train_cmd->add_option("--batch-size", tr_batch, "Mini-batch size");
  train_cmd->add_option("--max-epochs", tr_epochs, "Epoch limit");
  train_cmd->add_option("--patience", tr_patience, "Early-stopping patience");

  // predict
  PredictArgs pr;
  std::optional<double> pr_threshold;
  auto* predict_cmd = app.add_subcommand("predict", "Apply a trained model to a feature CSV or to footprints + DEM");
  predict_cmd->add_option("--model", pr.model_json, "Model JSON")->required();
  predict_cmd->add_option("--features", pr.features_csv, "Feature CSV (CSV in, CSV out)");
  predict_cmd->add_option("--footprints", pr.footprints_path, "GeoJSON footprints (GeoJSON out)");
  predict_cmd->add_option("--dem", pr.dem_path, "ASCII Grid DEM used with --footprints");
  predict_cmd->add_option("--out", pr.out, "Output path")->required();
  predict_cmd->add_option("--threshold", pr_threshold, "Decision threshold (default: the model's)");
  predict_cmd->add_option("--ground-elev", pr.extract.ground_elev, "Ground elevation (m)")->capture_default_str();
  predict_cmd->add_option("--floor-height", pr.extract.floor_height, "Storey height (m)")->capture_default_str();

  // evaluate
  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand(
      "evaluate", "Classification report for a predictions CSV; every prediction UID must have a label");
  evaluate_cmd->add_option("--predictions", ev.predictions_csv, "Predictions CSV (UID, pred_class, pred_prob)")
      ->required();
  evaluate_cmd->add_option("--labels", ev.labels_csv, "CSV with UID,res (default: res column of predictions)");
  evaluate_cmd->add_option("--out", ev.out_json, "Output metrics JSON")->required();

  // synth
  SynthArgs sy;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labelled dataset");
  synth_cmd->add_option("--n", sy.config.n, "Number of buildings")->capture_default_str();
  synth_cmd->add_option("--imbalance", sy.config.minority_fraction, "Non-residential fraction")
      ->capture_default_str();
  synth_cmd->add_option("--seed", sy.config.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--noise", sy.config.noise_rate, "Label flip probability")->capture_default_str();
  synth_cmd->add_option("--out", sy.out_csv, "Output feature CSV")->required();
  synth_cmd->add_option("--oracle-out", sy.oracle_csv, "Output UID,res of the noise-free planted rule");
  synth_cmd->add_option("--scene", sy.scene_prefix, "Also write <prefix>.asc and <prefix>.geojson");
  synth_cmd->add_option("--ground-elev", sy.config.ground_elev, "Ground elevation (m)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitFailure;
  }

  if (extract->parsed()) {
    ex.config.floor_source = ex_floor_source == "ht" ? FloorSource::ht : FloorSource::zonal_mean;
    return cmd_extract(ex, out, err);
  }
  if (analyze->parsed()) {
    an.keep = detail::split_list(an_keep);
    an.columns = detail::split_list(an_columns);
    return cmd_analyze(an, out, err);
  }
  if (train_cmd->parsed()) {
    try {
      if (!tr_config.empty()) tr.config = parse_run_config(read_file(tr_config));
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitFailure;
    }
    if (tr_seed) tr.config.train.seed = *tr_seed;
    if (tr_lr) tr.config.train.learning_rate = *tr_lr;
    if (tr_batch) tr.config.train.batch_size = *tr_batch;
    if (tr_epochs) tr.config.train.max_epochs = *tr_epochs;
    if (tr_patience) tr.config.train.patience = *tr_patience;
    return cmd_train(tr, out, err);
  }
  if (predict_cmd->parsed()) {
    pr.threshold = pr_threshold;
    return cmd_predict(pr, out, err);
  }
  if (evaluate_cmd->parsed()) return cmd_evaluate(ev, out, err);
  if (synth_cmd->parsed()) return cmd_synth(sy, out, err);
  return kExitFailure;
}

}  // namespace bldg
