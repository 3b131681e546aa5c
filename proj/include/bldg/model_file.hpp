#pragma once

// JSON model files: network weights together with the feature encoding
// needed to reproduce the training-time inputs.

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bldg/error.hpp"
#include "bldg/features.hpp"
#include "bldg/neuralnet.hpp"

namespace bldg {

inline constexpr int kModelSchemaVersion = 1;

struct ModelBundle {
  Mlp mlp;
  FeatureEncoder encoder;
  double threshold = 0.5;
  std::uint64_t seed = 0;
};

inline std::string save_model(const ModelBundle& bundle) {
  using json = nlohmann::ordered_json;
  const Mlp& mlp = bundle.mlp;
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["layer_sizes"] = mlp.layer_sizes;
  j["alpha"] = mlp.alpha;
  auto acts = json::array();
  for (auto a : mlp.activations) acts.push_back(std::string(activation_name(a)));
  j["activations"] = std::move(acts);
  auto weights = json::array();
  for (const auto& w : mlp.weights) {
    auto rows = json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      auto row = json::array();
      for (Eigen::Index c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
      rows.push_back(std::move(row));
    }
    weights.push_back(std::move(rows));
  }
  j["weights"] = std::move(weights);
  auto biases = json::array();
  for (const auto& b : mlp.biases) biases.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  j["biases"] = std::move(biases);

  const auto& enc = bundle.encoder;
  json spec;
  spec["numeric"] = enc.spec.numeric;
  spec["categorical"] = enc.spec.categorical;
  spec["categories"] = enc.categories;
  spec["standardize"] = enc.spec.standardize;
  spec["feature_names"] = enc.feature_names;
  j["feature_spec"] = std::move(spec);
  j["standardization"] = {{"mean", enc.mean}, {"std", enc.scale}};
  j["threshold"] = bundle.threshold;
  j["seed"] = bundle.seed;
  return j.dump() + "\n";
}

inline ModelBundle load_model(std::string_view text) {
  using json = nlohmann::json;
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw Error(Errc::CorruptModel, e.what());
  }
  if (!j.is_object() || !j.contains("schema_version")) throw Error(Errc::CorruptModel, "no schema_version");
  if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != kModelSchemaVersion) {
    throw Error(Errc::SchemaMismatch, "schema_version " + j["schema_version"].dump() + ", expected " +
                                          std::to_string(kModelSchemaVersion));
  }
  ModelBundle out;
  try {
    Mlp& mlp = out.mlp;
    mlp.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    validate_ladder(mlp.layer_sizes);
    mlp.alpha = j.at("alpha").get<double>();
    for (const auto& a : j.at("activations")) {
      const auto name = a.get<std::string>();
      if (name == "leaky_relu") mlp.activations.push_back(Activation::leaky_relu);
      else if (name == "relu") mlp.activations.push_back(Activation::relu);
      else if (name == "sigmoid") mlp.activations.push_back(Activation::sigmoid);
      else throw Error(Errc::CorruptModel, "unknown activation '" + name + "'");
    }
    const std::size_t layers = mlp.layer_sizes.size() - 1;
    const auto& jw = j.at("weights");
    const auto& jb = j.at("biases");
    if (mlp.activations.size() != layers || jw.size() != layers || jb.size() != layers) {
      throw Error(Errc::CorruptModel, "layer count disagrees with layer_sizes");
    }
    for (std::size_t i = 0; i < layers; ++i) {
      const int fan_in = mlp.layer_sizes[i], fan_out = mlp.layer_sizes[i + 1];
      const auto& rows = jw[i];
      if (!rows.is_array() || rows.size() != static_cast<std::size_t>(fan_in)) {
        throw Error(Errc::CorruptModel, "weight " + std::to_string(i) + " has the wrong row count");
      }
      Matrix w(fan_in, fan_out);
      for (int r = 0; r < fan_in; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        if (!row.is_array() || row.size() != static_cast<std::size_t>(fan_out)) {
          throw Error(Errc::CorruptModel, "weight " + std::to_string(i) + " has the wrong column count");
        }
        for (int c = 0; c < fan_out; ++c) w(r, c) = row[static_cast<std::size_t>(c)].get<double>();
      }
      const auto b = jb[i].get<std::vector<double>>();
      if (b.size() != static_cast<std::size_t>(fan_out)) {
        throw Error(Errc::CorruptModel, "bias " + std::to_string(i) + " has the wrong length");
      }
      mlp.weights.push_back(std::move(w));
      mlp.biases.push_back(Eigen::Map<const RowVector>(b.data(), fan_out));
    }

    FeatureEncoder& enc = out.encoder;
    const auto& spec = j.at("feature_spec");
    enc.spec.numeric = spec.at("numeric").get<std::vector<std::string>>();
    enc.spec.categorical = spec.at("categorical").get<std::vector<std::string>>();
    enc.spec.standardize = spec.at("standardize").get<bool>();
    enc.categories = spec.at("categories").get<std::vector<std::vector<std::string>>>();
    enc.feature_names = spec.at("feature_names").get<std::vector<std::string>>();
    enc.mean = j.at("standardization").at("mean").get<std::vector<double>>();
    enc.scale = j.at("standardization").at("std").get<std::vector<double>>();
    if (enc.categories.size() != enc.spec.categorical.size() || enc.mean.size() != enc.dim() ||
        enc.scale.size() != enc.dim() || static_cast<int>(enc.dim()) != mlp.input_dim()) {
      throw Error(Errc::CorruptModel, "feature_spec does not match the input layer");
    }
    out.threshold = j.value("threshold", 0.5);
    out.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw Error(Errc::CorruptModel, e.what());
  }
  return out;
}

}  // namespace bldg
