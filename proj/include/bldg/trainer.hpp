#pragma once

// Mini-batch training with validation-F1 early stopping, plus the
// precision/recall/F1 reporting used for evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#if defined(__SSE__) || defined(_M_X64)
#include <xmmintrin.h>
#endif

#include "bldg/error.hpp"
#include "bldg/features.hpp"
#include "bldg/geodata_io.hpp"
#include "bldg/neuralnet.hpp"
#include "bldg/text.hpp"

namespace bldg {

// ---------------------------------------------------------------------------
// Metrics

/// Harmonic mean; 0 when precision + recall == 0.
inline double f1_score(double precision, double recall) {
  const double denom = precision + recall;
  return denom == 0.0 ? 0.0 : 2.0 * (precision * recall) / denom;
}

inline double accuracy(long long correct, long long total) {
  if (total <= 0) throw Error(Errc::EmptySet, "accuracy over an empty set");
  if (correct < 0 || correct > total) throw Error(Errc::InvalidConfig, "correct must lie in [0, total]");
  return static_cast<double>(correct) / static_cast<double>(total);
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long support = 0;
};

/// Residential (label 1) is the positive class. confusion[true][pred] with
/// index 0 = non-residential, i.e. [[TN, FP], [FN, TP]].
struct ClassificationReport {
  ClassMetrics non_residential;
  ClassMetrics residential;
  double accuracy = 0.0;
  ClassMetrics macro_avg;
  ClassMetrics weighted_avg;
  long long confusion[2][2] = {{0, 0}, {0, 0}};
  double loss = 0.0;

  long long total() const { return non_residential.support + residential.support; }
};

inline ClassificationReport classification_report(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                                  double loss) {
  if (y_true.size() != y_pred.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(y_true.size()) + " labels vs " +
                                          std::to_string(y_pred.size()) + " predictions");
  }
  if (y_true.empty()) throw Error(Errc::EmptySet, "no rows to evaluate");
  ClassificationReport rep;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) throw Error(Errc::InvalidConfig, "labels must be 0 or 1");
    rep.confusion[t][p] += 1;
  }
  auto class_metrics = [&](int c) {
    ClassMetrics m;
    const long long tp = rep.confusion[c][c];
    const long long predicted = rep.confusion[0][c] + rep.confusion[1][c];
    m.support = rep.confusion[c][0] + rep.confusion[c][1];
    m.precision = predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
    m.recall = m.support == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(m.support);
    m.f1 = f1_score(m.precision, m.recall);
    return m;
  };
  rep.non_residential = class_metrics(0);
  rep.residential = class_metrics(1);
  const long long n = static_cast<long long>(y_true.size());
  rep.accuracy = accuracy(rep.confusion[0][0] + rep.confusion[1][1], n);
  const auto& a = rep.non_residential;
  const auto& b = rep.residential;
  rep.macro_avg = {(a.precision + b.precision) / 2.0, (a.recall + b.recall) / 2.0, (a.f1 + b.f1) / 2.0, n};
  const double na = static_cast<double>(a.support), nb = static_cast<double>(b.support);
  const double nn = static_cast<double>(n);
  rep.weighted_avg = {(a.precision * na + b.precision * nb) / nn, (a.recall * na + b.recall * nb) / nn,
                      (a.f1 * na + b.f1 * nb) / nn, n};
  rep.loss = loss;
  return rep;
}

inline std::string metrics_json(const ClassificationReport& rep, std::optional<std::uint64_t> seed = std::nullopt) {
  using json = nlohmann::ordered_json;
  auto cls = [](const ClassMetrics& m) {
    json j;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["support"] = m.support;
    return j;
  };
  json j;
  j["classes"]["non_residential"] = cls(rep.non_residential);
  j["classes"]["residential"] = cls(rep.residential);
  j["accuracy"] = rep.accuracy;
  j["macro_avg"] = cls(rep.macro_avg);
  j["weighted_avg"] = cls(rep.weighted_avg);
  j["confusion_matrix"] = {{rep.confusion[0][0], rep.confusion[0][1]}, {rep.confusion[1][0], rep.confusion[1][1]}};
  j["loss"] = rep.loss;
  if (seed) j["seed"] = *seed;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Configuration

enum class Monitor { weighted_f1, macro_f1, residential_f1, non_residential_f1 };

inline std::string_view monitor_name(Monitor m) {
  switch (m) {
    case Monitor::weighted_f1: return "weighted_f1";
    case Monitor::macro_f1: return "macro_f1";
    case Monitor::residential_f1: return "residential_f1";
    case Monitor::non_residential_f1: return "non_residential_f1";
  }
  return "";
}

inline std::optional<Monitor> parse_monitor(std::string_view s) {
  for (auto m : {Monitor::weighted_f1, Monitor::macro_f1, Monitor::residential_f1, Monitor::non_residential_f1}) {
    if (monitor_name(m) == s) return m;
  }
  return std::nullopt;
}

inline double monitored_value(const ClassificationReport& rep, Monitor m) {
  switch (m) {
    case Monitor::weighted_f1: return rep.weighted_avg.f1;
    case Monitor::macro_f1: return rep.macro_avg.f1;
    case Monitor::residential_f1: return rep.residential.f1;
    case Monitor::non_residential_f1: return rep.non_residential.f1;
  }
  return 0.0;
}

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 8;
  int max_epochs = 500;
  int patience = 50;
  double threshold = 0.5;
  Monitor monitor = Monitor::weighted_f1;
  std::uint64_t seed = 42;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  bool bias_correction = true;

  AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon, bias_correction}; }

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(Errc::InvalidConfig, m); };
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be >= 0");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (max_epochs < 1) fail("max_epochs must be >= 1");
    if (patience < 1) fail("patience must be >= 1");
    if (!(threshold > 0.0 && threshold < 1.0)) fail("threshold must lie in (0, 1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("betas must lie in [0, 1)");
    if (!(epsilon > 0.0)) fail("epsilon must be > 0");
  }
};

// ---------------------------------------------------------------------------
// Early stopping

/// Tracks the best monitored value; improvement is strict. should_stop()
/// turns true once `patience` consecutive epochs pass without improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  // Returns true when `value` is a new best.
  bool update(int epoch, double value) {
    if (value > best_) {
      best_ = value;
      best_epoch_ = epoch;
      wait_ = 0;
      return true;
    }
    ++wait_;
    return false;
  }

  bool should_stop() const { return wait_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }

 private:
  int patience_;
  int wait_ = 0;
  int best_epoch_ = -1;
  double best_ = -std::numeric_limits<double>::infinity();
};

// ---------------------------------------------------------------------------
// Training

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_f1 = 0.0;  // monitored F1 over the epoch's pre-update batch predictions
  double val_f1 = 0.0;    // monitored F1 on the full validation set
  double val_weighted_f1 = 0.0;
  double val_non_residential_f1 = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  int stopped_epoch = -1;
};

struct TrainResult {
  Mlp best;
  TrainHistory history;
};

inline std::vector<int> threshold_labels(const Vector& prob, double threshold) {
  std::vector<int> out(static_cast<std::size_t>(prob.size()));
  for (Eigen::Index i = 0; i < prob.size(); ++i) out[static_cast<std::size_t>(i)] = prob(i) >= threshold ? 1 : 0;
  return out;
}

inline std::vector<int> to_labels(const Vector& y) {
  std::vector<int> out(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) out[static_cast<std::size_t>(i)] = y(i) >= 0.5 ? 1 : 0;
  return out;
}

inline Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

inline Vector gather(const Vector& y, const std::vector<std::size_t>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(idx[i]));
  return out;
}

namespace detail {

// Once the loss is near zero, gradients and the decaying Adam moments sink
// into subnormal range, which is very slow on x86. Flush them to zero while
// training and put the caller's mode back afterwards.
class FlushDenormals {
 public:
#if defined(__SSE__) || defined(_M_X64)
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~FlushDenormals() { _mm_setcsr(saved_); }
#else
  FlushDenormals() = default;
#endif
  FlushDenormals(const FlushDenormals&) = delete;
  FlushDenormals& operator=(const FlushDenormals&) = delete;

 private:
  unsigned int saved_ = 0;
};

}  // namespace detail

/// Evaluates `mlp` on the given rows at `threshold`; loss is the mean BCE.
inline ClassificationReport evaluate(const Mlp& mlp, const Matrix& x, const Vector& y, double threshold) {
  const Vector p = predict_proba(mlp, x);
  return classification_report(to_labels(y), threshold_labels(p, threshold), bce_loss(p, y));
}

/// Trains in place on the split's train rows and returns the snapshot from
/// the epoch with the best monitored validation F1.
inline TrainResult train(Mlp mlp, OptimizerState& state, const FeatureMatrix& data, const SplitIndices& split,
                         const TrainConfig& cfg) {
  cfg.validate();
  const detail::FlushDenormals ftz;
  if (split.train.empty() || split.val.empty()) throw Error(Errc::EmptySplit, "train and val splits must be nonempty");
  if (data.x.cols() != mlp.input_dim()) {
    throw Error(Errc::ShapeMismatch, "feature matrix has " + std::to_string(data.x.cols()) +
                                         " columns, model expects " + std::to_string(mlp.input_dim()));
  }
  const auto n = static_cast<std::size_t>(data.x.rows());
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (auto i : *part) {
      if (i >= n) throw Error(Errc::IndexOutOfRange, "split index " + std::to_string(i));
    }
  }

  const Matrix x_val = gather_rows(data.x, split.val);
  const Vector y_val = gather(data.y, split.val);
  const std::vector<int> val_true = to_labels(y_val);

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order = split.train;
  EarlyStopping stopper(cfg.patience);
  TrainResult result;
  result.best = mlp;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  std::vector<int> train_true, train_pred;
  train_true.reserve(order.size());
  train_pred.reserve(order.size());

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    train_true.clear();
    train_pred.clear();
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
      const Matrix xb = gather_rows(data.x, idx);
      const Vector yb = gather(data.y, idx);
      const ForwardTrace trace = forward(mlp, xb);
      const double loss = bce_loss(trace.y_hat, yb);
      if (!std::isfinite(loss) || !trace.y_hat.allFinite()) {
        throw Error(Errc::DivergedLoss, "epoch " + std::to_string(epoch) + " batch at " + std::to_string(start));
      }
      loss_sum += loss * static_cast<double>(idx.size());
      for (Eigen::Index i = 0; i < yb.size(); ++i) {
        train_true.push_back(yb(i) >= 0.5 ? 1 : 0);
        train_pred.push_back(trace.y_hat(i) >= cfg.threshold ? 1 : 0);
      }
      try {
        amsgrad_step(mlp, backward(mlp, trace, yb), state);
      } catch (const Error& e) {
        if (e.code() != Errc::NonFiniteGradient) throw;
        throw Error(Errc::DivergedLoss, "epoch " + std::to_string(epoch) + ": " + e.what());
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_f1 = monitored_value(classification_report(train_true, train_pred, rec.train_loss), cfg.monitor);
    const ClassificationReport val = evaluate(mlp, x_val, y_val, cfg.threshold);
    if (!std::isfinite(val.loss)) throw Error(Errc::DivergedLoss, "validation loss at epoch " + std::to_string(epoch));
    rec.val_loss = val.loss;
    rec.val_f1 = monitored_value(val, cfg.monitor);
    rec.val_weighted_f1 = val.weighted_avg.f1;
    rec.val_non_residential_f1 = val.non_residential.f1;
    result.history.epochs.push_back(rec);

    if (stopper.update(epoch, rec.val_f1)) result.best = mlp;
    result.history.stopped_epoch = epoch;
    if (stopper.should_stop()) break;
  }
  result.history.best_epoch = stopper.best_epoch();
  return result;
}

inline std::string history_csv(const TrainHistory& h) {
  std::string out = "epoch,train_loss,val_loss,train_f1,val_f1\n";
  for (const auto& e : h.epochs) {
    append_csv_row(out, {std::to_string(e.epoch), format_double(e.train_loss), format_double(e.val_loss),
                         format_double(e.train_f1), format_double(e.val_f1)});
  }
  return out;
}

struct PredictionSet {
  Vector probabilities;
  std::vector<BuildingClass> classes;
};

/// Residential iff probability >= threshold.
inline PredictionSet predict(const Mlp& mlp, const Matrix& x, double threshold) {
  PredictionSet out;
  out.probabilities = predict_proba(mlp, x);
  out.classes.reserve(static_cast<std::size_t>(out.probabilities.size()));
  for (Eigen::Index i = 0; i < out.probabilities.size(); ++i) {
    out.classes.push_back(out.probabilities(i) >= threshold ? BuildingClass::residential
                                                            : BuildingClass::non_residential);
  }
  return out;
}

}  // namespace bldg
