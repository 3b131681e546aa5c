#pragma once

// Dense binary classifier: LeakyReLU input layer, ReLU hidden layers and a
// sigmoid output unit, trained with mean binary cross-entropy and AMSGrad.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bldg/error.hpp"

namespace bldg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline constexpr double kDefaultLeakySlope = 0.01;
inline constexpr double kBceClip = 1e-7;

/// Hidden widths of the reference architecture; the input width is the
/// feature count and the output is a single probability.
inline std::vector<int> reference_layer_sizes(int d_in) { return {d_in, 1024, 512, 128, 64, 32, 16, 8, 1}; }

enum class Activation { leaky_relu, relu, sigmoid };

inline std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "";
}

inline double leaky_relu(double x, double alpha) { return std::max(alpha * x, x); }

inline double relu(double x) { return std::max(0.0, x); }

// Evaluated on the side that cannot overflow.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Mlp {
  std::vector<int> layer_sizes;
  double alpha = kDefaultLeakySlope;
  std::vector<Activation> activations;  // one per weight layer
  std::vector<Matrix> weights;          // (fan_in, fan_out)
  std::vector<RowVector> biases;        // (fan_out)

  int input_dim() const { return layer_sizes.front(); }
  std::size_t num_layers() const { return weights.size(); }
};

/// Parameter-shaped container used for gradients and optimizer moments.
struct ParamSet {
  std::vector<Matrix> w;
  std::vector<RowVector> b;

  static ParamSet zeros_like(const Mlp& mlp) {
    ParamSet p;
    for (std::size_t i = 0; i < mlp.num_layers(); ++i) {
      p.w.push_back(Matrix::Zero(mlp.weights[i].rows(), mlp.weights[i].cols()));
      p.b.push_back(RowVector::Zero(mlp.biases[i].size()));
    }
    return p;
  }
};

using Gradients = ParamSet;

inline std::vector<Activation> default_activations(std::size_t num_layers) {
  std::vector<Activation> acts(num_layers, Activation::relu);
  acts.front() = Activation::leaky_relu;
  acts.back() = Activation::sigmoid;
  return acts;
}

inline void validate_ladder(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 3) {
    throw Error(Errc::InvalidLayerLadder, "need an input width, at least one hidden layer and the output unit");
  }
  for (int s : layer_sizes) {
    if (s <= 0) throw Error(Errc::InvalidLayerLadder, "layer widths must be positive");
  }
  if (layer_sizes.back() != 1) throw Error(Errc::InvalidLayerLadder, "output layer must have exactly one unit");
}

/// Glorot-uniform weights in layer order (row-major within a layer), zero
/// biases.
inline Mlp init_mlp(const std::vector<int>& layer_sizes, double alpha, std::uint64_t seed) {
  validate_ladder(layer_sizes);
  Mlp mlp;
  mlp.layer_sizes = layer_sizes;
  mlp.alpha = alpha;
  mlp.activations = default_activations(layer_sizes.size() - 1);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    const int fan_in = layer_sizes[i], fan_out = layer_sizes[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(fan_in, fan_out);
    for (int r = 0; r < fan_in; ++r) {
      for (int c = 0; c < fan_out; ++c) w(r, c) = dist(rng);
    }
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(RowVector::Zero(fan_out));
  }
  return mlp;
}

struct ForwardTrace {
  Matrix input;
  std::vector<Matrix> pre;   // Z for every layer
  std::vector<Matrix> post;  // activation of every layer; post.back() is the probability column
  Vector y_hat;
};

inline void apply_activation(Activation act, double alpha, const Matrix& z, Matrix& out) {
  switch (act) {
    case Activation::leaky_relu:
      out = z.unaryExpr([alpha](double v) { return leaky_relu(v, alpha); });
      break;
    case Activation::relu:
      out = z.cwiseMax(0.0);
      break;
    case Activation::sigmoid:
      out = z.unaryExpr([](double v) { return sigmoid(v); });
      break;
  }
}

// Derivative at 0: LeakyReLU -> alpha, ReLU -> 0.
inline void activation_grad_inplace(Activation act, double alpha, const Matrix& z, const Matrix& a, Matrix& grad) {
  switch (act) {
    case Activation::leaky_relu:
      grad = grad.cwiseProduct(z.unaryExpr([alpha](double v) { return v > 0.0 ? 1.0 : alpha; }));
      break;
    case Activation::relu:
      grad = grad.cwiseProduct(z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
      break;
    case Activation::sigmoid:
      grad = grad.cwiseProduct(a.cwiseProduct((1.0 - a.array()).matrix()));
      break;
  }
}

inline ForwardTrace forward(const Mlp& mlp, const Matrix& x) {
  if (x.cols() != mlp.input_dim()) {
    throw Error(Errc::ShapeMismatch, "input has " + std::to_string(x.cols()) + " columns, model expects " +
                                         std::to_string(mlp.input_dim()));
  }
  ForwardTrace t;
  t.input = x;
  t.pre.resize(mlp.num_layers());
  t.post.resize(mlp.num_layers());
  const Matrix* a = &t.input;
  for (std::size_t i = 0; i < mlp.num_layers(); ++i) {
    t.pre[i].noalias() = (*a) * mlp.weights[i];
    t.pre[i].rowwise() += mlp.biases[i];
    apply_activation(mlp.activations[i], mlp.alpha, t.pre[i], t.post[i]);
    a = &t.post[i];
  }
  t.y_hat = t.post.back().col(0);
  return t;
}

/// Probabilities only; keeps a single activation buffer alive.
inline Vector predict_proba(const Mlp& mlp, const Matrix& x) {
  if (x.cols() != mlp.input_dim()) {
    throw Error(Errc::ShapeMismatch, "input has " + std::to_string(x.cols()) + " columns, model expects " +
                                         std::to_string(mlp.input_dim()));
  }
  Matrix a = x, z;
  for (std::size_t i = 0; i < mlp.num_layers(); ++i) {
    z.noalias() = a * mlp.weights[i];
    z.rowwise() += mlp.biases[i];
    apply_activation(mlp.activations[i], mlp.alpha, z, a);
  }
  return a.col(0);
}

/// Mean binary cross-entropy with predictions clipped to [1e-7, 1 - 1e-7].
inline double bce_loss(const Vector& y_hat, const Vector& y) {
  if (y_hat.size() != y.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(y_hat.size()) + " predictions vs " +
                                          std::to_string(y.size()) + " labels");
  }
  if (y.size() == 0) throw Error(Errc::EmptySet, "empty batch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double p = std::clamp(y_hat(i), kBceClip, 1.0 - kBceClip);
    sum += -(y(i) * std::log(p) + (1.0 - y(i)) * std::log(1.0 - p));
  }
  return sum / static_cast<double>(y.size());
}

/// Gradient of the mean BCE over the traced batch. A sigmoid output layer
/// uses dL/dZ = (y_hat - y) / batch directly.
inline Gradients backward(const Mlp& mlp, const ForwardTrace& trace, const Vector& y) {
  const Eigen::Index b = trace.input.rows();
  if (y.size() != b || trace.pre.size() != mlp.num_layers()) {
    throw Error(Errc::ShapeMismatch, "labels or trace do not match the batch");
  }
  Gradients g;
  g.w.resize(mlp.num_layers());
  g.b.resize(mlp.num_layers());
  const std::size_t last = mlp.num_layers() - 1;
  Matrix dz;
  if (mlp.activations[last] == Activation::sigmoid) {
    dz = (trace.y_hat - y) / static_cast<double>(b);
  } else {
    // d(mean BCE)/d(a) then through the output activation.
    const Vector& p = trace.y_hat;
    dz = ((p - y).array() / (p.array() * (1.0 - p.array()))).matrix() / static_cast<double>(b);
    activation_grad_inplace(mlp.activations[last], mlp.alpha, trace.pre[last], trace.post[last], dz);
  }
  for (std::size_t k = mlp.num_layers(); k-- > 0;) {
    const Matrix& a_prev = k == 0 ? trace.input : trace.post[k - 1];
    g.w[k].noalias() = a_prev.transpose() * dz;
    g.b[k] = dz.colwise().sum();
    if (k > 0) {
      Matrix da_t;
      da_t.noalias() = mlp.weights[k] * dz.transpose();
      Matrix da = da_t.transpose();
      activation_grad_inplace(mlp.activations[k - 1], mlp.alpha, trace.pre[k - 1], trace.post[k - 1], da);
      dz = std::move(da);
    }
  }
  return g;
}

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  // Scale the step by sqrt(1 - beta2^t) / (1 - beta1^t); off gives the plain
  // AMSGrad update without bias correction.
  bool bias_correction = true;
};

struct OptimizerState {
  AdamConfig config;
  long long t = 0;
  ParamSet m;
  ParamSet v;
  ParamSet v_hat;

  static OptimizerState create(const Mlp& mlp, const AdamConfig& cfg) {
    OptimizerState s;
    s.config = cfg;
    s.m = ParamSet::zeros_like(mlp);
    s.v = ParamSet::zeros_like(mlp);
    s.v_hat = ParamSet::zeros_like(mlp);
    return s;
  }
};

namespace detail {

inline void amsgrad_update(double* __restrict theta, const double* __restrict grad, double* __restrict m,
                           double* __restrict v, double* __restrict v_hat, Eigen::Index n,
                           double b1, double b2, double step, double eps) {
  for (Eigen::Index k = 0; k < n; ++k) {
    const double g = grad[k];
    const double mk = b1 * m[k] + (1.0 - b1) * g;
    const double vk = b2 * v[k] + (1.0 - b2) * g * g;
    const double vh = std::max(v_hat[k], vk);
    m[k] = mk;
    v[k] = vk;
    v_hat[k] = vh;
    theta[k] -= step * mk / (std::sqrt(vh) + eps);
  }
}

}  // namespace detail

/// One AMSGrad step on every weight and bias. Throws before touching any
/// state when a gradient entry is not finite.
inline void amsgrad_step(Mlp& mlp, const Gradients& grads, OptimizerState& state) {
  if (grads.w.size() != mlp.num_layers() || state.m.w.size() != mlp.num_layers()) {
    throw Error(Errc::ShapeMismatch, "gradient/optimizer layer count differs from the model");
  }
  for (std::size_t i = 0; i < mlp.num_layers(); ++i) {
    if (grads.w[i].rows() != mlp.weights[i].rows() || grads.w[i].cols() != mlp.weights[i].cols() ||
        grads.b[i].size() != mlp.biases[i].size()) {
      throw Error(Errc::ShapeMismatch, "gradient shape differs at layer " + std::to_string(i));
    }
    if (!grads.w[i].allFinite() || !grads.b[i].allFinite()) {
      throw Error(Errc::NonFiniteGradient, "layer " + std::to_string(i));
    }
  }
  const auto& c = state.config;
  state.t += 1;
  double step = c.learning_rate;
  if (c.bias_correction) {
    const double t = static_cast<double>(state.t);
    step *= std::sqrt(1.0 - std::pow(c.beta2, t)) / (1.0 - std::pow(c.beta1, t));
  }
  for (std::size_t i = 0; i < mlp.num_layers(); ++i) {
    detail::amsgrad_update(mlp.weights[i].data(), grads.w[i].data(), state.m.w[i].data(), state.v.w[i].data(),
                           state.v_hat.w[i].data(), mlp.weights[i].size(), c.beta1, c.beta2, step, c.epsilon);
    detail::amsgrad_update(mlp.biases[i].data(), grads.b[i].data(), state.m.b[i].data(), state.v.b[i].data(),
                           state.v_hat.b[i].data(), mlp.biases[i].size(), c.beta1, c.beta2, step, c.epsilon);
  }
}

}  // namespace bldg
