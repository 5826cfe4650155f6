#pragma once

// Dense feed-forward networks with hand-written backpropagation.
//
// Batches are row-major in the logical sense: one sample per row, so a batch of
// n inputs for a network with input width d is an n x d matrix. Layer k maps
// width layer_sizes[k] to layer_sizes[k+1] and stores its weight as a
// (layer_sizes[k+1] x layer_sizes[k]) matrix.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dhc/errors.hpp"

namespace dhc::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Activation { identity, relu, tanh };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw InvalidArgument("unknown activation '" + std::string(s) + "'");
}

template <typename Scalar>
struct Mlp {
  std::vector<int> layer_sizes;
  std::vector<Matrix<Scalar>> weights;
  std::vector<Vector<Scalar>> biases;
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::identity;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return weights.size(); }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) n += weights[k].size() + biases[k].size();
    return n;
  }

  Activation activation_of(std::size_t layer) const {
    return layer + 1 == weights.size() ? output_activation : hidden_activation;
  }
};

// Arrays congruent with an Mlp's parameters.
template <typename Scalar>
struct GradientSet {
  std::vector<Matrix<Scalar>> weights;
  std::vector<Vector<Scalar>> biases;

  static GradientSet zeros_like(const Mlp<Scalar>& net) {
    GradientSet g;
    for (std::size_t k = 0; k < net.num_layers(); ++k) {
      g.weights.push_back(Matrix<Scalar>::Zero(net.weights[k].rows(), net.weights[k].cols()));
      g.biases.push_back(Vector<Scalar>::Zero(net.biases[k].size()));
    }
    return g;
  }

  bool all_finite() const {
    for (const auto& w : weights)
      if (!w.allFinite()) return false;
    for (const auto& b : biases)
      if (!b.allFinite()) return false;
    return true;
  }
};

struct InitOptions {
  // When positive, the last layer is drawn from U(-bound, bound) instead of the
  // fan-in rule. Actors use a small bound so the untrained policy starts near the
  // centre of the action box.
  double final_layer_bound = 0.0;
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> activate(const Matrix<Scalar>& z, Activation a) {
  switch (a) {
    case Activation::relu: return z.cwiseMax(Scalar(0));
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::identity: break;
  }
  return z;
}

// d(activation)/dz expressed through the pre-activation z and output y.
template <typename Scalar>
Matrix<Scalar> activation_grad(const Matrix<Scalar>& z, const Matrix<Scalar>& y, Activation a) {
  switch (a) {
    case Activation::relu: return (z.array() > Scalar(0)).template cast<Scalar>().matrix();
    case Activation::tanh: return (Scalar(1) - y.array().square()).matrix();
    case Activation::identity: break;
  }
  return Matrix<Scalar>::Ones(z.rows(), z.cols());
}

template <typename Scalar>
void require_same_architecture(const Mlp<Scalar>& a, const Mlp<Scalar>& b, const char* what) {
  if (a.layer_sizes != b.layer_sizes) throw ShapeError(std::string(what) + ": architecture mismatch");
}

template <typename Scalar>
void require_congruent(const Mlp<Scalar>& net, const GradientSet<Scalar>& g, const char* what) {
  bool ok = g.weights.size() == net.num_layers() && g.biases.size() == net.num_layers();
  for (std::size_t k = 0; ok && k < net.num_layers(); ++k) {
    ok = g.weights[k].rows() == net.weights[k].rows() && g.weights[k].cols() == net.weights[k].cols() &&
         g.biases[k].size() == net.biases[k].size();
  }
  if (!ok) throw ShapeError(std::string(what) + ": gradient set not congruent with network");
}

}  // namespace detail

template <typename Scalar = double>
Mlp<Scalar> mlp_init(std::span<const int> layer_sizes, Activation hidden, Activation output,
                     std::uint64_t seed, InitOptions options = {}) {
  if (layer_sizes.size() < 2) throw InvalidArgument("mlp_init: need at least input and output sizes");
  for (int s : layer_sizes)
    if (s < 1) throw InvalidArgument("mlp_init: layer sizes must be positive");

  Mlp<Scalar> net;
  net.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
  net.hidden_activation = hidden;
  net.output_activation = output;

  std::mt19937_64 rng(seed);
  const std::size_t layers = layer_sizes.size() - 1;
  for (std::size_t k = 0; k < layers; ++k) {
    const int fan_in = layer_sizes[k];
    const int fan_out = layer_sizes[k + 1];
    double bound = std::sqrt(6.0 / fan_in);
    if (k + 1 == layers && options.final_layer_bound > 0.0) bound = options.final_layer_bound;
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix<Scalar> w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<Scalar>(dist(rng));
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector<Scalar>::Zero(fan_out));
  }
  return net;
}

template <typename Scalar = double>
Mlp<Scalar> mlp_init(std::initializer_list<int> layer_sizes, Activation hidden, Activation output,
                     std::uint64_t seed, InitOptions options = {}) {
  std::vector<int> sizes(layer_sizes);
  return mlp_init<Scalar>(std::span<const int>(sizes), hidden, output, seed, options);
}

// Intermediate values kept for backpropagation: pre[k] is layer k's affine output,
// post[k] the layer input (post[0] is the batch itself).
template <typename Scalar>
struct ForwardCache {
  std::vector<Matrix<Scalar>> pre;
  std::vector<Matrix<Scalar>> post;

  const Matrix<Scalar>& output() const { return post.back(); }
};

template <typename Scalar, typename Derived>
ForwardCache<Scalar> forward_cached(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& batch) {
  if (batch.cols() != net.input_dim())
    throw ShapeError("forward: batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                     std::to_string(net.input_dim()));
  ForwardCache<Scalar> cache;
  cache.post.reserve(net.num_layers() + 1);
  cache.pre.reserve(net.num_layers());
  cache.post.emplace_back(batch);
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    Matrix<Scalar> z = cache.post.back() * net.weights[k].transpose();
    z.rowwise() += net.biases[k].transpose();
    cache.post.push_back(detail::activate(z, net.activation_of(k)));
    cache.pre.push_back(std::move(z));
  }
  return cache;
}

template <typename Scalar, typename Derived>
Matrix<Scalar> forward(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& batch) {
  if (batch.cols() != net.input_dim())
    throw ShapeError("forward: batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                     std::to_string(net.input_dim()));
  Matrix<Scalar> a = batch;
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    Matrix<Scalar> z = a * net.weights[k].transpose();
    z.rowwise() += net.biases[k].transpose();
    a = detail::activate(z, net.activation_of(k));
  }
  return a;
}

template <typename Scalar>
struct VjpResult {
  Matrix<Scalar> input_grads;
  GradientSet<Scalar> param_grads;
};

// Vector-Jacobian product of the network at a cached forward pass: given
// dL/d(output), returns dL/d(input) and dL/d(parameters).
template <typename Scalar>
VjpResult<Scalar> backward_from_cache(const Mlp<Scalar>& net, const ForwardCache<Scalar>& cache,
                                      const Matrix<Scalar>& head_grad) {
  const auto& out = cache.output();
  if (head_grad.rows() != out.rows() || head_grad.cols() != out.cols())
    throw ShapeError("backward: head gradient shape does not match network output");
  VjpResult<Scalar> result;
  result.param_grads.weights.resize(net.num_layers());
  result.param_grads.biases.resize(net.num_layers());
  Matrix<Scalar> grad = head_grad;
  for (std::size_t k = net.num_layers(); k-- > 0;) {
    Matrix<Scalar> dz =
        grad.cwiseProduct(detail::activation_grad(cache.pre[k], cache.post[k + 1], net.activation_of(k)));
    result.param_grads.weights[k] = dz.transpose() * cache.post[k];
    result.param_grads.biases[k] = dz.colwise().sum().transpose();
    grad = dz * net.weights[k];
  }
  result.input_grads = std::move(grad);
  return result;
}

template <typename Scalar, typename Derived>
VjpResult<Scalar> backward_scalar_head(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& inputs,
                                       const Matrix<Scalar>& head_grad) {
  auto cache = forward_cached(net, inputs);
  return backward_from_cache(net, cache, head_grad);
}

template <typename Scalar>
struct LossAndGrads {
  Scalar loss;
  GradientSet<Scalar> grads;
};

// Mean squared error over every row and output column, with its exact gradient.
template <typename Scalar, typename DerivedX, typename DerivedY>
LossAndGrads<Scalar> backward_mse(const Mlp<Scalar>& net, const Eigen::MatrixBase<DerivedX>& inputs,
                                  const Eigen::MatrixBase<DerivedY>& targets) {
  if (inputs.rows() == 0) throw InvalidArgument("backward_mse: empty batch");
  if (inputs.rows() != targets.rows() || targets.cols() != net.output_dim())
    throw ShapeError("backward_mse: inputs/targets shape mismatch");
  auto cache = forward_cached(net, inputs);
  Matrix<Scalar> diff = cache.output() - targets;
  const Scalar count = static_cast<Scalar>(diff.size());
  Scalar loss = diff.squaredNorm() / count;
  Matrix<Scalar> head = (Scalar(2) / count) * diff;
  auto vjp = backward_from_cache(net, cache, head);
  return {loss, std::move(vjp.param_grads)};
}

template <typename Scalar>
struct AdamState {
  Scalar learning_rate = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);
  GradientSet<Scalar> m;
  GradientSet<Scalar> v;
  long step = 0;
};

template <typename Scalar>
AdamState<Scalar> adam_init(const Mlp<Scalar>& net, Scalar learning_rate) {
  if (!(learning_rate > Scalar(0))) throw InvalidArgument("adam_init: learning rate must be positive");
  AdamState<Scalar> s;
  s.learning_rate = learning_rate;
  s.m = GradientSet<Scalar>::zeros_like(net);
  s.v = GradientSet<Scalar>::zeros_like(net);
  return s;
}

template <typename Scalar>
void adam_step(Mlp<Scalar>& net, const GradientSet<Scalar>& grads, AdamState<Scalar>& state) {
  detail::require_congruent(net, grads, "adam_step");
  detail::require_congruent(net, state.m, "adam_step");
  if (!grads.all_finite()) throw NumericError("adam_step: non-finite gradient");
  ++state.step;
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, static_cast<Scalar>(state.step));
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, static_cast<Scalar>(state.step));
  const Scalar step_size = state.learning_rate / c1;
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = state.beta1 * m + (Scalar(1) - state.beta1) * g;
    v = state.beta2 * v + (Scalar(1) - state.beta2) * g.cwiseProduct(g);
    param.array() -= step_size * m.array() / ((v.array() / c2).sqrt() + state.epsilon);
  };
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    update(net.weights[k], grads.weights[k], state.m.weights[k], state.v.weights[k]);
    update(net.biases[k], grads.biases[k], state.m.biases[k], state.v.biases[k]);
  }
}

// target <- tau * online + (1 - tau) * target, parameter by parameter.
template <typename Scalar>
void soft_update(Mlp<Scalar>& target, const Mlp<Scalar>& online, Scalar tau) {
  detail::require_same_architecture(target, online, "soft_update");
  if (!(tau >= Scalar(0) && tau <= Scalar(1))) throw InvalidArgument("soft_update: tau must lie in [0, 1]");
  for (std::size_t k = 0; k < target.num_layers(); ++k) {
    target.weights[k] = tau * online.weights[k] + (Scalar(1) - tau) * target.weights[k];
    target.biases[k] = tau * online.biases[k] + (Scalar(1) - tau) * target.biases[k];
  }
}

struct ErrorStats {
  double mse = 0.0;
  double mae = 0.0;
};

template <typename DerivedA, typename DerivedB>
ErrorStats mse_mae(const Eigen::MatrixBase<DerivedA>& pred, const Eigen::MatrixBase<DerivedB>& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) throw ShapeError("mse_mae: shape mismatch");
  if (pred.size() == 0) throw InvalidArgument("mse_mae: empty input");
  const auto diff = (pred - truth).template cast<double>().eval();
  const double n = static_cast<double>(diff.size());
  return {diff.squaredNorm() / n, diff.cwiseAbs().sum() / n};
}

}  // namespace dhc::nn
