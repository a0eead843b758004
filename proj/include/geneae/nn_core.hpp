#ifndef GENEAE_NN_CORE_HPP
#define GENEAE_NN_CORE_HPP

/// @file nn_core.hpp Dense feed-forward networks trained by backpropagation.
///
/// Samples are rows. A layer maps a batch `A` (n x fan_in) to
/// `act(A * W + 1 * b^T)` with `W` stored fan_in x fan_out. Everything is
/// templated on the scalar type; `double` is the reference precision and the
/// unqualified aliases (`DenseNetwork`, ...) use it.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "common.hpp"

namespace geneae {

enum class Activation { sigmoid, relu, softmax, identity };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
    case Activation::softmax: return "softmax";
    case Activation::identity: return "identity";
  }
  return "?";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "relu") return Activation::relu;
  if (s == "softmax") return Activation::softmax;
  if (s == "identity") return Activation::identity;
  fail(ErrorCode::bad_format, "unknown activation '" + std::string(s) + "'");
}

template <typename T>
T sigmoid(T s) {
  // Two branches keep exp() from overflowing for large |s|.
  if (s >= T(0)) return T(1) / (T(1) + std::exp(-s));
  const T e = std::exp(s);
  return e / (T(1) + e);
}

/// Applies `kind` to every row of `z` (softmax normalizes each row).
template <typename T>
MatrixT<T> apply_activation(Activation kind, const MatrixT<T>& z) {
  switch (kind) {
    case Activation::sigmoid: return z.unaryExpr([](T s) { return sigmoid(s); });
    case Activation::relu: return z.cwiseMax(T(0));
    case Activation::identity: return z;
    case Activation::softmax: {
      MatrixT<T> out(z.rows(), z.cols());
      for (Index r = 0; r < z.rows(); ++r) {
        const T mx = z.row(r).maxCoeff();
        out.row(r) = (z.row(r).array() - mx).exp().matrix();
        out.row(r) /= out.row(r).sum();
      }
      return out;
    }
  }
  return z;
}

template <typename T>
VectorT<T> apply_activation(Activation kind, const VectorT<T>& z) {
  MatrixT<T> row = z.transpose();
  return apply_activation<T>(kind, row).transpose();
}

template <typename T>
struct BasicDenseLayer {
  MatrixT<T> weights;  // fan_in x fan_out
  VectorT<T> biases;   // fan_out
  Activation activation = Activation::sigmoid;
  bool frozen = false;

  Index fan_in() const { return weights.rows(); }
  Index fan_out() const { return weights.cols(); }
  Index parameter_count() const { return weights.size() + biases.size(); }

  bool all_finite() const { return weights.allFinite() && biases.allFinite(); }
};

template <typename T>
struct BasicDenseNetwork {
  std::vector<BasicDenseLayer<T>> layers;

  std::size_t size() const { return layers.size(); }
  bool empty() const { return layers.empty(); }
  Index input_dim() const { return layers.empty() ? 0 : layers.front().fan_in(); }
  Index output_dim() const { return layers.empty() ? 0 : layers.back().fan_out(); }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& l : layers) n += l.parameter_count();
    return n;
  }

  /// Layer sizes, input first.
  std::vector<Index> dims() const {
    std::vector<Index> d;
    if (layers.empty()) return d;
    d.push_back(input_dim());
    for (const auto& l : layers) d.push_back(l.fan_out());
    return d;
  }

  bool all_frozen() const {
    return std::all_of(layers.begin(), layers.end(), [](const auto& l) { return l.frozen; });
  }

  /// Index of the first trainable layer, or size() when all are frozen.
  std::size_t first_trainable() const {
    for (std::size_t i = 0; i < layers.size(); ++i)
      if (!layers[i].frozen) return i;
    return layers.size();
  }

  void validate() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.biases.size() != l.fan_out())
        fail(ErrorCode::bad_dims, "layer " + std::to_string(i) + ": bias length != fan_out");
      if (i + 1 < layers.size() && l.fan_out() != layers[i + 1].fan_in())
        fail(ErrorCode::bad_dims, "layer " + std::to_string(i) + " fan_out " + std::to_string(l.fan_out()) +
                                      " != layer " + std::to_string(i + 1) + " fan_in " +
                                      std::to_string(layers[i + 1].fan_in()));
      if (!l.all_finite()) fail(ErrorCode::bad_format, "layer " + std::to_string(i) + " has non-finite parameters");
    }
  }

  template <typename U>
  BasicDenseNetwork<U> cast() const {
    BasicDenseNetwork<U> out;
    for (const auto& l : layers)
      out.layers.push_back({l.weights.template cast<U>(), l.biases.template cast<U>(), l.activation, l.frozen});
    return out;
  }
};

using DenseLayer = BasicDenseLayer<double>;
using DenseNetwork = BasicDenseNetwork<double>;

/// Every layer's output kept for backprop; `activations[0]` is the input.
template <typename T>
struct ForwardRecord {
  std::vector<MatrixT<T>> activations;
  const MatrixT<T>& output() const { return activations.back(); }
};

template <typename T>
ForwardRecord<T> forward(const BasicDenseNetwork<T>& net, const MatrixT<T>& batch) {
  if (net.empty()) fail(ErrorCode::bad_dims, "forward on an empty network");
  if (batch.cols() != net.input_dim())
    fail(ErrorCode::dimension_mismatch, "batch has " + std::to_string(batch.cols()) +
                                            " columns, network expects " + std::to_string(net.input_dim()));
  ForwardRecord<T> rec;
  rec.activations.reserve(net.size() + 1);
  rec.activations.push_back(batch);
  for (const auto& l : net.layers) {
    MatrixT<T> z = rec.activations.back() * l.weights;
    z.rowwise() += l.biases.transpose();
    rec.activations.push_back(apply_activation<T>(l.activation, z));
  }
  return rec;
}

/// Forward pass without retaining intermediates. `begin`/`end` select a
/// contiguous range of layers.
template <typename T>
MatrixT<T> infer(const BasicDenseNetwork<T>& net, const MatrixT<T>& batch, std::size_t begin = 0,
                 std::optional<std::size_t> end = std::nullopt) {
  const std::size_t stop = end.value_or(net.size());
  if (begin >= stop) return batch;
  if (batch.cols() != net.layers[begin].fan_in())
    fail(ErrorCode::dimension_mismatch, "batch has " + std::to_string(batch.cols()) + " columns, layer expects " +
                                            std::to_string(net.layers[begin].fan_in()));
  MatrixT<T> a = batch;
  for (std::size_t i = begin; i < stop; ++i) {
    const auto& l = net.layers[i];
    MatrixT<T> z = a * l.weights;
    z.rowwise() += l.biases.transpose();
    a = apply_activation<T>(l.activation, z);
  }
  return a;
}

/// Where a loss gradient is taken: at the network output, or at the last
/// layer's pre-activation (the fused softmax/sigmoid + cross-entropy form).
enum class GradientAt { output, logits };

template <typename T>
struct LossResult {
  T loss = T(0);
  MatrixT<T> grad;
  GradientAt at = GradientAt::output;
};

inline constexpr double kReconstructionClip = 1e-7;

/// Per-sample sum of binary cross-entropy over features, averaged over the
/// batch. `xhat` is clipped to [1e-7, 1 - 1e-7] before the logs.
template <typename T>
LossResult<T> reconstruction_cross_entropy(const MatrixT<T>& x, const MatrixT<T>& xhat) {
  if (x.rows() != xhat.rows() || x.cols() != xhat.cols())
    fail(ErrorCode::dimension_mismatch, "x is " + shape_str(x.rows(), x.cols()) + ", xhat is " +
                                            shape_str(xhat.rows(), xhat.cols()));
  const T lo = T(kReconstructionClip);
  const T hi = T(1) - T(kReconstructionClip);
  const T inv_n = x.rows() > 0 ? T(1) / T(x.rows()) : T(0);
  LossResult<T> r;
  r.grad.resize(x.rows(), x.cols());
  T total = T(0);
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      const T p = std::clamp(xhat(i, j), lo, hi);
      const T t = x(i, j);
      total -= t * std::log(p) + (T(1) - t) * std::log(T(1) - p);
      r.grad(i, j) = (p - t) / (p * (T(1) - p)) * inv_n;
    }
  }
  r.loss = total * inv_n;
  r.at = GradientAt::output;
  return r;
}

/// Negative log-likelihood averaged over the batch. A single-column
/// `targets` means a logistic head with {0,1} targets; otherwise rows are
/// one-hot over softmax outputs. The gradient is taken at the logits.
template <typename T>
LossResult<T> classification_cross_entropy(const MatrixT<T>& targets, const MatrixT<T>& probs) {
  if (targets.rows() != probs.rows() || targets.cols() != probs.cols())
    fail(ErrorCode::dimension_mismatch, "targets are " + shape_str(targets.rows(), targets.cols()) +
                                            ", probabilities are " + shape_str(probs.rows(), probs.cols()));
  const T tiny = std::numeric_limits<T>::min();
  const T inv_n = targets.rows() > 0 ? T(1) / T(targets.rows()) : T(0);
  T total = T(0);
  if (targets.cols() == 1) {
    for (Index i = 0; i < targets.rows(); ++i) {
      const T p = probs(i, 0);
      const T t = targets(i, 0);
      if (t > T(0)) total -= t * std::log(std::max(p, tiny));
      if (t < T(1)) total -= (T(1) - t) * std::log(std::max(T(1) - p, tiny));
    }
  } else {
    for (Index i = 0; i < targets.rows(); ++i)
      for (Index j = 0; j < targets.cols(); ++j)
        if (targets(i, j) != T(0)) total -= targets(i, j) * std::log(std::max(probs(i, j), tiny));
  }
  return {total * inv_n, (probs - targets) * inv_n, GradientAt::logits};
}

enum class LossKind { reconstruction, classification };

template <typename T>
LossResult<T> compute_loss(LossKind kind, const MatrixT<T>& targets, const MatrixT<T>& output) {
  return kind == LossKind::reconstruction ? reconstruction_cross_entropy<T>(targets, output)
                                          : classification_cross_entropy<T>(targets, output);
}

template <typename T>
struct Gradients {
  std::vector<MatrixT<T>> weights;
  std::vector<VectorT<T>> biases;

  static Gradients zeros_like(const BasicDenseNetwork<T>& net) {
    Gradients g;
    for (const auto& l : net.layers) {
      g.weights.push_back(MatrixT<T>::Zero(l.fan_in(), l.fan_out()));
      g.biases.push_back(VectorT<T>::Zero(l.fan_out()));
    }
    return g;
  }
};

namespace detail {

/// Multiplies `upstream` (dL/da) by the activation's derivative to give dL/dz,
/// using only the layer output `a`.
template <typename T>
MatrixT<T> activation_backward(Activation kind, const MatrixT<T>& a, const MatrixT<T>& upstream) {
  switch (kind) {
    case Activation::sigmoid: return (upstream.array() * a.array() * (T(1) - a.array())).matrix();
    case Activation::relu: return (upstream.array() * (a.array() > T(0)).template cast<T>()).matrix();
    case Activation::identity: return upstream;
    case Activation::softmax: {
      // dz = a * (g - <g, a>) per row.
      VectorT<T> dot = (upstream.array() * a.array()).rowwise().sum();
      MatrixT<T> centered = upstream.colwise() - dot;
      return (a.array() * centered.array()).matrix();
    }
  }
  return upstream;
}

}  // namespace detail

/// Parameter gradients for every trainable layer. Frozen layers get zero
/// gradients; error is propagated through them only while a trainable layer
/// remains below.
template <typename T>
Gradients<T> backward(const BasicDenseNetwork<T>& net, const ForwardRecord<T>& rec, const LossResult<T>& loss) {
  const std::size_t L = net.size();
  if (rec.activations.size() != L + 1)
    fail(ErrorCode::stale_activation_record, "record holds " + std::to_string(rec.activations.size()) +
                                                 " activations for a " + std::to_string(L) + "-layer network");
  for (std::size_t i = 0; i < L; ++i) {
    const auto& a = rec.activations[i + 1];
    if (a.cols() != net.layers[i].fan_out() || rec.activations[i].cols() != net.layers[i].fan_in() ||
        a.rows() != rec.activations[0].rows())
      fail(ErrorCode::stale_activation_record, "record does not match layer " + std::to_string(i));
  }
  if (loss.grad.rows() != rec.output().rows() || loss.grad.cols() != rec.output().cols())
    fail(ErrorCode::dimension_mismatch, "loss gradient shape does not match network output");

  auto grads = Gradients<T>::zeros_like(net);
  const std::size_t lowest = net.first_trainable();
  if (lowest == L) return grads;

  MatrixT<T> delta = loss.at == GradientAt::logits
                         ? loss.grad
                         : detail::activation_backward<T>(net.layers[L - 1].activation, rec.output(), loss.grad);
  for (std::size_t i = L; i-- > lowest;) {
    const auto& layer = net.layers[i];
    if (!layer.frozen) {
      grads.weights[i].noalias() = rec.activations[i].transpose() * delta;
      grads.biases[i] = delta.colwise().sum().transpose();
    }
    if (i == lowest) break;
    MatrixT<T> upstream = delta * layer.weights.transpose();
    delta = detail::activation_backward<T>(net.layers[i - 1].activation, rec.activations[i], upstream);
  }
  return grads;
}

enum class OptimizerKind { sgd, adam };

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  int epochs = 1000;
  int batch_size = 32;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  AdamParams adam;
  std::uint64_t seed = 0;
  bool shuffle_each_epoch = true;

  void validate(Index n_train) const {
    if (epochs < 0) fail(ErrorCode::bad_config, "epochs must be non-negative");
    if (batch_size <= 0) fail(ErrorCode::bad_config, "batch_size must be positive");
    if (!(learning_rate > 0.0)) fail(ErrorCode::bad_config, "learning_rate must be positive");
    if (n_train > 0 && batch_size > n_train)
      fail(ErrorCode::bad_config, "batch_size " + std::to_string(batch_size) + " exceeds training set size " +
                                      std::to_string(n_train));
  }
};

/// Holds optimizer state (Adam moments and the step counter) for one network.
template <typename T>
class Optimizer {
 public:
  Optimizer(const TrainConfig& config, const BasicDenseNetwork<T>& net) : config_(config) {
    if (config_.optimizer == OptimizerKind::adam) {
      m_ = Gradients<T>::zeros_like(net);
      v_ = Gradients<T>::zeros_like(net);
    }
  }

  long steps() const { return t_; }

  /// sgd: theta -= lr * g. adam: bias-corrected moment update. Frozen
  /// layers are never touched.
  void step(BasicDenseNetwork<T>& net, const Gradients<T>& g) {
    if (g.weights.size() != net.size() || g.biases.size() != net.size())
      fail(ErrorCode::dimension_mismatch, "gradient layer count does not match network");
    for (std::size_t i = 0; i < net.size(); ++i) {
      const auto& l = net.layers[i];
      if (g.weights[i].rows() != l.weights.rows() || g.weights[i].cols() != l.weights.cols() ||
          g.biases[i].size() != l.biases.size())
        fail(ErrorCode::dimension_mismatch, "gradient shape mismatch at layer " + std::to_string(i));
    }
    ++t_;
    const T lr = T(config_.learning_rate);
    if (config_.optimizer == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < net.size(); ++i) {
        auto& l = net.layers[i];
        if (l.frozen) continue;
        l.weights -= lr * g.weights[i];
        l.biases -= lr * g.biases[i];
      }
      return;
    }
    const T b1 = T(config_.adam.beta1), b2 = T(config_.adam.beta2), eps = T(config_.adam.epsilon);
    const T c1 = T(1) - std::pow(b1, T(t_));
    const T c2 = T(1) - std::pow(b2, T(t_));
    auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
      m = b1 * m + (T(1) - b1) * grad;
      v = b2 * v + (T(1) - b2) * grad.cwiseProduct(grad);
      param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (std::size_t i = 0; i < net.size(); ++i) {
      auto& l = net.layers[i];
      if (l.frozen) continue;
      update(l.weights, m_.weights[i], v_.weights[i], g.weights[i]);
      update(l.biases, m_.biases[i], v_.biases[i], g.biases[i]);
    }
  }

 private:
  TrainConfig config_;
  Gradients<T> m_;
  Gradients<T> v_;
  long t_ = 0;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
template <typename T = double>
BasicDenseNetwork<T> init_glorot(std::span<const Index> dims, std::uint64_t seed,
                                 Activation hidden = Activation::sigmoid, Activation output = Activation::sigmoid) {
  if (dims.size() < 2) fail(ErrorCode::bad_dims, "need at least an input and an output size");
  for (Index d : dims)
    if (d <= 0) fail(ErrorCode::bad_dims, "layer sizes must be positive");
  Rng rng(seed);
  BasicDenseNetwork<T> net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const Index fi = dims[i], fo = dims[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fi + fo));
    std::uniform_real_distribution<double> dist(-limit, limit);
    BasicDenseLayer<T> l;
    l.weights.resize(fi, fo);
    for (Index c = 0; c < fo; ++c)
      for (Index r = 0; r < fi; ++r) l.weights(r, c) = T(dist(rng));
    l.biases = VectorT<T>::Zero(fo);
    l.activation = (i + 2 == dims.size()) ? output : hidden;
    net.layers.push_back(std::move(l));
  }
  return net;
}

template <typename T = double>
BasicDenseNetwork<T> init_glorot(std::initializer_list<Index> dims, std::uint64_t seed,
                                 Activation hidden = Activation::sigmoid, Activation output = Activation::sigmoid) {
  std::vector<Index> d(dims);
  return init_glorot<T>(std::span<const Index>(d), seed, hidden, output);
}

// ---------------------------------------------------------------------------
// Gradient verification

template <typename T>
Gradients<T> analytic_gradients(const BasicDenseNetwork<T>& net, const MatrixT<T>& batch, const MatrixT<T>& targets,
                                LossKind kind) {
  auto rec = forward(net, batch);
  return backward(net, rec, compute_loss<T>(kind, targets, rec.output()));
}

/// Central differences of the loss for every parameter of every trainable
/// layer. The loss is evaluated in long double so that rounding in the
/// forward pass stays well below the difference being measured.
template <typename T>
Gradients<T> numeric_gradients(const BasicDenseNetwork<T>& net, const MatrixT<T>& batch, const MatrixT<T>& targets,
                               LossKind kind, T epsilon) {
  using Wide = long double;
  auto probe = net.template cast<Wide>();
  const MatrixT<Wide> x = batch.template cast<Wide>();
  const MatrixT<Wide> t = targets.template cast<Wide>();
  const Wide eps = epsilon;
  auto loss_at = [&]() { return static_cast<Wide>(compute_loss<Wide>(kind, t, infer(probe, x)).loss); };
  auto g = Gradients<T>::zeros_like(net);
  auto perturb = [&](Wide& param, T& out) {
    const Wide saved = param;
    param = saved + eps;
    const Wide up = loss_at();
    param = saved - eps;
    const Wide down = loss_at();
    param = saved;
    out = static_cast<T>((up - down) / (Wide(2) * eps));
  };
  for (std::size_t i = 0; i < probe.size(); ++i) {
    auto& l = probe.layers[i];
    if (l.frozen) continue;
    for (Index c = 0; c < l.weights.cols(); ++c)
      for (Index r = 0; r < l.weights.rows(); ++r) perturb(l.weights(r, c), g.weights[i](r, c));
    for (Index k = 0; k < l.biases.size(); ++k) perturb(l.biases[k], g.biases[i][k]);
  }
  return g;
}

/// max |a - n| / max(|a|, |n|, 1e-8) over all entries.
template <typename T>
double max_relative_error(const Gradients<T>& analytic, const Gradients<T>& numeric) {
  double worst = 0.0;
  auto scan = [&](const auto& a, const auto& n) {
    for (Index k = 0; k < a.size(); ++k) {
      const double x = double(a.data()[k]), y = double(n.data()[k]);
      const double denom = std::max({std::abs(x), std::abs(y), 1e-8});
      worst = std::max(worst, std::abs(x - y) / denom);
    }
  };
  for (std::size_t i = 0; i < analytic.weights.size(); ++i) {
    scan(analytic.weights[i], numeric.weights[i]);
    scan(analytic.biases[i], numeric.biases[i]);
  }
  return worst;
}

template <typename T>
double gradient_check(const BasicDenseNetwork<T>& net, const MatrixT<T>& batch, const MatrixT<T>& targets,
                      LossKind kind, T epsilon = T(1e-5)) {
  return max_relative_error(analytic_gradients(net, batch, targets, kind),
                            numeric_gradients(net, batch, targets, kind, epsilon));
}

// ---------------------------------------------------------------------------
// Training loop

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  /// Epoch (0-based) whose parameters were kept when early stopping ran.
  std::optional<int> best_epoch;
  bool stopped_early = false;

  std::size_t epochs_run() const { return train_loss.size(); }
};

inline void to_json(nlohmann::json& j, const TrainHistory& h) {
  j = nlohmann::json{{"train_loss", h.train_loss}, {"val_loss", h.val_loss}, {"stopped_early", h.stopped_early}};
  j["best_epoch"] = h.best_epoch ? nlohmann::json(*h.best_epoch) : nlohmann::json(nullptr);
}

/// Optional validation-driven early stopping. The validation rows are the
/// caller's responsibility; with none given the loop runs every epoch.
template <typename T>
struct Validation {
  MatrixT<T> inputs;
  MatrixT<T> targets;
  int patience = 20;
};

/// Mini-batch training of `net` on (inputs, targets). Layers in a leading
/// frozen block are evaluated once up front instead of per batch. When
/// `validation` is given, training stops after `patience` epochs without
/// improvement and the best parameters are restored.
template <typename T>
TrainHistory train_network(BasicDenseNetwork<T>& net, const MatrixT<T>& inputs, const MatrixT<T>& targets,
                           LossKind kind, const TrainConfig& config,
                           const std::optional<Validation<T>>& validation = std::nullopt) {
  if (inputs.rows() != targets.rows())
    fail(ErrorCode::dimension_mismatch, "inputs and targets have different row counts");
  if (inputs.cols() != net.input_dim())
    fail(ErrorCode::dimension_mismatch, "inputs have " + std::to_string(inputs.cols()) +
                                            " columns, network expects " + std::to_string(net.input_dim()));
  if (targets.cols() != net.output_dim())
    fail(ErrorCode::dimension_mismatch, "targets have " + std::to_string(targets.cols()) +
                                            " columns, network outputs " + std::to_string(net.output_dim()));
  TrainHistory history;
  if (config.epochs == 0) return history;
  const Index n = inputs.rows();
  if (n == 0) fail(ErrorCode::empty_dataset, "no training rows");
  config.validate(n);

  const std::size_t split = net.first_trainable();
  if (split == net.size()) fail(ErrorCode::bad_config, "every layer is frozen; nothing to train");

  // Train only the trainable tail; the frozen head is a fixed feature map.
  BasicDenseNetwork<T> tail;
  tail.layers.assign(std::make_move_iterator(net.layers.begin() + static_cast<std::ptrdiff_t>(split)),
                     std::make_move_iterator(net.layers.end()));
  net.layers.resize(split);
  const MatrixT<T> features = infer(net, inputs);
  std::optional<MatrixT<T>> val_features;
  if (validation) val_features = infer(net, validation->inputs);

  Optimizer<T> opt(config, tail);
  Rng rng(config.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  double best_val = std::numeric_limits<double>::infinity();
  BasicDenseNetwork<T> best = tail;
  int since_best = 0;

  auto restore = [&]() {
    net.layers.insert(net.layers.end(), std::make_move_iterator(tail.layers.begin()),
                      std::make_move_iterator(tail.layers.end()));
  };

  MatrixT<T> xb, yb;
  try {
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      if (config.shuffle_each_epoch) std::shuffle(order.begin(), order.end(), rng);
      double total = 0.0;
      for (Index start = 0; start < n; start += config.batch_size) {
        const Index len = std::min<Index>(config.batch_size, n - start);
        xb.resize(len, features.cols());
        yb.resize(len, targets.cols());
        for (Index r = 0; r < len; ++r) {
          const Index src = order[static_cast<std::size_t>(start + r)];
          xb.row(r) = features.row(src);
          yb.row(r) = targets.row(src);
        }
        auto rec = forward(tail, xb);
        auto loss = compute_loss<T>(kind, yb, rec.output());
        if (!std::isfinite(double(loss.loss)))
          fail(ErrorCode::non_finite_loss, "loss became non-finite at epoch " + std::to_string(epoch + 1) +
                                               ", batch starting at row " + std::to_string(start));
        opt.step(tail, backward(tail, rec, loss));
        total += double(loss.loss) * double(len);
      }
      history.train_loss.push_back(total / double(n));

      if (validation) {
        const double v = double(compute_loss<T>(kind, validation->targets, infer(tail, *val_features)).loss);
        if (!std::isfinite(v))
          fail(ErrorCode::non_finite_loss, "validation loss became non-finite at epoch " + std::to_string(epoch + 1));
        history.val_loss.push_back(v);
        if (v < best_val) {
          best_val = v;
          best = tail;
          history.best_epoch = epoch;
          since_best = 0;
        } else if (++since_best >= validation->patience) {
          history.stopped_early = true;
          break;
        }
      }
    }
  } catch (...) {
    restore();
    throw;
  }
  if (validation && history.best_epoch) tail = std::move(best);
  restore();
  return history;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr int kNetworkFormatVersion = 1;

template <typename T>
nlohmann::json network_to_json(const BasicDenseNetwork<T>& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Index r = 0; r < l.weights.rows(); ++r)
      for (Index c = 0; c < l.weights.cols(); ++c) w.push_back(double(l.weights(r, c)));
    std::vector<double> b(static_cast<std::size_t>(l.biases.size()));
    for (Index k = 0; k < l.biases.size(); ++k) b[static_cast<std::size_t>(k)] = double(l.biases[k]);
    layers.push_back({{"fan_in", l.fan_in()},
                      {"fan_out", l.fan_out()},
                      {"activation", to_string(l.activation)},
                      {"frozen", l.frozen},
                      {"weights", std::move(w)},
                      {"biases", std::move(b)}});
  }
  return {{"version", kNetworkFormatVersion}, {"layers", std::move(layers)}};
}

template <typename T = double>
BasicDenseNetwork<T> network_from_json(const nlohmann::json& j) {
  if (j.at("version").get<int>() != kNetworkFormatVersion) fail(ErrorCode::bad_format, "unsupported network version");
  BasicDenseNetwork<T> net;
  for (const auto& jl : j.at("layers")) {
    const auto fi = jl.at("fan_in").get<Index>();
    const auto fo = jl.at("fan_out").get<Index>();
    const auto w = jl.at("weights").get<std::vector<double>>();
    const auto b = jl.at("biases").get<std::vector<double>>();
    if (fi <= 0 || fo <= 0 || static_cast<Index>(w.size()) != fi * fo || static_cast<Index>(b.size()) != fo)
      fail(ErrorCode::bad_format, "layer parameter arrays do not match fan_in/fan_out");
    BasicDenseLayer<T> l;
    l.weights.resize(fi, fo);
    for (Index r = 0; r < fi; ++r)
      for (Index c = 0; c < fo; ++c) l.weights(r, c) = T(w[static_cast<std::size_t>(r * fo + c)]);
    l.biases.resize(fo);
    for (Index k = 0; k < fo; ++k) l.biases[k] = T(b[static_cast<std::size_t>(k)]);
    l.activation = activation_from_string(jl.at("activation").get<std::string>());
    l.frozen = jl.at("frozen").get<bool>();
    net.layers.push_back(std::move(l));
  }
  net.validate();
  return net;
}

}  // namespace geneae

#endif  // GENEAE_NN_CORE_HPP
