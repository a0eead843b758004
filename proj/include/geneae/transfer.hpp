#ifndef GENEAE_TRANSFER_HPP
#define GENEAE_TRANSFER_HPP

/// @file transfer.hpp Classifier heads stacked on a frozen encoder.

#include <map>
#include <vector>

#include <json.hpp>

#include "autoencoder.hpp"
#include "expr_data.hpp"
#include "nn_core.hpp"

namespace geneae {

struct ClassifierSpec {
  std::vector<Index> head_hidden_widths{64};
  int n_classes = 2;
  Activation head_activation = Activation::relu;

  /// Two classes use a single logistic output, more use softmax.
  Index output_width() const { return n_classes == 2 ? 1 : n_classes; }
  Activation output_activation() const { return n_classes == 2 ? Activation::sigmoid : Activation::softmax; }

  void validate() const {
    if (n_classes < 2) fail(ErrorCode::bad_spec, "n_classes must be at least 2");
    for (Index w : head_hidden_widths)
      if (w <= 0) fail(ErrorCode::bad_dims, "head widths must be positive");
  }
};

/// Frozen encoder layers followed by a freshly initialized trainable head.
inline DenseNetwork build_transfer_classifier(const DenseNetwork& encoder, const ClassifierSpec& spec,
                                              std::uint64_t seed) {
  spec.validate();
  if (encoder.empty() || !encoder.all_frozen())
    fail(ErrorCode::encoder_not_frozen, "every encoder layer must be frozen");
  std::vector<Index> dims{encoder.output_dim()};
  dims.insert(dims.end(), spec.head_hidden_widths.begin(), spec.head_hidden_widths.end());
  dims.push_back(spec.output_width());
  auto head = init_glorot<double>(std::span<const Index>(dims), seed, spec.head_activation, spec.output_activation());
  DenseNetwork net = encoder;
  for (auto& l : head.layers) net.layers.push_back(std::move(l));
  return net;
}

/// Targets in the layout the network's output layer expects: one {0,1}
/// column for a logistic head, one-hot rows otherwise.
inline Matrix classification_targets(const std::vector<int>& y, Index output_width) {
  Matrix t = Matrix::Zero(static_cast<Index>(y.size()), output_width);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto r = static_cast<Index>(i);
    if (output_width == 1) {
      if (y[i] != 0 && y[i] != 1) fail(ErrorCode::label_out_of_range, "binary labels must be 0 or 1");
      t(r, 0) = y[i];
    } else {
      if (y[i] < 0 || y[i] >= output_width) fail(ErrorCode::label_out_of_range, "label " + std::to_string(y[i]));
      t(r, y[i]) = 1.0;
    }
  }
  return t;
}

struct ClassifierTraining {
  /// Fraction of each class held out for early stopping; 0 disables it.
  double validation_fraction = 0.1;
  int patience = 20;
};

/// Rows held out per class: floor(fraction * class_count). Classes too
/// small to spare a row keep all of it for training.
inline std::pair<std::vector<Index>, std::vector<Index>> validation_carve(const std::vector<int>& y, double fraction,
                                                                          std::uint64_t seed) {
  std::map<int, std::vector<Index>> by;
  for (std::size_t i = 0; i < y.size(); ++i) by[y[i]].push_back(static_cast<Index>(i));
  Rng rng(seed);
  std::vector<Index> fit, val;
  for (auto& [cls, rows] : by) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(rows.size())));
    val.insert(val.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k));
    fit.insert(fit.end(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end());
  }
  std::sort(fit.begin(), fit.end());
  std::sort(val.begin(), val.end());
  return {fit, val};
}

inline Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

/// Trains the head of `net` on labeled rows. Labels are class ids (0/1 for a
/// logistic head). Frozen layers are left bitwise unchanged.
inline TrainHistory train_classifier(DenseNetwork& net, const Matrix& x, const std::vector<int>& y,
                                     const TrainConfig& config, const ClassifierTraining& options = {}) {
  if (static_cast<Index>(y.size()) != x.rows())
    fail(ErrorCode::missing_labels, "need one label per row: " + std::to_string(y.size()) + " labels for " +
                                        std::to_string(x.rows()) + " rows");
  const Matrix targets = classification_targets(y, net.output_dim());
  if (config.epochs == 0) return {};
  if (options.validation_fraction <= 0.0) return train_network(net, x, targets, LossKind::classification, config);

  auto [fit, val] = validation_carve(y, options.validation_fraction, derive_seed(config.seed, "validation"));
  if (val.empty() || fit.empty()) return train_network(net, x, targets, LossKind::classification, config);
  // The carve can leave fewer rows than one batch.
  TrainConfig fit_config = config;
  fit_config.batch_size = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), fit.size()));
  Validation<double> v{take_rows(x, val), take_rows(targets, val), options.patience};
  return train_network(net, take_rows(x, fit), take_rows(targets, fit), LossKind::classification, fit_config,
                       std::optional<Validation<double>>(std::move(v)));
}

struct Prediction {
  std::vector<int> classes;
  /// n x 1 positive-class probability for logistic heads, n x classes otherwise.
  Matrix probabilities;
};

/// Row argmax; ties go to the lowest column.
inline std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Index r = 0; r < m.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < m.cols(); ++c)
      if (m(r, c) > m(r, best)) best = c;
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

/// Single-column outputs threshold at 0.5 (inclusive); wider outputs take
/// the argmax.
inline std::vector<int> decide(const Matrix& probabilities) {
  if (probabilities.cols() != 1) return argmax_rows(probabilities);
  std::vector<int> out(static_cast<std::size_t>(probabilities.rows()));
  for (Index r = 0; r < probabilities.rows(); ++r) out[static_cast<std::size_t>(r)] = probabilities(r, 0) >= 0.5;
  return out;
}

inline Prediction predict(const DenseNetwork& net, const Matrix& x) {
  Prediction p;
  p.probabilities = infer(net, x);
  p.classes = decide(p.probabilities);
  return p;
}

enum class Task { detect, type };

inline std::string_view to_string(Task t) { return t == Task::detect ? "detect" : "type"; }

inline Task task_from_string(std::string_view s) {
  if (s == "detect") return Task::detect;
  if (s == "type") return Task::type;
  fail(ErrorCode::usage, "unknown task '" + std::string(s) + "' (expected detect or type)");
}

/// A trained classifier with what is needed to use it on raw data: the
/// scaler, the task and the class names its outputs refer to.
struct ClassifierBundle {
  static constexpr int kVersion = 1;
  Task task = Task::detect;
  LabelVocabulary vocab;
  MinMaxScaler scaler;
  DenseNetwork network;
  bool log2_transform = false;

  /// Names of the network's output classes: {negative, "cancer"} for
  /// detection, the vocabulary for typing.
  std::vector<std::string> class_names() const {
    if (task == Task::detect) return {vocab.negative, "cancer"};
    return vocab.names;
  }

  LabelMode label_mode() const { return task == Task::detect ? LabelMode::binary : LabelMode::multiclass; }
};

inline nlohmann::json bundle_to_json(const ClassifierBundle& b) {
  return {{"version", ClassifierBundle::kVersion},
          {"task", to_string(b.task)},
          {"vocab", b.vocab},
          {"scaler", b.scaler},
          {"log2_transform", b.log2_transform},
          {"network", network_to_json(b.network)}};
}

inline ClassifierBundle classifier_bundle_from_json(const nlohmann::json& j) {
  if (j.at("version").get<int>() != ClassifierBundle::kVersion)
    fail(ErrorCode::bad_format, "unsupported classifier bundle version");
  ClassifierBundle b;
  b.task = task_from_string(j.at("task").get<std::string>());
  b.vocab = j.at("vocab").get<LabelVocabulary>();
  b.scaler = j.at("scaler").get<MinMaxScaler>();
  b.log2_transform = j.value("log2_transform", false);
  b.network = network_from_json(j.at("network"));
  return b;
}

}  // namespace geneae

#endif  // GENEAE_TRANSFER_HPP
