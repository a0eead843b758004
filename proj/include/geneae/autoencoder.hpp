#ifndef GENEAE_AUTOENCODER_HPP
#define GENEAE_AUTOENCODER_HPP

/// @file autoencoder.hpp Symmetric deep autoencoder over [0,1]-scaled
/// expression rows, and extraction of its frozen encoder.

#include <vector>

#include <json.hpp>

#include "expr_data.hpp"
#include "nn_core.hpp"

namespace geneae {

struct AutoencoderSpec {
  Index input_dim = 0;
  std::vector<Index> encoder_widths{100, 50};
  Index code_dim = 25;
  Activation activation = Activation::sigmoid;

  /// input -> encoder widths -> code -> mirrored widths -> input.
  std::vector<Index> layer_dims() const {
    std::vector<Index> d{input_dim};
    d.insert(d.end(), encoder_widths.begin(), encoder_widths.end());
    d.push_back(code_dim);
    d.insert(d.end(), encoder_widths.rbegin(), encoder_widths.rend());
    d.push_back(input_dim);
    return d;
  }

  /// Layer sizes of the encoder half, input through code.
  std::vector<Index> encoder_dims() const {
    std::vector<Index> d{input_dim};
    d.insert(d.end(), encoder_widths.begin(), encoder_widths.end());
    d.push_back(code_dim);
    return d;
  }

  std::size_t encoder_layer_count() const { return encoder_widths.size() + 1; }

  void validate() const {
    if (input_dim <= 0) fail(ErrorCode::bad_dims, "input_dim must be positive");
    if (code_dim <= 0) fail(ErrorCode::bad_dims, "code_dim must be positive");
    for (Index w : encoder_widths)
      if (w <= 0) fail(ErrorCode::bad_dims, "encoder widths must be positive");
  }
};

inline void to_json(nlohmann::json& j, const AutoencoderSpec& s) {
  j = nlohmann::json{{"input_dim", s.input_dim},
                     {"encoder_widths", s.encoder_widths},
                     {"code_dim", s.code_dim},
                     {"activation", to_string(s.activation)}};
}

inline void from_json(const nlohmann::json& j, AutoencoderSpec& s) {
  s.input_dim = j.at("input_dim").get<Index>();
  s.encoder_widths = j.at("encoder_widths").get<std::vector<Index>>();
  s.code_dim = j.at("code_dim").get<Index>();
  s.activation = activation_from_string(j.at("activation").get<std::string>());
  s.validate();
}

/// Glorot-initialized autoencoder. Every layer uses the spec activation and
/// the reconstruction layer is sigmoid, so outputs stay inside (0, 1).
inline DenseNetwork build_autoencoder(const AutoencoderSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto dims = spec.layer_dims();
  return init_glorot<double>(std::span<const Index>(dims), seed, spec.activation, Activation::sigmoid);
}

inline void check_unit_interval(const Matrix& x) {
  if (x.size() == 0) return;
  if (!x.allFinite() || x.minCoeff() < 0.0 || x.maxCoeff() > 1.0)
    fail(ErrorCode::bad_format, "autoencoder inputs must be finite and scaled into [0, 1]");
}

/// Minimizes reconstruction cross-entropy of `x` against itself.
inline TrainHistory train_autoencoder(DenseNetwork& net, const Matrix& x, const TrainConfig& config) {
  if (net.empty() || net.input_dim() != x.cols() || net.output_dim() != x.cols())
    fail(ErrorCode::dimension_mismatch, "autoencoder dims do not match " + std::to_string(x.cols()) + " features");
  check_unit_interval(x);
  return train_network(net, x, x, LossKind::reconstruction, config);
}

inline TrainHistory train_autoencoder(DenseNetwork& net, const ExpressionDataset& train, const TrainConfig& config) {
  return train_autoencoder(net, train.values, config);
}

/// The input -> code half of `net`, every layer marked frozen.
inline DenseNetwork extract_encoder(const DenseNetwork& net, const AutoencoderSpec& spec) {
  spec.validate();
  if (net.dims() != spec.layer_dims())
    fail(ErrorCode::spec_mismatch, "network layer chain does not match the autoencoder spec");
  DenseNetwork enc;
  enc.layers.assign(net.layers.begin(), net.layers.begin() + static_cast<std::ptrdiff_t>(spec.encoder_layer_count()));
  for (auto& l : enc.layers) l.frozen = true;
  return enc;
}

/// Code vectors (n x code_dim) for scaled rows.
inline Matrix encode(const DenseNetwork& encoder, const Matrix& x) { return infer(encoder, x); }

inline Matrix encode(const DenseNetwork& encoder, const ExpressionDataset& data) {
  return encode(encoder, data.values);
}

/// Serialized autoencoder or encoder: the network plus the spec that built
/// it and the scaler fitted on its training data.
struct AutoencoderBundle {
  static constexpr int kVersion = 1;
  AutoencoderSpec spec;
  MinMaxScaler scaler;
  DenseNetwork network;
  /// Inputs go through log2(x + 1) before scaling.
  bool log2_transform = false;
};

inline nlohmann::json bundle_to_json(const AutoencoderBundle& b) {
  return {{"version", AutoencoderBundle::kVersion},
          {"spec", b.spec},
          {"scaler", b.scaler},
          {"log2_transform", b.log2_transform},
          {"network", network_to_json(b.network)}};
}

inline AutoencoderBundle autoencoder_bundle_from_json(const nlohmann::json& j) {
  if (j.at("version").get<int>() != AutoencoderBundle::kVersion)
    fail(ErrorCode::bad_format, "unsupported autoencoder bundle version");
  AutoencoderBundle b;
  b.spec = j.at("spec").get<AutoencoderSpec>();
  b.scaler = j.at("scaler").get<MinMaxScaler>();
  b.log2_transform = j.value("log2_transform", false);
  b.network = network_from_json(j.at("network"));
  return b;
}

}  // namespace geneae

#endif  // GENEAE_AUTOENCODER_HPP
