#ifndef GENEAE_SYNTH_HPP
#define GENEAE_SYNTH_HPP

/// @file synth.hpp Seeded generator of TPM-like expression matrices with
/// class structure living on a low-dimensional nonlinear manifold.
///
/// Per sample: z ~ N(mu_class, spread^2 I) in latent space; the latent point
/// goes through one fixed random map
///     v = W1 u + b1,   u = z / extent
///     h = (sigmoid(strength * v) - 1/2) / (sigmoid(strength) - 1/2)
///     log_expr = base + amplitude * W2 h / sqrt(hidden)
/// and the value is exp(log_expr + noise * eps), eps ~ N(0, 1).
/// Larger `nonlinearity_strength` pushes the sigmoids into saturation, which
/// folds the manifold away from any linear subspace.

#include <cstdio>
#include <limits>
#include <vector>

#include "expr_data.hpp"

namespace geneae {

struct SynthSpec {
  int n_classes = 2;
  /// One count per class.
  std::vector<int> samples_per_class{100, 100};
  Index feature_dim = 50;
  Index latent_dim = 3;
  double noise = 0.1;
  double nonlinearity_strength = 1.0;
  double class_separation = 3.0;
  double latent_spread = 1.0;
  /// Width of the hidden sigmoid layer of the map; 0 picks max(feature_dim, 4 * latent_dim).
  Index hidden_dim = 0;
  /// Standard deviation of log-expression driven by the latent map.
  double amplitude = 1.5;
  std::uint64_t seed = 0;

  Index effective_hidden() const { return hidden_dim > 0 ? hidden_dim : std::max(feature_dim, 4 * latent_dim); }

  void validate() const {
    if (n_classes < 1) fail(ErrorCode::bad_spec, "n_classes must be positive");
    if (static_cast<int>(samples_per_class.size()) != n_classes)
      fail(ErrorCode::bad_spec, "samples_per_class needs one entry per class");
    for (int c : samples_per_class)
      if (c <= 0) fail(ErrorCode::bad_spec, "class sizes must be positive");
    if (feature_dim <= 0 || latent_dim <= 0) fail(ErrorCode::bad_spec, "dimensions must be positive");
    if (latent_dim > feature_dim) fail(ErrorCode::bad_spec, "latent_dim must not exceed feature_dim");
    if (noise < 0.0 || nonlinearity_strength < 0.0 || latent_spread < 0.0 || class_separation < 0.0 ||
        amplitude < 0.0)
      fail(ErrorCode::bad_spec, "noise, strength, spread, separation and amplitude must be non-negative");
  }
};

/// Class names used by the generator: the TCGA vocabulary order for up to
/// 33 classes ("normal" first), then "C034", "C035", ...
inline std::string synth_class_name(int c) {
  static const auto vocab = LabelVocabulary::tcga();
  if (c < static_cast<int>(vocab.size())) return vocab.names[static_cast<std::size_t>(c)];
  char buf[16];
  std::snprintf(buf, sizeof buf, "C%03d", c + 1);
  return buf;
}

/// The fixed map and class means drawn from a spec's seed.
struct SynthModel {
  Matrix class_means;  // n_classes x latent
  Matrix w1;           // hidden x latent
  Vector b1;
  Matrix w2;           // features x hidden
  Vector base;         // features
  double extent = 1.0;

  /// `count` points on the sphere of the given radius, chosen greedily by
  /// farthest-point selection from random candidates so that classes are
  /// roughly evenly spaced. Two classes land (nearly) antipodal.
  static Matrix spread_on_sphere(int count, Index dim, double radius, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Index n_cand = 64 * static_cast<Index>(count) + 64;
    Matrix cand(n_cand, dim);
    for (Index i = 0; i < n_cand; ++i) {
      for (Index d = 0; d < dim; ++d) cand(i, d) = gauss(rng);
      const double norm = cand.row(i).norm();
      if (norm > 0.0) cand.row(i) /= norm;
    }
    Matrix out(count, dim);
    Vector nearest = Vector::Constant(n_cand, std::numeric_limits<double>::infinity());
    Index pick = 0;
    for (int c = 0; c < count; ++c) {
      out.row(c) = cand.row(pick);
      for (Index i = 0; i < n_cand; ++i) nearest[i] = std::min(nearest[i], (cand.row(i) - cand.row(pick)).squaredNorm());
      nearest.maxCoeff(&pick);
    }
    return out * radius;
  }

  static SynthModel draw(const SynthSpec& spec, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> base_dist(1.0, 3.0);
    const Index L = spec.latent_dim, H = spec.effective_hidden(), P = spec.feature_dim;
    SynthModel m;
    m.class_means = spread_on_sphere(spec.n_classes, L, spec.class_separation / 2.0, rng);
    m.w1.resize(H, L);
    for (Index i = 0; i < H; ++i)
      for (Index d = 0; d < L; ++d) m.w1(i, d) = gauss(rng) / std::sqrt(double(L));
    m.b1.resize(H);
    for (Index i = 0; i < H; ++i) m.b1[i] = unit(rng);
    m.w2.resize(P, H);
    for (Index g = 0; g < P; ++g)
      for (Index i = 0; i < H; ++i) m.w2(g, i) = gauss(rng);
    m.base.resize(P);
    for (Index g = 0; g < P; ++g) m.base[g] = base_dist(rng);
    m.extent = std::max(1e-12, spec.class_separation + spec.latent_spread);
    return m;
  }

  /// Noise-free log-expression rows for latent rows `z` (n x latent).
  Matrix log_expression(const Matrix& z, const SynthSpec& spec) const {
    Matrix pre = (z / extent) * w1.transpose();
    pre.rowwise() += b1.transpose();
    const double s = spec.nonlinearity_strength;
    // Normalized so h(1) = 1: linear as s -> 0, a sign function as s grows.
    Matrix h = pre;
    if (s > 0.0) {
      const double norm = 1.0 / (1.0 + std::exp(-s)) - 0.5;
      h = pre.unaryExpr([s, norm](double v) { return (1.0 / (1.0 + std::exp(-s * v)) - 0.5) / norm; });
    }
    const double scale = spec.amplitude / std::sqrt(double(w1.rows()));
    Matrix out = (h * w2.transpose()) * scale;
    out.rowwise() += base.transpose();
    return out;
  }
};

inline ExpressionDataset generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto model = SynthModel::draw(spec, rng);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Index n = 0;
  for (int c : spec.samples_per_class) n += c;
  Matrix z(n, spec.latent_dim);
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(n));
  Index row = 0;
  for (int c = 0; c < spec.n_classes; ++c) {
    for (int i = 0; i < spec.samples_per_class[static_cast<std::size_t>(c)]; ++i, ++row) {
      for (Index d = 0; d < spec.latent_dim; ++d)
        z(row, d) = model.class_means(c, d) + spec.latent_spread * gauss(rng);
      labels.push_back(synth_class_name(c));
    }
  }
  Matrix logx = model.log_expression(z, spec);
  if (spec.noise > 0.0)
    for (Index j = 0; j < logx.cols(); ++j)
      for (Index i = 0; i < logx.rows(); ++i) logx(i, j) += spec.noise * gauss(rng);

  ExpressionDataset ds;
  ds.values = logx.array().exp().matrix();
  ds.labels = std::move(labels);
  char buf[32];
  for (Index i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "S%05lld", static_cast<long long>(i + 1));
    ds.sample_ids.emplace_back(buf);
  }
  for (Index g = 0; g < spec.feature_dim; ++g) {
    std::snprintf(buf, sizeof buf, "G%05lld", static_cast<long long>(g + 1));
    ds.gene_ids.emplace_back(buf);
  }
  return ds;
}

}  // namespace geneae

#endif  // GENEAE_SYNTH_HPP
