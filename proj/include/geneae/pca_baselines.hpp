#ifndef GENEAE_PCA_BASELINES_HPP
#define GENEAE_PCA_BASELINES_HPP

/// @file pca_baselines.hpp PCA dimension reduction and the classical
/// classifiers compared against the autoencoder: LDA, a small neural
/// network, k-nearest neighbours, random forest and extremely randomized
/// trees.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "eval.hpp"
#include "expr_data.hpp"
#include "nn_core.hpp"
#include "transfer.hpp"

namespace geneae {

// ---------------------------------------------------------------------------
// PCA

enum class PcaRoute { automatic, gram, covariance };

struct PCAModel {
  Vector mean;
  Matrix components;  // k x p, orthonormal rows
  Vector eigenvalues;  // non-increasing
  /// Fewer than the requested number of positive eigenvalues were found.
  bool rank_deficient = false;

  Index k() const { return components.rows(); }
  Index n_features() const { return mean.size(); }
};

namespace detail {

/// Flips v so its largest-magnitude entry (first one on ties) is positive.
inline void canonical_sign(Eigen::Ref<Vector> v) {
  Index at = 0;
  v.cwiseAbs().maxCoeff(&at);
  if (v[at] < 0.0) v = -v;
}

}  // namespace detail

/// Top-k principal directions of the sample covariance (denominator n-1).
///
/// With more features than samples the n x n Gram matrix is decomposed and
/// directions are recovered as X_c^T u / sqrt((n-1) lambda); that route can
/// only produce directions with positive eigenvalues, so a rank-deficient
/// fit returns fewer than k. The covariance route always returns k,
/// padding with zero-eigenvalue directions.
inline PCAModel fit_pca(const Matrix& x, Index k, PcaRoute route = PcaRoute::automatic) {
  const Index n = x.rows(), p = x.cols();
  if (n < 2) fail(ErrorCode::empty_dataset, "PCA needs at least 2 samples");
  if (k <= 0 || k > std::min(n - 1, p))
    fail(ErrorCode::bad_hyperparams, "k = " + std::to_string(k) + " outside [1, min(n-1, p) = " +
                                         std::to_string(std::min(n - 1, p)) + "]");
  if (route == PcaRoute::automatic) route = p > n ? PcaRoute::gram : PcaRoute::covariance;

  PCAModel m;
  m.mean = x.colwise().mean().transpose();
  const Matrix xc = x.rowwise() - m.mean.transpose();
  const double denom = static_cast<double>(n - 1);

  const Matrix scatter = route == PcaRoute::gram ? Matrix(xc * xc.transpose() / denom)
                                                 : Matrix(xc.transpose() * xc / denom);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(scatter);
  if (eig.info() != Eigen::Success) fail(ErrorCode::singular_covariance, "eigendecomposition failed");
  // Eigen sorts ascending.
  const Vector vals = eig.eigenvalues().reverse();
  const Matrix vecs = eig.eigenvectors().rowwise().reverse();
  const double top = std::max(vals[0], 0.0);
  const double tol = top * 1e-10;
  Index positive = 0;
  while (positive < vals.size() && vals[positive] > tol && top > 0.0) ++positive;
  m.rank_deficient = positive < k;

  const Index keep = route == PcaRoute::gram ? std::min(k, positive) : k;
  m.components.resize(keep, p);
  m.eigenvalues.resize(keep);
  for (Index i = 0; i < keep; ++i) {
    Vector v;
    if (route == PcaRoute::gram) {
      v = xc.transpose() * vecs.col(i) / std::sqrt(denom * vals[i]);
      v.normalize();
    } else {
      v = vecs.col(i);
    }
    detail::canonical_sign(v);
    m.components.row(i) = v.transpose();
    m.eigenvalues[i] = i < positive ? vals[i] : 0.0;
  }
  return m;
}

/// (X - mean) * components^T.
inline Matrix pca_transform(const PCAModel& m, const Matrix& x) {
  if (x.cols() != m.n_features())
    fail(ErrorCode::dimension_mismatch, "PCA fitted on " + std::to_string(m.n_features()) + " features, got " +
                                            std::to_string(x.cols()));
  return (x.rowwise() - m.mean.transpose()) * m.components.transpose();
}

inline Matrix pca_reconstruct(const PCAModel& m, const Matrix& codes) {
  Matrix out = codes * m.components;
  out.rowwise() += m.mean.transpose();
  return out;
}

/// Keeps the first `k` components of a fitted model.
inline PCAModel pca_truncate(const PCAModel& m, Index k) {
  PCAModel t = m;
  k = std::min(k, m.k());
  t.components = m.components.topRows(k);
  t.eigenvalues = m.eigenvalues.head(k);
  return t;
}

// ---------------------------------------------------------------------------
// Linear discriminant analysis

struct LdaOptions {
  bool regularize = true;
  /// Ridge weight relative to trace(S)/k.
  double ridge = 1e-6;
};

struct LdaModel {
  std::vector<int> classes;  // ascending
  Matrix means;              // classes x k
  Vector log_priors;
  Matrix coef;      // classes x k: mean_c^T S^-1
  Vector intercept; // -1/2 mean_c^T S^-1 mean_c + log prior_c
};

/// Gaussian classes sharing the pooled within-class covariance.
inline LdaModel fit_lda(const Matrix& z, const std::vector<int>& y, const LdaOptions& opt = {}) {
  if (static_cast<Index>(y.size()) != z.rows()) fail(ErrorCode::dimension_mismatch, "one label per row required");
  std::map<int, std::vector<Index>> by;
  for (std::size_t i = 0; i < y.size(); ++i) by[y[i]].push_back(static_cast<Index>(i));
  if (by.size() < 2) fail(ErrorCode::class_too_small, "LDA needs at least 2 classes");
  for (const auto& [c, rows] : by)
    if (rows.size() < 2) fail(ErrorCode::class_too_small, "class " + std::to_string(c) + " has fewer than 2 samples");

  const Index k = z.cols(), n = z.rows(), C = static_cast<Index>(by.size());
  LdaModel m;
  m.means.resize(C, k);
  m.log_priors.resize(C);
  Matrix scatter = Matrix::Zero(k, k);
  Index ci = 0;
  for (const auto& [c, rows] : by) {
    m.classes.push_back(c);
    Vector mu = Vector::Zero(k);
    for (Index r : rows) mu += z.row(r).transpose();
    mu /= static_cast<double>(rows.size());
    m.means.row(ci) = mu.transpose();
    for (Index r : rows) {
      const Vector d = z.row(r).transpose() - mu;
      scatter.noalias() += d * d.transpose();
    }
    m.log_priors[ci] = std::log(static_cast<double>(rows.size()) / static_cast<double>(n));
    ++ci;
  }
  Matrix cov = scatter / static_cast<double>(std::max<Index>(n - C, 1));
  if (opt.regularize) {
    double scale = cov.trace() / static_cast<double>(k);
    if (!(scale > 0.0)) scale = 1.0;
    cov.diagonal().array() += opt.ridge * scale;
  }
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14))
    fail(ErrorCode::singular_covariance, "pooled within-class covariance is singular");
  m.coef = llt.solve(m.means.transpose()).transpose();
  m.intercept.resize(C);
  for (Index c = 0; c < C; ++c)
    m.intercept[c] = -0.5 * m.coef.row(c).dot(m.means.row(c)) + m.log_priors[c];
  return m;
}

/// Discriminant scores, one column per class in `classes` order.
inline Matrix lda_decision(const LdaModel& m, const Matrix& z) {
  if (z.cols() != m.means.cols()) fail(ErrorCode::dimension_mismatch, "LDA feature count mismatch");
  Matrix s = z * m.coef.transpose();
  s.rowwise() += m.intercept.transpose();
  return s;
}

inline std::vector<int> lda_predict(const LdaModel& m, const Matrix& z) {
  auto idx = argmax_rows(lda_decision(m, z));
  for (auto& i : idx) i = m.classes[static_cast<std::size_t>(i)];
  return idx;
}

// ---------------------------------------------------------------------------
// k-nearest neighbours

/// Majority vote among the k nearest training rows by Euclidean distance.
/// Equal distances prefer the lower training index; tied votes prefer the
/// lower class id.
inline std::vector<int> knn_predict(const Matrix& train, const std::vector<int>& train_y, const Matrix& query, int k) {
  const Index n = train.rows();
  if (n == 0) fail(ErrorCode::empty_training_set, "KNN has no training rows");
  if (static_cast<Index>(train_y.size()) != n) fail(ErrorCode::dimension_mismatch, "one label per training row required");
  if (k < 1 || k > n) fail(ErrorCode::bad_hyperparams, "k = " + std::to_string(k) + " outside [1, n_train]");
  if (query.cols() != train.cols()) fail(ErrorCode::dimension_mismatch, "query feature count mismatch");
  const int n_classes = *std::max_element(train_y.begin(), train_y.end()) + 1;

  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n));
  std::vector<int> votes(static_cast<std::size_t>(n_classes));
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(query.rows()));
  for (Index q = 0; q < query.rows(); ++q) {
    for (Index i = 0; i < n; ++i) {
      double d = 0.0;
      for (Index c = 0; c < train.cols(); ++c) {
        const double diff = train(i, c) - query(q, c);
        d += diff * diff;
      }
      dist[static_cast<std::size_t>(i)] = {d, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    std::fill(votes.begin(), votes.end(), 0);
    for (int j = 0; j < k; ++j) ++votes[static_cast<std::size_t>(train_y[static_cast<std::size_t>(dist[static_cast<std::size_t>(j)].second)])];
    out.push_back(static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random forest / extremely randomized trees

enum class ForestMode { random_forest, extra_trees };

inline std::string_view to_string(ForestMode m) {
  return m == ForestMode::random_forest ? "random_forest" : "extra_trees";
}

struct ForestParams {
  int n_trees = 100;
  int max_depth = 0;     // 0: unlimited
  int max_features = 0;  // 0: floor(sqrt(features)), at least 1
  int min_samples_split = 2;

  void validate() const {
    if (n_trees < 1) fail(ErrorCode::bad_hyperparams, "n_trees must be positive");
    if (max_depth < 0) fail(ErrorCode::bad_hyperparams, "max_depth must be non-negative");
    if (max_features < 0) fail(ErrorCode::bad_hyperparams, "max_features must be non-negative");
    if (min_samples_split < 2) fail(ErrorCode::bad_hyperparams, "min_samples_split must be at least 2");
  }

  int features_per_split(Index n_features) const {
    if (max_features > 0) return static_cast<int>(std::min<Index>(max_features, n_features));
    return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_features)))));
  }
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;   // rows with value <= threshold
  int right = -1;
  int depth = 0;
  std::vector<std::int64_t> counts;  // in-bag class counts reaching this node

  bool is_leaf() const { return feature < 0; }
};

inline int majority(const std::vector<std::int64_t>& counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

struct DecisionTree {
  std::vector<TreeNode> nodes;
  /// How many times each training row was drawn for this tree.
  std::vector<int> in_bag;

  int leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    int at = 0;
    while (!nodes[static_cast<std::size_t>(at)].is_leaf()) {
      const auto& nd = nodes[static_cast<std::size_t>(at)];
      at = row[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return at;
  }

  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    return majority(nodes[static_cast<std::size_t>(leaf_of(row))].counts);
  }

  int depth() const {
    int d = 0;
    for (const auto& nd : nodes) d = std::max(d, nd.depth);
    return d;
  }
};

struct ForestModel {
  ForestMode mode = ForestMode::random_forest;
  ForestParams params;
  int n_classes = 0;
  Index n_features = 0;
  std::vector<DecisionTree> trees;
};

namespace detail {

inline double gini(const std::vector<std::int64_t>& counts, std::int64_t total) {
  if (total == 0) return 0.0;
  double s = 0.0;
  for (auto c : counts) {
    const double f = static_cast<double>(c) / static_cast<double>(total);
    s += f * f;
  }
  return 1.0 - s;
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double impurity = std::numeric_limits<double>::infinity();
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<int>& y, int n_classes, ForestMode mode, const ForestParams& params,
              std::uint64_t seed)
      : x_(x), y_(y), n_classes_(n_classes), mode_(mode), params_(params), rng_(seed) {}

  DecisionTree build() {
    const Index n = x_.rows();
    DecisionTree tree;
    tree.in_bag.assign(static_cast<std::size_t>(n), 0);
    std::vector<Index> rows;
    rows.reserve(static_cast<std::size_t>(n));
    if (mode_ == ForestMode::random_forest) {
      std::uniform_int_distribution<Index> pick(0, n - 1);
      for (Index i = 0; i < n; ++i) rows.push_back(pick(rng_));
    } else {
      for (Index i = 0; i < n; ++i) rows.push_back(i);
    }
    for (Index r : rows) ++tree.in_bag[static_cast<std::size_t>(r)];

    struct Pending {
      int node;
      std::size_t begin, end;
    };
    tree.nodes.push_back(make_node(rows, 0, rows.size(), 0));
    std::vector<Pending> stack{{0, 0, rows.size()}};
    features_.resize(static_cast<std::size_t>(x_.cols()));
    while (!stack.empty()) {
      const Pending cur = stack.back();
      stack.pop_back();
      const auto& node = tree.nodes[static_cast<std::size_t>(cur.node)];
      const auto size = static_cast<std::int64_t>(cur.end - cur.begin);
      const int depth = node.depth;
      const bool pure = std::count_if(node.counts.begin(), node.counts.end(), [](auto c) { return c > 0; }) <= 1;
      if (pure || size < params_.min_samples_split || (params_.max_depth > 0 && depth >= params_.max_depth)) continue;

      const SplitChoice best = choose_split(rows, cur.begin, cur.end);
      if (best.feature < 0) continue;
      auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(cur.begin),
                                rows.begin() + static_cast<std::ptrdiff_t>(cur.end),
                                [&](Index r) { return x_(r, best.feature) <= best.threshold; });
      const auto split_at = static_cast<std::size_t>(mid - rows.begin());
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(make_node(rows, cur.begin, split_at, depth + 1));
      const int right = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(make_node(rows, split_at, cur.end, depth + 1));
      auto& parent = tree.nodes[static_cast<std::size_t>(cur.node)];
      parent.feature = best.feature;
      parent.threshold = best.threshold;
      parent.left = left;
      parent.right = right;
      stack.push_back({right, split_at, cur.end});
      stack.push_back({left, cur.begin, split_at});
    }
    return tree;
  }

 private:
  TreeNode make_node(const std::vector<Index>& rows, std::size_t begin, std::size_t end, int depth) const {
    TreeNode nd;
    nd.depth = depth;
    nd.counts.assign(static_cast<std::size_t>(n_classes_), 0);
    for (std::size_t i = begin; i < end; ++i) ++nd.counts[static_cast<std::size_t>(y_[static_cast<std::size_t>(rows[i])])];
    return nd;
  }

  SplitChoice choose_split(const std::vector<Index>& rows, std::size_t begin, std::size_t end) {
    const int mtry = params_.features_per_split(x_.cols());
    std::iota(features_.begin(), features_.end(), 0);
    SplitChoice best;
    for (int f = 0; f < mtry; ++f) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(f), features_.size() - 1);
      std::swap(features_[static_cast<std::size_t>(f)], features_[pick(rng_)]);
      const int feat = features_[static_cast<std::size_t>(f)];
      if (mode_ == ForestMode::random_forest)
        best_threshold(rows, begin, end, feat, best);
      else
        random_threshold(rows, begin, end, feat, best);
    }
    return best;
  }

  void consider(const std::vector<std::int64_t>& left, std::int64_t n_left, const std::vector<std::int64_t>& right,
                std::int64_t n_right, int feat, double threshold, SplitChoice& best) const {
    const double total = static_cast<double>(n_left + n_right);
    const double imp = (static_cast<double>(n_left) * gini(left, n_left) +
                        static_cast<double>(n_right) * gini(right, n_right)) / total;
    if (imp < best.impurity) best = {feat, threshold, imp};
  }

  void best_threshold(const std::vector<Index>& rows, std::size_t begin, std::size_t end, int feat,
                      SplitChoice& best) {
    sorted_.clear();
    for (std::size_t i = begin; i < end; ++i) sorted_.emplace_back(x_(rows[i], feat), y_[static_cast<std::size_t>(rows[i])]);
    std::sort(sorted_.begin(), sorted_.end());
    std::vector<std::int64_t> left(static_cast<std::size_t>(n_classes_), 0), right(left.size(), 0);
    for (const auto& [v, c] : sorted_) ++right[static_cast<std::size_t>(c)];
    const auto n = static_cast<std::int64_t>(sorted_.size());
    for (std::int64_t i = 0; i + 1 < n; ++i) {
      const auto c = static_cast<std::size_t>(sorted_[static_cast<std::size_t>(i)].second);
      ++left[c];
      --right[c];
      const double a = sorted_[static_cast<std::size_t>(i)].first, b = sorted_[static_cast<std::size_t>(i + 1)].first;
      if (!(a < b)) continue;
      double t = a + (b - a) / 2.0;
      if (!(t < b)) t = a;
      consider(left, i + 1, right, n - i - 1, feat, t, best);
    }
  }

  void random_threshold(const std::vector<Index>& rows, std::size_t begin, std::size_t end, int feat,
                        SplitChoice& best) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = std::min(lo, x_(rows[i], feat));
      hi = std::max(hi, x_(rows[i], feat));
    }
    if (!(lo < hi)) return;
    std::uniform_real_distribution<double> draw(lo, hi);
    double t = draw(rng_);
    if (!(t < hi)) t = lo;
    std::vector<std::int64_t> left(static_cast<std::size_t>(n_classes_), 0), right(left.size(), 0);
    std::int64_t nl = 0, nr = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto c = static_cast<std::size_t>(y_[static_cast<std::size_t>(rows[i])]);
      if (x_(rows[i], feat) <= t) {
        ++left[c];
        ++nl;
      } else {
        ++right[c];
        ++nr;
      }
    }
    consider(left, nl, right, nr, feat, t, best);
  }

  const Matrix& x_;
  const std::vector<int>& y_;
  int n_classes_;
  ForestMode mode_;
  ForestParams params_;
  Rng rng_;
  std::vector<int> features_;
  std::vector<std::pair<double, int>> sorted_;
};

}  // namespace detail

/// random_forest: bootstrap rows, best Gini threshold per sampled feature.
/// extra_trees: all rows, one uniform random threshold per sampled feature.
/// Tree t is grown from derive_seed(seed, t), independent of other trees.
inline ForestModel fit_forest(const Matrix& z, const std::vector<int>& y, ForestMode mode,
                              const ForestParams& params, std::uint64_t seed) {
  params.validate();
  if (z.rows() < 2) fail(ErrorCode::empty_training_set, "forest needs at least 2 rows");
  if (static_cast<Index>(y.size()) != z.rows()) fail(ErrorCode::dimension_mismatch, "one label per row required");
  for (int c : y)
    if (c < 0) fail(ErrorCode::label_out_of_range, "negative class id");
  ForestModel m;
  m.mode = mode;
  m.params = params;
  m.n_classes = *std::max_element(y.begin(), y.end()) + 1;
  m.n_features = z.cols();
  m.trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t)
    m.trees.push_back(
        detail::TreeBuilder(z, y, m.n_classes, mode, params, derive_seed(seed, static_cast<std::uint64_t>(t))).build());
  return m;
}

/// Majority vote over trees; ties go to the lowest class id.
inline std::vector<int> forest_predict(const ForestModel& m, const Matrix& z) {
  if (z.cols() != m.n_features) fail(ErrorCode::dimension_mismatch, "forest feature count mismatch");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(z.rows()));
  std::vector<std::int64_t> votes(static_cast<std::size_t>(m.n_classes));
  for (Index r = 0; r < z.rows(); ++r) {
    std::fill(votes.begin(), votes.end(), 0);
    for (const auto& t : m.trees) ++votes[static_cast<std::size_t>(t.predict(z.row(r)))];
    out.push_back(majority(votes));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Neural network on PCA codes

struct PcaNetOptions {
  std::vector<Index> hidden_widths{64};
  TrainConfig config = default_config();
  ClassifierTraining training;

  static TrainConfig default_config() {
    TrainConfig c;
    c.epochs = 200;
    return c;
  }
};

/// k -> 64 (ReLU) -> logistic or softmax output, trained on codes.
inline DenseNetwork fit_pca_nn(const Matrix& z, const std::vector<int>& y, int n_classes,
                               const PcaNetOptions& opt = {}) {
  ClassifierSpec spec{opt.hidden_widths, n_classes, Activation::relu};
  spec.validate();
  std::vector<Index> dims{z.cols()};
  dims.insert(dims.end(), spec.head_hidden_widths.begin(), spec.head_hidden_widths.end());
  dims.push_back(spec.output_width());
  auto net = init_glorot<double>(std::span<const Index>(dims), derive_seed(opt.config.seed, "init"),
                                 Activation::relu, spec.output_activation());
  train_classifier(net, z, y, opt.config, opt.training);
  return net;
}

// ---------------------------------------------------------------------------
// Comparison suite

struct BaselineOptions {
  Index pca_k = 40;
  int knn_k = 5;
  ForestParams forest;
  LdaOptions lda;
  PcaNetOptions nn;
};

struct BaselineRow {
  std::string method;
  BinaryMetrics metrics;
};

struct BaselineReport {
  std::vector<BaselineRow> rows;
  Index pca_components = 0;
  bool pca_rank_deficient = false;
};

inline const std::vector<std::string>& baseline_methods() {
  static const std::vector<std::string> names{"PCA-LDA", "PCA-Neural Network", "PCA-K Nearest Neighbor",
                                              "PCA-Random Forest", "PCA-Extremely Randomized Tree"};
  return names;
}

/// Detection-task comparison. Scaler and PCA are fitted on `train` only and
/// all five classifiers consume the same codes.
inline BaselineReport run_baseline_suite(const ExpressionDataset& train, const ExpressionDataset& test,
                                         const LabelVocabulary& vocab, const BaselineOptions& opt,
                                         std::uint64_t seed) {
  const auto y_train = encode_labels(train, vocab, LabelMode::binary);
  const auto y_test = encode_labels(test, vocab, LabelMode::binary);
  if (train.n_features() != test.n_features()) fail(ErrorCode::dimension_mismatch, "train/test feature counts differ");

  const auto scaler = fit_minmax(train);
  const Matrix x_train = apply_minmax(scaler, train.values);
  const Matrix x_test = apply_minmax(scaler, test.values);

  const Index k = std::min({opt.pca_k, train.n_samples() - 1, train.n_features()});
  const auto pca = fit_pca(x_train, k);
  const Matrix z_train = pca_transform(pca, x_train);
  const Matrix z_test = pca_transform(pca, x_test);

  BaselineReport rep;
  rep.pca_components = pca.k();
  rep.pca_rank_deficient = pca.rank_deficient;
  auto score = [&](const std::string& name, const std::vector<int>& pred) {
    rep.rows.push_back({name, binary_metrics(confusion_matrix(y_test, pred, 2), 1)});
  };

  const auto& names = baseline_methods();
  score(names[0], lda_predict(fit_lda(z_train, y_train, opt.lda), z_test));

  PcaNetOptions nn = opt.nn;
  nn.config.seed = derive_seed(seed, "pca-nn");
  nn.config.batch_size = static_cast<int>(std::min<Index>(nn.config.batch_size, z_train.rows()));
  score(names[1], predict(fit_pca_nn(z_train, y_train, 2, nn), z_test).classes);

  score(names[2], knn_predict(z_train, y_train, z_test, std::min<int>(opt.knn_k, static_cast<int>(z_train.rows()))));
  score(names[3], forest_predict(fit_forest(z_train, y_train, ForestMode::random_forest, opt.forest,
                                            derive_seed(seed, "random-forest")),
                                 z_test));
  score(names[4], forest_predict(fit_forest(z_train, y_train, ForestMode::extra_trees, opt.forest,
                                            derive_seed(seed, "extra-trees")),
                                 z_test));
  return rep;
}

inline std::string render_csv(const BaselineReport& rep) {
  std::ostringstream os;
  os << "method,accuracy,fpr,fnr\n";
  auto num = [](const std::optional<double>& v) {
    if (!v) return std::string("NA");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return std::string(buf);
  };
  for (const auto& r : rep.rows)
    os << r.method << ',' << num(r.metrics.accuracy) << ',' << num(r.metrics.fpr) << ',' << num(r.metrics.fnr) << '\n';
  return os.str();
}

/// Fixed-width table with Method / Accuracy / FPR / FNR columns, rates as
/// percentages with two decimals.
inline std::string render_table(const BaselineReport& rep) {
  std::size_t w = std::string("Method").size();
  for (const auto& r : rep.rows) w = std::max(w, r.method.size());
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %9s  %7s  %7s\n", static_cast<int>(w), "Method", "Accuracy", "FPR", "FNR");
  os << line << std::string(w + 31, '-') << '\n';
  for (const auto& r : rep.rows) {
    std::snprintf(line, sizeof line, "%-*s  %9s  %7s  %7s\n", static_cast<int>(w), r.method.c_str(),
                  percent(r.metrics.accuracy).c_str(), percent(r.metrics.fpr).c_str(), percent(r.metrics.fnr).c_str());
    os << line;
  }
  return os.str();
}

}  // namespace geneae

#endif  // GENEAE_PCA_BASELINES_HPP
