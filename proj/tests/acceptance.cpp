#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "jacobi_oracle.hpp"
#include "test_util.hpp"

using namespace geneae;
using testutil::random_matrix;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared transfer pipeline

struct PipelineSettings {
  std::vector<Index> encoder_widths{32, 16};
  Index code_dim = 8;
  int ae_epochs = 200;
  double ae_lr = 1e-3;
  int clf_epochs = 200;
  double clf_lr = 1e-2;
  int starve_class = -1;
  int starve_to = 10;
};

struct PipelineResult {
  EvalReport ae;
  EvalReport pca_lda;
  std::string ae_json;
  std::string clf_json;
  std::string report_json;
};

PipelineResult run_pipeline(const SynthSpec& spec, const PipelineSettings& p, std::uint64_t seed) {
  const auto ds = generate(spec);
  auto sp = stratified_split(ds, 0.8, derive_seed(seed, "split"));
  if (p.starve_class >= 0) {
    const auto name = synth_class_name(p.starve_class);
    std::vector<Index> keep;
    int seen = 0;
    for (Index i = 0; i < sp.train.n_samples(); ++i) {
      if ((*sp.train.labels)[static_cast<std::size_t>(i)] == name && seen++ >= p.starve_to) continue;
      keep.push_back(i);
    }
    sp.train = sp.train.subset(keep);
  }
  const auto vocab = LabelVocabulary::from_labels(*ds.labels);
  const auto mode = spec.n_classes == 2 ? LabelMode::binary : LabelMode::multiclass;
  const auto y_train = encode_labels(sp.train, vocab, mode);
  const auto y_test = encode_labels(sp.test, vocab, mode);
  const auto scaler = fit_minmax(sp.train);
  const Matrix x_train = apply_minmax(scaler, sp.train.values);
  const Matrix x_test = apply_minmax(scaler, sp.test.values);

  const AutoencoderSpec as{spec.feature_dim, p.encoder_widths, p.code_dim};
  auto ae = build_autoencoder(as, derive_seed(seed, "ae-init"));
  TrainConfig ac;
  ac.epochs = p.ae_epochs;
  ac.learning_rate = p.ae_lr;
  ac.seed = derive_seed(seed, "ae-train");
  train_autoencoder(ae, x_train, ac);

  ClassifierBundle bundle;
  bundle.task = mode == LabelMode::binary ? Task::detect : Task::type;
  bundle.vocab = vocab;
  bundle.scaler = scaler;
  bundle.network = build_transfer_classifier(extract_encoder(ae, as), ClassifierSpec{{64}, static_cast<int>(vocab.size())},
                                             derive_seed(seed, "clf-init"));
  TrainConfig cc;
  cc.epochs = p.clf_epochs;
  cc.learning_rate = p.clf_lr;
  cc.seed = derive_seed(seed, "clf-train");
  train_classifier(bundle.network, x_train, y_train, cc);

  PipelineResult r;
  const auto names = bundle.class_names();
  r.ae = evaluate(y_test, predict(bundle.network, x_test).classes, names);
  const auto pca = fit_pca(x_train, p.code_dim);
  const auto lda = fit_lda(pca_transform(pca, x_train), y_train);
  r.pca_lda = evaluate(y_test, lda_predict(lda, pca_transform(pca, x_test)), names);
  r.ae_json = bundle_to_json(AutoencoderBundle{as, scaler, ae, false}).dump(2);
  r.clf_json = bundle_to_json(bundle).dump(2);
  r.report_json = report_to_json(r.ae).dump(2);
  return r;
}

// ---------------------------------------------------------------------------
// Criteria

Outcome ac1_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Combo {
    Activation hidden, output;
    LossKind loss;
  };
  const Combo combos[] = {
      {Activation::sigmoid, Activation::sigmoid, LossKind::reconstruction},
      {Activation::relu, Activation::sigmoid, LossKind::reconstruction},
      {Activation::sigmoid, Activation::softmax, LossKind::classification},
      {Activation::relu, Activation::softmax, LossKind::classification},
      {Activation::sigmoid, Activation::sigmoid, LossKind::classification},
      {Activation::relu, Activation::sigmoid, LossKind::classification},
  };
  double worst = 0.0;
  Rng rng(kSeed);
  std::uniform_int_distribution<Index> width(2, 6), rows(3, 8), depth(1, 3);
  for (int i = 0; i < 20; ++i) {
    const auto& c = combos[static_cast<std::size_t>(i) % std::size(combos)];
    std::vector<Index> dims{width(rng)};
    for (Index d = depth(rng); d > 0; --d) dims.push_back(width(rng));
    const bool logistic = c.loss == LossKind::classification && c.output == Activation::sigmoid;
    const Index out = logistic ? 1 : width(rng) + 1;
    dims.push_back(out);
    auto net = init_glorot<double>(std::span<const Index>(dims), derive_seed(kSeed, static_cast<std::uint64_t>(i)),
                                   c.hidden, c.output);
    // Random biases keep ReLU pre-activations off the kink at zero.
    std::uniform_real_distribution<double> bias(-0.5, 0.5);
    for (auto& l : net.layers)
      for (Index j = 0; j < l.biases.size(); ++j) l.biases[j] = bias(rng);
    const Index n = rows(rng);
    const Matrix x = random_matrix(n, dims.front(), 1000 + static_cast<std::uint64_t>(i), 0.0, 1.0);
    Matrix t;
    if (c.loss == LossKind::reconstruction) {
      t = random_matrix(n, out, 2000 + static_cast<std::uint64_t>(i), 0.0, 1.0);
    } else {
      std::vector<int> y;
      std::uniform_int_distribution<int> cls(0, logistic ? 1 : static_cast<int>(out) - 1);
      for (Index r = 0; r < n; ++r) y.push_back(cls(rng));
      t = classification_targets(y, out);
    }
    worst = std::max(worst, gradient_check(net, x, t, c.loss, 1e-5));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-5 && secs < 30.0, fmt("max relative error %.3g over 20 networks, %.2f s", worst, secs)};
}

Outcome ac2_pca_oracle() {
  Rng rng(kSeed);
  double worst_val = 0.0, worst_vec = 0.0, worst_ortho = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Index n = std::uniform_int_distribution<Index>(2, 20)(rng);
    const Index p = std::uniform_int_distribution<Index>(1, 50)(rng);
    const Index k = std::uniform_int_distribution<Index>(1, std::min(n - 1, p))(rng);
    const Matrix x = random_matrix(n, p, 500 + static_cast<std::uint64_t>(i));
    const auto m = fit_pca(x, k);
    oracle::Dense rows(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(p)));
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < p; ++c) rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = x(r, c);
    const auto ref = oracle::jacobi(oracle::covariance(rows));
    if (m.k() != k) return {false, fmt("matrix %g returned %g of %g components", i, double(m.k()), double(k))};
    for (Index j = 0; j < k; ++j) {
      const auto& v = ref.vectors[static_cast<std::size_t>(j)];
      double plus = 0.0, minus = 0.0;
      for (Index c = 0; c < p; ++c) {
        plus = std::max(plus, std::abs(m.components(j, c) - v[static_cast<std::size_t>(c)]));
        minus = std::max(minus, std::abs(m.components(j, c) + v[static_cast<std::size_t>(c)]));
      }
      worst_vec = std::max(worst_vec, std::min(plus, minus));
      worst_val = std::max(worst_val, std::abs(m.eigenvalues[j] - ref.values[static_cast<std::size_t>(j)]));
    }
    worst_ortho = std::max(worst_ortho, (m.components * m.components.transpose() - Matrix::Identity(k, k)).cwiseAbs().maxCoeff());
  }
  return {worst_val < 1e-8 && worst_vec < 1e-8 && worst_ortho < 1e-8,
          fmt("max |eigenvalue diff| %.3g, max component diff %.3g, max orthonormality error %.3g", worst_val, worst_vec,
              worst_ortho)};
}

int knn_oracle(const Matrix& train, const std::vector<int>& y, const Eigen::RowVectorXd& q, int k) {
  std::vector<std::pair<double, Index>> d;
  for (Index i = 0; i < train.rows(); ++i) d.emplace_back((train.row(i) - q).squaredNorm(), i);
  std::stable_sort(d.begin(), d.end());
  std::map<int, int> votes;
  for (int j = 0; j < k; ++j) ++votes[y[static_cast<std::size_t>(d[static_cast<std::size_t>(j)].second)]];
  int best = -1, count = -1;
  for (const auto& [c, v] : votes)
    if (v > count) best = c, count = v;
  return best;
}

Outcome ac3_knn_oracle() {
  Rng rng(kSeed);
  int mismatches = 0, queries = 0;
  for (int i = 0; i < 100; ++i) {
    const Index n = std::uniform_int_distribution<Index>(1, 30)(rng);
    const Index p = std::uniform_int_distribution<Index>(1, 4)(rng);
    const int classes = std::uniform_int_distribution<int>(1, 4)(rng);
    // Small integer grids force equal distances; every third instance also
    // duplicates training rows under different labels.
    std::uniform_int_distribution<int> grid(-2, 2);
    Matrix train(n, p);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < p; ++c) train(r, c) = grid(rng);
    if (i % 3 == 0 && n > 1) train.row(n - 1) = train.row(0);
    std::vector<int> y;
    std::uniform_int_distribution<int> cls(0, classes - 1);
    for (Index r = 0; r < n; ++r) y.push_back(cls(rng));
    y[0] = classes - 1;
    Matrix q(10, p);
    for (Index r = 0; r < q.rows(); ++r)
      for (Index c = 0; c < p; ++c) q(r, c) = grid(rng);
    if (i % 2 == 0) q.row(0) = train.row(0);
    const int k = std::uniform_int_distribution<int>(1, static_cast<int>(n))(rng);
    const auto got = knn_predict(train, y, q, k);
    for (Index r = 0; r < q.rows(); ++r, ++queries)
      mismatches += got[static_cast<std::size_t>(r)] != knn_oracle(train, y, q.row(r), k);
  }
  return {mismatches == 0, fmt("%g mismatches over 100 instances (%g queries)", mismatches, queries)};
}

Outcome ac4_autoencoder_learning() {
  SynthSpec s;
  s.samples_per_class = {500, 500};
  s.feature_dim = 50;
  s.latent_dim = 3;
  s.amplitude = 4.0;
  s.seed = kSeed;
  const auto ds = generate(s);
  const Matrix x = apply_minmax(fit_minmax(ds), ds.values);
  const AutoencoderSpec spec{50, {100, 50}, 3};
  auto net = build_autoencoder(spec, derive_seed(kSeed, "ae-init"));
  TrainConfig c;
  c.epochs = 300;
  c.seed = derive_seed(kSeed, "ae-train");
  const auto t0 = std::chrono::steady_clock::now();
  const auto h = train_autoencoder(net, x, c);
  const double secs = seconds_since(t0);
  const double ratio = h.train_loss.back() / h.train_loss.front();
  return {ratio <= 0.5 && secs < 120.0,
          fmt("loss %.4f -> %.4f (ratio %.3f), %.1f s", h.train_loss.front(), h.train_loss.back(), ratio, secs)};
}

Outcome ac5_detection() {
  SynthSpec s;
  s.samples_per_class = {500, 500};
  s.class_separation = 6.0;
  s.noise = 0.3;
  s.seed = kSeed;
  const auto r = run_pipeline(s, PipelineSettings{}, kSeed);
  const double fpr = r.ae.fpr.value_or(1.0), fnr = r.ae.fnr.value_or(1.0);
  const Index n_test = r.ae.confusion.sum();
  return {r.ae.accuracy >= 0.95 && fpr <= 0.05 && fnr <= 0.05 && n_test == 200,
          fmt("test accuracy %.4f, FPR %.4f, FNR %.4f on %g test samples", r.ae.accuracy, fpr, fnr, double(n_test))};
}

Outcome ac6_typing() {
  SynthSpec s;
  s.n_classes = 10;
  s.samples_per_class = std::vector<int>(10, 100);
  s.latent_dim = 3;
  s.class_separation = 16.0;
  s.noise = 0.3;
  s.seed = kSeed;
  PipelineSettings p;
  p.code_dim = 8;
  p.ae_epochs = 300;
  p.ae_lr = 5e-3;
  const auto balanced = run_pipeline(s, p, kSeed);
  p.starve_class = 9;
  const auto starved = run_pipeline(s, p, kSeed);
  const double before = balanced.ae.per_class.recall[9].value_or(0.0);
  const double after = starved.ae.per_class.recall[9].value_or(0.0);
  const int above = balanced.ae.per_class.above_threshold;
  return {above >= 8 && after < before,
          fmt("%g of 10 classes with recall > 0.90; starved class recall %.2f vs %.2f balanced", above, after, before)};
}

Outcome ac7_nonlinearity() {
  auto spec_for = [](std::uint64_t seed) {
    SynthSpec s;
    s.n_classes = 8;
    s.samples_per_class = std::vector<int>(8, 200);
    s.latent_dim = 3;
    s.nonlinearity_strength = 25.0;
    s.class_separation = 7.0;
    s.noise = 0.3;
    s.seed = seed;
    return s;
  };
  PipelineSettings p;
  p.code_dim = 3;
  p.ae_epochs = 300;
  p.ae_lr = 5e-3;
  const auto r = run_pipeline(spec_for(kSeed), p, kSeed);
  const double margin = r.ae.accuracy - r.pca_lda.accuracy;
  std::string detail = fmt("seed %g: autoencoder %.4f vs PCA+LDA %.4f (margin %+.2f pts)", double(kSeed),
                           r.ae.accuracy, r.pca_lda.accuracy, 100.0 * margin);
  detail += "; other seeds:";
  for (std::uint64_t seed = 2; seed <= 5; ++seed) {
    const auto o = run_pipeline(spec_for(seed), p, seed);
    detail += fmt(" %+.2f", 100.0 * (o.ae.accuracy - o.pca_lda.accuracy));
  }
  return {margin >= 0.02, detail};
}

Outcome ac8_baseline_suite() {
  SynthSpec s;
  s.samples_per_class = {150, 150};
  s.feature_dim = 80;
  s.seed = kSeed;
  const auto ds = generate(s);
  const auto dir = testutil::temp_dir("acceptance_gdc");
  // GDC-style layout: Ensembl gene columns, tab-separated, label column.
  ExpressionDataset gdc = ds;
  char buf[32];
  for (Index g = 0; g < gdc.n_features(); ++g) {
    std::snprintf(buf, sizeof buf, "ENSG%011lld.%d", static_cast<long long>(g + 1), 7);
    gdc.gene_ids[static_cast<std::size_t>(g)] = buf;
  }
  write_matrix(gdc, dir / "gdc.tsv");
  const auto vocab = LabelVocabulary::tcga();
  const auto loaded = load_matrix(dir / "gdc.tsv", std::string("label"), &vocab);
  const auto sp = stratified_split(loaded, 0.8, derive_seed(kSeed, "split"));
  BaselineOptions opt;
  const auto rep = run_baseline_suite(sp.train, sp.test, vocab, opt, kSeed);

  bool ok = rep.rows.size() == 5;
  for (std::size_t i = 0; ok && i < 5; ++i) ok = rep.rows[i].method == baseline_methods()[i];
  const auto table = render_table(rep);
  std::istringstream lines(table);
  std::string header, rule, line;
  std::getline(lines, header);
  std::getline(lines, rule);
  int body = 0;
  while (std::getline(lines, line)) {
    ++body;
    ok = ok && line.size() == header.size() && std::count(line.begin(), line.end(), '%') == 3;
  }
  ok = ok && body == 5 && header.rfind("Method", 0) == 0 && header.find("Accuracy") != std::string::npos &&
       header.find("FPR") != std::string::npos && header.find("FNR") != std::string::npos &&
       rule.find_first_not_of('-') == std::string::npos;
  const auto csv = render_csv(rep);
  ok = ok && csv.rfind("method,accuracy,fpr,fnr\n", 0) == 0 && std::count(csv.begin(), csv.end(), '\n') == 6;
  std::printf("%s", table.c_str());
  return {ok, fmt("%g method rows on a %gx%g GDC-style matrix", double(rep.rows.size()), double(loaded.n_samples()),
                  double(loaded.n_features()))};
}

Outcome ac9_determinism() {
  SynthSpec s;
  s.samples_per_class = {60, 60};
  s.feature_dim = 30;
  s.seed = 4;
  PipelineSettings p;
  p.ae_epochs = 40;
  p.clf_epochs = 40;
  const auto a = run_pipeline(s, p, 4), b = run_pipeline(s, p, 4);
  const auto ds = generate(s);
  const auto dir = testutil::temp_dir("acceptance_determinism");
  write_matrix(ds, dir / "a.csv");
  write_matrix(generate(s), dir / "b.csv");
  const auto sp = stratified_split(ds, 0.8, 4);
  BaselineOptions opt;
  opt.pca_k = 10;
  opt.forest.n_trees = 20;
  const auto vocab = LabelVocabulary::from_labels(*ds.labels);
  const auto csv_a = render_csv(run_baseline_suite(sp.train, sp.test, vocab, opt, 4));
  const auto csv_b = render_csv(run_baseline_suite(sp.train, sp.test, vocab, opt, 4));
  const bool ok = a.ae_json == b.ae_json && a.clf_json == b.clf_json && a.report_json == b.report_json &&
                  testutil::read_file(dir / "a.csv") == testutil::read_file(dir / "b.csv") && csv_a == csv_b;
  return {ok, ok ? "models, reports, datasets and baseline CSV byte-identical across reruns"
                 : "artifacts differ between reruns"};
}

Outcome ac10_metric_identities() {
  Rng rng(kSeed);
  int accuracy_failures = 0, swap_failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const int classes = std::uniform_int_distribution<int>(2, 6)(rng);
    const int n = std::uniform_int_distribution<int>(0, 60)(rng);
    std::uniform_int_distribution<int> cls(0, classes - 1);
    std::vector<int> t, p;
    for (int j = 0; j < n; ++j) {
      t.push_back(cls(rng));
      p.push_back(cls(rng));
    }
    std::int64_t agree = 0;
    for (int j = 0; j < n; ++j) agree += t[static_cast<std::size_t>(j)] == p[static_cast<std::size_t>(j)];
    const auto c = confusion_matrix(t, p, classes);
    const double direct = n > 0 ? static_cast<double>(agree) / static_cast<double>(n) : 0.0;
    accuracy_failures += accuracy_of(c) != direct || c.trace() != agree;

    std::vector<int> tb, pb, ts, ps;
    for (int j = 0; j < n; ++j) {
      tb.push_back(t[static_cast<std::size_t>(j)] % 2);
      pb.push_back(p[static_cast<std::size_t>(j)] % 2);
      ts.push_back(1 - tb.back());
      ps.push_back(1 - pb.back());
    }
    const auto m = binary_metrics(confusion_matrix(tb, pb, 2), 1);
    const auto w = binary_metrics(confusion_matrix(ts, ps, 2), 0);
    swap_failures += m.accuracy != w.accuracy || m.fpr != w.fpr || m.fnr != w.fnr;
  }
  return {accuracy_failures == 0 && swap_failures == 0,
          fmt("%g accuracy-identity failures, %g label-swap failures over 1000 pairs", accuracy_failures, swap_failures)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"AC1 gradient correctness", ac1_gradients},
      {"AC2 PCA oracle equivalence", ac2_pca_oracle},
      {"AC3 KNN oracle equivalence", ac3_knn_oracle},
      {"AC4 autoencoder learning", ac4_autoencoder_learning},
      {"AC5 end-to-end detection", ac5_detection},
      {"AC6 multiclass typing", ac6_typing},
      {"AC7 nonlinearity separation", ac7_nonlinearity},
      {"AC8 baseline suite output", ac8_baseline_suite},
      {"AC9 determinism", ac9_determinism},
      {"AC10 metric identities", ac10_metric_identities},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
