#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace geneae;
using testutil::code_of;

TEST(Generate, ClassCountsAndNames) {
  SynthSpec s;
  s.samples_per_class = {100, 10};
  s.feature_dim = 30;
  s.seed = 4;
  const auto ds = generate(s);
  EXPECT_EQ(ds.n_samples(), 110);
  EXPECT_EQ(ds.n_features(), 30);
  ASSERT_TRUE(ds.labels.has_value());
  EXPECT_EQ(std::count(ds.labels->begin(), ds.labels->end(), "normal"), 100);
  EXPECT_EQ(std::count(ds.labels->begin(), ds.labels->end(), synth_class_name(1)), 10);
  EXPECT_EQ(synth_class_name(0), "normal");
  EXPECT_EQ(synth_class_name(33), "C034");
}

TEST(Generate, NoiseFreeClassesSeparateUnderOneNearestNeighbour) {
  SynthSpec s;
  s.n_classes = 3;
  s.samples_per_class = {30, 30, 30};
  s.feature_dim = 20;
  s.noise = 0.0;
  s.latent_spread = 0.3;
  s.class_separation = 6.0;
  s.seed = 2;
  const auto ds = generate(s);
  const Matrix x = ds.values.array().log().matrix();
  const auto vocab = LabelVocabulary::from_labels(*ds.labels);
  const auto y = encode_labels(ds, vocab, LabelMode::multiclass);
  int correct = 0;
  for (Index i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Index at = -1;
    for (Index j = 0; j < x.rows(); ++j) {
      if (j == i) continue;
      const double d = (x.row(i) - x.row(j)).squaredNorm();
      if (d < best) best = d, at = j;
    }
    correct += y[static_cast<std::size_t>(at)] == y[static_cast<std::size_t>(i)];
  }
  EXPECT_EQ(correct, x.rows());
}

TEST(Generate, DeterministicPerSeed) {
  SynthSpec s;
  s.seed = 9;
  const auto a = generate(s), b = generate(s);
  EXPECT_TRUE((a.values.array() == b.values.array()).all());
  EXPECT_EQ(*a.labels, *b.labels);
  s.seed = 10;
  EXPECT_FALSE((generate(s).values.array() == a.values.array()).all());
}

TEST(Generate, ValuesFiniteAndPositive) {
  SynthSpec s;
  s.noise = 0.5;
  s.nonlinearity_strength = 8.0;
  s.seed = 3;
  const auto ds = generate(s);
  EXPECT_TRUE(ds.values.allFinite());
  EXPECT_GE(ds.values.minCoeff(), 0.0);
}

TEST(Generate, ClassMeansDiffer) {
  SynthSpec s;
  s.n_classes = 4;
  s.samples_per_class = {50, 50, 50, 50};
  s.seed = 6;
  const auto ds = generate(s);
  const Matrix x = ds.values.array().log().matrix();
  std::vector<Eigen::RowVectorXd> means;
  for (int c = 0; c < 4; ++c) means.push_back(x.middleRows(c * 50, 50).colwise().mean());
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) EXPECT_GT((means[static_cast<std::size_t>(a)] - means[static_cast<std::size_t>(b)]).norm(), 0.1);
}

TEST(Generate, CsvRoundTrip) {
  SynthSpec s;
  s.samples_per_class = {5, 7};
  s.feature_dim = 6;
  s.seed = 1;
  const auto ds = generate(s);
  const auto dir = testutil::temp_dir("synth_roundtrip");
  write_matrix(ds, dir / "data.csv");
  const auto back = load_matrix(dir / "data.csv", std::string("label"));
  EXPECT_TRUE((back.values.array() == ds.values.array()).all());
  EXPECT_EQ(*back.labels, *ds.labels);
  EXPECT_EQ(back.sample_ids, ds.sample_ids);
  EXPECT_EQ(back.gene_ids, ds.gene_ids);
}

TEST(Generate, RejectsBadSpec) {
  SynthSpec s;
  s.n_classes = 3;
  EXPECT_EQ(code_of([&] { generate(s); }), "BadSpec");
  s = SynthSpec{};
  s.samples_per_class = {10, 0};
  EXPECT_EQ(code_of([&] { generate(s); }), "BadSpec");
  s = SynthSpec{};
  s.latent_dim = 60;
  EXPECT_EQ(code_of([&] { generate(s); }), "BadSpec");
  s = SynthSpec{};
  s.noise = -1.0;
  EXPECT_EQ(code_of([&] { generate(s); }), "BadSpec");
}
