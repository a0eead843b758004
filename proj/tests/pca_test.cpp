#include <gtest/gtest.h>

#include <cmath>

#include "jacobi_oracle.hpp"
#include "test_util.hpp"

using namespace geneae;
using testutil::code_of;
using testutil::random_matrix;

namespace {

oracle::Dense to_dense(const Matrix& x) {
  oracle::Dense d(static_cast<std::size_t>(x.rows()), std::vector<double>(static_cast<std::size_t>(x.cols())));
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = x(i, j);
  return d;
}

/// |<a, b>| for unit vectors, 1 when equal up to sign.
double abs_cosine(const Vector& a, const std::vector<double>& b) {
  double dot = 0.0;
  for (Index i = 0; i < a.size(); ++i) dot += a[i] * b[static_cast<std::size_t>(i)];
  return std::abs(dot);
}

void expect_matches_oracle(const Matrix& x, Index k, PcaRoute route, double tol) {
  const auto m = fit_pca(x, k, route);
  const auto ref = oracle::jacobi(oracle::covariance(to_dense(x)));
  ASSERT_EQ(m.k(), k);
  for (Index i = 0; i < k; ++i) {
    EXPECT_NEAR(m.eigenvalues[i], ref.values[static_cast<std::size_t>(i)], tol);
    EXPECT_NEAR(abs_cosine(m.components.row(i).transpose(), ref.vectors[static_cast<std::size_t>(i)]), 1.0, tol);
  }
  EXPECT_LT((m.components * m.components.transpose() - Matrix::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-8);
}

}  // namespace

TEST(FitPca, CollinearPoints) {
  Matrix x(5, 2);
  for (int i = 0; i < 5; ++i) x.row(i) << i - 1.0, 2.0 * (i - 1.0);
  const auto m = fit_pca(x, 1);
  EXPECT_NEAR(m.components(0, 0), 1.0 / std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(m.components(0, 1), 2.0 / std::sqrt(5.0), 1e-12);
  const auto full = fit_pca(x, 2, PcaRoute::covariance);
  EXPECT_NEAR(full.eigenvalues[1], 0.0, 1e-12);
  EXPECT_TRUE(full.rank_deficient);
}

TEST(FitPca, CodesHaveZeroMean) {
  const Matrix x = random_matrix(30, 7, 3, -2.0, 5.0);
  const Matrix z = pca_transform(fit_pca(x, 4), x);
  EXPECT_LT(z.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FitPca, MatchesJacobiOracleOnSmallMatrix) {
  expect_matches_oracle(random_matrix(6, 4, 11), 3, PcaRoute::covariance, 1e-8);
}

TEST(FitPca, SignConventionLargestLoadingPositive) {
  const auto m = fit_pca(random_matrix(20, 6, 5), 4);
  for (Index i = 0; i < m.k(); ++i) {
    Index at = 0;
    m.components.row(i).cwiseAbs().maxCoeff(&at);
    EXPECT_GT(m.components(i, at), 0.0);
  }
}

TEST(FitPca, RejectsBadK) {
  const Matrix x = random_matrix(5, 8, 1);
  EXPECT_EQ(code_of([&] { fit_pca(x, 5); }), "BadHyperparams");
  EXPECT_EQ(code_of([&] { fit_pca(x, 0); }), "BadHyperparams");
  EXPECT_EQ(code_of([&] { fit_pca(Matrix(random_matrix(1, 3, 1)), 1); }), "EmptyDataset");
}

TEST(FitPca, RankDeficientGramRouteReturnsAchievableCount) {
  // Four distinct points in a 2-D subspace of R^10.
  const Matrix basis = random_matrix(2, 10, 2);
  const Matrix coeffs = random_matrix(6, 2, 3);
  const Matrix x = coeffs * basis;
  const auto g = fit_pca(x, 4, PcaRoute::gram);
  EXPECT_TRUE(g.rank_deficient);
  EXPECT_EQ(g.k(), 2);
  const auto c = fit_pca(x, 4, PcaRoute::covariance);
  EXPECT_TRUE(c.rank_deficient);
  EXPECT_EQ(c.k(), 4);
  EXPECT_NEAR(c.eigenvalues[2], 0.0, 1e-12);
}

TEST(PcaTransform, MeanMapsToZeroAndLinearity) {
  const Matrix x = random_matrix(12, 5, 7);
  const auto m = fit_pca(x, 3);
  const Matrix mean = m.mean.transpose();
  EXPECT_LT(pca_transform(m, mean).cwiseAbs().maxCoeff(), 1e-12);
  const Matrix row = x.row(2);
  const Matrix doubled = mean + 2.0 * (row - mean);
  EXPECT_LT((pca_transform(m, doubled) - 2.0 * pca_transform(m, row)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(code_of([&] { pca_transform(m, Matrix(random_matrix(2, 4, 1))); }), "DimensionMismatch");
}

TEST(PcaTransform, CodeVarianceEqualsEigenvalues) {
  for (auto route : {PcaRoute::covariance, PcaRoute::gram}) {
    const Matrix x = random_matrix(15, 9, 21);
    const auto m = fit_pca(x, 5, route);
    const Matrix z = pca_transform(m, x);
    for (Index j = 0; j < z.cols(); ++j) {
      double var = 0.0;
      for (Index i = 0; i < z.rows(); ++i) var += z(i, j) * z(i, j);
      var /= static_cast<double>(z.rows() - 1);
      EXPECT_NEAR(var, m.eigenvalues[j], 1e-8);
    }
  }
}

TEST(PcaProperties, ReconstructionErrorNonIncreasingInK) {
  const Matrix x = random_matrix(20, 8, 4);
  const auto full = fit_pca(x, 8);
  double prev = std::numeric_limits<double>::infinity();
  for (Index k = 1; k <= 8; ++k) {
    const auto m = pca_truncate(full, k);
    const double err = (x - pca_reconstruct(m, pca_transform(m, x))).norm();
    EXPECT_LE(err, prev + 1e-10);
    prev = err;
  }
  EXPECT_LT(prev, 1e-9);
}

TEST(PcaProperties, GramAndCovarianceRoutesAgree) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Matrix x = random_matrix(10, 30, seed);
    const auto g = fit_pca(x, 6, PcaRoute::gram);
    const auto c = fit_pca(x, 6, PcaRoute::covariance);
    const Matrix zg = pca_transform(g, x), zc = pca_transform(c, x);
    for (Index j = 0; j < 6; ++j) {
      const double s = zg.col(j).dot(zc.col(j)) >= 0 ? 1.0 : -1.0;
      EXPECT_LT((zg.col(j) - s * zc.col(j)).cwiseAbs().maxCoeff(), 1e-8);
    }
    EXPECT_LT((g.eigenvalues - c.eigenvalues).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(PcaProperties, RandomShapesMatchOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Index n = std::uniform_int_distribution<Index>(3, 12)(rng);
    const Index p = std::uniform_int_distribution<Index>(2, 10)(rng);
    const Index k = std::uniform_int_distribution<Index>(1, std::min(n - 1, p))(rng);
    const Matrix x = random_matrix(n, p, seed + 100);
    const auto m = fit_pca(x, k);
    const auto ref = oracle::jacobi(oracle::covariance(to_dense(x)));
    for (Index i = 0; i < m.k(); ++i) EXPECT_NEAR(m.eigenvalues[i], ref.values[static_cast<std::size_t>(i)], 1e-8);
    EXPECT_LT((m.components * m.components.transpose() - Matrix::Identity(m.k(), m.k())).cwiseAbs().maxCoeff(), 1e-8);
  }
}
