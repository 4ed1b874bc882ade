#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "rbmlab/baselines.hpp"

using namespace rbm;
using rbm::test::gaussian_mat;
using rbm::test::vec;

TEST(OverlapMatrix, IdentityOrthogonalAndZero) {
  const Mat Ws = gaussian_mat(500, 3, 1);
  const Mat z = overlap_matrix(Ws, Ws);
  EXPECT_NEAR(z(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(z(2, 2), 1.0, 1e-14);
  Mat e = Mat::Zero(4, 2);
  e(0, 0) = 1;
  e(1, 1) = 1;
  Mat f = Mat::Zero(4, 1);
  f(2, 0) = 3;
  EXPECT_EQ(overlap_matrix(f, e).cwiseAbs().maxCoeff(), 0.0);
  bool zero = false;
  const Mat zc = overlap_matrix(Mat::Zero(4, 1), e, &zero);
  EXPECT_TRUE(zero);
  EXPECT_EQ(zc.maxCoeff(), 0.0);
}

TEST(OverlapMatrix, BoundsAndScaleInvariance) {
  const Mat W = gaussian_mat(200, 3, 2), Ws = gaussian_mat(200, 2, 3) + 0.5 * W.leftCols(2);
  const Mat z = overlap_matrix(W, Ws);
  EXPECT_GE(z.minCoeff(), 0.0);
  EXPECT_LE(z.maxCoeff(), 1.0);
  EXPECT_LT((overlap_matrix(-3.7 * W, Ws) - z).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(OverlapMatrix, RandomWeightsNearZero) {
  const Index d = 4000;
  const Mat z = overlap_matrix(gaussian_mat(d, 2, 4), gaussian_mat(d, 2, 5));
  EXPECT_LT(z.maxCoeff(), 0.06);
}

TEST(MatchedOverlap, Examples) {
  EXPECT_DOUBLE_EQ(matched_overlap(Mat::Identity(3, 3)).value, 1.0);
  Mat anti(2, 2);
  anti << 0, 1, 1, 0;
  const MatchedOverlap a = matched_overlap(anti);
  EXPECT_DOUBLE_EQ(a.value, 1.0);
  EXPECT_EQ(a.assignment[0], 1);
  EXPECT_EQ(a.assignment[1], 0);
  // Column-wise max pattern: the two-signal average of column maxima.
  Mat z(2, 2);
  z << 0.8, 0.1, 0.3, 0.6;
  EXPECT_DOUBLE_EQ(matched_overlap(z).value, 0.5 * (std::max(0.8, 0.3) + std::max(0.1, 0.6)));
}

TEST(MatchedOverlap, DominatesDiagonalAndPermutations) {
  const Mat z = overlap_matrix(gaussian_mat(50, 4, 6), gaussian_mat(50, 4, 7));
  const MatchedOverlap m = matched_overlap(z);
  EXPECT_TRUE(m.exhaustive);
  EXPECT_GE(m.value + 1e-15, z.diagonal().mean());
  std::vector<int> perm{0, 1, 2, 3};
  do {
    double s = 0;
    for (int i = 0; i < 4; ++i) s += z(i, perm[std::size_t(i)]);
    EXPECT_GE(m.value + 1e-15, s / 4);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(PerSignal, ColumnMaxima) {
  Mat z(2, 3);
  z << 0.1, 0.9, 0.2, 0.4, 0.3, 0.7;
  EXPECT_TRUE(per_signal_overlap(z).isApprox(vec({0.4, 0.9, 0.7})));
}

TEST(SvdTheory, Examples) {
  EXPECT_EQ(svd_theory_overlap_degenerate_r2(2.0, 1.1), 0.0);
  EXPECT_EQ(svd_theory_overlap_degenerate_r2(2.0, std::pow(2.0, 0.25)), 0.0);
  EXPECT_NEAR(svd_theory_overlap_degenerate_r2(2.0, 1.4), 0.2136, 5e-5);
  EXPECT_NEAR(svd_theory_overlap_degenerate_r2(2.0, 1e4), 2 * std::sqrt(2.0) / M_PI, 1e-6);
  EXPECT_NEAR(2 * std::sqrt(2.0) / M_PI, 0.9003, 5e-5);
}

TEST(SvdTheory, UniformSubspaceCurve) {
  EXPECT_EQ(svd_uniform_subspace_overlap(2.0, 0.8), 0.0);
  EXPECT_NEAR(svd_uniform_subspace_overlap(2.0, 1e4), 2 * std::sqrt(2.0) / M_PI, 1e-6);
  const double l = 1.4, a = 2.0;
  EXPECT_NEAR(svd_uniform_subspace_overlap(a, l),
              2 * std::sqrt(2.0) / M_PI * std::sqrt((1 - 1 / (a * std::pow(l, 4))) / (1 + 1 / (a * l * l))), 1e-14);
}

TEST(SvdBaseline, StrongSignalRecovered) {
  const SpikedDataset data = rbm::test::rademacher_data(1000, 2.0, vec({5.0}), 1);
  const Mat W = svd_baseline(data, 1);
  EXPECT_NEAR(W.col(0).norm(), std::sqrt(1000.0), 1e-8);
  EXPECT_GT(overlap_matrix(W, data.W_star)(0, 0), 0.9);
}

TEST(SvdBaseline, NoSignalNearZero) {
  const SpikedDataset data = rbm::test::rademacher_data(4000, 2.0, vec({0.0}), 2);
  EXPECT_LT(overlap_matrix(svd_baseline(data, 1), data.W_star)(0, 0), 0.06);
}

TEST(SvdBaseline, SingularValuesMatchDense) {
  const SpikedDataset data = rbm::test::rademacher_data(120, 2.0, vec({2.0, 1.5}), 3);
  const Vec s = top_singular_values(data.X, 3);
  Eigen::JacobiSVD<Mat> svd(Mat(data.X) / std::sqrt(double(data.n())));
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(s(i), svd.singularValues()(i), 1e-8);
}

TEST(Cd, ZeroRateKeepsWeights) {
  const SpikedDataset data = rbm::test::rademacher_data(200, 2.0, vec({1.4}), 4);
  CdConfig c;
  c.kappa = 0;
  c.epochs = 3;
  const CdResult r = cd_train(data, 1, c);
  EXPECT_TRUE(r.W == r.W_init);
  EXPECT_TRUE(r.W_init == cd_initial_weights(200, 1, c.init_scale, c.seed));
  EXPECT_EQ(r.loss.size(), 3u);
}

TEST(Cd, Deterministic) {
  const SpikedDataset data = rbm::test::rademacher_data(300, 2.0, vec({3.0}), 5);
  CdConfig c;
  c.epochs = 4;
  EXPECT_TRUE(cd_train(data, 1, c).W == cd_train(data, 1, c).W);
}

TEST(Cd, StrongSignalFoundAndNoiseNot) {
  CdConfig c;
  c.epochs = 20;
  const SpikedDataset s = rbm::test::rademacher_data(1000, 2.0, vec({3.0}), 6);
  EXPECT_GT(cd_train(s, 1, c).overlaps.back()(0, 0), 0.8);
  const SpikedDataset z = rbm::test::rademacher_data(2000, 2.0, vec({0.0}), 6);
  EXPECT_LT(cd_train(z, 1, c).overlaps.back()(0, 0), 0.08);
}
