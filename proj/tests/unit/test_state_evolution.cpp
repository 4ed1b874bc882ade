#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "rbmlab/errors.hpp"
#include "rbmlab/state_evolution.hpp"

using namespace rbm;
using rbm::test::vec;

namespace {
const EffectiveModel kModel1(HiddenPrior::rademacher(1), 2.0);

Vec gamma1(double lambda) { return vec({std::sqrt(2.0) * lambda}); }

double off_diag(const Mat& A) {
  double m = 0;
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j)
      if (i != j) m = std::max(m, std::abs(A(i, j)));
  return m;
}
}  // namespace

TEST(Threshold, Examples) {
  EXPECT_NEAR(bbp_threshold(2.0), 0.8408964152537145, 1e-15);
  EXPECT_FALSE(weak_recovery(1.0, vec({1.0})));
  EXPECT_TRUE(weak_recovery(1.0, vec({1.01})));
  EXPECT_NEAR(linearized_se_gain(2.0, vec({0.8409})), 1.0, 1e-3);
  EXPECT_NEAR(linearized_se_gain(4.0, vec({1.0})), 4.0, 1e-14);
  EXPECT_NEAR(linearized_se_gain(2.0, vec({0.5, 1.2})), 2 * std::pow(1.2, 4), 1e-12);
  EXPECT_THROW(bbp_threshold(0.0), ValidationError);
}

TEST(SeStep, NoSignalKeepsZeroOverlap) {
  const SeEngine eng;
  SeState s = se_initial_state(1, gamma1(0.0), eng.prior_w, 0.0);
  for (int t = 0; t < 5; ++t) {
    s = se_step(s, kModel1, eng, 0.0);
    EXPECT_EQ(s.M(0, 0), 0.0);
  }
  EXPECT_EQ(se_overlap(s, kModel1, eng)(0, 0), 0.0);
}

// Separable symmetric priors with a diagonal start stay diagonal.
TEST(SeStep, DiagonalStaysDiagonal) {
  SeEngine eng;
  eng.prior_u = eng.prior_w = SpikePrior::rademacher(2);
  const EffectiveModel model(HiddenPrior::rademacher(2), 2.0);
  SeState s = se_initial_state(2, std::sqrt(2.0) * vec({1.4, 1.2}), eng.prior_w, 0.3);
  for (int t = 0; t < 6; ++t) {
    s = se_step(s, model, eng, 0.0);
    for (const Mat* m : {&s.M, &s.Sigma, &s.M_bar, &s.Sigma_bar, &s.B_bar, &s.C_bar, &s.Q_hat})
      EXPECT_LE(off_diag(*m), 1e-10);
    Eigen::SelfAdjointEigenSolver<Mat> es(s.Sigma);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
  }
}

TEST(SeStep, DampingValidation) {
  const SeEngine eng;
  const SeState s = se_initial_state(1, gamma1(1.4), eng.prior_w, 0.3);
  EXPECT_THROW(se_step(s, kModel1, eng, 1.0), ValidationError);
}

TEST(SeOverlap, Limits) {
  const SeEngine eng;
  SeState s = se_initial_state(1, gamma1(1.4), eng.prior_w, 0.0);
  EXPECT_EQ(se_overlap(s, kModel1, eng)(0, 0), 0.0);
  s.M(0, 0) = 1.0;
  s.Sigma(0, 0) = 1e-12;
  EXPECT_NEAR(se_overlap(s, kModel1, eng)(0, 0), 1.0, 1e-5);
}

// Fixed-point overlaps and B, frozen from an independent dense-quadrature
// solve of the scalar k = r = 1 equations.
TEST(SeFixedPoint, FrozenOverlaps) {
  const SeEngine eng;
  const auto curve = se_overlap_curve({2.0, 1.4, 1.0}, kModel1, eng);
  ASSERT_EQ(curve.size(), 3u);
  const double ov[] = {0.937288, 0.844356, 0.494752};
  const double B[] = {-0.538022, -0.663895, -0.962622};
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(curve[std::size_t(i)].converged);
    EXPECT_NEAR(curve[std::size_t(i)].overlap, ov[i], 2e-6);
    EXPECT_NEAR(curve[std::size_t(i)].B, B[i], 2e-6);
  }
}

TEST(SeFixedPoint, InvariantUnderDamping) {
  const SeEngine eng;
  const SeFixedPoint fp = se_fixed_point(se_initial_state(1, gamma1(1.4), eng.prior_w, 0.8), kModel1, eng);
  ASSERT_TRUE(fp.converged);
  for (double zeta : {0.0, 0.5, 0.9}) {
    const SeState next = se_step(fp.state, kModel1, eng, zeta);
    EXPECT_NEAR(next.M(0, 0), fp.state.M(0, 0), 1e-6);
    EXPECT_NEAR(next.Sigma(0, 0), fp.state.Sigma(0, 0), 1e-6);
    EXPECT_NEAR(next.Q_hat(0, 0), fp.state.Q_hat(0, 0), 1e-6);
  }
}

TEST(SeRun, ConvergesToFixedPoint) {
  const SeEngine eng;
  const SeTrace tr = se_run(se_initial_state(1, gamma1(1.4), eng.prior_w, 0.3), kModel1, eng, 300, 1e-10, 0.3);
  ASSERT_TRUE(tr.converged);
  EXPECT_EQ(tr.states.size(), tr.overlaps.size());
  EXPECT_NEAR(tr.overlaps.back()(0, 0), 0.844356, 1e-5);
}

TEST(SeRun, BelowThresholdOverlapVanishes) {
  const SeEngine eng;
  const SeTrace tr = se_run(se_weak_state(1, gamma1(0.6), eng.prior_w, 1e-2), kModel1, eng, 60, 0.0, 0.0);
  EXPECT_LT(tr.overlaps.back()(0, 0), 1e-3);
}

// Tiny overlap grows above the threshold and decays below it.
TEST(SeRun, ThresholdDichotomy) {
  const SeEngine eng;
  const double lc = bbp_threshold(2.0);
  auto final_over_initial = [&](double lambda) {
    const SeTrace tr = se_run(se_weak_state(1, gamma1(lambda), eng.prior_w, 1e-4), kModel1, eng, 12, 0.0, 0.0);
    return tr.overlaps.back()(0, 0) / tr.overlaps.front()(0, 0);
  };
  EXPECT_GT(final_over_initial(1.1 * lc), 1.0);
  EXPECT_LT(final_over_initial(0.9 * lc), 1.0);
}

TEST(SeEngine, MonteCarloMatchesQuadrature) {
  SeEngine dense, mc;
  mc.mode = SeMode::MonteCarlo;
  mc.samples = 1000000;
  const SeState s0 = se_initial_state(1, gamma1(1.4), dense.prior_w, 0.5);
  const SeState a = se_step(s0, kModel1, dense, 0.0);
  const SeState b = se_step(s0, kModel1, mc, 0.0);
  // Per-sample spreads are O(1), so 3 standard errors at N = 1e6 is about 3e-3.
  EXPECT_NEAR(a.M(0, 0), b.M(0, 0), 3e-3);
  EXPECT_NEAR(a.Sigma(0, 0), b.Sigma(0, 0), 3e-3);
  EXPECT_NEAR(a.C_bar(0, 0), b.C_bar(0, 0), 3e-3);
}

TEST(SeEngine, GaussHermiteCloseToDense) {
  SeEngine dense, gh;
  gh.mode = SeMode::GaussHermite;
  const SeState s0 = se_initial_state(1, gamma1(1.4), dense.prior_w, 0.5);
  const SeState a = se_step(s0, kModel1, dense, 0.0);
  const SeState b = se_step(s0, kModel1, gh, 0.0);
  EXPECT_NEAR(a.M(0, 0), b.M(0, 0), 5e-3);
  EXPECT_NEAR(a.Sigma(0, 0), b.Sigma(0, 0), 5e-3);
}

TEST(SeEngine, Validation) {
  SeEngine e;
  e.mode = SeMode::MonteCarlo;
  e.samples = 100;
  EXPECT_THROW(e.validate(), ValidationError);
}

TEST(BracketOnset, FindsFirstCrossing) {
  const std::vector<OverlapCurvePoint> curve = {
      {2.0, 0.9, true, -0.5}, {1.5, 0.7, true, -0.6}, {1.0, 0.3, true, -0.9}, {0.8, 0.0, true, -1.0}};
  const ThresholdBracket b = bracket_onset(curve, 1e-3);
  ASSERT_TRUE(b.found);
  EXPECT_DOUBLE_EQ(b.lower, 0.8);
  EXPECT_DOUBLE_EQ(b.upper, 1.0);
}
