#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "rbmlab/effective_model.hpp"
#include "rbmlab/errors.hpp"

using namespace rbm;
using rbm::test::central_diff;
using rbm::test::gaussian_mat;
using rbm::test::rel_err;
using rbm::test::vec;

namespace {
EffectiveModel rademacher_model(int k, double alpha = 2.0) { return {HiddenPrior::rademacher(k), alpha}; }

// Three-point asymmetric unit, to exercise non-symmetric priors.
EffectiveModel skewed_model(int k) {
  std::vector<UnitSupport> units(std::size_t(k), UnitSupport{{-1.0, 0.5, 2.0}, {0.3, 0.5, 0.2}});
  return {HiddenPrior::product(units), 1.5, true};
}
}  // namespace

TEST(HiddenPrior, Basics) {
  const HiddenPrior p = HiddenPrior::rademacher(3);
  EXPECT_EQ(p.size(), 8);
  EXPECT_TRUE(p.symmetric());
  EXPECT_NEAR(p.log_weights.array().exp().sum(), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(p.max_abs(0), 1.0);
  EXPECT_FALSE(skewed_model(2).prior.symmetric());
  EXPECT_THROW(HiddenPrior::product({UnitSupport{{-1, 1}, {0.5, 0.6}}}), ValidationError);
  EXPECT_THROW(EffectiveModel(HiddenPrior::rademacher(1), 0.0), ValidationError);
}

TEST(Eta1, Examples) {
  const EffectiveModel m1 = rademacher_model(1);
  EXPECT_DOUBLE_EQ(eta1(Vec::Zero(1), m1), 0.0);
  EXPECT_NEAR(eta1(Vec::Zero(3), rademacher_model(3)), 0.0, 1e-15);
  for (double x : {-1.3, 0.2, 0.9}) EXPECT_NEAR(eta1(vec({x}), m1), std::log(std::cosh(std::sqrt(2.0) * x)), 1e-13);
  EXPECT_NEAR(eta1(vec({1.0}), rademacher_model(1, 4.0)), 1.3250027473578645, 1e-12);
}

TEST(Eta1, GradientExamples) {
  const EffectiveModel m1 = rademacher_model(1);
  const Eta1Grad g0 = grad_eta1(Vec::Zero(1), 0.0, Vec::Zero(1), m1);
  EXPECT_DOUBLE_EQ(g0.dx(0), 0.0);
  EXPECT_DOUBLE_EQ(g0.dtheta, std::sqrt(2.0));
  const Eta1Grad g = grad_eta1(vec({0.7}), 0.0, Vec::Zero(1), m1);
  EXPECT_NEAR(g.dx(0), std::sqrt(2.0) * std::tanh(std::sqrt(2.0) * 0.7), 1e-13);
}

TEST(Eta1, StableForLargeInputs) {
  const EffectiveModel m = rademacher_model(2);
  EXPECT_TRUE(std::isfinite(eta1(vec({1e3, -1e3}), m)));
  EXPECT_TRUE(grad_eta1(vec({1e3, -1e3}), 0.0, Vec::Zero(2), m).dx.allFinite());
}

TEST(Eta2, Examples) {
  const EffectiveModel m1 = rademacher_model(1), m2 = rademacher_model(2);
  EXPECT_NEAR(eta2(Mat::Zero(2, 2), m2), 0.0, 1e-15);
  Mat q(1, 1);
  q << 0.8;
  EXPECT_NEAR(eta2(q, m1), 0.4, 1e-15);
  Mat Q(2, 2);
  Q << 1, 0.5, 0.5, 1;
  EXPECT_NEAR(eta2(Q, m2), 1.0 + std::log(std::cosh(0.5)), 1e-13);
  EXPECT_NEAR(eta2(Q, m2), 1.1201145069582775, 1e-12);
  Mat Qa = Q;
  Qa(0, 1) = 0.6;
  EXPECT_THROW(eta2(Qa, m2), ValidationError);
}

TEST(Eta2, GradientExamples) {
  const EffectiveModel m1 = rademacher_model(1), m2 = rademacher_model(2);
  Mat q(1, 1);
  q << 2.3;
  EXPECT_NEAR(grad_eta2(q, m1)(0, 0), 0.5, 1e-15);
  EXPECT_LT((grad_eta2(Mat::Zero(2, 2), m2) - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
  Mat Q(2, 2);
  Q << 0, 0.5, 0.5, 0;
  EXPECT_NEAR(grad_eta2(Q, m2)(0, 1), 0.5 * std::tanh(0.5), 1e-13);
  EXPECT_NEAR(grad_eta2(Q, m2)(0, 1), 0.2310585786300049, 1e-12);
}

TEST(Eta2, PermutationInvariant) {
  const EffectiveModel m = rademacher_model(3);
  Mat Q(3, 3);
  Q << 1.0, 0.3, -0.2, 0.3, 0.7, 0.1, -0.2, 0.1, 1.4;
  Eigen::PermutationMatrix<3> P;
  P.indices() << 2, 0, 1;
  const Mat Qp = P * Q * P.transpose();
  EXPECT_NEAR(eta2(Q, m), eta2(Qp, m), 1e-13);
}

TEST(Eta2, GradientIsHalfSecondMomentPsd) {
  const EffectiveModel m = rademacher_model(3);
  const Mat W = gaussian_mat(50, 3, 4);
  const Mat G = grad_eta2(OverlapMatrix::from_weights(W).Q_W, m);
  EXPECT_LT((G - G.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-14);
  EXPECT_NEAR(G.diagonal().sum(), 1.5, 1e-12);  // h_a^2 = 1
}

// Central differences at step 1e-5 against every analytic gradient.
TEST(Gradients, MatchFiniteDifferences) {
  for (const EffectiveModel& m : {rademacher_model(2), skewed_model(2)}) {
    const Vec x = vec({0.8, -1.1}), b = vec({0.3, -0.2});
    const double xt = 0.4;
    const Eta1Grad g = grad_eta1(x, xt, b, m);
    for (Index i = 0; i < 2; ++i) {
      EXPECT_LT(rel_err(g.dx(i), central_diff([&](const Vec& v) { return eta1(v, xt, b, m); }, x, i)), 1e-6);
      EXPECT_LT(rel_err(g.db(i), central_diff([&](const Vec& v) { return eta1(x, xt, v, m); }, b, i)), 1e-6);
    }
    const Mat H = hess_eta1(x, b, m);
    for (Index i = 0; i < 2; ++i)
      for (Index j = 0; j < 2; ++j)
        EXPECT_LT(rel_err(H(i, j), central_diff([&](const Vec& v) { return grad_eta1(v, xt, b, m).dx(i); }, x, j)),
                  1e-6);

    OverlapMatrix Q;
    Q.Q_W.resize(2, 2);
    Q.Q_W << 1.2, 0.4, 0.4, 0.6;
    Q.Q_Wtheta = vec({0.2, -0.5});
    Q.Q_theta = 0.9;
    const Eta2Grad g2 = grad_eta2(Q, b, m);
    // Symmetric perturbation of (a, c) and (c, a) together.
    for (Index a = 0; a < 2; ++a)
      for (Index c = a; c < 2; ++c) {
        auto f = [&](double h) {
          OverlapMatrix P = Q;
          P.Q_W(a, c) += h;
          if (a != c) P.Q_W(c, a) += h;
          return eta2(P, b, m);
        };
        const double fd = (f(1e-5) - f(-1e-5)) / 2e-5;
        const double an = a == c ? g2.dQ(a, a) : g2.dQ(a, c) + g2.dQ(c, a);
        EXPECT_LT(rel_err(an, fd), 1e-6);
      }
    for (Index i = 0; i < 2; ++i) {
      EXPECT_LT(rel_err(g2.db(i), central_diff([&](const Vec& v) { return eta2(Q, v, m); }, b, i)), 1e-6);
      EXPECT_LT(rel_err(g2.dQWtheta(i), central_diff(
                                            [&](const Vec& v) {
                                              OverlapMatrix P = Q;
                                              P.Q_Wtheta = v;
                                              return eta2(P, b, m);
                                            },
                                            Q.Q_Wtheta, i)),
                1e-6);
    }
    EXPECT_NEAR(g2.dQtheta, 0.5, 1e-15);
  }
}

TEST(EffectiveLoglik, ZeroAndSignFlip) {
  const SpikedDataset data = rbm::test::rademacher_data(60, 2.0, vec({1.4, 1.4}), 3);
  const EffectiveModel m = rademacher_model(2);
  EXPECT_NEAR(effective_loglik(Mat::Zero(60, 2), data.X, m), 0.0, 1e-12);
  const Mat W = gaussian_mat(60, 2, 5);
  const RowMat Xf = -data.X;
  EXPECT_NEAR(effective_loglik(W, data.X, m), effective_loglik(W, Xf, m), 1e-9);
  EXPECT_THROW(effective_loglik(Mat::Zero(59, 2), data.X, m), ValidationError);
}

TEST(EffectiveGrad, ZeroAtOrigin) {
  const SpikedDataset data = rbm::test::rademacher_data(40, 2.0, vec({1.0}), 2);
  EXPECT_LT(effective_grad(Mat::Zero(40, 1), data.X, rademacher_model(1)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(EffectiveGrad, MatchesFiniteDifferences) {
  const SpikedDataset data = rbm::test::rademacher_data(30, 2.0, vec({1.4, 1.4}), 6);
  for (const EffectiveModel& m : {rademacher_model(2), skewed_model(2)}) {
    const Mat W = gaussian_mat(30, 2, 8, 0.5);
    const Mat G = effective_grad(W, data.X, m);
    for (Index i = 0; i < 30; i += 7)
      for (Index a = 0; a < 2; ++a) {
        Mat Wp = W, Wm = W;
        Wp(i, a) += 1e-5;
        Wm(i, a) -= 1e-5;
        const double fd = (effective_loglik(Wp, data.X, m) - effective_loglik(Wm, data.X, m)) / 2e-5;
        EXPECT_LT(rel_err(G(i, a), fd), 1e-5) << "i=" << i << " a=" << a;
      }
  }
}

TEST(ExactLoglik, ZeroWeightsAndCapacity) {
  const SpikedDataset small = rbm::test::rademacher_data(10, 2.0, vec({1.0}), 1);
  EXPECT_NEAR(exact_loglik_small(Mat::Zero(10, 1), small.X, rademacher_model(1)), 0.0, 1e-10);
  const SpikedDataset big = rbm::test::rademacher_data(23, 1.0, vec({1.0}), 1);
  EXPECT_THROW(exact_loglik_small(Mat::Zero(23, 1), big.X, rademacher_model(1)), CapacityError);
}

// One visible sample, every (v, h) configuration summed by hand.
TEST(ExactLoglik, SingleSampleDirectSum) {
  const Index d = 6;
  const EffectiveModel m = rademacher_model(1);
  RowMat X(1, d);
  X << 1, -1, 1, 1, -1, 1;
  const Mat W = gaussian_mat(d, 1, 3);
  const double sd = 1 / std::sqrt(double(d));
  auto marg = [&](const Vec& v) {
    const double a = sd * v.dot(W.col(0));
    return 0.5 * (std::exp(a) + std::exp(-a));
  };
  double Z = 0;
  for (int s = 0; s < (1 << d); ++s) {
    Vec v(d);
    for (Index i = 0; i < d; ++i) v(i) = (s >> i) & 1 ? 1.0 : -1.0;
    Z += marg(v) / double(1 << d);
  }
  const double direct = std::log(marg(X.row(0).transpose())) - std::log(Z);
  EXPECT_NEAR(exact_loglik_small(W, X, m), direct, 1e-12);
}
