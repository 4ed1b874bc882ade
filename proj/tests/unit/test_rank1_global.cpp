#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rbmlab/amp_rbm.hpp"
#include "rbmlab/errors.hpp"
#include "rbmlab/rank1_global.hpp"

using namespace rbm;

namespace {
ScalarFn quadratic_fn() { return {[](double y) { return 0.5 * y * y; }, [](double y) { return y; }, [](double) { return 1.0; }}; }

ScalarFn logcosh_fn() {
  return {[](double y) { return -0.5 * std::log(std::cosh(std::sqrt(2.0) * y)); },
          [](double y) { return -std::tanh(std::sqrt(2.0) * y) / std::sqrt(2.0); },
          [](double y) {
            const double s = 1 / std::cosh(std::sqrt(2.0) * y);
            return -s * s;
          }};
}

SaddleProblem rbm_problem(double lambda) {
  SaddleProblem pr;
  pr.pair = ScalarObjectivePair::rbm(2.0);
  pr.lambda = lambda;
  return pr;
}

// Saddle points frozen from an independent solve; the overlap m / q equals
// the SE fixed point.
struct Frozen {
  double lambda, m, q, tau, kappa, nu, chi, overlap, value, replicon;
};
constexpr Frozen kFrozen[] = {
    {1.4, 0.971174, 1.15019, 0.616254, 0.92824, 1.46284, -0.493737, 0.844356, -0.751883, 0.330165},
    {2.0, 1.41252, 1.50702, 0.52528, 0.976318, 2.62539, -0.141339, 0.937288, -1.62037, 0.0463093},
};

SaddlePoint warm(const Frozen& f) {
  SaddlePoint s;
  s.m = f.m * 1.02;
  s.q = f.q * 0.98;
  s.tau = f.tau;
  s.kappa = f.kappa;
  s.nu = f.nu;
  s.chi = f.chi;
  s.p = f.q * f.q;
  return s;
}
}  // namespace

TEST(Moreau, Examples) {
  const MoreauResult q = moreau(quadratic_fn(), 1.0, 2.0);
  EXPECT_NEAR(q.prox, 1.0, 1e-12);
  EXPECT_NEAR(q.value, 1.0, 1e-12);
  const ScalarFn zero{[](double) { return 0.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
  const MoreauResult z = moreau(zero, 0.7, -1.3);
  EXPECT_NEAR(z.prox, -1.3, 1e-12);
  EXPECT_NEAR(z.value, 0.0, 1e-12);
  // Derivative-free path: soft threshold.
  const ScalarFn absf{[](double y) { return std::abs(y); }, {}, {}};
  const MoreauResult a = moreau(absf, 1.0, 0.4);
  EXPECT_NEAR(a.prox, 0.0, 1e-6);
  EXPECT_NEAR(a.value, 0.08, 1e-10);
  EXPECT_THROW(moreau(quadratic_fn(), 0.0, 1.0), ValidationError);
}

TEST(Moreau, EnvelopeIdentityAndDerivative) {
  const ScalarFn f = logcosh_fn();
  const double tau = 0.4;
  for (double x : {-2.0, -0.3, 0.5, 1.7}) {
    const MoreauResult r = moreau(f, tau, x);
    EXPECT_NEAR(r.value, f.f(r.prox) + (r.prox - x) * (r.prox - x) / (2 * tau), 1e-10);
    const double h = 1e-5;
    const double fd = (moreau(f, tau, x + h).value - moreau(f, tau, x - h).value) / (2 * h);
    EXPECT_NEAR(fd, (x - r.prox) / tau, 1e-7);
  }
}

// Negative curvature with a quartic keeps the objective coercive.
TEST(ProxLinear, NegativeCurvatureGlobalMinimum) {
  const ScalarFn quart{[](double y) { return 0.25 * y * y * y * y; }, [](double y) { return y * y * y; },
                       [](double y) { return 3 * y * y; }};
  const double c = -1.0, b = 0.3;
  const double y = prox_linear(quart, c, b);
  auto obj = [&](double v) { return quart.f(v) + 0.5 * c * v * v - b * v; };
  double best = obj(-3.0);
  for (double v = -3.0; v <= 3.0; v += 1e-5) best = std::min(best, obj(v));
  EXPECT_GT(y, 0.0);
  EXPECT_LE(obj(y), best + 1e-12);
  EXPECT_NEAR(y * y * y - y - b, 0.0, 1e-10);
}

TEST(ProxLinear, MatchesProxForPositiveCurvature) {
  const ScalarFn f = logcosh_fn();
  const double c = 2.5, b = 0.9;
  EXPECT_NEAR(prox_linear(f, c, b), moreau(f, 1 / c, b / c).prox, 1e-10);
}

TEST(Potential, SignSymmetry) {
  for (double lambda : {0.0, 1.4}) {
    const SaddleProblem pr = rbm_problem(lambda);
    SaddlePoint a;
    a.m = 0.3;
    a.nu = 0.2;
    a.chi = 0.8;
    SaddlePoint b = a;
    b.m = -a.m;
    b.nu = -a.nu;
    EXPECT_NEAR(potential(a, pr), potential(b, pr), 1e-10);
  }
  SaddleProblem pr0 = rbm_problem(0.0);
  SaddlePoint a;
  a.m = 0.25;
  a.nu = 0;
  SaddlePoint b = a;
  b.m = -a.m;
  EXPECT_NEAR(potential(a, pr0), potential(b, pr0), 1e-10);
}

TEST(Saddle, FrozenRbmSolutions) {
  for (const Frozen& f : kFrozen) {
    const SaddleProblem pr = rbm_problem(f.lambda);
    SaddleReport rep;
    const SaddlePoint s = solve_saddle(pr, warm(f), 1e-10, &rep);
    ASSERT_TRUE(rep.converged) << "lambda=" << f.lambda;
    EXPECT_LT(rep.max_residual, 1e-8);
    EXPECT_TRUE(rep.bounded);
    EXPECT_NEAR(s.m, f.m, 2e-5);
    EXPECT_NEAR(s.q, f.q, 2e-5);
    EXPECT_NEAR(s.tau, f.tau, 2e-5);
    EXPECT_NEAR(s.kappa, f.kappa, 2e-5);
    EXPECT_NEAR(s.nu, f.nu, 2e-5);
    EXPECT_NEAR(s.chi, f.chi, 2e-5);
    EXPECT_NEAR(saddle_overlap(s, pr), f.overlap, 2e-6);
    EXPECT_NEAR(saddle_value(s, pr), f.value, 2e-5);
    EXPECT_NEAR(potential(s, pr), saddle_value(s, pr), 1e-6);
    const RepliconReport r = replicon_stability(s, pr);
    EXPECT_NEAR(r.value, f.replicon, 1e-4);
    EXPECT_LT(r.value, 1.0);
    for (double v : saddle_residuals(s, pr)) EXPECT_LT(std::abs(v), 1e-8);
  }
}

TEST(Saddle, SeWarmStartAgreesWithSe) {
  const EffectiveModel model(HiddenPrior::rademacher(1), 2.0);
  const SeEngine eng;
  Vec G(1);
  G << std::sqrt(2.0) * 1.4;
  const SeFixedPoint fp = se_fixed_point(se_initial_state(1, G, eng.prior_w, 0.8), model, eng);
  const SaddleProblem pr = rbm_problem(1.4);
  const SaddlePoint s = solve_saddle(pr, saddle_from_se(fp.state, model, eng));
  EXPECT_NEAR(saddle_overlap(s, pr), fp.overlap(0, 0), 1e-6);
}

TEST(Saddle, NoSignalQuadraticPairHasZeroMagnetization) {
  SaddleProblem pr;
  pr.pair = ScalarObjectivePair::quadratic(1.0, 1.0);
  pr.lambda = 0.0;
  SaddleReport rep;
  const SaddlePoint s = solve_saddle(pr, SaddlePoint{}, 1e-9, &rep);
  ASSERT_TRUE(rep.converged);
  EXPECT_NEAR(s.m, 0.0, 1e-8);
  EXPECT_NEAR(s.nu, 0.0, 1e-8);
}

// Quadratic maps give constant prox derivatives, so the expectations drop out.
TEST(Replicon, QuadraticClosedForm) {
  const double a1 = 0.7, a2 = 1.3;
  SaddleProblem pr;
  pr.pair = ScalarObjectivePair::quadratic(a1, a2);
  pr.lambda = 1.2;
  SaddlePoint s;
  s.m = 0.4;
  s.q = 1.1;
  s.tau = 0.8;
  s.kappa = 0.6;
  s.nu = 0.3;
  s.chi = 0.9;
  s.phi = 0.15;
  const double r = s.tau / s.kappa;
  const double p1 = 1 / (1 + r * a1);
  const double expect = pr.alpha * std::pow(s.kappa / s.tau, 2) * std::pow(p1 - 1, 2) /
                        std::pow(a2 + 2 * s.phi + s.chi, 2);
  EXPECT_NEAR(replicon_stability(s, pr).value, expect, 1e-10);
}

// Minimization value maps to the AMP objective per dimension as -alpha A.
TEST(Saddle, ObjectiveMatchesAmp) {
  const Frozen& f = kFrozen[0];
  const SaddleProblem pr = rbm_problem(f.lambda);
  const double predicted = -pr.alpha * saddle_value(solve_saddle(pr, warm(f)), pr);
  const EffectiveModel model(HiddenPrior::rademacher(1), 2.0);
  std::vector<double> obj;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto P = SpikePrior::rademacher(1);
    Vec L(1);
    L << f.lambda;
    const SpikedDataset data = sample_spiked(8000, 4000, P, P, L, seed);
    AmpConfig c;
    c.seed = seed;
    c.record_residual = false;
    const AmpTrace tr = amp_run(data, model, c);
    ASSERT_TRUE(tr.converged);
    obj.push_back(tr.objective.back());
  }
  std::sort(obj.begin(), obj.end());
  EXPECT_NEAR(obj[1], predicted, 0.01);
}
