#include <gtest/gtest.h>

#include <cmath>

#include "rbmlab/quadrature.hpp"

using namespace rbm;

namespace {
double expect(const GaussRule& r, double (*f)(double)) {
  double s = 0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.w[i] * f(r.x[i]);
  return s;
}
}  // namespace

TEST(Quadrature, HermiteMoments) {
  const GaussRule r = gauss_hermite(20);
  EXPECT_NEAR(expect(r, [](double) { return 1.0; }), 1.0, 1e-13);
  EXPECT_NEAR(expect(r, [](double x) { return x; }), 0.0, 1e-13);
  EXPECT_NEAR(expect(r, [](double x) { return x * x; }), 1.0, 1e-12);
  EXPECT_NEAR(expect(r, [](double x) { return x * x * x * x; }), 3.0, 1e-11);
  EXPECT_NEAR(expect(r, [](double x) { return std::pow(x, 6); }), 15.0, 1e-10);
}

TEST(Quadrature, HermiteSmoothIntegrand) {
  EXPECT_NEAR(expect(gauss_hermite(60), [](double x) { return std::cos(x); }), std::exp(-0.5), 1e-12);
}

TEST(Quadrature, DenseRuleMoments) {
  const GaussRule r = dense_gaussian(200, 12.0);
  EXPECT_NEAR(expect(r, [](double) { return 1.0; }), 1.0, 1e-14);
  EXPECT_NEAR(expect(r, [](double x) { return x * x; }), 1.0, 1e-10);
  EXPECT_NEAR(expect(r, [](double x) { return std::cos(x); }), std::exp(-0.5), 1e-10);
}

// E|G| = sqrt(2/pi); the kink at 0 is a panel boundary.
TEST(Quadrature, DenseRuleResolvesKink) {
  EXPECT_NEAR(expect(dense_gaussian(400, 12.0), [](double x) { return std::abs(x); }), std::sqrt(2 / M_PI),
              1e-10);
}

TEST(Quadrature, HalfLineMass) {
  const GaussRule r = gaussian_on_interval(0.0, 12.0, 100);
  double s = 0;
  for (double w : r.w) s += w;
  EXPECT_NEAR(s, 0.5, 1e-12);
}
