// Rank-one global optimum of
//   A = inf_w (1/d) sum_mu eta1(x_mu . w / sqrt d) + (1/d) sum_i eta2(w_i, |w|_r^r / d)
// through the scalar saddle point of the potential E(m, q, p, tau, kappa, nu, chi, phi).
// Minimization convention; the RBM pair maps back via log L~/d = -alpha A
// with W = sqrt(alpha) w.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rbmlab/spiked_data.hpp"
#include "rbmlab/state_evolution.hpp"
#include "rbmlab/types.hpp"

namespace rbm {

// Scalar map with optional first and second derivatives.
struct ScalarFn {
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> d2f;
  bool smooth() const { return static_cast<bool>(df) && static_cast<bool>(d2f); }
};

struct MoreauResult {
  double value;
  double prox;
};

// min_y f(y) + (y - x)^2 / (2 tau). Guarded Newton when derivatives exist,
// grid scan plus Brent otherwise.
MoreauResult moreau(const ScalarFn& f, double tau, double x);

// argmin_y f(y) + (c/2) y^2 - b y for any curvature c making the objective
// coercive. Equals the prox at x = b / c when c > 0.
double prox_linear(const ScalarFn& f, double c, double b);

struct ScalarObjectivePair {
  ScalarFn eta1;
  // eta2(w, p) and its partial derivatives.
  std::function<double(double, double)> eta2;
  std::function<double(double, double)> eta2_dw;
  std::function<double(double, double)> eta2_dww;
  std::function<double(double, double)> eta2_dp;
  double r = 2.0;

  // eta1 = -(1/alpha) log cosh(sqrt(alpha) x), eta2 = (alpha/2) w^2.
  static ScalarObjectivePair rbm(double alpha);
  // eta1 = a1 x^2 / 2, eta2 = a2 w^2 / 2.
  static ScalarObjectivePair quadratic(double a1, double a2);
};

struct SaddlePoint {
  double m = 0.1, q = 1, p = 1, tau = 1, kappa = 1, nu = 0.1, chi = 1, phi = 0;

  std::vector<double> pack() const { return {m, q, p, tau, kappa, nu, chi, phi}; }
  static SaddlePoint unpack(const std::vector<double>& v);
};

struct SaddleProblem {
  ScalarObjectivePair pair;
  double alpha = 2.0;
  double lambda = 1.0;
  SpikePrior prior_u = SpikePrior::rademacher(1);
  SpikePrior prior_w = SpikePrior::rademacher(1);
  int panels = 800;
  double half_width = 12.0;
};

double potential(const SaddlePoint& point, const SaddleProblem& problem);

// Residuals of the eight stationarity equations, in the order
// d/dnu, d/dchi, d/dm, d/dtau, d/dkappa, d/dq, d/dphi, d/dp.
std::vector<double> saddle_residuals(const SaddlePoint& point, const SaddleProblem& problem);

// alpha E eta1(P1) + E eta2(P2, p), the simplified value at a solution.
double saddle_value(const SaddlePoint& point, const SaddleProblem& problem);

struct SaddleReport {
  std::vector<double> residuals;
  double max_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool bounded = true;  // q, p finite and moderate
};

SaddlePoint solve_saddle(const SaddleProblem& problem, const SaddlePoint& init, double tol = 1e-9,
                         SaddleReport* report = nullptr);

// Warm start for the RBM pair from a k = r = 1 SE fixed point.
SaddlePoint saddle_from_se(const SeState& fixed_point, const EffectiveModel& model,
                           const SeEngine& engine);

double saddle_overlap(const SaddlePoint& point, const SaddleProblem& problem);

struct RepliconReport {
  double value = 0.0;
  bool subgradient_fallback = false;
};

// alpha (kappa/tau)^2 E[(P1' - 1)^2] E[1 / (eta2~''(P2) + chi)^2], with
// P1' = 1 / (1 + (tau/kappa) eta1''(P1)).
RepliconReport replicon_stability(const SaddlePoint& point, const SaddleProblem& problem);

}  // namespace rbm
