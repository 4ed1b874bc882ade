// Effective RBM objective built from the two scalar potentials
//   eta1(x, x_theta, b) = log E_h exp(h^T (sqrt(alpha) x + b)) + sqrt(alpha) x_theta
//   eta2(Q, b)          = log E_h exp(h^T b + (h^T Q_W h + 2 h^T Q_Wtheta + Q_theta) / 2)
// with h drawn from a finite-support hidden prior.
#pragma once

#include <optional>
#include <vector>

#include "rbmlab/types.hpp"

namespace rbm {

struct UnitSupport {
  std::vector<double> points;
  std::vector<double> weights;
};

struct HiddenPrior {
  int k = 0;
  bool separable = false;
  std::vector<UnitSupport> units;  // per-unit factors, separable priors only
  Mat support;                     // k x S, every joint configuration
  Vec log_weights;                 // S

  static constexpr Index kMaxSupport = Index(1) << 22;

  static HiddenPrior rademacher(int k);
  static HiddenPrior product(std::vector<UnitSupport> units);
  static HiddenPrior general(Mat points, Vec weights);

  Index size() const { return support.cols(); }
  // Largest |h_a| on the support of unit a.
  double max_abs(int a) const;
  // True if every unit factor is invariant under h -> -h.
  bool symmetric() const;
};

struct EffectiveModel {
  HiddenPrior prior;
  double alpha = 2.0;
  bool include_biases = false;

  EffectiveModel() = default;
  EffectiveModel(HiddenPrior p, double a, bool biases = false);
  int k() const { return prior.k; }
};

struct OverlapMatrix {
  Mat Q_W;
  Vec Q_Wtheta;  // empty when absent
  double Q_theta = 0.0;

  static OverlapMatrix from_weights(const Mat& W);
  static OverlapMatrix from_weights(const Mat& W, const Vec& theta);
};

double eta1(const Vec& xW, double x_theta, const Vec& b, const EffectiveModel& model);
double eta1(const Vec& xW, const EffectiveModel& model);

struct Eta1Grad {
  Vec dx;         // sqrt(alpha) <h>
  double dtheta;  // sqrt(alpha)
  Vec db;         // <h>
};
Eta1Grad grad_eta1(const Vec& xW, double x_theta, const Vec& b, const EffectiveModel& model);

struct UnitMoments {
  double logz, mean, var;
};
// log E exp(h s), tilted mean and variance of a single hidden unit.
UnitMoments unit_moments(const UnitSupport& u, double s);

// Tilted mean and covariance of h at natural parameter s = sqrt(alpha) x + b.
void tilted_moments(const Vec& s, const HiddenPrior& prior, Vec& mean, Mat& cov);

// d^2 eta1 / dx^2 = alpha Cov(h).
Mat hess_eta1(const Vec& xW, const Vec& b, const EffectiveModel& model);

double eta2(const OverlapMatrix& Q, const Vec& b, const EffectiveModel& model);
double eta2(const Mat& Q_W, const EffectiveModel& model);

struct Eta2Grad {
  Mat dQ;          // (1/2) <h h^T>
  Vec dQWtheta;    // <h>, empty when Q_Wtheta absent
  double dQtheta;  // 1/2
  Vec db;          // <h>
};
Eta2Grad grad_eta2(const OverlapMatrix& Q, const Vec& b, const EffectiveModel& model);
Mat grad_eta2(const Mat& Q_W, const EffectiveModel& model);

// Row projections X W / sqrt(n) and back-projection X^T U / sqrt(n).
Mat project(const RowMat& X, const Mat& W);
Mat back_project(const RowMat& X, const Mat& U);

double effective_loglik(const Mat& W, const std::optional<Vec>& theta, const std::optional<Vec>& b,
                        const RowMat& X, const EffectiveModel& model);
double effective_loglik(const Mat& W, const RowMat& X, const EffectiveModel& model);

// Gradient in W with theta, b frozen at the supplied values.
Mat effective_grad_full(const Mat& W, const std::optional<Vec>& theta, const std::optional<Vec>& b,
                        const RowMat& X, const EffectiveModel& model);

// Biasless gradient X^T grad_eta1(XW/sqrt n)/sqrt n - alpha W <hh^T>.
Mat effective_grad(const Mat& W, const RowMat& X, const EffectiveModel& model);

// Exact log-likelihood with Rademacher visible units, enumerating all 2^d
// visible states. Requires d <= 22.
double exact_loglik_small(const Mat& W, const RowMat& X, const EffectiveModel& model,
                          const std::optional<Vec>& theta = std::nullopt,
                          const std::optional<Vec>& b = std::nullopt);

}  // namespace rbm
