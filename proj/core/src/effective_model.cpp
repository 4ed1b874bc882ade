#include "rbmlab/effective_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "rbmlab/errors.hpp"
#include "rbmlab/parallel.hpp"

namespace rbm {

namespace {

double log_sum_exp(const Vec& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

void check_unit(const UnitSupport& u) {
  require(!u.points.empty() && u.points.size() == u.weights.size(),
          "hidden unit support needs matching points and weights");
  double s = 0;
  for (double w : u.weights) {
    require(w > 0, "hidden prior weights must be positive");
    s += w;
  }
  require(std::abs(s - 1.0) <= 1e-12, "hidden prior weights must sum to 1");
}

void check_symmetric(const Mat& Q, const char* who) {
  require(Q.rows() == Q.cols(), std::string(who) + ": Q_W must be square");
  const double tol = 1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff());
  require((Q - Q.transpose()).cwiseAbs().maxCoeff() <= tol,
          std::string(who) + ": Q_W must be symmetric");
}

}  // namespace

HiddenPrior HiddenPrior::rademacher(int k) {
  require(k >= 1, "hidden count k must be >= 1");
  return product(std::vector<UnitSupport>(k, UnitSupport{{-1.0, 1.0}, {0.5, 0.5}}));
}

HiddenPrior HiddenPrior::product(std::vector<UnitSupport> units) {
  require(!units.empty(), "hidden prior needs at least one unit");
  Index S = 1;
  for (const auto& u : units) {
    check_unit(u);
    S *= static_cast<Index>(u.points.size());
    if (S > kMaxSupport) throw CapacityError("hidden prior support exceeds 2^22 configurations");
  }
  HiddenPrior p;
  p.k = static_cast<int>(units.size());
  p.separable = true;
  p.support.resize(p.k, S);
  p.log_weights.resize(S);
  for (Index s = 0; s < S; ++s) {
    Index rem = s;
    double lw = 0;
    for (int a = 0; a < p.k; ++a) {
      const Index m = static_cast<Index>(units[a].points.size());
      const Index j = rem % m;
      rem /= m;
      p.support(a, s) = units[a].points[j];
      lw += std::log(units[a].weights[j]);
    }
    p.log_weights(s) = lw;
  }
  p.units = std::move(units);
  return p;
}

HiddenPrior HiddenPrior::general(Mat points, Vec weights) {
  require(points.cols() == weights.size() && points.cols() >= 1 && points.rows() >= 1,
          "general hidden prior: points k x S and S weights");
  require(points.cols() <= kMaxSupport, "general hidden prior: support too large");
  require(std::abs(weights.sum() - 1.0) <= 1e-12 && weights.minCoeff() > 0,
          "general hidden prior: weights must be positive and sum to 1");
  HiddenPrior p;
  p.k = static_cast<int>(points.rows());
  p.separable = false;
  p.support = std::move(points);
  p.log_weights = weights.array().log();
  return p;
}

double HiddenPrior::max_abs(int a) const { return support.row(a).cwiseAbs().maxCoeff(); }

bool HiddenPrior::symmetric() const {
  if (!separable) return false;
  for (const auto& u : units) {
    for (std::size_t i = 0; i < u.points.size(); ++i) {
      bool found = false;
      for (std::size_t j = 0; j < u.points.size(); ++j) {
        if (std::abs(u.points[j] + u.points[i]) < 1e-14 && std::abs(u.weights[j] - u.weights[i]) < 1e-14)
          found = true;
      }
      if (!found) return false;
    }
  }
  return true;
}

EffectiveModel::EffectiveModel(HiddenPrior p, double a, bool biases)
    : prior(std::move(p)), alpha(a), include_biases(biases) {
  require(alpha > 0, "alpha must be > 0");
  require(prior.k >= 1, "k must be >= 1");
}

OverlapMatrix OverlapMatrix::from_weights(const Mat& W) {
  OverlapMatrix Q;
  Q.Q_W = W.transpose() * W / static_cast<double>(W.rows());
  Q.Q_W = 0.5 * (Q.Q_W + Q.Q_W.transpose()).eval();
  return Q;
}

OverlapMatrix OverlapMatrix::from_weights(const Mat& W, const Vec& theta) {
  OverlapMatrix Q = from_weights(W);
  const double d = static_cast<double>(W.rows());
  Q.Q_Wtheta = W.transpose() * theta / d;
  Q.Q_theta = theta.squaredNorm() / d;
  return Q;
}

UnitMoments unit_moments(const UnitSupport& u, double s) {
  const std::size_t m = u.points.size();
  if (m == 2 && u.points[0] == -1.0 && u.points[1] == 1.0 && u.weights[0] == 0.5) {
    // Rademacher: log cosh, tanh, sech^2 in overflow-safe form.
    const double a = std::abs(s);
    const double e = std::exp(-2 * a);
    const double t = std::tanh(s);
    return {a + std::log1p(e) - std::log(2.0), t, 4 * e / ((1 + e) * (1 + e))};
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) mx = std::max(mx, std::log(u.weights[j]) + u.points[j] * s);
  double z = 0, m1 = 0, m2 = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double w = std::exp(std::log(u.weights[j]) + u.points[j] * s - mx);
    z += w;
    m1 += w * u.points[j];
    m2 += w * u.points[j] * u.points[j];
  }
  m1 /= z;
  m2 /= z;
  return {mx + std::log(z), m1, std::max(0.0, m2 - m1 * m1)};
}

namespace {
// Gibbs weights over the full support for logits l_s = lw_s + extra_s.
Vec gibbs(const Vec& logits, double* logz) {
  const double m = logits.maxCoeff();
  Vec p = (logits.array() - m).exp();
  const double z = p.sum();
  if (logz) *logz = m + std::log(z);
  return p / z;
}

Vec zero_or(const Vec& b, int k) { return b.size() == 0 ? Vec::Zero(k) : b; }
}  // namespace

void tilted_moments(const Vec& s, const HiddenPrior& prior, Vec& mean, Mat& cov) {
  const int k = prior.k;
  mean.resize(k);
  cov.setZero(k, k);
  if (prior.separable) {
    for (int a = 0; a < k; ++a) {
      const UnitMoments um = unit_moments(prior.units[a], s(a));
      mean(a) = um.mean;
      cov(a, a) = um.var;
    }
    return;
  }
  const Vec logits = prior.log_weights + prior.support.transpose() * s;
  const Vec p = gibbs(logits, nullptr);
  mean = prior.support * p;
  cov = prior.support * p.asDiagonal() * prior.support.transpose() - mean * mean.transpose();
}

double eta1(const Vec& xW, double x_theta, const Vec& b, const EffectiveModel& model) {
  const int k = model.k();
  require(xW.size() == k, "eta1: x_W must have k entries");
  const double sa = std::sqrt(model.alpha);
  const Vec s = sa * xW + zero_or(b, k);
  double v = 0;
  if (model.prior.separable) {
    for (int a = 0; a < k; ++a) v += unit_moments(model.prior.units[a], s(a)).logz;
  } else {
    v = log_sum_exp(model.prior.log_weights + model.prior.support.transpose() * s);
  }
  return v + sa * x_theta;
}

double eta1(const Vec& xW, const EffectiveModel& model) { return eta1(xW, 0.0, Vec(), model); }

Eta1Grad grad_eta1(const Vec& xW, double x_theta, const Vec& b, const EffectiveModel& model) {
  (void)x_theta;
  const int k = model.k();
  require(xW.size() == k, "grad_eta1: x_W must have k entries");
  const double sa = std::sqrt(model.alpha);
  Vec mean;
  Mat cov;
  tilted_moments(sa * xW + zero_or(b, k), model.prior, mean, cov);
  return {sa * mean, sa, mean};
}

Mat hess_eta1(const Vec& xW, const Vec& b, const EffectiveModel& model) {
  Vec mean;
  Mat cov;
  tilted_moments(std::sqrt(model.alpha) * xW + zero_or(b, model.k()), model.prior, mean, cov);
  return model.alpha * cov;
}

namespace {
Vec eta2_logits(const OverlapMatrix& Q, const Vec& b, const HiddenPrior& prior) {
  const Mat& H = prior.support;
  const Index S = H.cols();
  Vec l = prior.log_weights;
  const Mat QH = Q.Q_W * H;
  for (Index s = 0; s < S; ++s) l(s) += 0.5 * H.col(s).dot(QH.col(s));
  if (b.size()) l += H.transpose() * b;
  if (Q.Q_Wtheta.size()) l += H.transpose() * Q.Q_Wtheta;
  l.array() += 0.5 * Q.Q_theta;
  return l;
}
}  // namespace

double eta2(const OverlapMatrix& Q, const Vec& b, const EffectiveModel& model) {
  check_symmetric(Q.Q_W, "eta2");
  require(Q.Q_W.rows() == model.k(), "eta2: Q_W must be k x k");
  return log_sum_exp(eta2_logits(Q, b, model.prior));
}

double eta2(const Mat& Q_W, const EffectiveModel& model) {
  OverlapMatrix Q;
  Q.Q_W = Q_W;
  return eta2(Q, Vec(), model);
}

Eta2Grad grad_eta2(const OverlapMatrix& Q, const Vec& b, const EffectiveModel& model) {
  check_symmetric(Q.Q_W, "grad_eta2");
  require(Q.Q_W.rows() == model.k(), "grad_eta2: Q_W must be k x k");
  const Mat& H = model.prior.support;
  const Vec p = gibbs(eta2_logits(Q, b, model.prior), nullptr);
  Eta2Grad g;
  const Mat second = H * p.asDiagonal() * H.transpose();
  g.dQ = 0.25 * (second + second.transpose());
  g.db = H * p;
  if (Q.Q_Wtheta.size()) g.dQWtheta = g.db;
  g.dQtheta = 0.5;
  return g;
}

Mat grad_eta2(const Mat& Q_W, const EffectiveModel& model) {
  OverlapMatrix Q;
  Q.Q_W = Q_W;
  return grad_eta2(Q, Vec(), model).dQ;
}

Mat project(const RowMat& X, const Mat& W) {
  require(X.cols() == W.rows(), "project: shape mismatch");
  const double s = 1.0 / std::sqrt(static_cast<double>(X.rows()));
  Mat P(X.rows(), W.cols());
  parallel_for(X.rows(), [&](Index b, Index e) {
    P.middleRows(b, e - b).noalias() = s * (X.middleRows(b, e - b) * W);
  });
  return P;
}

Mat back_project(const RowMat& X, const Mat& U) {
  require(X.rows() == U.rows(), "back_project: shape mismatch");
  const double s = 1.0 / std::sqrt(static_cast<double>(X.rows()));
  Mat R = deterministic_sum(X.rows(), X.cols(), U.cols(), [&](Index b, Index e, Mat& acc) {
    acc.noalias() += X.middleRows(b, e - b).transpose() * U.middleRows(b, e - b);
  });
  return s * R;
}

namespace {
void check_shapes(const Mat& W, const std::optional<Vec>& theta, const std::optional<Vec>& b,
                  const RowMat& X, const EffectiveModel& model) {
  require(W.rows() == X.cols(), "W must have d rows");
  require(W.cols() == model.k(), "W must have k columns");
  if (theta) require(theta->size() == X.cols(), "theta must have d entries");
  if (b) require(b->size() == model.k(), "b must have k entries");
}
}  // namespace

double effective_loglik(const Mat& W, const std::optional<Vec>& theta, const std::optional<Vec>& b,
                        const RowMat& X, const EffectiveModel& model) {
  check_shapes(W, theta, b, X, model);
  const Mat P = project(X, W);
  Vec pt;
  if (theta) pt = project(X, *theta);
  const Vec bb = b ? *b : Vec();
  const double data = deterministic_sum(X.rows(), [&](Index s, Index e) {
    double acc = 0;
    for (Index i = s; i < e; ++i) acc += eta1(P.row(i).transpose(), theta ? pt(i) : 0.0, bb, model);
    return acc;
  });
  const OverlapMatrix Q = theta ? OverlapMatrix::from_weights(W, *theta) : OverlapMatrix::from_weights(W);
  return data - static_cast<double>(X.rows()) * eta2(Q, bb, model);
}

double effective_loglik(const Mat& W, const RowMat& X, const EffectiveModel& model) {
  return effective_loglik(W, std::nullopt, std::nullopt, X, model);
}

Mat effective_grad_full(const Mat& W, const std::optional<Vec>& theta, const std::optional<Vec>& b,
                        const RowMat& X, const EffectiveModel& model) {
  check_shapes(W, theta, b, X, model);
  const Index n = X.rows(), k = model.k();
  const double d = static_cast<double>(X.cols());
  const Mat P = project(X, W);
  const Vec bb = b ? zero_or(*b, k) : Vec::Zero(k);
  Mat G(n, k);
  parallel_for(n, [&](Index s, Index e) {
    for (Index i = s; i < e; ++i) G.row(i) = grad_eta1(P.row(i).transpose(), 0.0, bb, model).dx.transpose();
  });
  Mat grad = back_project(X, G);
  const OverlapMatrix Q = theta ? OverlapMatrix::from_weights(W, *theta) : OverlapMatrix::from_weights(W);
  const Eta2Grad g2 = grad_eta2(Q, bb, model);
  // d/dW of n*eta2(W^T W/d, W^T theta/d, .) = (n/d) (2 W dQ + theta dQWtheta^T).
  grad -= (static_cast<double>(n) / d) * 2.0 * W * g2.dQ;
  if (theta) grad -= (static_cast<double>(n) / d) * (*theta) * g2.dQWtheta.transpose();
  return grad;
}

Mat effective_grad(const Mat& W, const RowMat& X, const EffectiveModel& model) {
  return effective_grad_full(W, std::nullopt, std::nullopt, X, model);
}

double exact_loglik_small(const Mat& W, const RowMat& X, const EffectiveModel& model,
                          const std::optional<Vec>& theta, const std::optional<Vec>& b) {
  const Index d = X.cols(), n = X.rows(), k = model.k();
  if (d > 22) throw CapacityError("exact_loglik_small: d must be <= 22");
  check_shapes(W, theta, b, X, model);
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  const Mat& H = model.prior.support;
  const Index S = H.cols();
  const Vec bb = b ? *b : Vec::Zero(k);
  const Vec th = theta ? *theta : Vec::Zero(d);

  // Data term: log E_h exp(x^T W h / sqrt d + b^T h) + theta^T x / sqrt d.
  double data = 0;
  for (Index mu = 0; mu < n; ++mu) {
    const Vec a = sd * (W.transpose() * X.row(mu).transpose()) + bb;
    data += log_sum_exp(model.prior.log_weights + H.transpose() * a) + sd * X.row(mu).dot(th);
  }

  // log Z = log E_v E_h exp(v^T (W h + theta)/sqrt d + b^T h), v uniform on
  // {-1,1}^d, walked in Gray-code order so each step flips one coordinate.
  const Mat A = sd * W;  // d x k
  Vec vA = -A.colwise().sum().transpose();
  double vth = -sd * th.sum();
  Vec v = -Vec::Ones(d);
  const std::uint64_t states = std::uint64_t(1) << d;
  Vec base = model.prior.log_weights + H.transpose() * bb;
  // Per-state log-sum-exp over h, then a streaming log-sum-exp over v.
  double run_max = -std::numeric_limits<double>::infinity(), run_sum = 0;
  for (std::uint64_t g = 0; g < states; ++g) {
    if (g > 0) {
      const int i = std::countr_zero(g);
      v(i) = -v(i);
      vA += 2 * v(i) * A.row(i).transpose();
      vth += 2 * v(i) * sd * th(i);
    }
    const double val = log_sum_exp(base + H.transpose() * vA) + vth;
    if (val > run_max) {
      run_sum = run_sum * std::exp(run_max - val) + 1.0;
      run_max = val;
    } else {
      run_sum += std::exp(val - run_max);
    }
  }
  (void)S;
  const double logZ = run_max + std::log(run_sum) - static_cast<double>(d) * std::log(2.0);
  return data - static_cast<double>(n) * logZ;
}

}  // namespace rbm
