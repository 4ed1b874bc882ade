#include "rbmlab/amp_rbm.hpp"

#include <cmath>
#include <limits>

#include <boost/math/tools/roots.hpp>

#include "rbmlab/baselines.hpp"
#include "rbmlab/parallel.hpp"

namespace rbm {

SafeInverse safe_inverse(const Mat& A) {
  require(A.rows() == A.cols(), "safe_inverse: matrix must be square");
  const Index k = A.rows();
  auto cond = [](const Mat& M) {
    Eigen::JacobiSVD<Mat> svd(M);
    const auto& s = svd.singularValues();
    return s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
  };
  SafeInverse r;
  if (!A.allFinite()) throw NumericalError("safe_inverse: non-finite matrix");
  if (cond(A) < 1e12) {
    r.inv = A.partialPivLu().inverse();
    return r;
  }
  const Mat Ar = A + 1e-10 * Mat::Identity(k, k);
  if (!(cond(Ar) < 1e14)) throw NumericalError("safe_inverse: matrix is singular");
  r.inv = Ar.partialPivLu().inverse();
  r.regularized = true;
  return r;
}

Vec denoiser_f(const Vec& z, const Mat& Q_hat, const Mat& C_prev) {
  require(z.size() == Q_hat.rows() && Q_hat.rows() == C_prev.rows(), "denoiser_f: shape mismatch");
  return -(safe_inverse(2 * Q_hat + C_prev).inv * z);
}

namespace {

using UnitEval = UnitMoments;

inline UnitEval unit_eval(const UnitSupport& u, double s) { return unit_moments(u, s); }

struct ScalarProx {
  double h, u, du;
  bool nonconvex;
};

// Minimizes psi(h) = (h - y)^2 / 2 + (B / alpha) e(sqrt(alpha) h) over h.
// Every stationary point lies within |B| hmax / sqrt(alpha) of y.
ScalarProx scalar_prox(double y, double B, double alpha, const UnitSupport& unit, double hmax,
                       double vmax) {
  const double sa = std::sqrt(alpha);
  auto F = [&](double h) { return h - y + (B / sa) * unit_eval(unit, sa * h).mean; };
  auto psi = [&](double h) {
    return 0.5 * (h - y) * (h - y) + (B / alpha) * unit_eval(unit, sa * h).logz;
  };
  const double radius = std::abs(B) * hmax / sa;
  double lo = y - radius, hi = y + radius;
  const bool convex = 1.0 + std::min(B, 0.0) * vmax > 0;
  double h;
  if (radius == 0) {
    h = y;
  } else if (convex) {
    boost::uintmax_t iters = 200;
    auto fd = [&](double x) {
      const UnitEval ev = unit_eval(unit, sa * x);
      return std::make_pair(x - y + (B / sa) * ev.mean, 1.0 + B * ev.var);
    };
    h = boost::math::tools::newton_raphson_iterate(fd, y, lo, hi, 50, iters);
    if (!(std::abs(F(h)) < 1e-10)) {
      boost::uintmax_t it2 = 400;
      auto tol = boost::math::tools::eps_tolerance<double>(52);
      const double flo = F(lo), fhi = F(hi);
      if (flo == 0) {
        h = lo;
      } else if (fhi == 0) {
        h = hi;
      } else {
        auto br = boost::math::tools::toms748_solve(F, lo, hi, flo, fhi, tol, it2);
        h = 0.5 * (br.first + br.second);
      }
    }
  } else if (y == 0.0 && unit.points.size() == 2 && unit.points[0] == -unit.points[1]) {
    // Symmetric unit at y = 0: keep the odd branch at the origin.
    h = 0.0;
  } else {
    // Several stationary points: locate sign changes on a grid and keep the
    // global minimizer of psi.
    constexpr int kScan = 64;
    double best = std::numeric_limits<double>::infinity();
    h = y;
    double a = lo, fa = F(lo);
    auto tol = boost::math::tools::eps_tolerance<double>(52);
    for (int i = 1; i <= kScan; ++i) {
      const double b = lo + (hi - lo) * i / kScan;
      const double fb = F(b);
      double root = std::numeric_limits<double>::quiet_NaN();
      if (fa == 0) {
        root = a;
      } else if (fa * fb < 0) {
        boost::uintmax_t it = 200;
        auto br = boost::math::tools::toms748_solve(F, a, b, fa, fb, tol, it);
        root = 0.5 * (br.first + br.second);
      }
      if (std::isfinite(root)) {
        const double v = psi(root);
        if (v < best) {
          best = v;
          h = root;
        }
      }
      a = b;
      fa = fb;
    }
    if (fa == 0 && psi(hi) < best) h = hi;
  }
  const UnitEval ev = unit_eval(unit, sa * h);
  const double denom = 1.0 + B * ev.var;
  // u = -eta1'(h)/alpha, du/dy = -v / (1 + B v).
  return {h, -ev.mean / sa, -ev.var / denom, !convex};
}

}  // namespace

ScalarG scalar_denoiser_g(double y, double B, double alpha, const UnitSupport& unit) {
  double lo = unit.points[0], hi = unit.points[0];
  for (double p : unit.points) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  const double hmax = std::max(std::abs(lo), std::abs(hi));
  const double vmax = 0.25 * (hi - lo) * (hi - lo);
  const ScalarProx sp = scalar_prox(y, B, alpha, unit, hmax, vmax);
  return {sp.h, sp.u, sp.du, sp.nonconvex};
}

GOutput denoiser_g(const Vec& y, const Mat& B, const EffectiveModel& model) {
  const int k = model.k();
  require(y.size() == k && B.rows() == k && B.cols() == k, "denoiser_g: shape mismatch");
  require((B - B.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, B.cwiseAbs().maxCoeff()),
          "denoiser_g: B must be symmetric");
  const double alpha = model.alpha;
  GOutput out;
  out.u.resize(k);
  out.h.resize(k);
  out.jac.setZero(k, k);
  const bool diagonal = (B - Mat(B.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  if (model.prior.separable && diagonal) {
    for (int a = 0; a < k; ++a) {
      const ScalarG sp = scalar_denoiser_g(y(a), B(a, a), alpha, model.prior.units[a]);
      out.h(a) = sp.h;
      out.u(a) = sp.u;
      out.jac(a, a) = sp.du;
      out.nonconvex = out.nonconvex || sp.nonconvex;
    }
    return out;
  }
  // Newton on F(h) = h - y + B grad eta1(h) / alpha with backtracking on |F|.
  const Mat I = Mat::Identity(k, k);
  Vec h = y;
  auto residual = [&](const Vec& x, Vec& g, Mat& H) {
    g = grad_eta1(x, 0.0, Vec(), model).dx;
    H = hess_eta1(x, Vec(), model);
    return Vec(x - y + B * g / alpha);
  };
  Vec g;
  Mat H;
  Vec F = residual(h, g, H);
  int it = 0;
  for (; it < 200 && F.norm() > 1e-11; ++it) {
    const Mat J = I + B * H / alpha;
    const Vec step = J.partialPivLu().solve(F);
    double t = 1.0;
    Vec hn, gn, Fn;
    Mat Hn;
    for (int ls = 0; ls < 40; ++ls) {
      hn = h - t * step;
      Fn = residual(hn, gn, Hn);
      if (Fn.allFinite() && Fn.norm() < (1 - 1e-4 * t) * F.norm()) break;
      t *= 0.5;
    }
    h = hn;
    F = Fn;
    g = gn;
    H = Hn;
  }
  if (!(F.norm() <= 1e-9)) {
    throw NumericalError("denoiser_g: Newton did not converge (|F| = " + std::to_string(F.norm()) +
                         " after " + std::to_string(it) + " steps)");
  }
  out.h = h;
  out.u = -g / alpha;
  // du/dy = -(1/alpha) H (I + B H / alpha)^{-1}.
  out.jac = -(H / alpha) * (I + B * H / alpha).inverse();
  out.jac = 0.5 * (out.jac + out.jac.transpose()).eval();
  return out;
}

void AmpConfig::validate() const {
  require(damping >= 0 && damping < 1, "amp damping must lie in [0, 1)");
  require(tol > 0, "amp tolerance must be > 0");
  require(max_iters >= 1, "amp max_iters must be >= 1");
  require(m0 >= 0 && m0 <= 1, "amp m0 must lie in [0, 1]");
  require(init_scale > 0, "amp init_scale must be > 0");
}

double stationarity_residual(const Mat& W, const RowMat& X, const EffectiveModel& model) {
  const Mat G = effective_grad(W, X, model);
  return G.norm() / std::sqrt(static_cast<double>(G.size()));
}

Mat amp_initial_z(const SpikedDataset& data, int k, const AmpConfig& config) {
  const Index d = data.d(), r = data.r();
  Mat Z(d, k);
  const double noise = config.init == AmpInit::Informed ? std::sqrt(1.0 - config.m0 * config.m0)
                                                        : config.init_scale;
  parallel_for(d, [&](Index b, Index e) {
    for (Index j = b; j < e; ++j) {
      KeyedRng rng(config.seed, kStreamInit, j);
      for (int a = 0; a < k; ++a) Z(j, a) = noise * rng.gaussian();
    }
  });
  if (config.init == AmpInit::Informed) {
    // Noise orthogonal to the signal span with exact squared norm (1 - m0^2) d,
    // so the initial overlap is m0 up to the overlap between signal columns.
    const Eigen::HouseholderQR<Mat> qr(data.W_star);
    const Mat Q = qr.householderQ() * Mat::Identity(d, r);
    Z -= Q * (Q.transpose() * Z);
    for (int a = 0; a < k; ++a) {
      const double nrm = Z.col(a).norm();
      if (nrm > 0) Z.col(a) *= noise * std::sqrt(static_cast<double>(d)) / nrm;
    }
    for (int a = 0; a < std::min<Index>(k, r); ++a) {
      const double rho = data.W_star.col(a).squaredNorm() / static_cast<double>(d);
      Z.col(a) += config.m0 / std::sqrt(rho) * data.W_star.col(a);
    }
  } else if (config.init == AmpInit::Spectral) {
    Z = -svd_baseline(data, k, config.seed);
  }
  return Z;
}

namespace {
void check_finite(const AmpState& s, const char* what) {
  if (!s.W.allFinite() || !s.Z.allFinite() || !s.U.allFinite() || !s.Q_hat.allFinite()) {
    throw AmpDivergence(std::string("amp_run: non-finite ") + what, s);
  }
}
}  // namespace

AmpTrace amp_run(const SpikedDataset& data, const EffectiveModel& model, const AmpConfig& config) {
  config.validate();
  const int k = model.k();
  const Index n = data.n(), d = data.d();
  require(data.X.rows() == n && d >= 1, "amp_run: empty dataset");
  require(std::abs(model.alpha - data.alpha) < 1e-12, "amp_run: model alpha must equal n/d");
  const Mat I = Mat::Identity(k, k);

  AmpState st;
  st.Z = amp_initial_z(data, k, config);
  st.U = Mat::Zero(n, k);
  st.C = Mat::Zero(k, k);
  st.Q_hat = 0.5 * I;
  st.W = Mat::Zero(d, k);

  AmpTrace tr;
  AmpState last = st;
  for (int t = 1; t <= config.max_iters; ++t) {
    const SafeInverse A = safe_inverse(2 * st.Q_hat + st.C);
    tr.regularized_inverses += A.regularized;
    const Mat W_prev = st.W;
    st.W = -st.Z * A.inv.transpose();
    st.B = -(static_cast<double>(d) / static_cast<double>(n)) * A.inv;
    st.B = 0.5 * (st.B + st.B.transpose()).eval();
    st.Y = project(data.X, st.W) - st.U * st.B.transpose();

    Mat U(n, k);
    std::vector<char> nonconvex(n, 0);
    const Mat Csum = deterministic_sum(n, k, k, [&](Index b, Index e, Mat& acc) {
      for (Index i = b; i < e; ++i) {
        const GOutput g = denoiser_g(st.Y.row(i).transpose(), st.B, model);
        U.row(i) = g.u.transpose();
        acc += g.jac;
        nonconvex[i] = g.nonconvex;
      }
    });
    for (char c : nonconvex) tr.nonconvex_prox += c;
    st.U = U;
    st.C = Csum / static_cast<double>(n);
    st.Z = back_project(data.X, st.U) - st.W * st.C.transpose();
    const Mat Q = st.W.transpose() * st.W / static_cast<double>(d);
    st.Q_hat = config.damping * st.Q_hat + (1 - config.damping) * grad_eta2(0.5 * (Q + Q.transpose()), model);
    st.Q_hat = 0.5 * (st.Q_hat + st.Q_hat.transpose()).eval();
    st.t = t;
    check_finite(st, "iterate");

    tr.overlaps.push_back(overlap_matrix(st.W, data.W_star));
    const double delta = (st.W - W_prev).squaredNorm() / static_cast<double>(d);
    tr.delta.push_back(delta);
    tr.residual.push_back(config.record_residual ? stationarity_residual(st.W, data.X, model)
                                                 : std::numeric_limits<double>::quiet_NaN());
    tr.objective.push_back(config.record_objective
                               ? effective_loglik(st.W, data.X, model) / static_cast<double>(d)
                               : std::numeric_limits<double>::quiet_NaN());
    if (!std::isfinite(tr.residual.back()) && config.record_residual) {
      throw AmpDivergence("amp_run: non-finite residual", last);
    }
    last = st;
    tr.iterations = t;
    if (t > 1 && delta < config.tol) {
      tr.converged = true;
      break;
    }
  }
  tr.W_final = st.W;
  tr.state = st;
  return tr;
}

}  // namespace rbm
