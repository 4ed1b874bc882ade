#include "rbmlab/rank1_global.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "rbmlab/errors.hpp"
#include "rbmlab/quadrature.hpp"

namespace rbm {

namespace {

// Minimizes phi(y) = f(y) + (c/2) y^2 - b y.
double minimize_scalar(const ScalarFn& f, double c, double b, double start) {
  auto phi = [&](double y) { return f.f(y) + 0.5 * c * y * y - b * y; };
  if (f.smooth()) {
    auto dphi = [&](double y) { return f.df(y) + c * y - b; };
    // Bracket a sign change of phi' by stepping out from the start.
    double lo = start, hi = start, step = 1.0;
    double flo = dphi(lo), fhi = flo;
    int guard = 0;
    while (flo > 0 && guard++ < 200) {
      lo -= step;
      step *= 2;
      flo = dphi(lo);
    }
    step = 1.0;
    guard = 0;
    while (fhi < 0 && guard++ < 200) {
      hi += step;
      step *= 2;
      fhi = dphi(hi);
    }
    if (flo > 0 || fhi < 0) throw NumericalError("moreau: minimizer search exhausted the bracket");
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    boost::uintmax_t it = 200;
    auto nd = [&](double y) { return std::make_pair(dphi(y), f.d2f(y) + c); };
    double y = boost::math::tools::newton_raphson_iterate(nd, std::clamp(start, lo, hi), lo, hi, 52, it);
    if (!(std::abs(dphi(y)) <= 1e-11 * std::max(1.0, std::abs(b) + std::abs(c * y)))) {
      boost::uintmax_t it2 = 300;
      auto br = boost::math::tools::toms748_solve(dphi, lo, hi, boost::math::tools::eps_tolerance<double>(52), it2);
      y = 0.5 * (br.first + br.second);
    }
    // A convex phi has a single critical point; otherwise keep the best of
    // the critical points found by scanning the bracket.
    if (f.d2f(y) + c > 0) {
      bool convex = true;
      for (int i = 0; i <= 64 && convex; ++i) convex = f.d2f(lo + (hi - lo) * i / 64) + c > 0;
      if (convex) return y;
    }
    double best = phi(y), arg = y;
    double a = lo, fa = dphi(lo);
    for (int i = 1; i <= 256; ++i) {
      const double bb = lo + (hi - lo) * i / 256, fb = dphi(bb);
      if (fa * fb < 0) {
        boost::uintmax_t it3 = 200;
        auto br = boost::math::tools::toms748_solve(dphi, a, bb, fa, fb,
                                                    boost::math::tools::eps_tolerance<double>(52), it3);
        const double r0 = 0.5 * (br.first + br.second);
        if (phi(r0) < best) {
          best = phi(r0);
          arg = r0;
        }
      }
      a = bb;
      fa = fb;
    }
    return arg;
  }
  // Derivative-free: grow a window until the ends exceed the centre, scan, then Brent.
  require(c > 0, "moreau: derivative-free search needs positive curvature");
  double R = 1.0;
  const double f0 = phi(start);
  for (int i = 0; i < 200 && (phi(start - R) <= f0 || phi(start + R) <= f0); ++i) R *= 2;
  constexpr int kGrid = 400;
  double best = f0, arg = start;
  for (int i = 0; i <= kGrid; ++i) {
    const double y = start - R + 2 * R * i / kGrid;
    const double v = phi(y);
    if (v < best) {
      best = v;
      arg = y;
    }
  }
  const double h = 2 * R / kGrid;
  auto r = boost::math::tools::brent_find_minima(phi, arg - h, arg + h, 52);
  return r.second <= best ? r.first : arg;
}

}  // namespace

MoreauResult moreau(const ScalarFn& f, double tau, double x) {
  require(tau > 0, "moreau: tau must be > 0");
  require(static_cast<bool>(f.f), "moreau: f must be callable");
  const double c = 1.0 / tau;
  const double y = minimize_scalar(f, c, c * x, x);
  return {f.f(y) + (y - x) * (y - x) / (2 * tau), y};
}

double prox_linear(const ScalarFn& f, double c, double b) {
  return minimize_scalar(f, c, b, c > 0 ? b / c : 0.0);
}

ScalarObjectivePair ScalarObjectivePair::rbm(double alpha) {
  require(alpha > 0, "rbm pair: alpha must be > 0");
  const double sa = std::sqrt(alpha);
  ScalarObjectivePair p;
  p.eta1.f = [=](double x) {
    const double a = std::abs(sa * x);
    return -(a + std::log1p(std::exp(-2 * a)) - std::log(2.0)) / alpha;
  };
  p.eta1.df = [=](double x) { return -std::tanh(sa * x) / sa; };
  p.eta1.d2f = [=](double x) {
    const double e = std::exp(-2 * std::abs(sa * x));
    return -4 * e / ((1 + e) * (1 + e));
  };
  p.eta2 = [=](double w, double) { return 0.5 * alpha * w * w; };
  p.eta2_dw = [=](double w, double) { return alpha * w; };
  p.eta2_dww = [=](double, double) { return alpha; };
  p.eta2_dp = [](double, double) { return 0.0; };
  return p;
}

ScalarObjectivePair ScalarObjectivePair::quadratic(double a1, double a2) {
  ScalarObjectivePair p;
  p.eta1.f = [=](double x) { return 0.5 * a1 * x * x; };
  p.eta1.df = [=](double x) { return a1 * x; };
  p.eta1.d2f = [=](double) { return a1; };
  p.eta2 = [=](double w, double) { return 0.5 * a2 * w * w; };
  p.eta2_dw = [=](double w, double) { return a2 * w; };
  p.eta2_dww = [=](double, double) { return a2; };
  p.eta2_dp = [](double, double) { return 0.0; };
  return p;
}

SaddlePoint SaddlePoint::unpack(const std::vector<double>& v) {
  SaddlePoint s;
  s.m = v[0];
  s.q = v[1];
  s.p = v[2];
  s.tau = v[3];
  s.kappa = v[4];
  s.nu = v[5];
  s.chi = v[6];
  s.phi = v[7];
  return s;
}

namespace {

struct Nodes {
  std::vector<double> x, w;
};

Nodes prior_nodes(const SpikePrior& p) {
  if (p.finite_support()) return {p.support(), p.support_weights()};
  const GaussRule gh = gauss_hermite(60);
  Nodes n{gh.x, gh.w};
  for (double& v : n.x) v *= std::sqrt(p.variance);
  return n;
}

// eta2(., p) + phi |.|^r as a scalar map.
ScalarFn eta2_tilde(const SaddleProblem& pr, double p, double phi) {
  const double r = pr.pair.r;
  ScalarFn f;
  auto e2 = pr.pair.eta2;
  f.f = [=](double w) { return e2(w, p) + phi * std::pow(std::abs(w), r); };
  if (pr.pair.eta2_dw && pr.pair.eta2_dww && (phi == 0.0 || r >= 2.0)) {
    auto d1 = pr.pair.eta2_dw;
    auto d2 = pr.pair.eta2_dww;
    f.df = [=](double w) {
      const double t = phi == 0.0 ? 0.0 : phi * r * std::pow(std::abs(w), r - 1) * (w < 0 ? -1.0 : 1.0);
      return d1(w, p) + t;
    };
    f.d2f = [=](double w) {
      const double t = phi == 0.0 ? 0.0 : phi * r * (r - 1) * std::pow(std::abs(w), r - 2);
      return d2(w, p) + t;
    };
  }
  return f;
}

struct Moments {
  // Side 1: A = lambda m U* + q G, P1 = prox_{s eta1}(A), s = tau/kappa.
  double EuD = 0, EgD = 0, ED2 = 0, Eenv1 = 0, Eeta1 = 0, Erep1 = 0;  // D = P1 - A
  // Side 2: c = nu W* + kappa H, P2 = argmin eta2~ + chi y^2/2 - c y.
  double EwP = 0, EP2 = 0, EhP = 0, ErP = 0, Edp = 0, Eenv2 = 0, Eeta2 = 0, Erep2 = 0;
  bool fallback = false;
};

Moments moments(const SaddlePoint& s, const SaddleProblem& pr, bool need_replicon) {
  require(s.q > 0 && s.tau > 0 && s.kappa > 0, "saddle point outside q, tau, kappa > 0");
  const GaussRule g = dense_gaussian(pr.panels, pr.half_width);
  const Nodes nu = prior_nodes(pr.prior_u), nw = prior_nodes(pr.prior_w);
  const double st = s.tau / s.kappa;
  const ScalarFn& e1 = pr.pair.eta1;
  const ScalarFn e2 = eta2_tilde(pr, s.p, s.phi);
  Moments M;
  // Derivative of a prox map by central differences when no curvature is known.
  for (std::size_t iu = 0; iu < nu.x.size(); ++iu) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double w = nu.w[iu] * g.w[i];
      const double A = pr.lambda * s.m * nu.x[iu] + s.q * g.x[i];
      const MoreauResult mr = moreau(e1, st, A);
      const double D = mr.prox - A;
      M.EuD += w * nu.x[iu] * D;
      M.EgD += w * g.x[i] * D;
      M.ED2 += w * D * D;
      M.Eenv1 += w * mr.value;
      M.Eeta1 += w * e1.f(mr.prox);
      if (need_replicon) {
        double dp;
        if (e1.d2f) {
          dp = 1.0 / (1.0 + st * e1.d2f(mr.prox));
        } else {
          const double h = 1e-5;
          dp = (moreau(e1, st, A + h).prox - moreau(e1, st, A - h).prox) / (2 * h);
          M.fallback = true;
        }
        M.Erep1 += w * (dp - 1) * (dp - 1);
      }
    }
  }
  for (std::size_t iw = 0; iw < nw.x.size(); ++iw) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double w = nw.w[iw] * g.w[i];
      const double c = s.nu * nw.x[iw] + s.kappa * g.x[i];
      const double P = prox_linear(e2, s.chi, c);
      M.EwP += w * nw.x[iw] * P;
      M.EP2 += w * P * P;
      M.EhP += w * g.x[i] * P;
      M.ErP += w * std::pow(std::abs(P), pr.pair.r);
      if (pr.pair.eta2_dp) M.Edp += w * pr.pair.eta2_dp(P, s.p);
      M.Eenv2 += w * (e2.f(P) + 0.5 * s.chi * P * P - c * P);
      M.Eeta2 += w * pr.pair.eta2(P, s.p);
      if (need_replicon) {
        double inv;
        if (e2.d2f) {
          inv = 1.0 / (e2.d2f(P) + s.chi);
        } else {
          const double h = 1e-5;
          inv = (prox_linear(e2, s.chi, c + h) - prox_linear(e2, s.chi, c - h)) / (2 * h);
          M.fallback = true;
        }
        M.Erep2 += w * inv * inv;
      }
    }
  }
  return M;
}

double rho_of(const SaddleProblem& pr) { return pr.prior_w.second_moment(); }

}  // namespace

double potential(const SaddlePoint& s, const SaddleProblem& pr) {
  const Moments M = moments(s, pr, false);
  // E M_{(1/chi) eta2~}(c/chi) - E c^2/(2 chi) = E min_y [eta2~(y) + chi y^2/2 - c y].
  const double v = 0.5 * s.kappa * s.tau + pr.alpha * M.Eenv1 + M.Eenv2 + s.nu * s.m -
                   0.5 * s.chi * s.q * s.q - s.phi * s.p;
  if (!std::isfinite(v)) throw NumericalError("potential: non-finite value");
  return v;
}

std::vector<double> saddle_residuals(const SaddlePoint& s, const SaddleProblem& pr) {
  const Moments M = moments(s, pr, false);
  const double a = pr.alpha, kt = s.kappa / s.tau;
  return {
      s.m - M.EwP,                                // d/dnu
      s.q * s.q - M.EP2,                          // d/dchi
      s.nu - a * pr.lambda * kt * M.EuD,          // d/dm
      s.tau * s.tau - a * M.ED2,                  // d/dtau
      s.tau - M.EhP,                              // d/dkappa
      s.chi * s.q + a * kt * M.EgD,               // d/dq: chi q = alpha (kappa/tau) E[G (A - P1)]
      s.p - M.ErP,                                // d/dphi
      s.phi - M.Edp,                              // d/dp
  };
}

double saddle_value(const SaddlePoint& s, const SaddleProblem& pr) {
  const Moments M = moments(s, pr, false);
  return pr.alpha * M.Eeta1 + M.Eeta2;
}

SaddlePoint solve_saddle(const SaddleProblem& pr, const SaddlePoint& init, double tol,
                         SaddleReport* report) {
  require(init.q > 0 && init.tau > 0 && init.kappa > 0, "solve_saddle: init outside the valid cone");
  auto F = [&](const std::vector<double>& v) {
    const SaddlePoint s = SaddlePoint::unpack(v);
    const auto r = saddle_residuals(s, pr);
    return Vec(Eigen::Map<const Vec>(r.data(), static_cast<Index>(r.size())));
  };
  auto valid = [](const std::vector<double>& v) { return v[1] > 0 && v[3] > 0 && v[4] > 0; };
  std::vector<double> v = init.pack();
  Vec R = F(v);
  int it = 0;
  for (; it < 200 && R.cwiseAbs().maxCoeff() > tol; ++it) {
    Mat J(8, 8);
    for (int j = 0; j < 8; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(v[j]));
      auto vp = v, vm = v;
      vp[j] += h;
      vm[j] -= h;
      if (!valid(vm)) {
        J.col(j) = (F(vp) - R) / h;
      } else {
        J.col(j) = (F(vp) - F(vm)) / (2 * h);
      }
    }
    const Vec step = J.fullPivLu().solve(-R);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      std::vector<double> vn = v;
      for (int j = 0; j < 8; ++j) vn[j] += t * step(j);
      if (valid(vn)) {
        try {
          const Vec Rn = F(vn);
          if (Rn.allFinite() && Rn.norm() < (1 - 1e-4 * t) * R.norm()) {
            v = vn;
            R = Rn;
            accepted = true;
            break;
          }
        } catch (const NumericalError&) {
        }
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  const SaddlePoint s = SaddlePoint::unpack(v);
  const double maxr = R.cwiseAbs().maxCoeff();
  if (report) {
    report->residuals.assign(R.data(), R.data() + R.size());
    report->max_residual = maxr;
    report->iterations = it;
    report->converged = maxr <= tol;
    report->bounded = std::isfinite(s.q) && std::isfinite(s.p) && s.q < 1e3 && std::abs(s.p) < 1e6;
  }
  if (!(maxr <= tol)) {
    throw NumericalError("solve_saddle: no convergence, max residual " + std::to_string(maxr) +
                         " after " + std::to_string(it) + " Newton steps");
  }
  return s;
}

SaddlePoint saddle_from_se(const SeState& fp, const EffectiveModel& model, const SeEngine& engine) {
  require(model.k() == 1 && fp.M.cols() == 1, "saddle_from_se: k = r = 1 only");
  SeState s = fp;
  se_f_side(s, model, engine);
  const double alpha = model.alpha, rho = engine.prior_w.second_moment();
  const double Ainv = 1.0 / (2 * s.Q_hat(0, 0) + s.C_bar(0, 0));
  const double EfW = -Ainv * s.M(0, 0) * rho;
  const double Eff = s.Q_bar(0, 0);
  SaddlePoint p;
  p.m = std::abs(EfW) / std::sqrt(alpha);
  p.q = std::sqrt(Eff / alpha);
  const double st = std::abs(s.B_bar(0, 0));
  p.chi = 1.0 / st - alpha;
  p.nu = p.m * (p.chi + alpha) / rho;
  const double k2 = p.q * p.q * (p.chi + alpha) * (p.chi + alpha) - p.nu * p.nu * rho;
  p.kappa = std::sqrt(std::max(k2, 1e-12));
  p.tau = p.kappa * st;
  p.p = p.q * p.q;
  p.phi = 0.0;
  return p;
}

double saddle_overlap(const SaddlePoint& s, const SaddleProblem& pr) {
  return std::abs(s.m) / (std::sqrt(rho_of(pr)) * s.q);
}

RepliconReport replicon_stability(const SaddlePoint& s, const SaddleProblem& pr) {
  const Moments M = moments(s, pr, true);
  const double kt = s.kappa / s.tau;
  return {pr.alpha * kt * kt * M.Erep1 * M.Erep2, M.fallback};
}

}  // namespace rbm
