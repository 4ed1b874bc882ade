#include "rbmlab/state_evolution.hpp"

#include <algorithm>
#include <cmath>

#include "rbmlab/amp_rbm.hpp"
#include "rbmlab/errors.hpp"
#include "rbmlab/parallel.hpp"
#include "rbmlab/quadrature.hpp"
#include "rbmlab/rng.hpp"

namespace rbm {

void SeEngine::validate() const {
  prior_u.validate();
  prior_w.validate();
  require(prior_u.r == prior_w.r, "SE engine priors must share r");
  if (mode == SeMode::MonteCarlo) require(samples >= 10000, "SE Monte Carlo needs >= 1e4 samples");
  if (mode == SeMode::GaussHermite) require(nodes >= 2, "SE Gauss-Hermite needs >= 2 nodes");
  if (mode == SeMode::Dense) require(panels >= 2 && half_width > 0, "SE dense rule needs panels >= 2");
}

namespace {

double off_diagonal_max(const Mat& A) {
  double m = 0;
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j)
      if (i != j) m = std::max(m, std::abs(A(i, j)));
  return m;
}

bool is_diagonal(const SeState& s) {
  const double tol = 1e-12;
  return off_diagonal_max(s.M) <= tol && off_diagonal_max(s.Sigma) <= tol &&
         off_diagonal_max(s.Q_hat) <= tol && off_diagonal_max(s.C_bar) <= tol;
}

// Symmetric square root with eigenvalue floor; counts repairs.
Mat sym_sqrt(const Mat& S, int* repairs) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
  Vec ev = es.eigenvalues();
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-8 && repairs) ++*repairs;
    ev(i) = std::max(ev(i), 0.0);
  }
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

Mat repair_psd(const Mat& S, int* repairs) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
  Vec ev = es.eigenvalues();
  bool changed = false;
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-8) {
      ev(i) = 1e-10;
      changed = true;
    }
  }
  if (!changed) return 0.5 * (S + S.transpose());
  if (repairs) ++*repairs;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Vec prior_second_moments(const SpikePrior& p) { return Vec::Constant(p.r, p.second_moment()); }

// Values and weights for one coordinate of U.
void prior_nodes(const SpikePrior& p, std::vector<double>& x, std::vector<double>& w) {
  if (p.finite_support()) {
    x = p.support();
    w = p.support_weights();
    return;
  }
  const GaussRule gh = gauss_hermite(60);
  x.resize(gh.size());
  w = gh.w;
  for (std::size_t i = 0; i < gh.size(); ++i) x[i] = std::sqrt(p.variance) * gh.x[i];
}

struct UnitExpect {
  double Egu = 0, Eg2 = 0, Edg = 0, EgG = 0;
};

// Expectations of scalar g over y = mbar u + sqrt(s) G for one hidden unit.
UnitExpect unit_expect(const UnitSupport& unit, double alpha, double mbar, double s, double B,
                       const std::vector<double>& ux, const std::vector<double>& uw,
                       const SeEngine& eng, const GaussRule& gh) {
  UnitExpect out;
  const double sigma = std::sqrt(std::max(s, 0.0));
  const bool symmetric_unit = unit.points.size() == 2 && unit.points[0] == -unit.points[1];
  for (std::size_t iu = 0; iu < ux.size(); ++iu) {
    const double u = ux[iu];
    auto accumulate = [&](const GaussRule& rule) {
      for (std::size_t i = 0; i < rule.size(); ++i) {
        const double y = mbar * u + sigma * rule.x[i];
        const ScalarG g = scalar_denoiser_g(y, B, alpha, unit);
        const double w = uw[iu] * rule.w[i];
        out.Egu += w * g.u * u;
        out.Eg2 += w * g.u * g.u;
        out.Edg += w * g.du;
        out.EgG += w * g.u * rule.x[i];
      }
    };
    if (sigma == 0) {
      const ScalarG g = scalar_denoiser_g(mbar * u, B, alpha, unit);
      out.Egu += uw[iu] * g.u * u;
      out.Eg2 += uw[iu] * g.u * g.u;
      out.Edg += uw[iu] * g.du;
      continue;
    }
    if (eng.mode == SeMode::GaussHermite) {
      accumulate(gh);
      continue;
    }
    // Dense: split at y = 0, where g of a symmetric unit can jump.
    const double L = eng.half_width;
    double cut = symmetric_unit ? -mbar * u / sigma : -L;
    cut = std::clamp(cut, -L, L);
    const int left = std::max(1, static_cast<int>(std::lround(eng.panels * (cut + L) / (2 * L))));
    const int right = std::max(1, eng.panels - left);
    if (cut > -L) accumulate(gaussian_on_interval(-L, cut, left));
    if (cut < L) accumulate(gaussian_on_interval(cut, L, right));
  }
  return out;
}

struct GSide {
  Mat M, Sigma, C;
};

// Per-unit path for diagonal states and separable hidden priors.
GSide g_side_diagonal(const SeState& s, const EffectiveModel& model, const SeEngine& eng) {
  const int k = model.k();
  const Index r = s.M.cols();
  std::vector<double> ux, uw;
  prior_nodes(eng.prior_u, ux, uw);
  const GaussRule gh = eng.mode == SeMode::GaussHermite ? gauss_hermite(eng.nodes) : GaussRule{};
  GSide out{Mat::Zero(k, r), Mat::Zero(k, k), Mat::Zero(k, k)};
  for (int a = 0; a < k; ++a) {
    const bool has_signal = a < r;
    const std::vector<double> x0{0.0}, w0{1.0};
    const double mbar = has_signal ? s.M_bar(a, a) : 0.0;
    const UnitExpect e = unit_expect(model.prior.units[a], model.alpha, mbar, s.Sigma_bar(a, a),
                                     s.B_bar(a, a), has_signal ? ux : x0, has_signal ? uw : w0, eng, gh);
    if (has_signal) out.M(a, a) = e.Egu * s.Gamma(a);
    out.Sigma(a, a) = e.Eg2;
    const double sd = std::sqrt(std::max(s.Sigma_bar(a, a), 0.0));
    out.C(a, a) = (eng.onsager == OnsagerMode::Stein && sd > 1e-150) ? e.EgG / sd : e.Edg;
  }
  return out;
}

// Full k-dimensional path: Monte Carlo or tensor Gauss-Hermite.
GSide g_side_general(SeState& s, const EffectiveModel& model, const SeEngine& eng) {
  const int k = model.k();
  const Index r = s.M.cols();
  const Mat L = sym_sqrt(s.Sigma_bar, &s.psd_repairs);
  const Index acc_cols = r + k + k + k;  // [g U^T | g g^T | dg | g G^T]
  Mat acc;
  if (eng.mode == SeMode::MonteCarlo) {
    const Index N = eng.samples;
    const Index block = 4096;
    const Index nblocks = (N + block - 1) / block;
    acc = deterministic_sum(nblocks, k, acc_cols, [&](Index b0, Index b1, Mat& part) {
      for (Index blk = b0; blk < b1; ++blk) {
        KeyedRng rng(eng.seed, kStreamSe, blk);
        const Index m = std::min(block, N - blk * block);
        Vec U(r), G(k);
        for (Index i = 0; i < m; ++i) {
          for (Index j = 0; j < r; ++j) U(j) = eng.prior_u.sample(rng);
          for (int a = 0; a < k; ++a) G(a) = rng.gaussian();
          const Vec y = s.M_bar * U + L * G;
          const GOutput g = denoiser_g(y, s.B_bar, model);
          part.leftCols(r) += g.u * U.transpose();
          part.middleCols(r, k) += g.u * g.u.transpose();
          part.middleCols(r + k, k) += g.jac;
          part.rightCols(k) += g.u * G.transpose();
        }
      }
    });
    acc /= static_cast<double>(N);
  } else {
    const GaussRule gh = gauss_hermite(eng.nodes);
    const Index nn = static_cast<Index>(gh.size());
    Index grid = 1;
    for (int a = 0; a < k; ++a) {
      grid *= nn;
      if (grid > 4000000) throw CapacityError("tensor Gauss-Hermite grid too large");
    }
    std::vector<double> ux, uw;
    prior_nodes(eng.prior_u, ux, uw);
    const Index nu = static_cast<Index>(ux.size());
    Index ucount = 1;
    for (Index j = 0; j < r; ++j) ucount *= nu;
    acc = deterministic_sum(grid * ucount, k, acc_cols, [&](Index b0, Index b1, Mat& part) {
      Vec U(r), G(k);
      for (Index idx = b0; idx < b1; ++idx) {
        Index rem = idx;
        double w = 1;
        for (int a = 0; a < k; ++a) {
          const Index j = rem % nn;
          rem /= nn;
          G(a) = gh.x[j];
          w *= gh.w[j];
        }
        for (Index j = 0; j < r; ++j) {
          const Index q = rem % nu;
          rem /= nu;
          U(j) = ux[q];
          w *= uw[q];
        }
        const Vec y = s.M_bar * U + L * G;
        const GOutput g = denoiser_g(y, s.B_bar, model);
        part.leftCols(r) += w * g.u * U.transpose();
        part.middleCols(r, k) += w * g.u * g.u.transpose();
        part.middleCols(r + k, k) += w * g.jac;
        part.rightCols(k) += w * g.u * G.transpose();
      }
    });
  }
  GSide out;
  out.M = acc.leftCols(r) * s.Gamma.asDiagonal();
  out.Sigma = acc.middleCols(r, k);
  out.Sigma = 0.5 * (out.Sigma + out.Sigma.transpose()).eval();
  if (eng.onsager == OnsagerMode::Stein) {
    out.C = acc.rightCols(k) * L.completeOrthogonalDecomposition().pseudoInverse();
  } else {
    out.C = acc.middleCols(r + k, k);
  }
  out.C = 0.5 * (out.C + out.C.transpose()).eval();
  return out;
}

bool per_unit_mode(const SeEngine& eng) {
  return eng.mode == SeMode::Dense || (eng.mode == SeMode::GaussHermite && !eng.tensor);
}

}  // namespace

SeState se_initial_state(int k, const Vec& Gamma, const SpikePrior& prior_w, double m0) {
  require(k >= 1 && Gamma.size() == prior_w.r, "se_initial_state: shape mismatch");
  require(m0 >= 0 && m0 <= 1, "se_initial_state: m0 must lie in [0, 1]");
  const Index r = Gamma.size();
  SeState s;
  s.M = Mat::Zero(k, r);
  for (Index a = 0; a < std::min<Index>(k, r); ++a) s.M(a, a) = m0 / std::sqrt(prior_w.second_moment());
  s.Sigma = (1 - m0 * m0) * Mat::Identity(k, k);
  s.Q_hat = 0.5 * Mat::Identity(k, k);
  s.C_bar = Mat::Zero(k, k);
  s.Gamma = Gamma;
  return s;
}

SeState se_weak_state(int k, const Vec& Gamma, const SpikePrior& prior_w, double m_small) {
  SeState s = se_initial_state(k, Gamma, prior_w, 0.0);
  for (Index a = 0; a < std::min<Index>(k, Gamma.size()); ++a) s.M(a, a) = m_small;
  s.Sigma = Mat::Identity(k, k);
  return s;
}

void se_f_side(SeState& s, const EffectiveModel& model, const SeEngine& engine) {
  const int k = model.k();
  require(s.M.rows() == k && s.Sigma.rows() == k && s.Q_hat.rows() == k && s.C_bar.rows() == k,
          "se_f_side: state shape does not match k");
  require(s.M.cols() == s.Gamma.size(), "se_f_side: M must be k x r");
  const Vec rho = prior_second_moments(engine.prior_w);
  const Mat Ainv = safe_inverse(2 * s.Q_hat + s.C_bar).inv;
  s.Sigma = repair_psd(s.Sigma, &s.psd_repairs);
  const Mat EfW = -Ainv * s.M * rho.asDiagonal();
  Mat Eff = Ainv * (s.M * rho.asDiagonal() * s.M.transpose() + s.Sigma) * Ainv.transpose();
  Eff = 0.5 * (Eff + Eff.transpose()).eval();
  const double alpha = model.alpha;
  s.M_bar = EfW * s.Gamma.asDiagonal() / alpha;
  s.Sigma_bar = repair_psd(Eff / alpha, &s.psd_repairs);
  s.B_bar = -Ainv / alpha;
  s.B_bar = 0.5 * (s.B_bar + s.B_bar.transpose()).eval();
  s.Q_bar = Eff;
}

SeState se_step(const SeState& state, const EffectiveModel& model, const SeEngine& engine,
                double damping) {
  engine.validate();
  require(damping >= 0 && damping < 1, "se_step: damping must lie in [0, 1)");
  SeState s = state;
  se_f_side(s, model, engine);
  GSide g;
  if (per_unit_mode(engine)) {
    require(model.prior.separable, "quadrature SE requires a separable hidden prior");
    require(is_diagonal(state), "quadrature SE requires a diagonal state");
    g = g_side_diagonal(s, model, engine);
  } else {
    g = g_side_general(s, model, engine);
  }
  SeState next = s;
  next.M = g.M;
  next.Sigma = repair_psd(g.Sigma, &next.psd_repairs);
  next.C_bar = g.C;
  next.Q_hat = damping * s.Q_hat + (1 - damping) * grad_eta2(s.Q_bar, model);
  next.Q_hat = 0.5 * (next.Q_hat + next.Q_hat.transpose()).eval();
  next.t = state.t + 1;
  if (!next.M.allFinite() || !next.Sigma.allFinite() || !next.C_bar.allFinite()) {
    throw NumericalError("se_step: non-finite order parameters");
  }
  return next;
}

Mat se_overlap(const SeState& state, const EffectiveModel& model, const SeEngine& engine,
               bool* zero_variance) {
  SeState s = state;
  se_f_side(s, model, engine);
  const Vec rho = prior_second_moments(engine.prior_w);
  const Mat Ainv = safe_inverse(2 * s.Q_hat + s.C_bar).inv;
  const Mat EfW = -Ainv * s.M * rho.asDiagonal();
  const Mat& Eff = s.Q_bar;
  Mat z(EfW.rows(), EfW.cols());
  bool zero = false;
  for (Index i = 0; i < z.rows(); ++i) {
    for (Index j = 0; j < z.cols(); ++j) {
      const double den = std::sqrt(Eff(i, i) * rho(j));
      if (!(den > 0)) {
        z(i, j) = 0;
        zero = true;
      } else {
        z(i, j) = std::min(1.0, std::abs(EfW(i, j)) / den);
      }
    }
  }
  if (zero_variance) *zero_variance = zero;
  return z;
}

namespace {
double state_change(const SeState& a, const SeState& b) {
  return std::max({(a.M - b.M).cwiseAbs().maxCoeff(), (a.Sigma - b.Sigma).cwiseAbs().maxCoeff(),
                   (a.C_bar - b.C_bar).cwiseAbs().maxCoeff(), (a.Q_hat - b.Q_hat).cwiseAbs().maxCoeff()});
}
}  // namespace

SeTrace se_run(const SeState& init, const EffectiveModel& model, const SeEngine& engine, int T,
               double tol, double damping) {
  require(T >= 1, "se_run: T must be >= 1");
  SeTrace tr;
  SeState s = init;
  int still = 0, cyc = 0;
  for (int t = 0; t <= T; ++t) {
    tr.states.push_back(s);
    tr.overlaps.push_back(se_overlap(s, model, engine));
    const std::size_t m = tr.states.size();
    if (m >= 2) {
      const double d1 = state_change(tr.states[m - 1], tr.states[m - 2]);
      still = d1 < tol ? still + 1 : 0;
      if (m >= 3) {
        const double d2 = state_change(tr.states[m - 1], tr.states[m - 3]);
        cyc = (d2 < tol && d1 > 100 * tol) ? cyc + 1 : 0;
      }
      if (still >= 3) {
        tr.converged = true;
        break;
      }
      if (cyc >= 3) {
        tr.cycle = true;
        break;
      }
    }
    if (t == T) break;
    s = se_step(s, model, engine, damping);
  }
  tr.fixed_point = tr.states.back();
  return tr;
}

namespace {

struct Packed {
  int k, m;
};

Vec pack(const SeState& s, const Packed& p) {
  Vec v(p.m + 3 * p.k);
  for (int a = 0; a < p.m; ++a) v(a) = s.M(a, a);
  for (int a = 0; a < p.k; ++a) {
    v(p.m + a) = s.Sigma(a, a);
    v(p.m + p.k + a) = s.C_bar(a, a);
    v(p.m + 2 * p.k + a) = s.Q_hat(a, a);
  }
  return v;
}

void unpack(const Vec& v, const Packed& p, SeState& s) {
  for (int a = 0; a < p.m; ++a) s.M(a, a) = v(a);
  for (int a = 0; a < p.k; ++a) {
    s.Sigma(a, a) = v(p.m + a);
    s.C_bar(a, a) = v(p.m + p.k + a);
    s.Q_hat(a, a) = v(p.m + 2 * p.k + a);
  }
}

}  // namespace

SeFixedPoint se_fixed_point(const SeState& init, const EffectiveModel& model, const SeEngine& engine,
                            double tol, int max_iters) {
  require(per_unit_mode(engine), "se_fixed_point needs a per-unit quadrature engine");
  require(is_diagonal(init), "se_fixed_point needs a diagonal state");
  const Packed p{model.k(), static_cast<int>(std::min<Index>(model.k(), init.M.cols()))};
  SeState base = init;
  auto residual = [&](const Vec& v, SeState* out) -> Vec {
    SeState s = base;
    unpack(v, p, s);
    const SeState n = se_step(s, model, engine, 0.0);
    if (out) *out = n;
    return pack(n, p) - v;
  };
  Vec v = pack(init, p);
  SeFixedPoint fp;
  Vec R;
  try {
    R = residual(v, nullptr);
  } catch (const NumericalError&) {
    fp.state = init;
    fp.residual = std::numeric_limits<double>::infinity();
    return fp;
  }
  const Index dim = v.size();
  int it = 0;
  for (; it < max_iters && R.cwiseAbs().maxCoeff() > tol; ++it) {
    Mat J(dim, dim);
    for (Index j = 0; j < dim; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(v(j)));
      Vec vp = v, vm = v;
      vp(j) += h;
      vm(j) -= h;
      J.col(j) = (residual(vp, nullptr) - residual(vm, nullptr)) / (2 * h);
    }
    const Vec step = J.fullPivLu().solve(-R);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      Vec vn = v + t * step;
      bool valid = true;
      for (int a = 0; a < p.k; ++a) valid = valid && vn(p.m + a) > 0;
      if (valid) {
        try {
          const Vec Rn = residual(vn, nullptr);
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
  SeState s = base;
  unpack(v, p, s);
  se_f_side(s, model, engine);
  fp.state = s;
  fp.residual = R.cwiseAbs().maxCoeff();
  fp.converged = fp.residual <= tol * 10;
  fp.iterations = it;
  fp.overlap = se_overlap(s, model, engine);
  return fp;
}

double bbp_threshold(double alpha) {
  require(alpha > 0, "bbp_threshold: alpha must be > 0");
  return std::pow(alpha, -0.25);
}

bool weak_recovery(double alpha, const Vec& Lambda) {
  require(alpha > 0 && Lambda.size() >= 1, "weak_recovery: bad arguments");
  const double lm = Lambda.cwiseAbs().maxCoeff();
  return alpha * std::pow(lm, 4) > 1.0;
}

double linearized_se_gain(double alpha, const Vec& Lambda, double theta1) {
  require(alpha > 0 && Lambda.size() >= 1, "linearized_se_gain: bad arguments");
  double g = 0;
  for (Index a = 0; a < Lambda.size(); ++a) g = std::max(g, alpha * std::pow(Lambda(a) * theta1, 4));
  return g;
}

std::vector<OverlapCurvePoint> se_overlap_curve(const std::vector<double>& lambdas,
                                                const EffectiveModel& model, const SeEngine& engine,
                                                double m0) {
  require(model.k() == 1 && engine.prior_w.r == 1, "se_overlap_curve is for k = r = 1");
  require(!lambdas.empty(), "se_overlap_curve: empty grid");
  std::vector<OverlapCurvePoint> out;
  const double sa = std::sqrt(model.alpha);
  SeState s = se_initial_state(1, Vec::Constant(1, sa * lambdas.front()), engine.prior_w, m0);
  bool first = true;
  for (double lam : lambdas) {
    s.Gamma = Vec::Constant(1, sa * lam);
    if (first) {
      s = se_run(s, model, engine, 60, 1e-10, 0.5).fixed_point;
      first = false;
    }
    SeFixedPoint fp = se_fixed_point(s, model, engine);
    if (!fp.converged) {
      const SeState warm = se_run(s, model, engine, 300, 1e-12, 0.5).fixed_point;
      fp = se_fixed_point(warm, model, engine);
    }
    s = fp.state;
    SeState f = fp.state;
    se_f_side(f, model, engine);
    out.push_back({lam, fp.overlap.size() ? fp.overlap(0, 0) : 0.0, fp.converged, f.B_bar(0, 0)});
  }
  return out;
}

ThresholdBracket bracket_onset(const std::vector<OverlapCurvePoint>& curve, double cut) {
  std::vector<OverlapCurvePoint> c = curve;
  std::sort(c.begin(), c.end(), [](auto& a, auto& b) { return a.lambda < b.lambda; });
  ThresholdBracket br;
  // Smallest lambda from which every larger grid point is above the cut.
  int idx = -1;
  for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) {
    if (c[i].overlap >= cut) idx = i;
    else break;
  }
  if (idx <= 0) return br;
  br.found = true;
  br.upper = c[idx].lambda;
  br.lower = c[idx - 1].lambda;
  return br;
}

}  // namespace rbm
