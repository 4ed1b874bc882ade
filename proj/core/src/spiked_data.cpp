#include "rbmlab/spiked_data.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "rbmlab/errors.hpp"
#include "rbmlab/parallel.hpp"
#include "rbmlab/quadrature.hpp"

namespace rbm {

SpikePrior SpikePrior::rademacher(int r) {
  SpikePrior p;
  p.kind = Kind::Rademacher;
  p.r = r;
  p.validate();
  return p;
}

SpikePrior SpikePrior::gaussian(int r, double variance) {
  SpikePrior p;
  p.kind = Kind::Gaussian;
  p.r = r;
  p.variance = variance;
  p.validate();
  return p;
}

SpikePrior SpikePrior::discrete(int r, std::vector<double> points, std::vector<double> weights) {
  SpikePrior p;
  p.kind = Kind::Discrete;
  p.r = r;
  p.points = std::move(points);
  p.weights = std::move(weights);
  p.validate();
  return p;
}

void SpikePrior::validate() const {
  require(r >= 1, "prior dimension r must be >= 1");
  if (kind == Kind::Gaussian) require(variance > 0, "Gaussian prior variance must be > 0");
  if (kind == Kind::Discrete) {
    require(!points.empty() && points.size() == weights.size(),
            "discrete prior needs matching points and weights");
    double s = 0;
    for (double w : weights) {
      require(w >= 0, "discrete prior weights must be >= 0");
      s += w;
    }
    require(std::abs(s - 1.0) <= 1e-12, "discrete prior weights must sum to 1");
  }
}

double SpikePrior::sample(KeyedRng& rng) const {
  switch (kind) {
    case Kind::Rademacher:
      return rng.rademacher();
    case Kind::Gaussian:
      return std::sqrt(variance) * rng.gaussian();
    case Kind::Discrete: {
      double u = rng.uniform(), c = 0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        c += weights[i];
        if (u < c) return points[i];
      }
      return points.back();
    }
  }
  return 0;
}

double SpikePrior::second_moment() const {
  switch (kind) {
    case Kind::Rademacher:
      return 1.0;
    case Kind::Gaussian:
      return variance;
    case Kind::Discrete: {
      double s = 0;
      for (std::size_t i = 0; i < points.size(); ++i) s += weights[i] * points[i] * points[i];
      return s;
    }
  }
  return 0;
}

std::vector<double> SpikePrior::support() const {
  if (kind == Kind::Rademacher) return {-1.0, 1.0};
  if (kind == Kind::Discrete) return points;
  throw ValidationError("Gaussian prior has no finite support");
}

std::vector<double> SpikePrior::support_weights() const {
  if (kind == Kind::Rademacher) return {0.5, 0.5};
  if (kind == Kind::Discrete) return weights;
  throw ValidationError("Gaussian prior has no finite support");
}

Nonlinearity Nonlinearity::identity() {
  Nonlinearity f;
  f.kind = Kind::Identity;
  return f;
}

Nonlinearity Nonlinearity::tanh() {
  Nonlinearity f;
  f.kind = Kind::Tanh;
  return f;
}

Nonlinearity Nonlinearity::from_function(std::function<double(double)> fn) {
  require(static_cast<bool>(fn), "custom nonlinearity needs a callable");
  Nonlinearity f;
  f.kind = Kind::Custom;
  f.custom = std::move(fn);
  return f;
}

double Nonlinearity::raw(double x) const {
  switch (kind) {
    case Kind::Identity:
      return x;
    case Kind::Tanh:
      return std::tanh(x);
    case Kind::Custom:
      return custom(x);
  }
  return x;
}

double Nonlinearity::raw_derivative(double x) const {
  switch (kind) {
    case Kind::Identity:
      return 1.0;
    case Kind::Tanh: {
      const double c = std::cosh(x);
      return 1.0 / (c * c);
    }
    case Kind::Custom: {
      const double h = 1e-5;
      return (custom(x + h) - custom(x - h)) / (2 * h);
    }
  }
  return 1.0;
}

double information_coefficient(const Nonlinearity& F, int order, int nodes) {
  require(order == 0 || order == 1, "information_coefficient: order must be 0 or 1");
  const GaussRule q = gauss_hermite(nodes);
  double s = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    s += q.w[i] * (order == 0 ? F(q.x[i]) : F.derivative(q.x[i]));
  }
  if (!std::isfinite(s)) throw NumericalError("information_coefficient: non-finite quadrature sum");
  return s;
}

Nonlinearity Nonlinearity::normalize(int nodes) const {
  Nonlinearity g = *this;
  if (kind == Kind::Identity) {
    // Exact: E G = 0, var G = 1. Keeping shift 0 and scale 1 makes the
    // identity model reproduce the linear sampler bit for bit.
    g.shift = 0.0;
    g.scale = 1.0;
  } else {
    g.shift = 0.0;
    g.scale = 1.0;
    const GaussRule q = gauss_hermite(nodes);
    double m1 = 0, m2 = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double v = g.raw(q.x[i]);
      m1 += q.w[i] * v;
      m2 += q.w[i] * v * v;
    }
    const double var = m2 - m1 * m1;
    if (!(var > 0) || !std::isfinite(var)) throw NumericalError("normalize: degenerate F");
    g.shift = m1;
    g.scale = 1.0 / std::sqrt(var);
  }
  g.normalized = true;
  g.theta0 = information_coefficient(g, 0, nodes);
  g.theta1 = information_coefficient(g, 1, nodes);
  return g;
}

namespace {

void check_budget(Index n, Index d, Index r, std::size_t budget) {
  require(n >= 1 && d >= 1 && r >= 1, "n, d and r must be >= 1");
  const long double bytes = 8.0L * (static_cast<long double>(n) * d + (n + d) * r);
  if (bytes > static_cast<long double>(budget)) {
    throw CapacityError("dataset of " + std::to_string(n) + "x" + std::to_string(d) +
                        " exceeds memory budget of " + std::to_string(budget) + " bytes");
  }
}

void sample_spikes(SpikedDataset& ds, Index n, Index d, const SpikePrior& pu, const SpikePrior& pw,
                   Index r) {
  ds.U_star.resize(n, r);
  ds.W_star.resize(d, r);
  parallel_for(n, [&](Index b, Index e) {
    for (Index i = b; i < e; ++i) {
      KeyedRng rng(ds.seed, kStreamU, i);
      for (Index a = 0; a < r; ++a) ds.U_star(i, a) = pu.sample(rng);
    }
  });
  parallel_for(d, [&](Index b, Index e) {
    for (Index j = b; j < e; ++j) {
      KeyedRng rng(ds.seed, kStreamW, j);
      for (Index a = 0; a < r; ++a) ds.W_star(j, a) = pw.sample(rng);
    }
  });
}

void validate_inputs(const SpikePrior& pu, const SpikePrior& pw, const Vec& Lambda) {
  pu.validate();
  pw.validate();
  require(Lambda.size() == pu.r && Lambda.size() == pw.r, "Lambda size must equal prior dimension r");
  for (Index a = 0; a < Lambda.size(); ++a) require(Lambda(a) >= 0, "Lambda entries must be >= 0");
}

template <class Map>
SpikedDataset generate(Index n, Index d, const SpikePrior& pu, const SpikePrior& pw,
                       const Vec& Lambda, std::uint64_t seed, std::size_t budget, NoiseKind noise,
                       Map&& map) {
  validate_inputs(pu, pw, Lambda);
  const Index r = Lambda.size();
  check_budget(n, d, r, budget);
  SpikedDataset ds;
  ds.seed = seed;
  ds.Lambda = Lambda;
  ds.alpha = static_cast<double>(n) / static_cast<double>(d);
  sample_spikes(ds, n, d, pu, pw, r);
  ds.X.resize(n, d);
  // Signal rows: (U*_i . Lambda) W*^T / sqrt(d).
  const Mat WL = ds.W_star * Lambda.asDiagonal() / std::sqrt(static_cast<double>(d));
  parallel_for(n, [&](Index b, Index e) {
    Vec s(d);
    for (Index i = b; i < e; ++i) {
      KeyedRng rng(seed, kStreamNoise, i);
      s.noalias() = WL * ds.U_star.row(i).transpose();
      for (Index j = 0; j < d; ++j) {
        const double z = noise == NoiseKind::Gaussian ? rng.gaussian() : rng.rademacher();
        ds.X(i, j) = map(s(j) + z);
      }
    }
  });
  return ds;
}

}  // namespace

SpikedDataset sample_spiked(Index n, Index d, const SpikePrior& prior_u, const SpikePrior& prior_w,
                            const Vec& Lambda, std::uint64_t seed, std::size_t memory_budget) {
  SpikedDataset ds = generate(n, d, prior_u, prior_w, Lambda, seed, memory_budget,
                              NoiseKind::Gaussian, [](double v) { return v; });
  ds.Gamma = std::sqrt(ds.alpha) * Lambda;
  return ds;
}

SpikedDataset sample_nonlinear(Index n, Index d, const SpikePrior& prior_u,
                               const SpikePrior& prior_w, const Vec& Lambda,
                               const Nonlinearity& F, NoiseKind noise, std::uint64_t seed,
                               std::size_t memory_budget) {
  if (!F.normalized) throw ValidationError("sample_nonlinear: F must be normalized first");
  if (F.kind == Nonlinearity::Kind::Identity && noise == NoiseKind::Gaussian) {
    return sample_spiked(n, d, prior_u, prior_w, Lambda, seed, memory_budget);
  }
  // Centering uses the noise law: E F(Z) over Gaussian or Rademacher Z.
  const double center = noise == NoiseKind::Gaussian ? F.theta0 : 0.5 * (F(1.0) + F(-1.0));
  SpikedDataset ds = generate(n, d, prior_u, prior_w, Lambda, seed, memory_budget, noise,
                              [&](double v) { return F(v) - center; });
  ds.Gamma = std::sqrt(ds.alpha) * F.theta1 * Lambda;
  return ds;
}

namespace {

static_assert(std::endian::native == std::endian::little, "container format assumes little-endian");

constexpr char kMagic[5] = {'S', 'P', 'K', 'D', '1'};

template <class T>
void put(std::ofstream& o, T v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ValidationError("dataset file truncated");
  return v;
}

}  // namespace

void save_dataset(const SpikedDataset& ds, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary);
    if (!o) throw ValidationError("cannot open " + tmp + " for writing");
    o.write(kMagic, sizeof kMagic);
    put<std::uint64_t>(o, ds.n());
    put<std::uint64_t>(o, ds.d());
    put<std::uint64_t>(o, ds.r());
    put<std::uint64_t>(o, ds.seed);
    for (Index a = 0; a < ds.r(); ++a) put<double>(o, ds.Lambda(a));
    o.write(reinterpret_cast<const char*>(ds.X.data()), sizeof(double) * ds.X.size());
    const RowMat U = ds.U_star, W = ds.W_star;
    o.write(reinterpret_cast<const char*>(U.data()), sizeof(double) * U.size());
    o.write(reinterpret_cast<const char*>(W.data()), sizeof(double) * W.size());
    if (!o) throw ValidationError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

SpikedDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, kMagic, 5) != 0) throw ValidationError(path + ": bad magic");
  const auto n = get<std::uint64_t>(in), d = get<std::uint64_t>(in), r = get<std::uint64_t>(in);
  SpikedDataset ds;
  ds.seed = get<std::uint64_t>(in);
  require(n >= 1 && d >= 1 && r >= 1, path + ": bad dimensions");
  ds.Lambda.resize(r);
  for (std::uint64_t a = 0; a < r; ++a) ds.Lambda(a) = get<double>(in);
  ds.X.resize(n, d);
  in.read(reinterpret_cast<char*>(ds.X.data()), sizeof(double) * ds.X.size());
  RowMat U(n, r), W(d, r);
  in.read(reinterpret_cast<char*>(U.data()), sizeof(double) * U.size());
  in.read(reinterpret_cast<char*>(W.data()), sizeof(double) * W.size());
  if (!in) throw ValidationError(path + ": truncated payload");
  ds.U_star = U;
  ds.W_star = W;
  ds.alpha = static_cast<double>(n) / static_cast<double>(d);
  // The container stores the linear-model SNR; Gamma is rebuilt accordingly.
  ds.Gamma = std::sqrt(ds.alpha) * ds.Lambda;
  return ds;
}

}  // namespace rbm
