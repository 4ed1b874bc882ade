#include "experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rbmlab/errors.hpp"
#include "rbmlab/rank1_global.hpp"
#include "rbmlab/trace_io.hpp"

namespace rbm::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const char* job_name(Job j) {
  switch (j) {
    case Job::Generate: return "generate";
    case Job::Amp: return "amp";
    case Job::Se: return "se";
    case Job::Gd: return "gd";
    case Job::Dmft: return "dmft";
    case Job::Gordon: return "gordon";
    case Job::Baselines: return "baselines";
    case Job::Sweep: return "sweep";
  }
  return "?";
}

Job parse_job(const std::string& s) {
  for (Job j : {Job::Generate, Job::Amp, Job::Se, Job::Gd, Job::Dmft, Job::Gordon, Job::Baselines, Job::Sweep})
    if (s == job_name(j)) return j;
  throw ValidationError("unknown subcommand '" + s + "'");
}

namespace {

// Rethrows module errors with experiment context, keeping the error family.
template <class F>
auto with_context(const std::string& ctx, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(ctx + ": " + e.what());
  } catch (const CapacityError& e) {
    throw CapacityError(ctx + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(ctx + ": " + e.what());
  }
}

std::string seed_file(const std::string& stem, std::uint64_t seed, const char* ext) {
  return stem + "_seed" + std::to_string(seed) + ext;
}

struct Sink {
  const RunOptions& opt;
  void write(const std::string& name, const std::string& content) const {
    if (opt.write_artifacts) write_atomic((fs::path(opt.out_dir) / name).string(), content);
  }
  void log(const std::string& msg) const {
    if (!opt.quiet) std::cerr << msg << '\n';
  }
};

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

SpikedDataset make_data(const ExperimentConfig& c, std::uint64_t seed) {
  return sample_spiked(c.n(), c.model.d, c.prior_u(), c.prior_w(), c.Lambda(), seed);
}

EffectiveModel make_model(const ExperimentConfig& c) { return EffectiveModel(HiddenPrior::rademacher(c.model.k), c.model.alpha); }

SeEngine make_engine(const ExperimentConfig& c, std::uint64_t seed) {
  SeEngine e = c.se.engine;
  e.prior_u = c.prior_u();
  e.prior_w = c.prior_w();
  e.seed = seed;
  return e;
}

Vec make_gamma(const ExperimentConfig& c) { return std::sqrt(c.model.alpha) * c.Lambda(); }

double max_gap(const std::vector<Mat>& a, const std::vector<Mat>& b) {
  double g = 0;
  const std::size_t T = std::min(a.size(), b.size());
  for (std::size_t t = 0; t < T; ++t) g = std::max(g, (a[t] - b[t]).cwiseAbs().maxCoeff());
  return g;
}

// Paired (empirical, theory) overlap columns per step.
std::string paired_csv(const std::vector<Mat>& emp, const std::vector<Mat>& th, const char* emp_name,
                       const char* th_name) {
  std::ostringstream os;
  os << 't';
  const Index k = emp.front().rows(), r = emp.front().cols();
  for (const char* name : {emp_name, th_name})
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j < r; ++j) os << ',' << name << '_' << i + 1 << '_' << j + 1;
  os << ",gap\n";
  const std::size_t T = std::min(emp.size(), th.size());
  for (std::size_t t = 0; t < T; ++t) {
    os << t;
    for (const Mat* m : {&emp[t], &th[t]})
      for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < r; ++j) os << ',' << format_double((*m)(i, j));
    os << ',' << format_double((emp[t] - th[t]).cwiseAbs().maxCoeff()) << '\n';
  }
  return os.str();
}

SeState se_start(const ExperimentConfig& c) {
  const double m0 = c.amp.init == AmpInit::Informed ? c.amp.m0 : 0.0;
  return se_initial_state(c.model.k, make_gamma(c), c.prior_w(), m0);
}

Metrics run_generate(const ExperimentConfig& c, std::uint64_t seed, const Sink& sink) {
  const SpikedDataset data = make_data(c, seed);
  if (sink.opt.write_artifacts) save_dataset(data, (fs::path(sink.opt.out_dir) / seed_file("dataset", seed, ".spkd")).string());
  return {{"n", static_cast<double>(data.n())}, {"d", static_cast<double>(data.d())}, {"r", static_cast<double>(data.r())}};
}

Metrics run_amp(const ExperimentConfig& c, std::uint64_t seed, const Sink& sink) {
  const EffectiveModel model = make_model(c);
  const SpikedDataset data = make_data(c, seed);
  AmpConfig ac = c.amp;
  ac.seed = seed;
  const AmpTrace tr = amp_run(data, model, ac);
  const SeTrace se = se_run(se_start(c), model, make_engine(c, seed), ac.max_iters, c.se.tol, ac.damping);
  std::vector<Mat> se_ov = se.overlaps;
  while (se_ov.size() < tr.overlaps.size()) se_ov.push_back(se_ov.back());  // SE stopped at its fixed point
  sink.write(seed_file("amp_trace", seed, ".csv"), amp_trace_csv(tr));
  sink.write(seed_file("amp_vs_se", seed, ".csv"), paired_csv(tr.overlaps, se_ov, "amp", "se"));
  sink.write(seed_file("se_trace", seed, ".csv"), se_trace_csv(se));
  return {{"max_gap", max_gap(tr.overlaps, se_ov)},
          {"amp_overlap", matched_overlap(tr.overlaps.back()).value},
          {"se_overlap", matched_overlap(se_ov.back()).value},
          {"stationarity_residual", stationarity_residual(tr.W_final, data.X, model)},
          {"converged", tr.converged ? 1.0 : 0.0},
          {"iterations", static_cast<double>(tr.iterations)}};
}

Metrics run_se_trace(const ExperimentConfig& c, std::uint64_t seed, const Sink& sink) {
  const EffectiveModel model = make_model(c);
  const SeTrace se = se_run(se_start(c), model, make_engine(c, seed), c.se.T, c.se.tol, c.amp.damping);
  sink.write(seed_file("se_trace", seed, ".csv"), se_trace_csv(se));
  return {{"se_overlap", matched_overlap(se.overlaps.back()).value},
          {"converged", se.converged ? 1.0 : 0.0},
          {"cycle", se.cycle ? 1.0 : 0.0},
          {"steps", static_cast<double>(se.states.size() - 1)}};
}

std::string curve_csv(const std::vector<OverlapCurvePoint>& curve) {
  std::ostringstream os;
  os << "lambda,overlap,converged,B\n";
  for (const auto& p : curve)
    os << format_double(p.lambda) << ',' << format_double(p.overlap) << ',' << (p.converged ? 1 : 0) << ','
       << format_double(p.B) << '\n';
  return os.str();
}

std::vector<double> descending(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

Metrics run_snr_sweep(const ExperimentConfig& c, std::uint64_t seed, const Sink& sink, bool refine) {
  const EffectiveModel model = make_model(c);
  const SeEngine eng = make_engine(c, seed);
  const auto curve = se_overlap_curve(descending(c.sweep.values), model, eng);
  sink.write(seed_file("snr_sweep", seed, ".csv"), curve_csv(curve));
  const ThresholdBracket b = bracket_onset(curve, c.sweep.cut);
  const double bbp = bbp_threshold(c.model.alpha);
  Metrics m{{"bracket_found", b.found ? 1.0 : 0.0}, {"onset_lower", b.lower}, {"onset_upper", b.upper}, {"bbp_threshold", bbp}};
  double onset = 0.5 * (b.lower + b.upper);
  if (refine && b.found) {
    std::vector<double> fine;
    for (int i = 0; i <= c.sweep.refine_points; ++i)
      fine.push_back(b.upper - (b.upper - b.lower) * i / c.sweep.refine_points);
    const auto fc = se_overlap_curve(fine, model, eng);
    sink.write(seed_file("threshold_refine", seed, ".csv"), curve_csv(fc));
    const ThresholdBracket f = bracket_onset(fc, c.sweep.cut);
    if (f.found) {
      m.emplace_back("refined_lower", f.lower);
      m.emplace_back("refined_upper", f.upper);
      onset = 0.5 * (f.lower + f.upper);
    }
  }
  m.emplace_back("onset", b.found ? onset : std::nan(""));
  m.emplace_back("onset_ratio", b.found ? onset / bbp : std::nan(""));
  return m;
}

// First step at which some unit's overlap with signal j exceeds 0.5, or NaN.
Metrics crossing_metrics(const std::vector<Mat>& overlaps) {
  Metrics m;
  if (overlaps.empty()) return m;
  for (Index j = 0; j < overlaps.front().cols(); ++j) {
    double c = std::nan("");
    for (std::size_t t = 0; t < overlaps.size(); ++t) {
      if (overlaps[t].col(j).maxCoeff() > 0.5) {
        c = static_cast<double>(t);
        break;
      }
    }
    m.emplace_back("cross_" + std::to_string(j + 1), c);
  }
  return m;
}

Metrics run_gd(const ExperimentConfig& c, std::uint64_t seed, const Sink& sink) {
  const EffectiveModel model = make_model(c);
  GdConfig g = c.gd;
  g.seed = seed;
  const GdTrace tr = gd_run(make_data(c, seed), model, g);
  sink.write(seed_file("gd_trace", seed, ".csv"), gd_trace_csv(tr));
  Metrics m{{"gd_overlap", matched_overlap(tr.overlaps.back()).value}};
  for (auto& x : crossing_metrics(tr.overlaps)) m.push_back(std::move(x));
  if (!c.dmft_enabled) return m;
  DmftConfig dc = c.dmft;
  dc.gd = g;
  dc.prior_u = c.prior_u();
  dc.prior_w = c.prior_w();
  const DmftResult dm = dmft_predict(model, make_gamma(c), dc);
  sink.write(seed_file("dmft_trace", seed, ".csv"), dmft_trace_csv(dm));
  sink.write(seed_file("gd_vs_dmft", seed, ".csv"), paired_csv(tr.overlaps, dm.overlaps, "gd", "dmft"));
  m.emplace_back("dmft_overlap", matched_overlap(dm.overlaps.back()).value);
  m.emplace_back("max_gap", max_gap(tr.overlaps, dm.overlaps));
  return m;
}

Metrics run_dmft(const ExperimentConfig& c, std::uint64_t seed, const Sink& sink) {
  const EffectiveModel model = make_model(c);
  DmftConfig dc = c.dmft;
  dc.gd = c.gd;
  dc.gd.seed = seed;
  dc.prior_u = c.prior_u();
  dc.prior_w = c.prior_w();
  const DmftResult dm = dmft_predict(model, make_gamma(c), dc);
  sink.write(seed_file("dmft_trace", seed, ".csv"), dmft_trace_csv(dm));
  json k;
  json mr = json::array(), nc = json::array(), qh = json::array();
  for (const Mat& m : dm.kernels.M_row) mr.push_back(matrix_json(m));
  for (const Mat& m : dm.kernels.N_col) nc.push_back(matrix_json(m));
  for (const Mat& m : dm.kernels.Q_hat) qh.push_back(matrix_json(m));
  k["T"] = dm.T;
  k["k"] = dm.k;
  k["M_row"] = mr;
  k["N_col"] = nc;
  k["Sigma"] = matrix_json(dm.kernels.Sigma);
  k["Omega"] = matrix_json(dm.kernels.Omega);
  k["B"] = matrix_json(dm.kernels.B);
  k["C"] = matrix_json(dm.kernels.C);
  k["Q_hat"] = qh;
  k["degenerate_directions"] = dm.kernels.degenerate_directions;
  sink.write(seed_file("dmft_kernels", seed, ".json"), k.dump(1) + "\n");
  return {{"dmft_overlap", matched_overlap(dm.overlaps.back()).value},
          {"degenerate_directions", static_cast<double>(dm.kernels.degenerate_directions)}};
}

Metrics run_gordon(const ExperimentConfig& c, std::uint64_t seed, const Sink& sink) {
  const EffectiveModel model = make_model(c);
  const SeEngine eng = make_engine(c, seed);
  Metrics m;
  json points = json::array();
  for (double lam : c.gordon.lambdas) {
    const std::string tag = "lambda_" + format_double(lam) + ".";
    Vec G(1);
    G << std::sqrt(c.model.alpha) * lam;
    const SeFixedPoint fp = se_fixed_point(se_initial_state(1, G, eng.prior_w, 0.8), model, eng);
    SaddleProblem pr;
    pr.pair = ScalarObjectivePair::rbm(c.model.alpha);
    pr.alpha = c.model.alpha;
    pr.lambda = lam;
    pr.prior_u = eng.prior_u;
    pr.prior_w = eng.prior_w;
    pr.panels = c.gordon.panels;
    SaddleReport rep;
    const SaddlePoint sp = solve_saddle(pr, saddle_from_se(fp.state, model, eng), c.gordon.tol, &rep);
    const double ov = saddle_overlap(sp, pr);
    const RepliconReport rr = replicon_stability(sp, pr);
    const double value = saddle_value(sp, pr);
    m.emplace_back(tag + "se_overlap", fp.overlap(0, 0));
    m.emplace_back(tag + "saddle_overlap", ov);
    m.emplace_back(tag + "gap", std::abs(ov - fp.overlap(0, 0)));
    m.emplace_back(tag + "replicon", rr.value);
    m.emplace_back(tag + "objective", value);
    json p;
    p["lambda"] = lam;
    p["saddle"] = {{"m", sp.m}, {"q", sp.q}, {"p", sp.p}, {"tau", sp.tau}, {"kappa", sp.kappa}, {"nu", sp.nu}, {"chi", sp.chi}, {"phi", sp.phi}};
    p["residuals"] = rep.residuals;
    p["max_residual"] = rep.max_residual;
    p["newton_steps"] = rep.iterations;
    p["overlap"] = ov;
    p["se_overlap"] = fp.overlap(0, 0);
    p["replicon"] = rr.value;
    p["replicon_fallback"] = rr.subgradient_fallback;
    p["objective"] = value;
    p["loglik_per_d"] = -c.model.alpha * value;
    points.push_back(p);
  }
  sink.write(seed_file("gordon", seed, ".json"), points.dump(1) + "\n");
  return m;
}

Metrics run_baselines(const ExperimentConfig& c, std::uint64_t seed, const Sink& sink) {
  const EffectiveModel model = make_model(c);
  const SpikedDataset data = make_data(c, seed);
  Metrics m;
  if (c.baselines.svd) {
    const Mat zeta = overlap_matrix(svd_baseline(data, c.model.k, seed), data.W_star);
    m.emplace_back("svd_overlap", matched_overlap(zeta).value);
    const bool degenerate2 = c.model.k == 2 && c.model.lambda.size() == 2 && c.model.lambda[0] == c.model.lambda[1];
    if (degenerate2) {
      m.emplace_back("svd_max_average", 0.5 * (zeta.col(0).maxCoeff() + zeta.col(1).maxCoeff()));
      m.emplace_back("svd_theory_quoted", svd_theory_overlap_degenerate_r2(c.model.alpha, c.model.lambda[0]));
      m.emplace_back("svd_theory_subspace", svd_uniform_subspace_overlap(c.model.alpha, c.model.lambda[0]));
    }
  }
  if (c.baselines.cd) {
    CdConfig cc = c.cd;
    cc.seed = seed;
    const CdResult cd = cd_train(data, c.model.k, cc);
    GdConfig g = c.gd;
    g.seed = seed;
    g.T = c.baselines.gd_T;
    const GdTrace gd = gd_run_from(data, model, g, cd.W_init);
    sink.write(seed_file("cd_trace", seed, ".csv"), cd_trace_csv(cd));
    sink.write(seed_file("gd_trace", seed, ".csv"), gd_trace_csv(gd));
    m.emplace_back("cd_overlap", cd.overlaps.empty() ? 0.0 : matched_overlap(cd.overlaps.back()).value);
    m.emplace_back("gd_overlap", matched_overlap(gd.overlaps.back()).value);
    m.emplace_back("cd_loss", cd.loss.empty() ? std::nan("") : cd.loss.back());
  }
  return m;
}

void check_job_kind(Job job, const ExperimentConfig& c) {
  if (!c.kind_set) return;
  auto bad = [&] {
    throw ValidationError(std::string("config kind ") + kind_name(c.kind) + " does not fit subcommand " + job_name(job));
  };
  using K = ExperimentKind;
  switch (job) {
    case Job::Amp: if (c.kind != K::AmpVsSe) bad(); break;
    case Job::Gd: if (c.kind != K::GdVsDmft) bad(); break;
    case Job::Dmft: if (c.kind != K::GdVsDmft) bad(); break;
    case Job::Gordon: if (c.kind != K::GordonRank1) bad(); break;
    case Job::Baselines: if (c.kind != K::Baselines) bad(); break;
    default: break;
  }
}

Job job_for_kind(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::AmpVsSe: return Job::Amp;
    case ExperimentKind::GdVsDmft: return Job::Gd;
    case ExperimentKind::SnrSweep:
    case ExperimentKind::ThresholdBracket: return Job::Se;
    case ExperimentKind::GordonRank1: return Job::Gordon;
    case ExperimentKind::Baselines: return Job::Baselines;
  }
  return Job::Amp;
}

}  // namespace

RunResult run_job(Job job, const ExperimentConfig& config, const RunOptions& options) {
  if (job == Job::Sweep) throw ValidationError("run_job: use run_sweep for the sweep subcommand");
  check_job_kind(job, config);
  ExperimentConfig c = config;
  if (!c.kind_set) {
    if (job == Job::Gd || job == Job::Dmft) c.kind = ExperimentKind::GdVsDmft;
    else if (job == Job::Gordon) c.kind = ExperimentKind::GordonRank1;
    else if (job == Job::Baselines) c.kind = ExperimentKind::Baselines;
  }
  c.validate();
  if (options.write_artifacts) fs::create_directories(options.out_dir);
  const Sink sink{options};
  RunResult res;
  for (std::uint64_t seed : c.seeds) {
    const std::string ctx = std::string(job_name(job)) + " (" + kind_name(c.kind) + ") seed " + std::to_string(seed);
    sink.log(ctx);
    Metrics m = with_context(ctx, [&]() -> Metrics {
      switch (job) {
        case Job::Generate: return run_generate(c, seed, sink);
        case Job::Amp: return run_amp(c, seed, sink);
        case Job::Se:
          if (c.kind == ExperimentKind::SnrSweep) return run_snr_sweep(c, seed, sink, false);
          if (c.kind == ExperimentKind::ThresholdBracket) return run_snr_sweep(c, seed, sink, true);
          return run_se_trace(c, seed, sink);
        case Job::Gd: return run_gd(c, seed, sink);
        case Job::Dmft: return run_dmft(c, seed, sink);
        case Job::Gordon: return run_gordon(c, seed, sink);
        case Job::Baselines: return run_baselines(c, seed, sink);
        case Job::Sweep: break;
      }
      return {};
    });
    res.per_seed.push_back({seed, std::move(m)});
  }
  return res;
}

std::string run_sweep(const ExperimentConfig& config, const RunOptions& options) {
  const auto& axes = sweepable_axes();
  require(!config.sweep.axis.empty(), "sweep.axis is required");
  require(std::find(axes.begin(), axes.end(), config.sweep.axis) != axes.end(),
          "sweep: '" + config.sweep.axis + "' is not a sweepable numeric parameter");
  require(!config.sweep.values.empty(), "sweep.values is empty");
  std::set<double> uniq(config.sweep.values.begin(), config.sweep.values.end());
  require(uniq.size() == config.sweep.values.size(), "sweep.values has duplicates");
  require(config.kind_set, "sweep needs experiment.kind");
  require(config.kind != ExperimentKind::SnrSweep && config.kind != ExperimentKind::ThresholdBracket,
          "SnrSweep and ThresholdBracket sweep lambda themselves; run them with the se subcommand");
  config.validate();
  // Validate every point before computing anything.
  std::vector<ExperimentConfig> points;
  for (double v : config.sweep.values) {
    ExperimentConfig c = config;
    set_axis(c, config.sweep.axis, v);
    c.validate();
    points.push_back(std::move(c));
  }
  std::ostringstream os;
  os << config.sweep.axis << ",seed,metric,value\n";
  RunOptions inner = options;
  inner.write_artifacts = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const RunResult r = with_context("sweep " + config.sweep.axis + "=" + format_double(config.sweep.values[i]),
                                     [&] { return run_job(job_for_kind(points[i].kind), points[i], inner); });
    for (const SeedResult& s : r.per_seed)
      for (const auto& [name, val] : s.metrics)
        os << format_double(config.sweep.values[i]) << ',' << s.seed << ',' << name << ',' << format_double(val) << '\n';
  }
  return os.str();
}

Metrics median_metrics(const RunResult& r) {
  Metrics out;
  std::vector<std::string> names;
  for (const auto& s : r.per_seed)
    for (const auto& [n, v] : s.metrics)
      if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
  for (const auto& n : names) {
    std::vector<double> v;
    for (const auto& s : r.per_seed)
      for (const auto& [m, x] : s.metrics)
        if (m == n && !std::isnan(x)) v.push_back(x);
    if (v.empty()) {
      out.emplace_back(n, std::nan(""));
      continue;
    }
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    out.emplace_back(n, v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]));
  }
  return out;
}

namespace {
json metrics_json(const Metrics& m) {
  json o = json::object();
  for (const auto& [n, v] : m) {
    if (std::isfinite(v)) o[n] = v;
    else o[n] = nullptr;
  }
  return o;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}
}  // namespace

std::string summary_json(Job job, const ExperimentConfig& config, const RunResult& result, double wall_seconds,
                         const std::string& status, const std::string& error) {
  json j;
  j["job"] = job_name(job);
  j["kind"] = config.kind_set ? kind_name(config.kind) : nullptr;
  j["name"] = config.name;
  j["config_hash"] = config.hash;
  j["seeds"] = config.seeds;
  j["status"] = status;
  j["error"] = error.empty() ? json(nullptr) : json(error);
  json per = json::array();
  for (const auto& s : result.per_seed) per.push_back({{"seed", s.seed}, {"metrics", metrics_json(s.metrics)}});
  j["per_seed"] = per;
  j["median"] = metrics_json(median_metrics(result));
  j["wall_clock_seconds"] = wall_seconds;
  j["finished_at"] = utc_now();
  return j.dump(2) + "\n";
}

int execute(Job job, const ExperimentConfig& config, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult result;
  std::string error;
  int code = 0;
  const fs::path out(options.out_dir);
  try {
    if (job == Job::Sweep) {
      const std::string csv = run_sweep(config, options);
      fs::create_directories(out);
      write_atomic((out / "sweep.csv").string(), csv);
    } else {
      result = run_job(job, config, options);
    }
  } catch (const ValidationError& e) {
    error = e.what();
    code = 2;
  } catch (const NumericalError& e) {
    error = e.what();
    code = 3;
  } catch (const CapacityError& e) {
    error = e.what();
    code = 4;
  } catch (const std::exception& e) {
    error = e.what();
    code = 1;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (code != 0) std::cerr << "error: " << error << '\n';
  // A validation failure happens before any output exists; leave nothing behind.
  if (code == 2 && !fs::exists(out)) return code;
  try {
    fs::create_directories(out);
    write_atomic((out / "summary.json").string(),
                 summary_json(job, config, result, wall, code == 0 ? "ok" : "failed", error));
    if (code != 0) {
      write_atomic((out / "FAILED").string(), error + "\n");
    } else if (fs::exists(out / "FAILED")) {
      fs::remove(out / "FAILED");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: cannot write summary: " << e.what() << '\n';
    return code == 0 ? 1 : code;
  }
  if (!options.quiet && code == 0) std::cerr << "wrote " << (out / "summary.json").string() << '\n';
  return code;
}

}  // namespace rbm::cli
