#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/uuid/detail/sha1.hpp>

#include "rbmlab/errors.hpp"

namespace rbm::cli {

namespace pt = boost::property_tree;

const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::AmpVsSe: return "AmpVsSe";
    case ExperimentKind::GdVsDmft: return "GdVsDmft";
    case ExperimentKind::SnrSweep: return "SnrSweep";
    case ExperimentKind::ThresholdBracket: return "ThresholdBracket";
    case ExperimentKind::GordonRank1: return "GordonRank1";
    case ExperimentKind::Baselines: return "Baselines";
  }
  return "?";
}

ExperimentKind parse_kind(const std::string& s) {
  for (auto k : {ExperimentKind::AmpVsSe, ExperimentKind::GdVsDmft, ExperimentKind::SnrSweep,
                 ExperimentKind::ThresholdBracket, ExperimentKind::GordonRank1, ExperimentKind::Baselines})
    if (s == kind_name(k)) return k;
  throw ValidationError("unknown experiment kind '" + s + "'");
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected a number, got '" + v + "'");
  }
  if (pos != v.size() || !std::isfinite(x)) throw ValidationError(key + ": expected a number, got '" + v + "'");
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x) || std::abs(x) > 9e15) throw ValidationError(key + ": expected an integer, got '" + v + "'");
  return static_cast<long>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

#define NUM(field) [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.field = to_double(k, v); }
#define INT(field) [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.field = to_long(k, v); }

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s{
      {"experiment",
       {{"kind",
         [](ExperimentConfig& c, const std::string&, const std::string& v) {
           c.kind = parse_kind(v);
           c.kind_set = true;
         }},
        {"name", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.name = v; }},
        {"seeds",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
           c.seeds.clear();
           for (const auto& s : split_list(v)) {
             const long x = to_long(k, s);
             if (x < 0) throw ValidationError(k + ": seeds must be non-negative");
             c.seeds.push_back(static_cast<std::uint64_t>(x));
           }
         }},
        {"out", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out = v; }}}},
      {"model",
       {{"alpha", NUM(model.alpha)},
        {"lambda", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.model.lambda = to_doubles(k, v); }},
        {"k", INT(model.k)},
        {"d", INT(model.d)},
        {"prior_u", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.model.prior_u = v; }},
        {"prior_w", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.model.prior_w = v; }}}},
      {"amp",
       {{"damping", NUM(amp.damping)},
        {"max_iters", INT(amp.max_iters)},
        {"tol", NUM(amp.tol)},
        {"m0", NUM(amp.m0)},
        {"init_scale", NUM(amp.init_scale)},
        {"init",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
           if (v == "informed") c.amp.init = AmpInit::Informed;
           else if (v == "random") c.amp.init = AmpInit::Random;
           else if (v == "spectral") c.amp.init = AmpInit::Spectral;
           else throw ValidationError(k + ": expected informed, random or spectral");
         }}}},
      {"se",
       {{"T", INT(se.T)},
        {"tol", NUM(se.tol)},
        {"panels", INT(se.engine.panels)},
        {"half_width", NUM(se.engine.half_width)},
        {"nodes", INT(se.engine.nodes)},
        {"samples", INT(se.engine.samples)},
        {"mode",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
           if (v == "dense") c.se.engine.mode = SeMode::Dense;
           else if (v == "gauss_hermite") c.se.engine.mode = SeMode::GaussHermite;
           else if (v == "monte_carlo") c.se.engine.mode = SeMode::MonteCarlo;
           else throw ValidationError(k + ": expected dense, gauss_hermite or monte_carlo");
         }},
        {"tensor", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.se.engine.tensor = to_bool(k, v); }},
        {"onsager",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
           if (v == "analytic") c.se.engine.onsager = OnsagerMode::Analytic;
           else if (v == "stein") c.se.engine.onsager = OnsagerMode::Stein;
           else throw ValidationError(k + ": expected analytic or stein");
         }}}},
      {"gd",
       {{"kappa", NUM(gd.kappa)}, {"T", INT(gd.T)}, {"m0", NUM(gd.m0)}, {"init_scale", NUM(gd.init_scale)},
        {"record_objective", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gd.record_objective = to_bool(k, v); }}}},
      {"dmft",
       {{"N", INT(dmft.N)},
        {"probes", INT(dmft.probes)},
        {"enabled", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dmft_enabled = to_bool(k, v); }}}},
      {"cd",
       {{"kappa", NUM(cd.kappa)}, {"epochs", INT(cd.epochs)}, {"batch", INT(cd.batch)}, {"init_scale", NUM(cd.init_scale)}}},
      {"sweep",
       {{"axis", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.sweep.axis = v; }},
        {"values", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.sweep.values = to_doubles(k, v); }},
        {"linspace",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
           const auto p = to_doubles(k, v);
           if (p.size() != 3 || p[2] < 2 || p[2] != std::floor(p[2])) throw ValidationError(k + ": expected start, stop, count");
           c.sweep.values.clear();
           const int n = static_cast<int>(p[2]);
           for (int i = 0; i < n; ++i) c.sweep.values.push_back(p[0] + (p[1] - p[0]) * i / (n - 1));
         }},
        {"cut", NUM(sweep.cut)},
        {"refine_points", INT(sweep.refine_points)}}},
      {"gordon",
       {{"lambdas", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gordon.lambdas = to_doubles(k, v); }},
        {"tol", NUM(gordon.tol)},
        {"panels", INT(gordon.panels)}}},
      {"baselines",
       {{"svd", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.baselines.svd = to_bool(k, v); }},
        {"cd", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.baselines.cd = to_bool(k, v); }},
        {"gd_T", INT(baselines.gd_T)}}},
  };
  return s;
}

#undef NUM
#undef INT

SpikePrior make_prior(const std::string& name, int r) {
  if (name == "rademacher") return SpikePrior::rademacher(r);
  if (name == "gaussian") return SpikePrior::gaussian(r);
  throw ValidationError("unknown spike prior '" + name + "' (rademacher or gaussian)");
}

}  // namespace

SpikePrior ExperimentConfig::prior_u() const { return make_prior(model.prior_u, static_cast<int>(model.lambda.size())); }
SpikePrior ExperimentConfig::prior_w() const { return make_prior(model.prior_w, static_cast<int>(model.lambda.size())); }

Vec ExperimentConfig::Lambda() const {
  return Eigen::Map<const Vec>(model.lambda.data(), static_cast<Index>(model.lambda.size()));
}

Index ExperimentConfig::n() const { return static_cast<Index>(std::lround(model.alpha * static_cast<double>(model.d))); }

void ExperimentConfig::validate() const {
  require(!seeds.empty(), "experiment.seeds must list at least one seed");
  std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
  require(uniq.size() == seeds.size(), "experiment.seeds has duplicates");
  require(model.alpha > 0, "model.alpha must be > 0");
  require(!model.lambda.empty() && model.lambda.size() <= 16, "model.lambda must list 1 to 16 values");
  for (double l : model.lambda) require(l >= 0, "model.lambda entries must be >= 0");
  require(model.k >= 1 && model.k <= 16, "model.k must lie in [1, 16]");
  require(model.d >= 2, "model.d must be >= 2");
  require(n() >= 1, "model.alpha * model.d must be >= 1");
  prior_u();
  prior_w();
  amp.validate();
  se.engine.validate();
  require(se.T >= 1 && se.tol > 0, "se.T must be >= 1 and se.tol > 0");
  gd.validate();
  require(dmft.N >= 2 && dmft.probes >= 0, "dmft.N must be >= 2");
  require(cd.epochs >= 0 && cd.batch >= 1, "cd.epochs must be >= 0 and cd.batch >= 1");
  require(sweep.cut > 0 && sweep.refine_points >= 2, "sweep.cut must be > 0, sweep.refine_points >= 2");
  require(!gordon.lambdas.empty() && gordon.tol > 0 && gordon.panels >= 2, "gordon settings out of range");
  require(baselines.gd_T >= 1, "baselines.gd_T must be >= 1");
  if (kind == ExperimentKind::SnrSweep || kind == ExperimentKind::ThresholdBracket) {
    require(sweep.values.size() >= 2, "SnrSweep needs at least two sweep values");
    require(model.k == 1 && model.lambda.size() == 1, "SnrSweep uses k = r = 1");
  }
  if (kind == ExperimentKind::GordonRank1) require(model.k == 1 && model.lambda.size() == 1, "GordonRank1 uses k = r = 1");
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  ExperimentConfig c;
  const auto& sch = schema();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ValidationError("config: key '" + section + "' outside a section");
    const auto sec = sch.find(section);
    if (sec == sch.end()) throw ValidationError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      const auto it = sec->second.find(key);
      if (it == sec->second.end()) throw ValidationError("config: unknown key '" + key + "' in [" + section + "]");
      it->second(c, section + "." + key, trim(value.data()));
    }
  }
  c.source = text;
  c.hash = git_blob_sha1(text);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot read config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

const std::vector<std::string>& sweepable_axes() {
  static const std::vector<std::string> a{"alpha", "lambda", "d", "amp.damping", "amp.m0", "gd.kappa", "gd.m0", "dmft.N", "cd.epochs"};
  return a;
}

void set_axis(ExperimentConfig& c, const std::string& axis, double v) {
  auto as_int = [&](double x) {
    if (x != std::floor(x)) throw ValidationError("sweep: axis " + axis + " needs integer values");
    return static_cast<long>(x);
  };
  if (axis == "alpha") c.model.alpha = v;
  else if (axis == "lambda") std::fill(c.model.lambda.begin(), c.model.lambda.end(), v);
  else if (axis == "d") c.model.d = as_int(v);
  else if (axis == "amp.damping") c.amp.damping = v;
  else if (axis == "amp.m0") c.amp.m0 = v;
  else if (axis == "gd.kappa") c.gd.kappa = v;
  else if (axis == "gd.m0") c.gd.m0 = v;
  else if (axis == "dmft.N") c.dmft.N = as_int(v);
  else if (axis == "cd.epochs") c.cd.epochs = static_cast<int>(as_int(v));
  else throw ValidationError("sweep: '" + axis + "' is not a sweepable numeric parameter");
}

std::string git_blob_sha1(const std::string& content) {
  boost::uuids::detail::sha1 h;
  const std::string head = "blob " + std::to_string(content.size());
  h.process_bytes(head.data(), head.size());
  const char zero = '\0';
  h.process_bytes(&zero, 1);
  h.process_bytes(content.data(), content.size());
  boost::uuids::detail::sha1::digest_type dig;
  h.get_digest(dig);
  char buf[41];
  for (int i = 0; i < 5; ++i) std::snprintf(buf + 8 * i, 9, "%08x", dig[i]);
  return std::string(buf, 40);
}

}  // namespace rbm::cli
