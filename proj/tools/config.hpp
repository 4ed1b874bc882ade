// Strict INI configuration for experiments.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rbmlab/amp_rbm.hpp"
#include "rbmlab/baselines.hpp"
#include "rbmlab/gd_dmft.hpp"
#include "rbmlab/state_evolution.hpp"

namespace rbm::cli {

enum class ExperimentKind { AmpVsSe, GdVsDmft, SnrSweep, ThresholdBracket, GordonRank1, Baselines };

const char* kind_name(ExperimentKind k);
ExperimentKind parse_kind(const std::string& s);

struct ModelConfig {
  double alpha = 2.0;
  std::vector<double> lambda{1.4};  // diagonal of Lambda, r = size
  int k = 1;
  long d = 2000;
  std::string prior_u = "rademacher";
  std::string prior_w = "rademacher";
};

struct SeConfig {
  SeEngine engine;
  int T = 30;
  double tol = 1e-12;
};

struct SweepConfig {
  std::string axis;
  std::vector<double> values;
  double cut = 1e-3;       // ThresholdBracket overlap cut
  int refine_points = 200;  // ThresholdBracket refinement grid
};

struct GordonConfig {
  std::vector<double> lambdas{1.0, 1.4, 2.0};
  double tol = 1e-9;
  int panels = 800;
};

struct BaselineConfig {
  bool svd = true;
  bool cd = true;
  int gd_T = 300;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::AmpVsSe;
  bool kind_set = false;
  std::string name;
  std::vector<std::uint64_t> seeds{1};
  std::string out = "out";
  ModelConfig model;
  AmpConfig amp;
  SeConfig se;
  GdConfig gd;
  DmftConfig dmft;
  bool dmft_enabled = true;  // gd subcommand: run the DMFT prediction alongside GD
  CdConfig cd;
  SweepConfig sweep;
  GordonConfig gordon;
  BaselineConfig baselines;

  // Raw text and content hash of the source file.
  std::string source;
  std::string hash;

  void validate() const;
  SpikePrior prior_u() const;
  SpikePrior prior_w() const;
  Vec Lambda() const;
  Index n() const;
};

// Parses INI text; any unknown section or key, or a malformed value, raises
// ValidationError before anything runs.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Numeric parameters that may be swept, and the setter for one of them.
const std::vector<std::string>& sweepable_axes();
void set_axis(ExperimentConfig& c, const std::string& axis, double value);

// git-style blob id: sha1("blob <size>\0" + content), lowercase hex.
std::string git_blob_sha1(const std::string& content);

}  // namespace rbm::cli
