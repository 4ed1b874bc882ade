// rbmlab command line: generate | amp | se | gd | dmft | gordon | baselines | sweep
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "config.hpp"
#include "experiments.hpp"
#include "rbmlab/errors.hpp"
#include "rbmlab/parallel.hpp"

int main(int argc, char** argv) {
  using namespace rbm::cli;
  rbm::init_threads_from_env();

  CLI::App app{"Spiked-model RBM experiments"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  long long seed = -1;
  int nthreads = 0;
  bool quiet = false;

  const std::vector<std::pair<Job, const char*>> jobs{
      {Job::Generate, "sample spiked datasets"},
      {Job::Amp, "AMP trajectories against state evolution"},
      {Job::Se, "state evolution trace, SNR sweep or threshold bracket"},
      {Job::Gd, "gradient descent against its DMFT prediction"},
      {Job::Dmft, "DMFT prediction and kernel dump"},
      {Job::Gordon, "rank-one saddle point, overlap and replicon value"},
      {Job::Baselines, "SVD and contrastive divergence baselines"},
      {Job::Sweep, "long-format sweep over one numeric parameter"},
  };
  for (const auto& [job, help] : jobs) {
    CLI::App* sub = app.add_subcommand(job_name(job), help);
    sub->add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "run this single seed instead of the configured list")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", out_dir, "output directory (overrides experiment.out)");
    sub->add_option("--threads", nthreads, std::string("worker threads (default from ") + rbm::kThreadsEnv + ")")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", quiet, "suppress progress messages");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  Job job = Job::Amp;
  for (const auto& [j, help] : jobs)
    if (app.got_subcommand(job_name(j))) job = j;

  if (nthreads > 0) rbm::set_threads(nthreads);
  ExperimentConfig config;
  try {
    config = load_config(config_path);
    if (seed >= 0) config.seeds = {static_cast<std::uint64_t>(seed)};
  } catch (const rbm::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  RunOptions opt;
  opt.out_dir = out_dir.empty() ? config.out : out_dir;
  opt.quiet = quiet;
  return execute(job, config, opt);
}
