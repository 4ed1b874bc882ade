// Hot paths: potentials, denoisers, one AMP iteration, DMFT and SE steps.
#include <benchmark/benchmark.h>

#include <cmath>

#include "rbmlab/amp_rbm.hpp"
#include "rbmlab/effective_model.hpp"
#include "rbmlab/gd_dmft.hpp"
#include "rbmlab/parallel.hpp"
#include "rbmlab/spiked_data.hpp"
#include "rbmlab/state_evolution.hpp"

using namespace rbm;

namespace {

SpikedDataset make_data(Index d, int r, double lambda, std::uint64_t seed = 1) {
  const auto P = SpikePrior::rademacher(r);
  return sample_spiked(2 * d, d, P, P, Vec::Constant(r, lambda), seed);
}

void BM_Eta2(benchmark::State& st) {
  const int k = static_cast<int>(st.range(0));
  const EffectiveModel m(HiddenPrior::rademacher(k), 2.0);
  Mat Q = 0.1 * Mat::Ones(k, k);
  Q.diagonal().setOnes();
  for (auto _ : st) benchmark::DoNotOptimize(eta2(Q, m));
}
BENCHMARK(BM_Eta2)->Arg(2)->Arg(4)->Arg(8)->Arg(12);

void BM_GradEta2(benchmark::State& st) {
  const int k = static_cast<int>(st.range(0));
  const EffectiveModel m(HiddenPrior::rademacher(k), 2.0);
  Mat Q = 0.1 * Mat::Ones(k, k);
  Q.diagonal().setOnes();
  for (auto _ : st) benchmark::DoNotOptimize(grad_eta2(Q, m));
}
BENCHMARK(BM_GradEta2)->Arg(2)->Arg(8);

void BM_DenoiserG(benchmark::State& st) {
  const int k = static_cast<int>(st.range(0));
  const EffectiveModel m(HiddenPrior::rademacher(k), 2.0);
  const Mat B = -0.66 * Mat::Identity(k, k);
  Vec y = Vec::LinSpaced(k, -1.0, 1.3);
  for (auto _ : st) {
    benchmark::DoNotOptimize(denoiser_g(y, B, m));
    y(0) += 1e-9;
  }
}
BENCHMARK(BM_DenoiserG)->Arg(1)->Arg(2)->Arg(4);

void BM_SampleSpiked(benchmark::State& st) {
  const Index d = st.range(0);
  for (auto _ : st) benchmark::DoNotOptimize(make_data(d, 2, 1.4).X.data());
  st.SetItemsProcessed(st.iterations() * 2 * d * d);
}
BENCHMARK(BM_SampleSpiked)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_AmpIteration(benchmark::State& st) {
  const Index d = st.range(0);
  const SpikedDataset data = make_data(d, 2, 1.4);
  const EffectiveModel m(HiddenPrior::rademacher(2), 2.0);
  AmpConfig c;
  c.max_iters = 1;
  c.record_objective = false;
  c.record_residual = false;
  for (auto _ : st) benchmark::DoNotOptimize(amp_run(data, m, c).W_final.data());
}
BENCHMARK(BM_AmpIteration)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_GdStep(benchmark::State& st) {
  const Index d = st.range(0);
  const SpikedDataset data = make_data(d, 2, 1.4);
  const EffectiveModel m(HiddenPrior::rademacher(2), 2.0);
  GdConfig c;
  c.T = 1;
  for (auto _ : st) benchmark::DoNotOptimize(gd_run(data, m, c).W_final.data());
}
BENCHMARK(BM_GdStep)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_DmftSteps(benchmark::State& st) {
  const EffectiveModel m(HiddenPrior::rademacher(1), 2.0);
  DmftConfig c;
  c.N = st.range(0);
  c.gd.T = static_cast<int>(st.range(1));
  Vec G(1);
  G << std::sqrt(2.0) * 1.4;
  for (auto _ : st) benchmark::DoNotOptimize(dmft_predict(m, G, c).overlaps.size());
}
BENCHMARK(BM_DmftSteps)->Args({20000, 5})->Args({20000, 20})->Unit(benchmark::kMillisecond);

void BM_SeStepDense(benchmark::State& st) {
  const EffectiveModel m(HiddenPrior::rademacher(1), 2.0);
  SeEngine e;
  e.panels = static_cast<int>(st.range(0));
  Vec G(1);
  G << std::sqrt(2.0) * 1.4;
  const SeState s = se_initial_state(1, G, e.prior_w, 0.3);
  for (auto _ : st) benchmark::DoNotOptimize(se_step(s, m, e, 0.0).M(0, 0));
}
BENCHMARK(BM_SeStepDense)->Arg(200)->Arg(800)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
