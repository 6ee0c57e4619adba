#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "tesspec/dsp.hpp"
#include "tesspec/fit.hpp"
#include "tesspec/simulate.hpp"
#include "tesspec/wgm.hpp"

using namespace tesspec;

namespace {

const sim::Run& sample_run() {
  static const sim::Run run = sim::simulate_run(sim::SourceSpec{}, {}, {}, {}, 2000, 1);
  return run;
}

const dsp::MasterPulse& sample_master() {
  static const dsp::MasterPulse m = dsp::build_master(sample_run().traces.records);
  return m;
}

void BM_Simulate(benchmark::State& state) {
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sim::simulate_run(sim::SourceSpec{}, {}, {}, {}, n, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(1000);

void BM_MatchedArea(benchmark::State& state) {
  const auto& recs = sample_run().traces.records;
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(dsp::matched_area(recs[i++ % recs.size()], sample_master()));
}
BENCHMARK(BM_MatchedArea);

void BM_PileupStatistic(benchmark::State& state) {
  const auto& recs = sample_run().traces.records;
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(dsp::pileup_statistic(recs[i++ % recs.size()], sample_master()));
}
BENCHMARK(BM_PileupStatistic);

void BM_MixtureFit(benchmark::State& state) {
  std::vector<double> x, y;
  for (int i = 0; i < 300; ++i) {
    x.push_back(0.02 * i);
    y.push_back(900 * std::exp(-0.5 * std::pow((x.back() - 1.2) / 0.1, 2)) +
                500 * std::exp(-0.5 * std::pow((x.back() - 2.4) / 0.12, 2)) +
                200 * std::exp(-0.5 * std::pow((x.back() - 3.5) / 0.14, 2)));
  }
  const fit::GaussianPeak init[] = {{1.1, 0.15, 800}, {2.5, 0.15, 400}, {3.4, 0.15, 250}};
  for (auto _ : state) benchmark::DoNotOptimize(fit::fit_gaussian_mixture(x, y, init));
}
BENCHMARK(BM_MixtureFit);

void BM_ModeSolve(benchmark::State& state) {
  const wgm::ResonatorGeometry g;
  const auto mat = wgm::MaterialModel::mgo_cln_5pct();
  std::int64_t m = 20000;
  for (auto _ : state) {
    const wgm::ModeIndices mode{m, 1, 0, wgm::Polarization::ordinary};
    benchmark::DoNotOptimize(wgm::mode_wavelength(g, mat, mode, Temperature(50.0)));
    m = m == 40000 ? 20000 : m + 1;
  }
}
BENCHMARK(BM_ModeSolve);

void BM_PhaseMatch(benchmark::State& state) {
  const wgm::ResonatorGeometry g;
  const auto mat = wgm::MaterialModel::mgo_cln_5pct();
  const auto pump = wgm::lock_pump_mode(g, mat, Wavelength(532.0), 1, 0, Temperature(60.0));
  for (auto _ : state)
    benchmark::DoNotOptimize(wgm::solve_phase_matching(g, mat, Temperature(43.0), pump, {}));
}
BENCHMARK(BM_PhaseMatch)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
