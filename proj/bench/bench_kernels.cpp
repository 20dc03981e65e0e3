#include <benchmark/benchmark.h>

#include "certpoly/attack/attack.hpp"
#include "certpoly/nn/generate.hpp"
#include "certpoly/parallel/kernels.hpp"
#include "certpoly/ranges/bounds.hpp"
#include "certpoly/ranges/certify.hpp"

using namespace certpoly;
using parallel::Exec;

namespace {

const nn::Network& bench_net() {
  static const nn::Network net = nn::random_mlp({16, 64, 64, 4}, nn::Activation::gelu(), 1);
  return net;
}

const std::vector<nn::Vec>& bench_inputs() {
  static const auto xs = parallel::sample_box(bench_net().input_lo(), bench_net().input_hi(), 20000, 2);
  return xs;
}

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::Parallel : Exec::Serial; }

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) ? "parallel" : "serial");
  state.counters["threads"] = parallel::threads();
}

void BM_BatchForward(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(parallel::batch_forward(bench_net(), bench_inputs(), exec_of(state)));
  state.SetItemsProcessed(state.iterations() * bench_inputs().size());
  label(state);
}

void BM_PreActivationMinMax(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(parallel::pre_activation_minmax(bench_net(), bench_inputs(), exec_of(state)));
  state.SetItemsProcessed(state.iterations() * bench_inputs().size());
  label(state);
}

void BM_RangeViolations(benchmark::State& state) {
  const auto mm = parallel::pre_activation_minmax(bench_net(), bench_inputs(), Exec::Serial);
  for (auto _ : state)
    benchmark::DoNotOptimize(parallel::count_range_violations(bench_net(), mm.lo, mm.hi, bench_inputs(), exec_of(state)));
  state.SetItemsProcessed(state.iterations() * bench_inputs().size());
  label(state);
}

void BM_ZonotopeBounds(benchmark::State& state) {
  for (auto _ : state) {
    ranges::Propagator p(bench_net(), ranges::Domain::Zonotope, state.range(0) != 0);
    while (!p.done()) p.advance();
    benchmark::DoNotOptimize(p.pre());
  }
  label(state);
}

void BM_AttackCampaign(benchmark::State& state) {
  static const auto net = nn::random_mlp({8, 16, 16, 2}, nn::Activation::gelu(), 3);
  static const auto train = nn::random_dataset(net.input_lo(), net.input_hi(), 100, 11, 0.35);
  static const auto held = nn::random_dataset(net.input_lo(), net.input_hi(), 32, 12, 0.35);
  static const auto sampled = [] {
    ranges::CertifyConfig cfg;
    cfg.degrees = {13};
    return ranges::fit_on_bounds(net, ranges::sampled_ranges(net, train, 1.0), cfg);
  }();
  attack::PerturbationSpec spec;
  spec.per_feature_frac = 0.1;
  spec.steps = 10;
  for (auto _ : state)
    benchmark::DoNotOptimize(attack::attack_campaign(net, sampled, sampled, held, spec, 42, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * held.rows.size());
  label(state);
}

}  // namespace

BENCHMARK(BM_BatchForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PreActivationMinMax)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RangeViolations)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ZonotopeBounds)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AttackCampaign)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
