#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mshift/chain.hpp"
#include "mshift/llt.hpp"
#include "mshift/observables.hpp"
#include "mshift/sim.hpp"
#include "mshift/transfer.hpp"

namespace {

// Homogeneous chain on `states` states with a full-support random kernel.
mshift::ChainSpec random_homogeneous(std::size_t states, std::size_t horizon) {
  std::mt19937_64 gen(states * 7919 + horizon);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  Eigen::MatrixXd p(states, states);
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) p(r, c) = u(gen);
    p.row(r) /= p.row(r).sum();
  }
  const Eigen::MatrixXd block[] = {p};
  return mshift::repeat_block(block, Eigen::VectorXd::Constant(states, 1.0 / states), horizon, 0.5);
}

std::vector<double> ramp(std::size_t states) {
  std::vector<double> v(states);
  for (std::size_t i = 0; i < states; ++i) v[i] = static_cast<double>(i);
  return v;
}

mshift::WindowObservable pair_product(const mshift::ChainModel& m, std::size_t n) {
  return mshift::tabulate(m.sizes(), n, 0, 1, [](std::size_t, std::span<const std::size_t> w) {
    return static_cast<double>(w[0]) * static_cast<double>(w[1]) - 0.5 * static_cast<double>(w[1]);
  });
}

void BM_CocycleApply(benchmark::State& state) {
  const auto states = static_cast<std::size_t>(state.range(0));
  const mshift::ChainModel m(random_homogeneous(states, 64));
  const auto f = pair_product(m, 64);
  const mshift::TwistedCocycle cocycle(m, f, {0.0, 0.7});
  const mshift::CVec h(cocycle.dim(10), 1.0);
  for (auto _ : state) {
    auto out = cocycle.apply(10, h);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_CocycleApply)->Arg(2)->Arg(4)->Arg(8);

void BM_CharacteristicCurve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const mshift::ChainModel m(random_homogeneous(3, n));
  const auto f = pair_product(m, n);
  for (auto _ : state) benchmark::DoNotOptimize(mshift::characteristic_curve(m, f, 1.3, n));
}
BENCHMARK(BM_CharacteristicCurve)->Arg(100)->Arg(400);

void BM_LatticeDistribution(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const mshift::ChainModel m(random_homogeneous(3, n));
  const auto values = ramp(3);
  const auto f = mshift::coordinate_observable(m.sizes(), n, values);
  for (auto _ : state) benchmark::DoNotOptimize(mshift::lattice_distribution(m, f, n));
}
BENCHMARK(BM_LatticeDistribution)->Arg(100)->Arg(400)->Arg(1600);

void BM_CorangeStatistic(benchmark::State& state) {
  const mshift::ChainModel m(random_homogeneous(3, 200));
  const auto values = ramp(3);
  const auto f = mshift::coordinate_observable(m.sizes(), 200, values);
  for (auto _ : state) benchmark::DoNotOptimize(mshift::corange_statistic(m, f, 2.1, 200, 4, 1));
}
BENCHMARK(BM_CorangeStatistic);

void BM_SampleSums(benchmark::State& state) {
  const mshift::ChainModel m(random_homogeneous(4, 400));
  const auto values = ramp(4);
  const auto f = mshift::coordinate_observable(m.sizes(), 400, values);
  const auto threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mshift::sample_sums(m, f, 400, 20000, 5, threads));
  state.SetItemsProcessed(state.iterations() * 20000);
}
BENCHMARK(BM_SampleSums)->Arg(1)->Arg(4)->UseRealTime();

}  // namespace
BENCHMARK_MAIN();
