// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <vector>

#include "smcs/filter.hpp"
#include "smcs/kernels.hpp"
#include "smcs/models/imu_uwb.hpp"
#include "smcs/models/linear_gaussian.hpp"
#include "smcs/smoother.hpp"
#include "smcs/weights.hpp"

namespace {

using namespace smcs;

const models::LgssInstance& lgss() {
  static const auto inst = models::lgss_model({1, 1});
  return inst;
}

const models::ImuUwbModel& indoor() {
  static const auto model = [] {
    models::WalkOptions o;
    o.duration = 2.0;
    return models::imu_uwb_model(models::generate_uwb_walk(models::UwbScene::default_scene(), o, {1, 1}));
  }();
  return *model;
}

Execution mode(const benchmark::State& state) {
  return state.range(1) ? Execution::parallel : Execution::serial;
}

void propagate(benchmark::State& state) {
  const auto& model = indoor();
  const auto N = static_cast<std::size_t>(state.range(0));
  ParticleSystem sys(model.horizon(), N, model.state_dim());
  kernels::initialize(model, {1, 2}, sys, N, Execution::serial);
  const auto cdf = kernels::cumulative(normalize_weights(sys.log_weights(1)));
  for (auto _ : state) {
    kernels::propagate(model, {1, 2}, 2, cdf, sys, N, mode(state));
    benchmark::DoNotOptimize(sys.log_weights(2).data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(N));
}

void ancestor_weights(benchmark::State& state) {
  const auto& model = indoor();
  const auto N = static_cast<std::size_t>(state.range(0));
  const auto pf = particle_filter(model, N, {1, 3}, Execution::serial);
  std::vector<double> out(N);
  const auto x = pf.system.particle(20, 0);
  for (auto _ : state) {
    kernels::ancestor_log_weights(model, 20, pf.system, x, out, mode(state));
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(N));
}

void backward(benchmark::State& state) {
  const auto& model = *lgss().ssm;
  const auto N = static_cast<std::size_t>(state.range(0));
  const auto pf = particle_filter(model, N, {1, 3}, Execution::serial);
  std::vector<std::uint32_t> out(100 * model.horizon());
  for (auto _ : state) {
    kernels::backward_simulate(model, pf.system, {1, 4}, out, mode(state));
    benchmark::DoNotOptimize(out.data());
  }
}

void sweep(benchmark::State& state) {
  const auto& model = indoor();
  const auto N = static_cast<std::size_t>(state.range(0));
  const auto init = mean_rollout(model);
  for (auto _ : state) {
    auto s = cpfas_sweep(model, N, init, {1, 5}, {.exec = mode(state)});
    benchmark::DoNotOptimize(s.selected);
  }
}

}  // namespace

BENCHMARK(propagate)->ArgsProduct({{100, 1000, 10000}, {0, 1}})->ArgNames({"N", "omp"});
BENCHMARK(ancestor_weights)->ArgsProduct({{100, 1000, 10000}, {0, 1}})->ArgNames({"N", "omp"});
BENCHMARK(backward)->ArgsProduct({{100, 500}, {0, 1}})->ArgNames({"N", "omp"});
BENCHMARK(sweep)->ArgsProduct({{100}, {0, 1}})->ArgNames({"N", "omp"})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
