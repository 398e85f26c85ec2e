#include <doctest.h>

#include <vector>

#include "smcs/filter.hpp"
#include "smcs/kernels.hpp"
#include "smcs/models/imu_uwb.hpp"
#include "smcs/models/linear_gaussian.hpp"
#include "smcs/smoother.hpp"
#include "smcs/weights.hpp"

using namespace smcs;

namespace {

struct ThreadCap {
  explicit ThreadCap(int n) { set_thread_count(n); }
  ~ThreadCap() { set_thread_count(0); }
};

}  // namespace

TEST_CASE("serial and OpenMP kernels are bit-identical") {
  const ThreadCap cap(4);
  const auto inst = models::lgss_model({31, 1});
  const auto& model = *inst.ssm;
  const RandomSource src{31, 2};
  const std::size_t N = 257;

  ParticleSystem a(80, N, 1), b(80, N, 1);
  kernels::serial::initialize(model, src, a, N);
  kernels::omp::initialize(model, src, b, N);
  CHECK(a == b);

  for (std::size_t t = 2; t <= 80; ++t) {
    const auto cdf = kernels::cumulative(normalize_weights(a.log_weights(t - 1)));
    kernels::serial::propagate(model, src, t, cdf, a, N);
    kernels::omp::propagate(model, src, t, cdf, b, N);
  }
  CHECK(a == b);

  std::vector<double> la(N), lb(N);
  kernels::serial::ancestor_log_weights(model, 40, a, inst.truth.state(40), la);
  kernels::omp::ancestor_log_weights(model, 40, a, inst.truth.state(40), lb);
  CHECK(la == lb);

  const auto cdf = kernels::cumulative(normalize_weights(a.log_weights(80)));
  std::vector<std::uint32_t> da(1000), db(1000);
  kernels::serial::draw_multinomial(cdf, src, da);
  kernels::omp::draw_multinomial(cdf, src, db);
  CHECK(da == db);

  std::vector<std::uint32_t> ba(20 * 80), bb(20 * 80);
  kernels::serial::backward_simulate(model, a, src, ba);
  kernels::omp::backward_simulate(model, a, src, bb);
  CHECK(ba == bb);
}

TEST_CASE("algorithms give identical results in both execution modes") {
  const ThreadCap cap(3);
  const auto inst = models::lgss_model({5, 1});
  const auto& model = *inst.ssm;

  const auto fs = particle_filter(model, 300, {5, 3}, Execution::serial);
  const auto fp = particle_filter(model, 300, {5, 3}, Execution::parallel);
  CHECK(fs.system == fp.system);
  CHECK(fs.log_likelihood == fp.log_likelihood);

  const auto init = mean_rollout(model);
  const auto cs = mcmc_smoother(model, 20, 30, init, {5, 2}, {.exec = Execution::serial});
  const auto cp = mcmc_smoother(model, 20, 30, init, {5, 2}, {.exec = Execution::parallel});
  CHECK(cs.trajectories == cp.trajectories);

  const auto bs = ffbsi(model, 100, 20, {5, 4}, Execution::serial);
  const auto bp = ffbsi(model, 100, 20, {5, 4}, Execution::parallel);
  CHECK(bs.trajectories == bp.trajectories);
}

TEST_CASE("results do not depend on the thread count") {
  models::WalkOptions o;
  o.duration = 2.0;
  const auto data = models::generate_uwb_walk(models::UwbScene::default_scene(), o, {4, 1});
  const auto model = models::imu_uwb_model(data);
  std::vector<Trajectory> runs;
  for (int threads : {1, 2, 5}) {
    const ThreadCap cap(threads);
    runs.push_back(mcmc_smoother(*model, 16, 3, mean_rollout(*model), {4, 2}).trajectories.back());
  }
  CHECK(runs[0] == runs[1]);
  CHECK(runs[0] == runs[2]);
}
