#include "smcs/kernels.hpp"

#include <omp.h>

#include <algorithm>

namespace smcs {

void set_thread_count(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

namespace kernels {

std::vector<double> cumulative(std::span<const double> probabilities) {
  std::vector<double> cdf(probabilities.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    acc += probabilities[i];
    cdf[i] = acc;
  }
  return cdf;
}

std::size_t categorical(std::span<const double> cdf, double u) noexcept {
  const double target = u * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  if (it == cdf.end()) {
    // u * total rounded up to total; take the last index with positive mass.
    std::size_t i = cdf.size() - 1;
    while (i > 0 && cdf[i] == cdf[i - 1]) --i;
    return i;
  }
  return static_cast<std::size_t>(it - cdf.begin());
}

void initialize(const StateSpaceModel& model, const RandomSource& source,
                ParticleSystem& system, std::size_t count, Execution exec) {
  if (exec == Execution::parallel) {
    omp::initialize(model, source, system, count);
  } else {
    serial::initialize(model, source, system, count);
  }
}

void propagate(const StateSpaceModel& model, const RandomSource& source, std::size_t t,
               std::span<const double> ancestor_cdf, ParticleSystem& system,
               std::size_t count, Execution exec) {
  if (exec == Execution::parallel) {
    omp::propagate(model, source, t, ancestor_cdf, system, count);
  } else {
    serial::propagate(model, source, t, ancestor_cdf, system, count);
  }
}

void ancestor_log_weights(const StateSpaceModel& model, std::size_t t,
                          const ParticleSystem& system, ConstStateView x_t,
                          std::span<double> out, Execution exec) {
  if (exec == Execution::parallel) {
    omp::ancestor_log_weights(model, t, system, x_t, out);
  } else {
    serial::ancestor_log_weights(model, t, system, x_t, out);
  }
}

void draw_multinomial(std::span<const double> cdf, const RandomSource& source,
                      std::span<std::uint32_t> out, Execution exec) {
  if (exec == Execution::parallel) {
    omp::draw_multinomial(cdf, source, out);
  } else {
    serial::draw_multinomial(cdf, source, out);
  }
}

void backward_simulate(const StateSpaceModel& model, const ParticleSystem& system,
                       const RandomSource& source, std::span<std::uint32_t> out,
                       Execution exec) {
  if (exec == Execution::parallel) {
    omp::backward_simulate(model, system, source, out);
  } else {
    serial::backward_simulate(model, system, source, out);
  }
}

}  // namespace kernels
}  // namespace smcs
