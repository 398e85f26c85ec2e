#include "smcs/filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "smcs/weights.hpp"

namespace smcs {

std::vector<std::uint32_t> resample_multinomial(std::span<const double> probabilities,
                                                std::size_t count, const RandomSource& rng,
                                                Execution exec) {
  if (probabilities.empty()) throw std::invalid_argument("resample: no probabilities");
  if (count == 0) throw std::invalid_argument("resample: count must be positive");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw std::invalid_argument("resample: negative or NaN probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("resample: probabilities do not sum to one");
  }
  const auto cdf = kernels::cumulative(probabilities);
  std::vector<std::uint32_t> out(count);
  kernels::draw_multinomial(cdf, rng, out, exec);
  return out;
}

namespace {

void accumulate_estimates(const ParticleSystem& system, std::size_t t, FilterResult& result) {
  const auto probs = normalize_weights(system.log_weights(t));
  const std::size_t n = system.dim();
  for (std::size_t k = 0; k < n; ++k) result.filtered_means(t - 1, k) = 0.0;
  for (std::size_t i = 0; i < system.count(); ++i) {
    const auto x = system.particle(t, i);
    for (std::size_t k = 0; k < n; ++k) result.filtered_means(t - 1, k) += probs[i] * x[k];
  }
  result.ess[t - 1] = effective_sample_size(probs);
  result.log_likelihood +=
      log_sum_exp(system.log_weights(t)) - std::log(static_cast<double>(system.count()));
}

}  // namespace

FilterResult particle_filter(const StateSpaceModel& model, std::size_t particles,
                             const RandomSource& rng, Execution exec) {
  if (particles == 0) throw std::invalid_argument("particle_filter: N must be >= 1");
  const std::size_t T = model.horizon();
  const std::size_t n = model.state_dim();

  FilterResult result;
  result.system = ParticleSystem(T, particles, n);
  result.filtered_means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T),
                                                static_cast<Eigen::Index>(n));
  result.ess.assign(T, 0.0);
  auto& system = result.system;

  kernels::initialize(model, rng, system, particles, exec);
  try {
    accumulate_estimates(system, 1, result);
  } catch (const DegenerateWeightsError&) {
    throw DegenerateWeightsError(1, "all particle weights are zero");
  }
  for (std::size_t t = 2; t <= T; ++t) {
    const auto cdf = kernels::cumulative(normalize_weights(system.log_weights(t - 1)));
    kernels::propagate(model, rng, t, cdf, system, particles, exec);
    try {
      accumulate_estimates(system, t, result);
    } catch (const DegenerateWeightsError&) {
      throw DegenerateWeightsError(t, "all particle weights are zero");
    }
  }
  result.unique_ancestry = measure_path_degeneracy(system);
  return result;
}

std::vector<std::size_t> measure_path_degeneracy(const ParticleSystem& system) {
  const std::size_t T = system.horizon();
  const std::size_t N = system.count();
  std::vector<std::size_t> counts(T, 0);
  std::vector<char> alive(N, 1);
  std::vector<char> parents(N, 0);
  for (std::size_t t = T; t >= 1; --t) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < N; ++i) c += alive[i] != 0;
    counts[t - 1] = c;
    if (t == 1) break;
    std::fill(parents.begin(), parents.end(), 0);
    const auto anc = system.ancestors(t);
    for (std::size_t i = 0; i < N; ++i) {
      if (alive[i]) parents[anc[i]] = 1;
    }
    alive.swap(parents);
  }
  return counts;
}

std::vector<std::size_t> measure_path_degeneracy(const FilterResult& result) {
  return measure_path_degeneracy(result.system);
}

}  // namespace smcs
