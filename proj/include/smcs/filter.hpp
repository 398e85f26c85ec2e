#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "smcs/kernels.hpp"
#include "smcs/model.hpp"
#include "smcs/random.hpp"

namespace smcs {

struct FilterResult {
  ParticleSystem system;
  Eigen::MatrixXd filtered_means;  // T x n_x, self-normalized weighted means
  double log_likelihood = 0.0;     // sum_t log(mean_i w_t^i)
  std::vector<double> ess;         // effective sample size per t
  std::vector<std::size_t> unique_ancestry;
};

/// i.i.d. categorical draws (0-based indices). Probabilities must be
/// non-negative and sum to 1 within 1e-9.
[[nodiscard]] std::vector<std::uint32_t> resample_multinomial(
    std::span<const double> probabilities, std::size_t count, const RandomSource& rng,
    Execution exec = Execution::parallel);

/// Bootstrap-style particle filter with multinomial resampling at every step.
[[nodiscard]] FilterResult particle_filter(const StateSpaceModel& model, std::size_t particles,
                                           const RandomSource& rng,
                                           Execution exec = Execution::parallel);

/// For each t, the number of distinct particles at time t that are ancestors
/// of the time-T particles. Non-increasing as t decreases; N at t = T.
[[nodiscard]] std::vector<std::size_t> measure_path_degeneracy(const ParticleSystem& system);
[[nodiscard]] std::vector<std::size_t> measure_path_degeneracy(const FilterResult& result);

}  // namespace smcs
