#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "smcs/filter.hpp"
#include "smcs/kernels.hpp"
#include "smcs/model.hpp"
#include "smcs/random.hpp"

namespace smcs {

/// Internals of one conditional particle filter sweep.
struct CpfasSweep {
  ParticleSystem system;  // particle N-1 is the pinned conditional trajectory
  std::size_t selected = 0;
  std::size_t ancestor_fallbacks = 0;
  /// When recording is requested: per t = 2..T (index t - 2), the normalized
  /// ancestor-sampling probabilities of the pinned particle.
  std::vector<std::vector<double>> ancestor_probabilities;
};

struct CpfasOptions {
  Execution exec = Execution::parallel;
  bool record_ancestor_probabilities = false;
};

/// One pass of the conditional particle filter with ancestor sampling. Returns
/// the whole particle system and the selected output index.
[[nodiscard]] CpfasSweep cpfas_sweep(const StateSpaceModel& model, std::size_t particles,
                                     const Trajectory& conditional, const RandomSource& rng,
                                     const CpfasOptions& options = {});

/// Markov kernel x_{1:T}[k] -> x_{1:T}[k+1].
[[nodiscard]] Trajectory cpfas_step(const StateSpaceModel& model, std::size_t particles,
                                    const Trajectory& conditional, const RandomSource& rng,
                                    Execution exec = Execution::parallel);

struct SmoothingChain {
  std::vector<Trajectory> trajectories;  // stored iterations (after thinning)
  std::size_t iterations = 0;            // K
  std::size_t thinning = 1;
  std::size_t burn_in = 0;               // in stored trajectories
  std::vector<double> update_rate;       // per t, over all K transitions
  std::size_t ancestor_fallbacks = 0;
  RandomSource seed;
};

struct McmcOptions {
  Execution exec = Execution::parallel;
  std::size_t thinning = 1;
  /// Defaults to K / 10 (in stored trajectories).
  std::optional<std::size_t> burn_in;
  /// Called after every sweep with the 1-based iteration number.
  std::function<void(std::size_t, const CpfasSweep&)> observer;
};

/// Iterates cpfas_step K times starting from `init`.
[[nodiscard]] SmoothingChain mcmc_smoother(const StateSpaceModel& model, std::size_t particles,
                                           std::size_t iterations, const Trajectory& init,
                                           const RandomSource& rng,
                                           const McmcOptions& options = {});

struct FfbsiResult {
  std::vector<Trajectory> trajectories;
  FilterResult forward;
};

/// Forward filtering with N particles, then M backward-simulated trajectories
/// using weights w_t^i f(x_{t+1} | x_t^i).
[[nodiscard]] FfbsiResult ffbsi(const StateSpaceModel& model, std::size_t particles,
                                std::size_t draws, const RandomSource& rng,
                                Execution exec = Execution::parallel);

struct SmoothingEstimate {
  Eigen::MatrixXd means;      // T x n_x
  Eigen::MatrixXd variances;  // T x n_x
  Eigen::MatrixXd lower;      // T x n_x
  Eigen::MatrixXd upper;      // T x n_x
  double level = 0.0;
  std::size_t samples = 0;
};

/// Ergodic averages and empirical credibility intervals over the chain after
/// discarding the first `burn_in` stored trajectories.
[[nodiscard]] SmoothingEstimate estimate(const SmoothingChain& chain, std::size_t burn_in,
                                         double level);
/// Same estimator over an arbitrary sample set (used for FFBSi output).
[[nodiscard]] SmoothingEstimate estimate(std::span<const Trajectory> samples, double level);

/// Per-t fraction of consecutive stored trajectories whose state changed.
[[nodiscard]] std::vector<double> chain_update_rate(const SmoothingChain& chain);

}  // namespace smcs
