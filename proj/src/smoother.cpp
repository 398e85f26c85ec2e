#include "smcs/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "smcs/weights.hpp"

namespace smcs {

namespace {

std::uint64_t tag(DrawTag t) { return static_cast<std::uint64_t>(t); }

void require_conditional(const StateSpaceModel& model, const Trajectory& x) {
  if (x.horizon() != model.horizon() || x.dim() != model.state_dim()) {
    throw std::invalid_argument("conditional trajectory has wrong shape");
  }
  if (!x.all_finite()) throw std::invalid_argument("conditional trajectory is not finite");
}

bool same_state(ConstStateView a, ConstStateView b) {
  return std::equal(a.begin(), a.end(), b.begin());
}

}  // namespace

CpfasSweep cpfas_sweep(const StateSpaceModel& model, std::size_t particles,
                       const Trajectory& conditional, const RandomSource& rng,
                       const CpfasOptions& options) {
  if (particles < 2) throw std::invalid_argument("cpfas: N must be >= 2");
  require_conditional(model, conditional);
  const std::size_t T = model.horizon();
  const std::size_t N = particles;
  const std::size_t pinned = N - 1;

  CpfasSweep sweep;
  sweep.system = ParticleSystem(T, N, model.state_dim());
  auto& sys = sweep.system;

  // Steps 1-3: free particles from q_1, pinned particle from the conditional.
  kernels::initialize(model, rng, sys, pinned, options.exec);
  std::copy_n(conditional.state(1).begin(), model.state_dim(), sys.particle(1, pinned).begin());
  sys.log_weights(1)[pinned] = log_weight_initial(model, sys.particle(1, pinned));
  sys.ancestors(1)[pinned] = static_cast<std::uint32_t>(pinned);

  std::vector<double> probs(N);
  std::vector<double> as_log(N);
  std::vector<double> as_probs(N);
  for (std::size_t t = 2; t <= T; ++t) {
    try {
      normalize_weights(sys.log_weights(t - 1), probs);
    } catch (const DegenerateWeightsError&) {
      throw DegenerateWeightsError(t - 1, "all particle weights are zero");
    }
    // Steps 5-6: resample and propagate the free particles.
    const auto cdf = kernels::cumulative(probs);
    kernels::propagate(model, rng, t, cdf, sys, pinned, options.exec);

    // Step 7: pin.
    const auto x_pinned = conditional.state(t);
    std::copy(x_pinned.begin(), x_pinned.end(), sys.particle(t, pinned).begin());

    // Step 8: ancestor sampling with probability ~ w_{t-1}^j f(x_t^N | x_{t-1}^j).
    kernels::ancestor_log_weights(model, t, sys, x_pinned, as_log, options.exec);
    std::size_t ancestor = pinned;
    bool degenerate = false;
    try {
      normalize_weights(as_log, as_probs);
    } catch (const DegenerateWeightsError&) {
      degenerate = true;
    }
    if (degenerate) {
      ++sweep.ancestor_fallbacks;
      std::fill(as_probs.begin(), as_probs.end(), 0.0);
      as_probs[pinned] = 1.0;
    } else {
      Rng as_rng = rng.rng(tag(DrawTag::ancestor), t);
      ancestor = kernels::categorical(kernels::cumulative(as_probs), as_rng.uniform());
    }
    if (options.record_ancestor_probabilities) sweep.ancestor_probabilities.push_back(as_probs);
    sys.ancestors(t)[pinned] = static_cast<std::uint32_t>(ancestor);

    // Step 10: weight the pinned particle (free ones were weighted on propagation).
    sys.log_weights(t)[pinned] =
        log_weight_step(model, t, std::as_const(sys).particle(t - 1, ancestor), x_pinned);
  }

  // Step 12: output selection.
  try {
    normalize_weights(sys.log_weights(T), probs);
  } catch (const DegenerateWeightsError&) {
    throw DegenerateWeightsError(T, "all particle weights are zero");
  }
  Rng select_rng = rng.rng(tag(DrawTag::select), T);
  sweep.selected = kernels::categorical(kernels::cumulative(probs), select_rng.uniform());
  return sweep;
}

Trajectory cpfas_step(const StateSpaceModel& model, std::size_t particles,
                      const Trajectory& conditional, const RandomSource& rng, Execution exec) {
  const auto sweep = cpfas_sweep(model, particles, conditional, rng, {.exec = exec});
  return sweep.system.trace(sweep.selected);
}

SmoothingChain mcmc_smoother(const StateSpaceModel& model, std::size_t particles,
                             std::size_t iterations, const Trajectory& init,
                             const RandomSource& rng, const McmcOptions& options) {
  if (particles < 2) throw std::invalid_argument("mcmc_smoother: N must be >= 2");
  if (iterations < 1) throw std::invalid_argument("mcmc_smoother: K must be >= 1");
  if (options.thinning < 1) throw std::invalid_argument("mcmc_smoother: thinning must be >= 1");
  require_conditional(model, init);
  const std::size_t T = model.horizon();

  SmoothingChain chain;
  chain.iterations = iterations;
  chain.thinning = options.thinning;
  chain.seed = rng;
  chain.trajectories.reserve(iterations / options.thinning + 1);
  std::vector<std::size_t> changes(T, 0);

  Trajectory current = init;
  for (std::size_t k = 1; k <= iterations; ++k) {
    const auto sweep =
        cpfas_sweep(model, particles, current, rng.child(k), {.exec = options.exec});
    chain.ancestor_fallbacks += sweep.ancestor_fallbacks;
    if (options.observer) options.observer(k, sweep);
    Trajectory next = sweep.system.trace(sweep.selected);
    for (std::size_t t = 1; t <= T; ++t) {
      if (!same_state(next.state(t), current.state(t))) ++changes[t - 1];
    }
    current = std::move(next);
    if (k % options.thinning == 0) chain.trajectories.push_back(current);
  }
  if (chain.trajectories.empty()) chain.trajectories.push_back(current);

  chain.update_rate.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    chain.update_rate[t] = static_cast<double>(changes[t]) / static_cast<double>(iterations);
  }
  const std::size_t stored = chain.trajectories.size();
  chain.burn_in = options.burn_in.value_or(stored / 10);
  if (chain.burn_in >= stored) throw std::invalid_argument("mcmc_smoother: burn_in >= K");
  return chain;
}

FfbsiResult ffbsi(const StateSpaceModel& model, std::size_t particles, std::size_t draws,
                  const RandomSource& rng, Execution exec) {
  if (particles < 1) throw std::invalid_argument("ffbsi: N must be >= 1");
  if (draws < 1) throw std::invalid_argument("ffbsi: M must be >= 1");
  const std::size_t T = model.horizon();

  FfbsiResult result;
  result.forward = particle_filter(model, particles, rng.child(0), exec);
  std::vector<std::uint32_t> indices(draws * T);
  kernels::backward_simulate(model, result.forward.system, rng.child(1), indices, exec);

  result.trajectories.reserve(draws);
  const auto& sys = result.forward.system;
  for (std::size_t m = 0; m < draws; ++m) {
    Trajectory path(T, model.state_dim());
    for (std::size_t t = 1; t <= T; ++t) {
      const auto x = sys.particle(t, indices[m * T + (t - 1)]);
      std::copy(x.begin(), x.end(), path.state(t).begin());
    }
    result.trajectories.push_back(std::move(path));
  }
  return result;
}

namespace {

// Linear interpolation between order statistics (Hyndman-Fan type 7).
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

SmoothingEstimate estimate(std::span<const Trajectory> samples, double level) {
  if (samples.size() < 10) {
    throw std::invalid_argument("estimate: fewer than 10 retained samples");
  }
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("estimate: level not in (0,1)");
  const std::size_t T = samples.front().horizon();
  const std::size_t n = samples.front().dim();
  const auto rows = static_cast<Eigen::Index>(T);
  const auto cols = static_cast<Eigen::Index>(n);
  const double count = static_cast<double>(samples.size());

  SmoothingEstimate est;
  est.level = level;
  est.samples = samples.size();
  est.means = Eigen::MatrixXd::Zero(rows, cols);
  est.variances = Eigen::MatrixXd::Zero(rows, cols);
  est.lower.resize(rows, cols);
  est.upper.resize(rows, cols);

  std::vector<double> column(samples.size());
  for (std::size_t t = 1; t <= T; ++t) {
    for (std::size_t k = 0; k < n; ++k) {
      double sum = 0.0;
      for (std::size_t s = 0; s < samples.size(); ++s) {
        column[s] = samples[s](t, k);
        sum += column[s];
      }
      const double mean = sum / count;
      double ss = 0.0;
      for (double v : column) ss += (v - mean) * (v - mean);
      std::sort(column.begin(), column.end());
      const auto r = static_cast<Eigen::Index>(t - 1);
      const auto c = static_cast<Eigen::Index>(k);
      est.means(r, c) = mean;
      est.variances(r, c) = ss / (count - 1.0);
      est.lower(r, c) = std::min(mean, quantile_sorted(column, (1.0 - level) / 2.0));
      est.upper(r, c) = std::max(mean, quantile_sorted(column, (1.0 + level) / 2.0));
    }
  }
  return est;
}

SmoothingEstimate estimate(const SmoothingChain& chain, std::size_t burn_in, double level) {
  if (burn_in >= chain.trajectories.size()) {
    throw std::invalid_argument("estimate: burn_in must be smaller than the chain length");
  }
  return estimate(std::span(chain.trajectories).subspan(burn_in), level);
}

std::vector<double> chain_update_rate(const SmoothingChain& chain) {
  const auto& tr = chain.trajectories;
  if (tr.size() < 2) throw std::invalid_argument("chain_update_rate: need K >= 2");
  const std::size_t T = tr.front().horizon();
  std::vector<double> rate(T, 0.0);
  for (std::size_t k = 1; k < tr.size(); ++k) {
    for (std::size_t t = 1; t <= T; ++t) {
      if (!same_state(tr[k].state(t), tr[k - 1].state(t))) rate[t - 1] += 1.0;
    }
  }
  for (double& r : rate) r /= static_cast<double>(tr.size() - 1);
  return rate;
}

}  // namespace smcs
