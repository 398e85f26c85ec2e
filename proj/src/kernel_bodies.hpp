#pragma once

// Per-element bodies shared by the serial and OpenMP kernel drivers. Keeping
// them in one place is what makes the two drivers bit-identical.

#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "smcs/kernels.hpp"
#include "smcs/weights.hpp"

namespace smcs::kernels::body {

inline std::uint64_t tag(DrawTag t) { return static_cast<std::uint64_t>(t); }

inline std::vector<double> weight_cdf(std::span<const double> log_weights) {
  return cumulative(normalize_weights(log_weights));
}

inline void initialize_one(const StateSpaceModel& model, const RandomSource& source,
                           ParticleSystem& system, std::size_t i) {
  Rng rng = source.rng(tag(DrawTag::initial), 1, i);
  auto x = system.particle(1, i);
  model.sample_initial_proposal(rng, x);
  system.log_weights(1)[i] = log_weight_initial(model, x);
  system.ancestors(1)[i] = static_cast<std::uint32_t>(i);
}

inline void propagate_one(const StateSpaceModel& model, const RandomSource& source,
                          std::size_t t, std::span<const double> cdf,
                          ParticleSystem& system, std::size_t i) {
  Rng rng = source.rng(tag(DrawTag::propagate), t, i);
  const auto a = categorical(cdf, rng.uniform());
  system.ancestors(t)[i] = static_cast<std::uint32_t>(a);
  const auto x_prev = std::as_const(system).particle(t - 1, a);
  auto x = system.particle(t, i);
  model.sample_proposal(t, x_prev, rng, x);
  system.log_weights(t)[i] = log_weight_step(model, t, x_prev, x);
}

inline double ancestor_log_weight_one(const StateSpaceModel& model, std::size_t t,
                                      const ParticleSystem& system, ConstStateView x_t,
                                      std::size_t j) {
  const double lw = system.log_weights(t - 1)[j];
  if (lw == -INFINITY) return -INFINITY;
  const double lf = model.log_transition(t, system.particle(t - 1, j), x_t);
  if (std::isnan(lf)) throw ModelError("transition log-density is NaN");
  return lw + lf;
}

inline std::uint32_t multinomial_one(std::span<const double> cdf, const RandomSource& source,
                                     std::size_t m) {
  Rng rng = source.rng(tag(DrawTag::resample), m);
  return static_cast<std::uint32_t>(categorical(cdf, rng.uniform()));
}

inline void backward_one(const StateSpaceModel& model, const ParticleSystem& system,
                         const RandomSource& source, std::span<const double> final_cdf,
                         std::span<std::uint32_t> out, std::size_t m) {
  const std::size_t T = system.horizon();
  const std::size_t N = system.count();
  Rng rng = source.rng(tag(DrawTag::backward), m);
  std::vector<double> logb(N);
  std::vector<double> cdf(N);
  auto path = out.subspan(m * T, T);
  path[T - 1] = static_cast<std::uint32_t>(categorical(final_cdf, rng.uniform()));
  for (std::size_t t = T - 1; t >= 1; --t) {
    const auto x_next = system.particle(t + 1, path[t]);
    const auto lw = system.log_weights(t);
    double top = -INFINITY;
    for (std::size_t j = 0; j < N; ++j) {
      double v = -INFINITY;
      if (lw[j] != -INFINITY) {
        const double lf = model.log_transition(t + 1, system.particle(t, j), x_next);
        if (std::isnan(lf)) throw ModelError("transition log-density is NaN");
        v = lw[j] + lf;
      }
      logb[j] = v;
      if (v > top) top = v;
    }
    if (top == -INFINITY) {
      throw DegenerateWeightsError(t, "all backward-simulation weights are zero");
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      acc += std::exp(logb[j] - top);
      cdf[j] = acc;
    }
    path[t - 1] = static_cast<std::uint32_t>(categorical(cdf, rng.uniform()));
  }
}

/// Collects the first exception thrown inside a parallel loop.
class ExceptionSlot {
 public:
  template <class Fn>
  void run(Fn&& fn) noexcept {
    try {
      fn();
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

}  // namespace smcs::kernels::body
