#pragma once

// Per-particle kernels shared by the filter and smoothers.
//
// Each kernel has a serial reference implementation and an OpenMP
// implementation. Every particle draws from its own counter-keyed generator,
// so both produce bit-identical output for the same RandomSource; the serial
// path is what the tests compare the parallel path against.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "smcs/model.hpp"
#include "smcs/random.hpp"

namespace smcs {

enum class Execution { serial, parallel };

/// Purpose tags for keying generators; keeps streams for different draws apart.
enum class DrawTag : std::uint64_t {
  initial = 1,
  propagate = 2,
  ancestor = 3,
  select = 4,
  backward = 5,
  resample = 6,
};

/// Caps OpenMP worker count (0 leaves the runtime default).
void set_thread_count(int threads);
[[nodiscard]] int thread_count();

namespace kernels {

/// Cumulative sums of `probabilities`.
[[nodiscard]] std::vector<double> cumulative(std::span<const double> probabilities);

/// Index i with cdf[i-1] <= u * cdf.back() < cdf[i].
[[nodiscard]] std::size_t categorical(std::span<const double> cdf, double u) noexcept;

/// Draws x_1^i ~ q_1 and sets log w_1^i for i < count.
void initialize(const StateSpaceModel& model, const RandomSource& source,
                ParticleSystem& system, std::size_t count, Execution exec);

/// For i < count: a_t^i ~ Categorical(cdf of w_{t-1}), x_t^i ~ q(.|x_{t-1}^{a}),
/// log w_t^i = log W. Requires 2 <= t.
void propagate(const StateSpaceModel& model, const RandomSource& source, std::size_t t,
               std::span<const double> ancestor_cdf, ParticleSystem& system,
               std::size_t count, Execution exec);

/// out[j] = log w_{t-1}^j + log f(x_t | x_{t-1}^j).
void ancestor_log_weights(const StateSpaceModel& model, std::size_t t,
                          const ParticleSystem& system, ConstStateView x_t,
                          std::span<double> out, Execution exec);

/// Fills `out` with i.i.d. draws from the categorical distribution given by `cdf`.
void draw_multinomial(std::span<const double> cdf, const RandomSource& source,
                      std::span<std::uint32_t> out, Execution exec);

/// Backward simulation through a forward particle system. Writes, for each
/// of out.size() / horizon draws m, the particle index chosen at each time
/// into out[m * horizon + (t - 1)]. Throws DegenerateWeightsError naming t
/// when all backward weights vanish.
void backward_simulate(const StateSpaceModel& model, const ParticleSystem& system,
                       const RandomSource& source, std::span<std::uint32_t> out,
                       Execution exec);

namespace serial {
void initialize(const StateSpaceModel&, const RandomSource&, ParticleSystem&, std::size_t);
void propagate(const StateSpaceModel&, const RandomSource&, std::size_t,
               std::span<const double>, ParticleSystem&, std::size_t);
void ancestor_log_weights(const StateSpaceModel&, std::size_t, const ParticleSystem&,
                          ConstStateView, std::span<double>);
void draw_multinomial(std::span<const double>, const RandomSource&, std::span<std::uint32_t>);
void backward_simulate(const StateSpaceModel&, const ParticleSystem&, const RandomSource&,
                       std::span<std::uint32_t>);
}  // namespace serial

namespace omp {
void initialize(const StateSpaceModel&, const RandomSource&, ParticleSystem&, std::size_t);
void propagate(const StateSpaceModel&, const RandomSource&, std::size_t,
               std::span<const double>, ParticleSystem&, std::size_t);
void ancestor_log_weights(const StateSpaceModel&, std::size_t, const ParticleSystem&,
                          ConstStateView, std::span<double>);
void draw_multinomial(std::span<const double>, const RandomSource&, std::span<std::uint32_t>);
void backward_simulate(const StateSpaceModel&, const ParticleSystem&, const RandomSource&,
                       std::span<std::uint32_t>);
}  // namespace omp

}  // namespace kernels
}  // namespace smcs
