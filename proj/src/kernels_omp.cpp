#include <omp.h>

#include "kernel_bodies.hpp"

namespace smcs::kernels::omp {

namespace {

// Signed loop counters for OpenMP.
std::ptrdiff_t ssize(std::size_t n) { return static_cast<std::ptrdiff_t>(n); }

}  // namespace

void initialize(const StateSpaceModel& model, const RandomSource& source,
                ParticleSystem& system, std::size_t count) {
  body::ExceptionSlot slot;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < ssize(count); ++i) {
    slot.run([&] { body::initialize_one(model, source, system, static_cast<std::size_t>(i)); });
  }
  slot.rethrow();
}

void propagate(const StateSpaceModel& model, const RandomSource& source, std::size_t t,
               std::span<const double> cdf, ParticleSystem& system, std::size_t count) {
  body::ExceptionSlot slot;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < ssize(count); ++i) {
    slot.run([&] {
      body::propagate_one(model, source, t, cdf, system, static_cast<std::size_t>(i));
    });
  }
  slot.rethrow();
}

void ancestor_log_weights(const StateSpaceModel& model, std::size_t t,
                          const ParticleSystem& system, ConstStateView x_t,
                          std::span<double> out) {
  body::ExceptionSlot slot;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < ssize(out.size()); ++j) {
    slot.run([&] {
      const auto jj = static_cast<std::size_t>(j);
      out[jj] = body::ancestor_log_weight_one(model, t, system, x_t, jj);
    });
  }
  slot.rethrow();
}

void draw_multinomial(std::span<const double> cdf, const RandomSource& source,
                      std::span<std::uint32_t> out) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t m = 0; m < ssize(out.size()); ++m) {
    const auto mm = static_cast<std::size_t>(m);
    out[mm] = body::multinomial_one(cdf, source, mm);
  }
}

void backward_simulate(const StateSpaceModel& model, const ParticleSystem& system,
                       const RandomSource& source, std::span<std::uint32_t> out) {
  const auto final_cdf = body::weight_cdf(system.log_weights(system.horizon()));
  const std::size_t draws = out.size() / system.horizon();
  body::ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t m = 0; m < ssize(draws); ++m) {
    slot.run([&] {
      body::backward_one(model, system, source, final_cdf, out, static_cast<std::size_t>(m));
    });
  }
  slot.rethrow();
}

}  // namespace smcs::kernels::omp
