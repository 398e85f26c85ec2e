#include "kernel_bodies.hpp"

namespace smcs::kernels::serial {

void initialize(const StateSpaceModel& model, const RandomSource& source,
                ParticleSystem& system, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) body::initialize_one(model, source, system, i);
}

void propagate(const StateSpaceModel& model, const RandomSource& source, std::size_t t,
               std::span<const double> cdf, ParticleSystem& system, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) body::propagate_one(model, source, t, cdf, system, i);
}

void ancestor_log_weights(const StateSpaceModel& model, std::size_t t,
                          const ParticleSystem& system, ConstStateView x_t,
                          std::span<double> out) {
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = body::ancestor_log_weight_one(model, t, system, x_t, j);
  }
}

void draw_multinomial(std::span<const double> cdf, const RandomSource& source,
                      std::span<std::uint32_t> out) {
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = body::multinomial_one(cdf, source, m);
}

void backward_simulate(const StateSpaceModel& model, const ParticleSystem& system,
                       const RandomSource& source, std::span<std::uint32_t> out) {
  const auto final_cdf = body::weight_cdf(system.log_weights(system.horizon()));
  const std::size_t draws = out.size() / system.horizon();
  for (std::size_t m = 0; m < draws; ++m) {
    body::backward_one(model, system, source, final_cdf, out, m);
  }
}

}  // namespace smcs::kernels::serial
