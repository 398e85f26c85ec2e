#include "smcs/model.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace smcs {

bool Trajectory::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Trajectory ParticleSystem::trace(std::size_t i) const {
  Trajectory path(horizon_, dim_);
  std::size_t idx = i;
  for (std::size_t t = horizon_; t >= 1; --t) {
    const auto x = particle(t, idx);
    std::copy(x.begin(), x.end(), path.state(t).begin());
    idx = ancestors(t)[idx];
  }
  return path;
}

Trajectory mean_rollout(const StateSpaceModel& model) {
  Trajectory path(model.horizon(), model.state_dim());
  model.initial_mean(path.state(1));
  for (std::size_t t = 2; t <= model.horizon(); ++t) {
    model.mean_transition(t, std::as_const(path).state(t - 1), path.state(t));
  }
  return path;
}

}  // namespace smcs
