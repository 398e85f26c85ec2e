#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "smcs/random.hpp"

namespace smcs {

using StateView = std::span<double>;
using ConstStateView = std::span<const double>;

/// Raised when a density evaluates to NaN. A NaN is a model bug, not a zero
/// weight.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when every particle weight at some time step is zero.
class DegenerateWeightsError : public std::runtime_error {
 public:
  explicit DegenerateWeightsError(std::size_t t, const std::string& what)
      : std::runtime_error(what + " (t = " + std::to_string(t) + ")"), t_(t) {}
  explicit DegenerateWeightsError(const std::string& what)
      : std::runtime_error(what), t_(0) {}

  /// Offending 1-based time index, 0 if unknown.
  [[nodiscard]] std::size_t time() const noexcept { return t_; }

 private:
  std::size_t t_;
};

/// A state-space model
///
///   x_1 ~ mu(x_1),  x_t | x_{t-1} ~ f(x_t | x_{t-1}),  y_t | x_t ~ g(y_t | x_t)
///
/// with observations (and any exogenous inputs) held by the implementation.
/// Time indices are 1-based: `t` ranges over 1..horizon(), and the transition
/// at `t` produces x_t from x_{t-1} (so 2 <= t <= T).
///
/// The proposal defaults to the transition (bootstrap). Implementations must
/// be immutable after construction; all methods are called concurrently.
class StateSpaceModel {
 public:
  virtual ~StateSpaceModel() = default;

  [[nodiscard]] virtual std::size_t state_dim() const = 0;
  [[nodiscard]] virtual std::size_t horizon() const = 0;

  virtual void sample_initial(Rng& rng, StateView x) const = 0;
  [[nodiscard]] virtual double log_initial(ConstStateView x) const = 0;

  virtual void sample_transition(std::size_t t, ConstStateView x_prev, Rng& rng,
                                 StateView x) const = 0;
  [[nodiscard]] virtual double log_transition(std::size_t t, ConstStateView x_prev,
                                              ConstStateView x) const = 0;

  [[nodiscard]] virtual double log_observation(std::size_t t, ConstStateView x) const = 0;

  // Proposal q. Overriding any of these requires returning false from
  // bootstrap_proposal().
  [[nodiscard]] virtual bool bootstrap_proposal() const { return true; }
  virtual void sample_initial_proposal(Rng& rng, StateView x) const { sample_initial(rng, x); }
  [[nodiscard]] virtual double log_initial_proposal(ConstStateView x) const {
    return log_initial(x);
  }
  virtual void sample_proposal(std::size_t t, ConstStateView x_prev, Rng& rng,
                               StateView x) const {
    sample_transition(t, x_prev, rng, x);
  }
  [[nodiscard]] virtual double log_proposal(std::size_t t, ConstStateView x_prev,
                                            ConstStateView x) const {
    return log_transition(t, x_prev, x);
  }

  // Noise-free dynamics, used for the default initial trajectory.
  virtual void initial_mean(StateView x) const = 0;
  virtual void mean_transition(std::size_t t, ConstStateView x_prev, StateView x) const = 0;
};

/// One state path x_{1:T}.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::size_t horizon, std::size_t dim, double fill = 0.0)
      : horizon_(horizon), dim_(dim), data_(horizon * dim, fill) {}

  [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

  /// State at 1-based time t.
  [[nodiscard]] StateView state(std::size_t t) noexcept {
    return {data_.data() + (t - 1) * dim_, dim_};
  }
  [[nodiscard]] ConstStateView state(std::size_t t) const noexcept {
    return {data_.data() + (t - 1) * dim_, dim_};
  }
  [[nodiscard]] double operator()(std::size_t t, std::size_t component) const noexcept {
    return data_[(t - 1) * dim_ + component];
  }

  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
  [[nodiscard]] std::span<double> data() noexcept { return data_; }

  [[nodiscard]] bool all_finite() const noexcept;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::size_t horizon_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// Particles, unnormalized log-weights and ancestor indices for t = 1..T.
/// Particle indices are 0-based; ancestors at t = 1 are unused and set to
/// the particle's own index.
class ParticleSystem {
 public:
  ParticleSystem() = default;
  ParticleSystem(std::size_t horizon, std::size_t count, std::size_t dim)
      : horizon_(horizon),
        count_(count),
        dim_(dim),
        particles_(horizon * count * dim, 0.0),
        log_weights_(horizon * count, 0.0),
        ancestors_(horizon * count, 0) {}

  [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }
  [[nodiscard]] std::size_t count() const noexcept { return count_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

  [[nodiscard]] StateView particle(std::size_t t, std::size_t i) noexcept {
    return {particles_.data() + ((t - 1) * count_ + i) * dim_, dim_};
  }
  [[nodiscard]] ConstStateView particle(std::size_t t, std::size_t i) const noexcept {
    return {particles_.data() + ((t - 1) * count_ + i) * dim_, dim_};
  }
  /// All particles at time t, contiguous, count() * dim() values.
  [[nodiscard]] std::span<double> particles_at(std::size_t t) noexcept {
    return {particles_.data() + (t - 1) * count_ * dim_, count_ * dim_};
  }
  [[nodiscard]] std::span<const double> particles_at(std::size_t t) const noexcept {
    return {particles_.data() + (t - 1) * count_ * dim_, count_ * dim_};
  }
  [[nodiscard]] std::span<double> log_weights(std::size_t t) noexcept {
    return {log_weights_.data() + (t - 1) * count_, count_};
  }
  [[nodiscard]] std::span<const double> log_weights(std::size_t t) const noexcept {
    return {log_weights_.data() + (t - 1) * count_, count_};
  }
  [[nodiscard]] std::span<std::uint32_t> ancestors(std::size_t t) noexcept {
    return {ancestors_.data() + (t - 1) * count_, count_};
  }
  [[nodiscard]] std::span<const std::uint32_t> ancestors(std::size_t t) const noexcept {
    return {ancestors_.data() + (t - 1) * count_, count_};
  }

  /// Path x_{1:T}^i obtained by tracing ancestors back from particle i at T.
  [[nodiscard]] Trajectory trace(std::size_t i) const;

  friend bool operator==(const ParticleSystem&, const ParticleSystem&) = default;

 private:
  std::size_t horizon_ = 0;
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> particles_;
  std::vector<double> log_weights_;
  std::vector<std::uint32_t> ancestors_;
};

/// Noise-free rollout of the model dynamics from E[x_1].
[[nodiscard]] Trajectory mean_rollout(const StateSpaceModel& model);

}  // namespace smcs
