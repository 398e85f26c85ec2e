#pragma once

#include <cstddef>
#include <memory>

#include "smcs/model.hpp"
#include "smcs/oracles.hpp"
#include "smcs/random.hpp"

namespace smcs::models {

/// A DiscreteHMM seen as a scalar state-space model whose state takes the
/// values 0, 1, ..., S-1. Densities are with respect to counting measure.
class DiscreteHmmSsm final : public StateSpaceModel {
 public:
  explicit DiscreteHmmSsm(DiscreteHMM hmm);

  [[nodiscard]] std::size_t state_dim() const override { return 1; }
  [[nodiscard]] std::size_t horizon() const override { return hmm_.horizon(); }

  void sample_initial(Rng& rng, StateView x) const override;
  [[nodiscard]] double log_initial(ConstStateView x) const override;
  void sample_transition(std::size_t t, ConstStateView x_prev, Rng& rng,
                         StateView x) const override;
  [[nodiscard]] double log_transition(std::size_t t, ConstStateView x_prev,
                                      ConstStateView x) const override;
  [[nodiscard]] double log_observation(std::size_t t, ConstStateView x) const override;
  void initial_mean(StateView x) const override;
  void mean_transition(std::size_t t, ConstStateView x_prev, StateView x) const override;

  [[nodiscard]] const DiscreteHMM& oracle_view() const noexcept { return hmm_; }

 private:
  [[nodiscard]] Eigen::Index state_of(double x) const;

  DiscreteHMM hmm_;
  Eigen::MatrixXd log_transition_;
  Eigen::VectorXd log_initial_;
};

struct HmmParameters {
  std::size_t states = 3;
  std::size_t horizon = 10;
  double stay = 0.8;           // diagonal transition probability
  double emission_sd = 0.7;    // y_t = s_t + N(0, sd^2)
  bool uniform_emissions = false;
};

struct HmmInstance {
  std::shared_ptr<const DiscreteHmmSsm> ssm;
  DiscreteHMM oracle;
};

/// Uniform initial distribution, sticky transitions, Gaussian emissions around
/// the state value simulated from a hidden path.
[[nodiscard]] HmmInstance hmm_model(const RandomSource& seed, const HmmParameters& params = {});

}  // namespace smcs::models
