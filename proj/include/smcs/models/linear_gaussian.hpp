#pragma once

#include <cstddef>
#include <memory>

#include <Eigen/Dense>

#include "smcs/model.hpp"
#include "smcs/oracles.hpp"
#include "smcs/random.hpp"

namespace smcs::models {

/// Largest state/observation dimension handled by LinearGaussianSsm. Keeps
/// per-particle temporaries on the stack.
inline constexpr int kMaxLinearDim = 8;

/// Generic state-space view of a LinearGaussianModel, bootstrap proposal.
class LinearGaussianSsm final : public StateSpaceModel {
 public:
  explicit LinearGaussianSsm(LinearGaussianModel model);

  [[nodiscard]] std::size_t state_dim() const override { return model_.state_dim(); }
  [[nodiscard]] std::size_t horizon() const override { return model_.horizon(); }

  void sample_initial(Rng& rng, StateView x) const override;
  [[nodiscard]] double log_initial(ConstStateView x) const override;
  void sample_transition(std::size_t t, ConstStateView x_prev, Rng& rng,
                         StateView x) const override;
  [[nodiscard]] double log_transition(std::size_t t, ConstStateView x_prev,
                                      ConstStateView x) const override;
  [[nodiscard]] double log_observation(std::size_t t, ConstStateView x) const override;
  void initial_mean(StateView x) const override;
  void mean_transition(std::size_t t, ConstStateView x_prev, StateView x) const override;

  [[nodiscard]] const LinearGaussianModel& oracle_view() const noexcept { return model_; }

 private:
  struct Gaussian {
    Eigen::MatrixXd lower;  // Cholesky factor
    double log_norm = 0.0;  // -0.5 (n log 2pi + log det)
  };
  using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxLinearDim, 1>;

  static Gaussian factor(const Eigen::MatrixXd& cov, const char* name);
  template <class Vec>
  double log_density(const Gaussian& g, const Vec& residual) const;
  [[nodiscard]] SmallVec transition_mean(std::size_t t, ConstStateView x_prev) const;

  LinearGaussianModel model_;
  Gaussian prior_, process_, measurement_;
};

struct LgssParameters {
  double a = 0.2;
  double q = 0.3;
  double r = 1.0;
  double m1 = 0.0;
  double p1 = 0.1;
  std::size_t horizon = 80;
  // u_{t+1} = pole * u_t + gain * eps_t, u_1 = 0
  double input_pole = 0.9;
  double input_gain = 0.1;
};

struct LgssInstance {
  std::shared_ptr<const LinearGaussianSsm> ssm;
  LinearGaussianModel oracle;
  Trajectory truth;
};

/// Low-pass filtered white noise of length T.
[[nodiscard]] Eigen::VectorXd lowpass_inputs(std::size_t horizon, double pole, double gain,
                                             Rng& rng);

/// Simulates the scalar model x_{t+1} = a x_t + u_t + w_t, y_t = x_t + e_t and
/// returns both the generic and the oracle view of the same data.
[[nodiscard]] LgssInstance lgss_model(const RandomSource& seed, const LgssParameters& params = {});

/// Builds the scalar LinearGaussianModel for given inputs and observations.
[[nodiscard]] LinearGaussianModel scalar_lgss(const LgssParameters& params,
                                              const Eigen::VectorXd& inputs,
                                              const Eigen::VectorXd& observations);

}  // namespace smcs::models
