#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "smcs/model.hpp"
#include "smcs/models/linear_gaussian.hpp"

namespace toy {

inline double normal_logpdf(double x, double mean, double var) {
  return -0.5 * (x - mean) * (x - mean) / var - 0.5 * std::log(2.0 * std::numbers::pi * var);
}

// x_1 = 0, x_t = x_{t-1} + step, flat likelihood.
class Drift final : public smcs::StateSpaceModel {
 public:
  Drift(std::size_t horizon, double step) : horizon_(horizon), step_(step) {}
  std::size_t state_dim() const override { return 1; }
  std::size_t horizon() const override { return horizon_; }
  void sample_initial(smcs::Rng&, smcs::StateView x) const override { x[0] = 0.0; }
  double log_initial(smcs::ConstStateView x) const override {
    return x[0] == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  void sample_transition(std::size_t, smcs::ConstStateView xp, smcs::Rng&,
                         smcs::StateView x) const override {
    x[0] = xp[0] + step_;
  }
  double log_transition(std::size_t, smcs::ConstStateView xp,
                        smcs::ConstStateView x) const override {
    return x[0] == xp[0] + step_ ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  double log_observation(std::size_t, smcs::ConstStateView) const override { return 0.0; }
  void initial_mean(smcs::StateView x) const override { x[0] = 0.0; }
  void mean_transition(std::size_t, smcs::ConstStateView xp, smcs::StateView x) const override {
    x[0] = xp[0] + step_;
  }

 private:
  std::size_t horizon_;
  double step_;
};

// x_t ~ N(0, 1) i.i.d., y_t = x_t + N(0, 1) with y_t = sin(t). Optionally
// zero likelihood for negative states.
class Iid final : public smcs::StateSpaceModel {
 public:
  explicit Iid(std::size_t horizon, bool positive_only = false)
      : horizon_(horizon), positive_only_(positive_only) {}
  std::size_t state_dim() const override { return 1; }
  std::size_t horizon() const override { return horizon_; }
  void sample_initial(smcs::Rng& rng, smcs::StateView x) const override { x[0] = rng.normal(); }
  double log_initial(smcs::ConstStateView x) const override { return normal_logpdf(x[0], 0, 1); }
  void sample_transition(std::size_t, smcs::ConstStateView, smcs::Rng& rng,
                         smcs::StateView x) const override {
    x[0] = rng.normal();
  }
  double log_transition(std::size_t, smcs::ConstStateView, smcs::ConstStateView x) const override {
    return normal_logpdf(x[0], 0, 1);
  }
  double log_observation(std::size_t t, smcs::ConstStateView x) const override {
    if (positive_only_ && x[0] < 0.0) return -std::numeric_limits<double>::infinity();
    return normal_logpdf(std::sin(static_cast<double>(t)), x[0], 1.0);
  }
  void initial_mean(smcs::StateView x) const override { x[0] = 0.0; }
  void mean_transition(std::size_t, smcs::ConstStateView, smcs::StateView x) const override {
    x[0] = 0.0;
  }

 private:
  std::size_t horizon_;
  bool positive_only_;
};

// Same as Iid but with an explicit (non-bootstrap) proposal equal to f.
class ExplicitProposal final : public smcs::StateSpaceModel {
 public:
  explicit ExplicitProposal(std::size_t horizon) : base_(horizon) {}
  std::size_t state_dim() const override { return 1; }
  std::size_t horizon() const override { return base_.horizon(); }
  void sample_initial(smcs::Rng& rng, smcs::StateView x) const override {
    base_.sample_initial(rng, x);
  }
  double log_initial(smcs::ConstStateView x) const override { return base_.log_initial(x); }
  void sample_transition(std::size_t t, smcs::ConstStateView xp, smcs::Rng& rng,
                         smcs::StateView x) const override {
    base_.sample_transition(t, xp, rng, x);
  }
  double log_transition(std::size_t t, smcs::ConstStateView xp,
                        smcs::ConstStateView x) const override {
    return base_.log_transition(t, xp, x);
  }
  double log_observation(std::size_t t, smcs::ConstStateView x) const override {
    return base_.log_observation(t, x);
  }
  bool bootstrap_proposal() const override { return false; }
  double log_initial_proposal(smcs::ConstStateView x) const override {
    return normal_logpdf(x[0], 0, 1);
  }
  double log_proposal(std::size_t, smcs::ConstStateView, smcs::ConstStateView x) const override {
    return normal_logpdf(x[0], 0, 1);
  }
  void initial_mean(smcs::StateView x) const override { x[0] = 0.0; }
  void mean_transition(std::size_t, smcs::ConstStateView, smcs::StateView x) const override {
    x[0] = 0.0;
  }

 private:
  Iid base_;
};

// Scalar LGSS instance with explicit inputs and observations.
inline smcs::models::LinearGaussianSsm scalar(const std::vector<double>& y,
                                              const std::vector<double>& u,
                                              smcs::models::LgssParameters p = {}) {
  p.horizon = y.size();
  Eigen::VectorXd yy = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  Eigen::VectorXd uu = Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
  return smcs::models::LinearGaussianSsm(smcs::models::scalar_lgss(p, uu, yy));
}

}  // namespace toy
