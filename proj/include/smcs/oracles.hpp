#pragma once

// Exact reference solvers: Kalman filter / RTS smoother (with joint posterior
// sampling) for linear-Gaussian models and forward-backward smoothing for
// finite-state hidden Markov models.

#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "smcs/model.hpp"
#include "smcs/random.hpp"

namespace smcs {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// x_{t+1} = A x_t + B u_t + w_t,  w_t ~ N(0, Q)
/// y_t     = C x_t + e_t,          e_t ~ N(0, R)
/// x_1 ~ N(m1, P1). Row t-1 of `inputs` / `observations` holds u_t / y_t.
struct LinearGaussianModel {
  Eigen::MatrixXd A, B, Q, C, R;
  Eigen::VectorXd m1;
  Eigen::MatrixXd P1;
  Eigen::MatrixXd inputs;        // T x n_u (may have zero columns)
  Eigen::MatrixXd observations;  // T x n_y

  [[nodiscard]] std::size_t state_dim() const { return static_cast<std::size_t>(A.rows()); }
  [[nodiscard]] std::size_t horizon() const {
    return static_cast<std::size_t>(observations.rows());
  }
  /// B u_t, zero when the model has no inputs.
  [[nodiscard]] Eigen::VectorXd input_effect(std::size_t t) const;

  /// Throws OracleError on inconsistent shapes or indefinite covariances.
  void validate() const;
};

struct GaussianBelief {
  std::vector<Eigen::VectorXd> means;        // per t
  std::vector<Eigen::MatrixXd> covariances;  // per t
};

/// Filtered beliefs plus the one-step predictions the smoother needs.
struct KalmanResult {
  GaussianBelief filtered;
  GaussianBelief predicted;  // predicted[t-1] is p(x_t | y_{1:t-1}); predicted[0] = prior
  double log_likelihood = 0.0;
};

[[nodiscard]] KalmanResult kalman_filter(const LinearGaussianModel& model);
[[nodiscard]] GaussianBelief rts_smoother(const LinearGaussianModel& model);
[[nodiscard]] GaussianBelief rts_smoother(const LinearGaussianModel& model,
                                          const KalmanResult& filtered);

/// Exact draw from p(x_{1:T} | y_{1:T}) by backward sampling.
[[nodiscard]] Trajectory rts_joint_sample(const LinearGaussianModel& model,
                                          const KalmanResult& filtered, Rng& rng);
[[nodiscard]] Trajectory rts_joint_sample(const LinearGaussianModel& model,
                                          const RandomSource& rng);

/// Finite-state HMM with per-time emission log-likelihoods.
struct DiscreteHMM {
  Eigen::VectorXd initial;         // S
  Eigen::MatrixXd transition;      // S x S, row-stochastic
  Eigen::MatrixXd emission_loglik; // T x S

  [[nodiscard]] std::size_t states() const { return static_cast<std::size_t>(initial.size()); }
  [[nodiscard]] std::size_t horizon() const {
    return static_cast<std::size_t>(emission_loglik.rows());
  }
  void validate() const;
};

/// Exact smoothing marginals, T x S, rows summing to one.
[[nodiscard]] Eigen::MatrixXd hmm_forward_backward(const DiscreteHMM& model);

}  // namespace smcs
