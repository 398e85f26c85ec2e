#include "smcs/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace smcs {

namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& P) { return 0.5 * (P + P.transpose()); }

void require_psd(const Eigen::MatrixXd& P, const char* name) {
  if (P.rows() != P.cols()) throw OracleError(std::string(name) + " is not square");
  const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw OracleError(std::string(name) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(P));
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw OracleError(std::string(name) + " is not positive semidefinite");
  }
}

// Symmetric square root for sampling from possibly singular covariances.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& P) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(P));
  const Eigen::VectorXd d = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::VectorXd draw_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                              Rng& rng) {
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return mean + psd_sqrt(cov) * z;
}

}  // namespace

Eigen::VectorXd LinearGaussianModel::input_effect(std::size_t t) const {
  if (inputs.cols() == 0 || B.cols() == 0) return Eigen::VectorXd::Zero(A.rows());
  return B * inputs.row(static_cast<Eigen::Index>(t - 1)).transpose();
}

void LinearGaussianModel::validate() const {
  const auto n = A.rows();
  if (A.cols() != n || Q.rows() != n || P1.rows() != n || m1.size() != n || C.cols() != n) {
    throw OracleError("linear-Gaussian model: inconsistent state dimension");
  }
  if (R.rows() != C.rows() || observations.cols() != C.rows()) {
    throw OracleError("linear-Gaussian model: inconsistent observation dimension");
  }
  if (inputs.cols() > 0 && (B.cols() != inputs.cols() || B.rows() != n ||
                            inputs.rows() < observations.rows())) {
    throw OracleError("linear-Gaussian model: inconsistent input dimension");
  }
  if (observations.rows() < 1) throw OracleError("linear-Gaussian model: no observations");
  require_psd(Q, "Q");
  require_psd(R, "R");
  require_psd(P1, "P1");
}

KalmanResult kalman_filter(const LinearGaussianModel& model) {
  model.validate();
  const std::size_t T = model.horizon();
  const auto n = model.A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

  KalmanResult out;
  out.filtered.means.reserve(T);
  out.filtered.covariances.reserve(T);
  out.predicted.means.reserve(T);
  out.predicted.covariances.reserve(T);

  Eigen::VectorXd m = model.m1;
  Eigen::MatrixXd P = model.P1;
  for (std::size_t t = 1; t <= T; ++t) {
    out.predicted.means.push_back(m);
    out.predicted.covariances.push_back(P);

    const Eigen::VectorXd y = model.observations.row(static_cast<Eigen::Index>(t - 1)).transpose();
    const Eigen::VectorXd innovation = y - model.C * m;
    const Eigen::MatrixXd S = symmetrize(model.C * P * model.C.transpose() + model.R);
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) {
      throw OracleError("innovation covariance is not invertible at t = " + std::to_string(t));
    }
    const Eigen::MatrixXd K = llt.solve(model.C * P).transpose();
    m = m + K * innovation;
    const Eigen::MatrixXd IKC = I - K * model.C;
    P = symmetrize(IKC * P * IKC.transpose() + K * model.R * K.transpose());

    const Eigen::MatrixXd L = llt.matrixL();
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    const double quad = innovation.dot(llt.solve(innovation));
    out.log_likelihood += -0.5 * (static_cast<double>(y.size()) *
                                      std::log(2.0 * std::numbers::pi) +
                                  logdet + quad);

    out.filtered.means.push_back(m);
    out.filtered.covariances.push_back(P);

    if (t < T) {
      m = model.A * m + model.input_effect(t);
      P = symmetrize(model.A * P * model.A.transpose() + model.Q);
    }
  }
  return out;
}

namespace {

// Smoother gain G_t = P_f,t A^T P_p,t+1^{-1}.
Eigen::MatrixXd smoother_gain(const LinearGaussianModel& model, const KalmanResult& kf,
                              std::size_t t) {
  const Eigen::MatrixXd& Pp = kf.predicted.covariances[t];
  Eigen::LLT<Eigen::MatrixXd> llt(Pp);
  if (llt.info() != Eigen::Success) {
    throw OracleError("predicted covariance is singular at t = " + std::to_string(t + 1));
  }
  return llt.solve(model.A * kf.filtered.covariances[t - 1]).transpose();
}

}  // namespace

GaussianBelief rts_smoother(const LinearGaussianModel& model, const KalmanResult& kf) {
  const std::size_t T = model.horizon();
  GaussianBelief out = kf.filtered;
  for (std::size_t t = T - 1; t >= 1; --t) {
    const Eigen::MatrixXd G = smoother_gain(model, kf, t);
    out.means[t - 1] = kf.filtered.means[t - 1] + G * (out.means[t] - kf.predicted.means[t]);
    out.covariances[t - 1] =
        symmetrize(kf.filtered.covariances[t - 1] +
                   G * (out.covariances[t] - kf.predicted.covariances[t]) * G.transpose());
  }
  return out;
}

GaussianBelief rts_smoother(const LinearGaussianModel& model) {
  return rts_smoother(model, kalman_filter(model));
}

Trajectory rts_joint_sample(const LinearGaussianModel& model, const KalmanResult& kf,
                            Rng& rng) {
  const std::size_t T = model.horizon();
  const std::size_t n = model.state_dim();
  Trajectory path(T, n);
  Eigen::VectorXd x = draw_gaussian(kf.filtered.means[T - 1], kf.filtered.covariances[T - 1], rng);
  Eigen::Map<Eigen::VectorXd>(path.state(T).data(), static_cast<Eigen::Index>(n)) = x;
  for (std::size_t t = T - 1; t >= 1; --t) {
    const Eigen::MatrixXd G = smoother_gain(model, kf, t);
    const Eigen::VectorXd mean =
        kf.filtered.means[t - 1] + G * (x - kf.predicted.means[t]);
    const Eigen::MatrixXd cov =
        kf.filtered.covariances[t - 1] - G * kf.predicted.covariances[t] * G.transpose();
    x = draw_gaussian(mean, cov, rng);
    Eigen::Map<Eigen::VectorXd>(path.state(t).data(), static_cast<Eigen::Index>(n)) = x;
  }
  return path;
}

Trajectory rts_joint_sample(const LinearGaussianModel& model, const RandomSource& rng) {
  const auto kf = kalman_filter(model);
  Rng gen = rng.rng();
  return rts_joint_sample(model, kf, gen);
}

void DiscreteHMM::validate() const {
  const auto S = initial.size();
  if (S < 1 || transition.rows() != S || transition.cols() != S || emission_loglik.cols() != S) {
    throw OracleError("discrete HMM: inconsistent state count");
  }
  if (emission_loglik.rows() < 1) throw OracleError("discrete HMM: empty horizon");
  if ((initial.array() < 0.0).any() || std::abs(initial.sum() - 1.0) > 1e-12) {
    throw OracleError("discrete HMM: initial distribution is not a probability vector");
  }
  for (Eigen::Index i = 0; i < S; ++i) {
    if ((transition.row(i).array() < 0.0).any() ||
        std::abs(transition.row(i).sum() - 1.0) > 1e-12) {
      throw OracleError("discrete HMM: transition matrix is not row-stochastic");
    }
  }
  if (emission_loglik.array().isNaN().any()) throw OracleError("discrete HMM: NaN emission");
}

Eigen::MatrixXd hmm_forward_backward(const DiscreteHMM& model) {
  model.validate();
  const auto T = static_cast<Eigen::Index>(model.horizon());
  const auto S = static_cast<Eigen::Index>(model.states());

  // Scaled emission likelihoods; the per-row scale cancels on normalization.
  Eigen::MatrixXd lik(T, S);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double top = model.emission_loglik.row(t).maxCoeff();
    if (top == -INFINITY) {
      throw OracleError("zero total likelihood at t = " + std::to_string(t + 1));
    }
    lik.row(t) = (model.emission_loglik.row(t).array() - top).exp();
  }

  Eigen::MatrixXd alpha(T, S);
  for (Eigen::Index t = 0; t < T; ++t) {
    Eigen::RowVectorXd a = (t == 0) ? Eigen::RowVectorXd(model.initial.transpose())
                                    : Eigen::RowVectorXd(alpha.row(t - 1) * model.transition);
    a = a.cwiseProduct(lik.row(t));
    const double total = a.sum();
    if (!(total > 0.0)) throw OracleError("zero total likelihood at t = " + std::to_string(t + 1));
    alpha.row(t) = a / total;
  }

  Eigen::MatrixXd marginals(T, S);
  Eigen::VectorXd beta = Eigen::VectorXd::Ones(S);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    if (t < T - 1) {
      beta = model.transition * lik.row(t + 1).transpose().cwiseProduct(beta);
      beta /= beta.sum();
    }
    Eigen::RowVectorXd g = alpha.row(t).cwiseProduct(beta.transpose());
    marginals.row(t) = g / g.sum();
  }
  return marginals;
}

}  // namespace smcs
