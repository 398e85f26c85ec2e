#include "smcs/models/linear_gaussian.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace smcs::models {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(ConstStateView x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

}  // namespace

LinearGaussianSsm::Gaussian LinearGaussianSsm::factor(const Eigen::MatrixXd& cov,
                                                      const char* name) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw OracleError(std::string(name) + " must be positive definite for density evaluation");
  }
  Gaussian g;
  g.lower = llt.matrixL();
  const double logdet = 2.0 * g.lower.diagonal().array().log().sum();
  g.log_norm =
      -0.5 * (static_cast<double>(cov.rows()) * std::log(2.0 * std::numbers::pi) + logdet);
  return g;
}

LinearGaussianSsm::LinearGaussianSsm(LinearGaussianModel model) : model_(std::move(model)) {
  model_.validate();
  if (model_.A.rows() > kMaxLinearDim || model_.C.rows() > kMaxLinearDim) {
    throw OracleError("LinearGaussianSsm: dimension exceeds kMaxLinearDim");
  }
  prior_ = factor(model_.P1, "P1");
  process_ = factor(model_.Q, "Q");
  measurement_ = factor(model_.R, "R");
}

template <class Vec>
double LinearGaussianSsm::log_density(const Gaussian& g, const Vec& residual) const {
  const SmallVec z = g.lower.triangularView<Eigen::Lower>().solve(SmallVec(residual));
  return g.log_norm - 0.5 * z.squaredNorm();
}

LinearGaussianSsm::SmallVec LinearGaussianSsm::transition_mean(std::size_t t,
                                                              ConstStateView x_prev) const {
  SmallVec mean(model_.A.rows());
  mean.noalias() = model_.A * as_vector(x_prev);
  if (model_.inputs.cols() > 0) {
    mean.noalias() += model_.B * model_.inputs.row(static_cast<Eigen::Index>(t - 2)).transpose();
  }
  return mean;
}

void LinearGaussianSsm::sample_initial(Rng& rng, StateView x) const {
  const auto n = static_cast<Eigen::Index>(x.size());
  SmallVec z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
  Eigen::Map<Eigen::VectorXd> out(x.data(), n);
  out = model_.m1;
  out.noalias() += prior_.lower * z;
}

double LinearGaussianSsm::log_initial(ConstStateView x) const {
  return log_density(prior_, as_vector(x) - model_.m1);
}

void LinearGaussianSsm::sample_transition(std::size_t t, ConstStateView x_prev, Rng& rng,
                                          StateView x) const {
  const auto n = static_cast<Eigen::Index>(x.size());
  SmallVec z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
  const SmallVec mean = transition_mean(t, x_prev);
  Eigen::Map<Eigen::VectorXd> out(x.data(), n);
  out = mean;
  out.noalias() += process_.lower * z;
}

double LinearGaussianSsm::log_transition(std::size_t t, ConstStateView x_prev,
                                         ConstStateView x) const {
  const SmallVec mean = transition_mean(t, x_prev);
  return log_density(process_, as_vector(x) - mean);
}

double LinearGaussianSsm::log_observation(std::size_t t, ConstStateView x) const {
  SmallVec residual = model_.observations.row(static_cast<Eigen::Index>(t - 1)).transpose();
  residual.noalias() -= model_.C * as_vector(x);
  return log_density(measurement_, residual);
}

void LinearGaussianSsm::initial_mean(StateView x) const {
  Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) = model_.m1;
}

void LinearGaussianSsm::mean_transition(std::size_t t, ConstStateView x_prev,
                                        StateView x) const {
  Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) =
      model_.A * as_vector(x_prev) + model_.input_effect(t - 1);
}

Eigen::VectorXd lowpass_inputs(std::size_t horizon, double pole, double gain, Rng& rng) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(horizon));
  for (Eigen::Index t = 1; t < u.size(); ++t) u(t) = pole * u(t - 1) + gain * rng.normal();
  return u;
}

LinearGaussianModel scalar_lgss(const LgssParameters& p, const Eigen::VectorXd& inputs,
                                const Eigen::VectorXd& observations) {
  LinearGaussianModel m;
  m.A = Eigen::MatrixXd::Constant(1, 1, p.a);
  m.B = Eigen::MatrixXd::Constant(1, 1, 1.0);
  m.Q = Eigen::MatrixXd::Constant(1, 1, p.q);
  m.C = Eigen::MatrixXd::Constant(1, 1, 1.0);
  m.R = Eigen::MatrixXd::Constant(1, 1, p.r);
  m.m1 = Eigen::VectorXd::Constant(1, p.m1);
  m.P1 = Eigen::MatrixXd::Constant(1, 1, p.p1);
  m.inputs = inputs;
  m.observations = observations;
  return m;
}

LgssInstance lgss_model(const RandomSource& seed, const LgssParameters& p) {
  const std::size_t T = p.horizon;
  Rng input_rng = seed.rng(1);
  Rng state_rng = seed.rng(2);
  Rng obs_rng = seed.rng(3);

  const Eigen::VectorXd u = lowpass_inputs(T, p.input_pole, p.input_gain, input_rng);
  Trajectory truth(T, 1);
  Eigen::VectorXd y(static_cast<Eigen::Index>(T));
  double x = p.m1 + std::sqrt(p.p1) * state_rng.normal();
  for (std::size_t t = 1; t <= T; ++t) {
    if (t > 1) {
      x = p.a * x + u(static_cast<Eigen::Index>(t - 2)) + std::sqrt(p.q) * state_rng.normal();
    }
    truth.state(t)[0] = x;
    y(static_cast<Eigen::Index>(t - 1)) = x + std::sqrt(p.r) * obs_rng.normal();
  }

  LgssInstance out;
  out.oracle = scalar_lgss(p, u, y);
  out.ssm = std::make_shared<LinearGaussianSsm>(out.oracle);
  out.truth = std::move(truth);
  return out;
}

}  // namespace smcs::models
