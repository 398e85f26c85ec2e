#include "smcs/models/hmm.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace smcs::models {

DiscreteHmmSsm::DiscreteHmmSsm(DiscreteHMM hmm) : hmm_(std::move(hmm)) {
  hmm_.validate();
  log_transition_ = hmm_.transition.array().log();
  log_initial_ = hmm_.initial.array().log();
}

Eigen::Index DiscreteHmmSsm::state_of(double x) const {
  const auto s = std::llround(x);
  if (s < 0 || s >= static_cast<long long>(hmm_.states()) || static_cast<double>(s) != x) {
    return -1;
  }
  return static_cast<Eigen::Index>(s);
}

namespace {

double draw(const Eigen::Ref<const Eigen::RowVectorXd>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index s = 0; s < probs.size(); ++s) {
    acc += probs(s);
    if (u < acc) return static_cast<double>(s);
  }
  Eigen::Index last = probs.size() - 1;
  while (last > 0 && probs(last) == 0.0) --last;
  return static_cast<double>(last);
}

}  // namespace

void DiscreteHmmSsm::sample_initial(Rng& rng, StateView x) const {
  x[0] = draw(hmm_.initial.transpose(), rng);
}

double DiscreteHmmSsm::log_initial(ConstStateView x) const {
  const auto s = state_of(x[0]);
  return s < 0 ? -INFINITY : log_initial_(s);
}

void DiscreteHmmSsm::sample_transition(std::size_t, ConstStateView x_prev, Rng& rng,
                                       StateView x) const {
  const auto s = state_of(x_prev[0]);
  if (s < 0) throw ModelError("HMM: previous state is not a valid state index");
  x[0] = draw(hmm_.transition.row(s), rng);
}

double DiscreteHmmSsm::log_transition(std::size_t, ConstStateView x_prev,
                                      ConstStateView x) const {
  const auto a = state_of(x_prev[0]);
  const auto b = state_of(x[0]);
  if (a < 0 || b < 0) return -INFINITY;
  return log_transition_(a, b);
}

double DiscreteHmmSsm::log_observation(std::size_t t, ConstStateView x) const {
  const auto s = state_of(x[0]);
  if (s < 0) return -INFINITY;
  return hmm_.emission_loglik(static_cast<Eigen::Index>(t - 1), s);
}

// Most likely state under the prior and under each transition row.
void DiscreteHmmSsm::initial_mean(StateView x) const {
  Eigen::Index s = 0;
  hmm_.initial.maxCoeff(&s);
  x[0] = static_cast<double>(s);
}

void DiscreteHmmSsm::mean_transition(std::size_t, ConstStateView x_prev, StateView x) const {
  const auto a = state_of(x_prev[0]);
  Eigen::Index s = 0;
  hmm_.transition.row(a < 0 ? 0 : a).maxCoeff(&s);
  x[0] = static_cast<double>(s);
}

HmmInstance hmm_model(const RandomSource& seed, const HmmParameters& p) {
  if (p.states < 2 || p.horizon < 1) throw std::invalid_argument("hmm: need S >= 2 and T >= 1");
  const auto S = static_cast<Eigen::Index>(p.states);
  const auto T = static_cast<Eigen::Index>(p.horizon);
  DiscreteHMM hmm;
  hmm.initial = Eigen::VectorXd::Constant(S, 1.0 / static_cast<double>(S));
  hmm.transition =
      Eigen::MatrixXd::Constant(S, S, (1.0 - p.stay) / static_cast<double>(S - 1));
  hmm.transition.diagonal().setConstant(p.stay);
  // Exact row sums.
  for (Eigen::Index i = 0; i < S; ++i) {
    hmm.transition(i, i) = 1.0 - (hmm.transition.row(i).sum() - hmm.transition(i, i));
  }
  hmm.emission_loglik = Eigen::MatrixXd::Zero(T, S);
  if (!p.uniform_emissions) {
    Rng rng = seed.rng(1);
    double state = draw(hmm.initial.transpose(), rng);
    for (Eigen::Index t = 0; t < T; ++t) {
      if (t > 0) state = draw(hmm.transition.row(static_cast<Eigen::Index>(state)), rng);
      const double y = state + p.emission_sd * rng.normal();
      for (Eigen::Index s = 0; s < S; ++s) {
        const double z = (y - static_cast<double>(s)) / p.emission_sd;
        hmm.emission_loglik(t, s) =
            -0.5 * z * z - std::log(p.emission_sd * std::sqrt(2.0 * std::numbers::pi));
      }
    }
  }
  HmmInstance out;
  out.oracle = hmm;
  out.ssm = std::make_shared<DiscreteHmmSsm>(std::move(hmm));
  return out;
}

}  // namespace smcs::models
