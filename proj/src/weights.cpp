#include "smcs/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace smcs {

namespace {

double checked(double v, const char* what) {
  if (std::isnan(v)) throw ModelError(std::string(what) + " is NaN");
  return v;
}

// -inf terms win over everything; +inf - +inf style cancellations are errors.
double combine_terms(double lg, double lf, double lq) {
  if (lg == -INFINITY || lf == -INFINITY) return -INFINITY;
  if (lq == -INFINITY) throw ModelError("proposal density is zero where a particle was drawn");
  return checked(lg + lf - lq, "log-weight");
}

}  // namespace

double log_weight_initial(const StateSpaceModel& model, ConstStateView x1) {
  const double lg = checked(model.log_observation(1, x1), "observation log-density");
  if (model.bootstrap_proposal()) return lg;
  const double lmu = checked(model.log_initial(x1), "initial log-density");
  const double lq = checked(model.log_initial_proposal(x1), "initial proposal log-density");
  return combine_terms(lg, lmu, lq);
}

double log_weight_step(const StateSpaceModel& model, std::size_t t, ConstStateView x_prev,
                       ConstStateView x_t) {
  const double lg = checked(model.log_observation(t, x_t), "observation log-density");
  if (model.bootstrap_proposal()) return lg;
  const double lf = checked(model.log_transition(t, x_prev, x_t), "transition log-density");
  const double lq = checked(model.log_proposal(t, x_prev, x_t), "proposal log-density");
  return combine_terms(lg, lf, lq);
}

void normalize_weights(std::span<const double> log_weights, std::span<double> out) {
  double top = -INFINITY;
  for (double lw : log_weights) {
    if (std::isnan(lw)) throw ModelError("log-weight is NaN");
    if (lw == INFINITY) throw ModelError("log-weight is +inf");
    top = std::max(top, lw);
  }
  if (top == -INFINITY) throw DegenerateWeightsError("all particle weights are zero");
  double total = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    out[i] = std::exp(log_weights[i] - top);
    total += out[i];
  }
  for (double& p : out) p /= total;
}

std::vector<double> normalize_weights(std::span<const double> log_weights) {
  std::vector<double> out(log_weights.size());
  normalize_weights(log_weights, out);
  return out;
}

double log_sum_exp(std::span<const double> log_weights) {
  double top = -INFINITY;
  for (double lw : log_weights) top = std::max(top, lw);
  if (top == -INFINITY) return -INFINITY;
  double total = 0.0;
  for (double lw : log_weights) total += std::exp(lw - top);
  return top + std::log(total);
}

double effective_sample_size(std::span<const double> probabilities) {
  double s = 0.0;
  for (double p : probabilities) s += p * p;
  return s > 0.0 ? 1.0 / s : 0.0;
}

}  // namespace smcs
