#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "smcs/model.hpp"

namespace smcs {

/// log W_1(x_1) = log g(y_1|x_1) + log mu(x_1) - log q_1(x_1|y_1).
///
/// With a bootstrap proposal the prior and proposal terms cancel and only the
/// observation term is evaluated. Returns -inf for zero weight; throws
/// ModelError on NaN.
[[nodiscard]] double log_weight_initial(const StateSpaceModel& model, ConstStateView x1);

/// log W(x_{1:t}) = log g(y_t|x_t) + log f(x_t|x_{t-1}) - log q(x_t|x_{t-1},y_t),
/// for 2 <= t <= T. Same conventions as log_weight_initial.
[[nodiscard]] double log_weight_step(const StateSpaceModel& model, std::size_t t,
                                     ConstStateView x_prev, ConstStateView x_t);

/// Normalized probabilities from log-weights via max subtraction. Throws
/// DegenerateWeightsError when every entry is -inf, ModelError on NaN or +inf.
[[nodiscard]] std::vector<double> normalize_weights(std::span<const double> log_weights);

/// In-place variant writing into `out` (same length as `log_weights`).
void normalize_weights(std::span<const double> log_weights, std::span<double> out);

/// log(sum(exp(log_weights))), -inf for an all -inf input.
[[nodiscard]] double log_sum_exp(std::span<const double> log_weights);

/// Effective sample size 1 / sum(p_i^2) of normalized probabilities.
[[nodiscard]] double effective_sample_size(std::span<const double> probabilities);

}  // namespace smcs
