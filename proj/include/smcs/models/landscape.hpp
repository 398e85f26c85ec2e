#pragma once

// One-dimensional random walk observed through a tabulated likelihood surface
// over (t, x) with two ridges. Both ridges leave x = 0 at t = 0. The right
// ridge is slightly more likely until it is cut by a deep valley around
// t = 70; the left ridge continues to the end of the horizon. A filter is
// drawn to the right ridge, the smoothing distribution is on the left one.

#include <cstddef>
#include <filesystem>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "smcs/model.hpp"

namespace smcs::models {

struct LandscapeParameters {
  double x_min = -20.0;
  double x_max = 20.0;
  double dx = 0.1;
  std::size_t horizon = 100;   // time grid 0..horizon
  double sigma = 1.0;          // random-walk step std
  double ridge_offset = 8.0;   // asymptotic |center| of both ridges
  double ramp = 15.0;          // center(t) = +-offset * (1 - exp(-t / ramp))
  double ridge_width = 1.5;    // Gaussian profile std across a ridge
  double left_penalty = 0.06;  // log-height of the left ridge below the right one
  double valley_start = 68.0;  // right ridge cut on [valley_start, valley_end]
  double valley_end = 74.0;
  double valley_level = -12.0;
  double floor_level = -12.0;  // log g away from both ridges
};

/// Tabulated log g(y_t | x) on a (state x time) grid.
struct LandscapeGrid {
  std::vector<double> x;  // row coordinates, increasing, uniform
  std::vector<double> t;  // column coordinates, increasing, uniform
  Eigen::MatrixXd log_lik;  // x.size() x t.size()

  /// Bilinear interpolation, clamped to the grid boundary.
  [[nodiscard]] double at(double time, double state) const;
};

[[nodiscard]] double left_ridge_center(const LandscapeParameters& p, double t);
[[nodiscard]] double right_ridge_center(const LandscapeParameters& p, double t);

[[nodiscard]] LandscapeGrid build_landscape_grid(const LandscapeParameters& p);

/// Plain-text grid file: header line "smcs-landscape v1 <rows> <cols>", then a
/// line with the time coordinates, then one line per state row holding the
/// row coordinate followed by its values.
void write_landscape_grid(const std::filesystem::path& path, const LandscapeGrid& grid);
[[nodiscard]] LandscapeGrid read_landscape_grid(const std::filesystem::path& path);

class LandscapeModel final : public StateSpaceModel {
 public:
  LandscapeModel(LandscapeGrid grid, double sigma, std::size_t horizon);

  [[nodiscard]] std::size_t state_dim() const override { return 1; }
  [[nodiscard]] std::size_t horizon() const override { return horizon_; }

  // x_0 = 0, so x_1 ~ N(0, sigma^2).
  void sample_initial(Rng& rng, StateView x) const override;
  [[nodiscard]] double log_initial(ConstStateView x) const override;
  void sample_transition(std::size_t t, ConstStateView x_prev, Rng& rng,
                         StateView x) const override;
  [[nodiscard]] double log_transition(std::size_t t, ConstStateView x_prev,
                                      ConstStateView x) const override;
  [[nodiscard]] double log_observation(std::size_t t, ConstStateView x) const override;
  void initial_mean(StateView x) const override { x[0] = 0.0; }
  void mean_transition(std::size_t, ConstStateView x_prev, StateView x) const override {
    x[0] = x_prev[0];
  }

  [[nodiscard]] const LandscapeGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] double sigma() const noexcept { return sigma_; }
  /// sup of g over the grid (finite by construction).
  [[nodiscard]] double max_log_likelihood() const { return grid_.log_lik.maxCoeff(); }

 private:
  LandscapeGrid grid_;
  double sigma_;
  std::size_t horizon_;
};

[[nodiscard]] std::shared_ptr<LandscapeModel> landscape_model(const LandscapeParameters& p);

}  // namespace smcs::models
