#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "smcs/random.hpp"

namespace smcs::models {

/// Asymmetric time-of-arrival error: (2 - alpha) N(0, sigma^2) for e < 0 and
/// alpha Cauchy(0, gamma) for e >= 0. Each half carries mass (2 - alpha) / 2
/// and alpha / 2. The Cauchy branch is closed at e = 0, so the density jumps
/// there unless the two branch values happen to coincide. Units: seconds.
struct UwbErrorModel {
  double alpha = 0.2;
  double sigma = 0.3e-9;
  double gamma = 1.0e-9;

  void validate() const;
  [[nodiscard]] double log_density(double e) const;
  [[nodiscard]] double density(double e) const;
  [[nodiscard]] double sample(Rng& rng) const;
};

struct UwbScene {
  std::vector<Eigen::Vector3d> receivers;  // navigation frame, m
  double c = 299792458.0;                  // m/s
  double imu_rate = 120.0;                 // Hz
  double uwb_rate = 10.0;                  // Hz
  std::vector<double> pulse_times;         // s, one per UWB sample; unknown to the estimator

  void validate() const;
  [[nodiscard]] double sample_period() const { return 1.0 / imu_rate; }
  /// IMU steps between consecutive UWB samples.
  [[nodiscard]] std::size_t imu_per_uwb() const;
  /// Largest distance between two receivers.
  [[nodiscard]] double extent() const;

  /// Ten receivers spread over the walls and ceiling of a 10 m x 8 m x 3 m room.
  [[nodiscard]] static UwbScene default_scene();
};

/// sum_m log p_e(y_m - tau - |r_m - p| / c).
[[nodiscard]] double uwb_loglik(const UwbScene& scene, const UwbErrorModel& err,
                                const Eigen::Vector3d& p, double tau,
                                std::span<const double> arrivals);

struct ProfiledPulse {
  double tau = 0.0;
  double loglik = 0.0;
};

/// Maximizes uwb_loglik over the unknown transmit time tau: coarse scan of
/// the admissible window followed by golden-section refinement.
[[nodiscard]] ProfiledPulse profile_pulse_time(const UwbScene& scene, const UwbErrorModel& err,
                                               const Eigen::Vector3d& p,
                                               std::span<const double> arrivals);

}  // namespace smcs::models
