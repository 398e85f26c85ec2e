#pragma once

// Inertial/UWB positioning model. State (10): position p (m), velocity v
// (m/s), orientation q^{nb} (unit quaternion, scalar-first), all in the
// navigation frame. Accelerometer and gyroscope readings drive the dynamics;
// UWB arrival times are the observations, present every imu_per_uwb() steps.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "smcs/model.hpp"
#include "smcs/models/quaternion.hpp"
#include "smcs/models/uwb.hpp"
#include "smcs/random.hpp"

namespace smcs::models {

inline constexpr std::size_t kImuUwbStateDim = 10;
inline const Eigen::Vector3d kGravity{0.0, 0.0, -9.81};

struct ImuNoise {
  double sigma_acc = 0.05;    // m/s^2
  double sigma_gyro = 0.005;  // rad/s
  Eigen::Vector3d bias_acc{0.01, -0.02, 0.015};
  Eigen::Vector3d bias_gyro{0.001, 0.002, -0.001};
  /// Extra per-step random-walk noise on position (m) and velocity (m/s),
  /// added to the accelerometer-driven update. sigma_pos = 0 makes the
  /// transition density singular. The simulated truth never uses these; the
  /// default on position widens the smoother's intervals enough to cover a
  /// 20 s walk at N = 100, K = 200.
  double sigma_pos = 0.1;
  double sigma_vel = 0.0;
};

/// Readings at 1-based IMU step t are stored in row t - 1. The transition
/// into x_t uses the readings of step t - 1.
struct ImuReadings {
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> acc;   // m/s^2, body frame
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> gyro;  // rad/s, body frame
};

struct UwbSamples {
  std::vector<std::size_t> step;  // 1-based IMU step of each sample, increasing
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> arrivals;  // s
};

struct InitialPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Quaternion orientation = Quaternion::Identity();
  double sd_position = 0.05;  // m
  double sd_velocity = 0.005;  // m/s
  double sd_angle = 0.002;     // rad, rotation vector applied on the right
};

class ImuUwbModel final : public StateSpaceModel {
 public:
  ImuUwbModel(UwbScene scene, UwbErrorModel error, ImuReadings imu, UwbSamples uwb,
              ImuNoise noise, InitialPose prior);

  [[nodiscard]] std::size_t state_dim() const override { return kImuUwbStateDim; }
  [[nodiscard]] std::size_t horizon() const override { return horizon_; }

  void sample_initial(Rng& rng, StateView x) const override;
  [[nodiscard]] double log_initial(ConstStateView x) const override;
  void sample_transition(std::size_t t, ConstStateView x_prev, Rng& rng,
                         StateView x) const override;
  [[nodiscard]] double log_transition(std::size_t t, ConstStateView x_prev,
                                      ConstStateView x) const override;
  [[nodiscard]] double log_observation(std::size_t t, ConstStateView x) const override;
  void initial_mean(StateView x) const override;
  void mean_transition(std::size_t t, ConstStateView x_prev, StateView x) const override;

  /// Index into the UWB samples for step t, or -1 when there is none.
  [[nodiscard]] std::ptrdiff_t uwb_index(std::size_t t) const { return uwb_at_[t - 1]; }

  [[nodiscard]] const UwbScene& scene() const noexcept { return scene_; }
  [[nodiscard]] const UwbErrorModel& error_model() const noexcept { return error_; }
  [[nodiscard]] const ImuNoise& noise() const noexcept { return noise_; }

 private:
  struct StepNoise {
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    Eigen::Vector3d gyro = Eigen::Vector3d::Zero();
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    Eigen::Vector3d vel = Eigen::Vector3d::Zero();
  };
  void propagate(std::size_t t, ConstStateView x_prev, const StepNoise& e, StateView x) const;

  UwbScene scene_;
  UwbErrorModel error_;
  ImuReadings imu_;
  UwbSamples uwb_;
  ImuNoise noise_;
  InitialPose prior_;
  std::size_t horizon_;
  double ts_;
  std::vector<std::ptrdiff_t> uwb_at_;
  // Per-axis covariance of the (velocity, position) residuals, inverse and
  // log-normalizer.
  Eigen::Matrix2d kin_inv_;
  double kin_log_norm_ = 0.0;
};

struct WalkOptions {
  double duration = 20.0;  // s
  ImuNoise noise;
  UwbErrorModel error;
  bool uwb_noise = true;   // false: arrivals are exact ranges plus tau
  double max_pulse_jitter = 1e-4;  // tau = step time + U(0, jitter), s
  Eigen::Vector3d center{5.0, 4.0, 1.2};
  Eigen::Vector2d half_extent{3.0, 2.0};  // figure-eight half widths (x, y), m
  double loop_rate = 0.3;   // rad/s of the figure-eight parameter
  double ramp_time = 2.0;   // s, smooth start from standstill
};

struct UwbDataset {
  UwbScene scene;  // pulse_times filled in
  ImuReadings imu;
  UwbSamples uwb;
  Trajectory truth;
  InitialPose start;
  WalkOptions options;
};

/// Smooth figure-eight walk starting at rest. Truth follows the model
/// dynamics driven by noise-free accelerations and angular rates; readings
/// add Gaussian noise and constant biases.
[[nodiscard]] UwbDataset generate_uwb_walk(const UwbScene& scene, const WalkOptions& options,
                                           const RandomSource& rng);

[[nodiscard]] std::shared_ptr<ImuUwbModel> imu_uwb_model(const UwbDataset& data);

/// truth.csv, imu.csv, uwb.csv and scene.json in `dir`.
void write_uwb_dataset(const std::filesystem::path& dir, const UwbDataset& data,
                       std::uint64_t seed);

}  // namespace smcs::models
