#include "smcs/models/uwb.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace smcs::models {

void UwbErrorModel::validate() const {
  if (!(alpha >= 0.0 && alpha <= 2.0)) throw std::invalid_argument("UWB error: alpha not in [0,2]");
  if (!(sigma > 0.0) || !(gamma > 0.0)) {
    throw std::invalid_argument("UWB error: sigma and gamma must be positive");
  }
}

double UwbErrorModel::log_density(double e) const {
  if (e < 0.0) {
    const double z = e / sigma;
    return std::log(2.0 - alpha) - 0.5 * z * z - std::log(sigma) -
           0.5 * std::log(2.0 * std::numbers::pi);
  }
  const double z = e / gamma;
  return std::log(alpha) - std::log(std::numbers::pi * gamma) - std::log1p(z * z);
}

double UwbErrorModel::density(double e) const { return std::exp(log_density(e)); }

double UwbErrorModel::sample(Rng& rng) const {
  const double u = rng.uniform();
  if (u < (2.0 - alpha) / 2.0) return -std::abs(sigma * rng.normal());
  // Half-Cauchy by inversion.
  return gamma * std::tan(0.5 * std::numbers::pi * rng.uniform());
}

void UwbScene::validate() const {
  if (receivers.size() < 4) throw std::invalid_argument("UWB scene: need at least 4 receivers");
  if (!(c > 0.0) || !(imu_rate > 0.0) || !(uwb_rate > 0.0)) {
    throw std::invalid_argument("UWB scene: rates and c must be positive");
  }
  const double ratio = imu_rate / uwb_rate;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 * ratio || ratio < 1.0) {
    throw std::invalid_argument("UWB scene: IMU rate must be a multiple of the UWB rate");
  }
  // Non-degenerate geometry: receiver offsets span 3-D.
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& r : receivers) mean += r;
  mean /= static_cast<double>(receivers.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& r : receivers) scatter += (r - mean) * (r - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  if (eig.eigenvalues().minCoeff() < 1e-6) {
    throw std::invalid_argument("UWB scene: receivers are coplanar or collinear");
  }
}

std::size_t UwbScene::imu_per_uwb() const {
  return static_cast<std::size_t>(std::llround(imu_rate / uwb_rate));
}

double UwbScene::extent() const {
  double d = 0.0;
  for (const auto& a : receivers) {
    for (const auto& b : receivers) d = std::max(d, (a - b).norm());
  }
  return d;
}

UwbScene UwbScene::default_scene() {
  UwbScene s;
  s.receivers = {
      {0.0, 0.0, 2.8},  {10.0, 0.0, 2.8}, {10.0, 8.0, 2.8}, {0.0, 8.0, 2.8},
      {5.0, 0.0, 0.5},  {10.0, 4.0, 1.2}, {5.0, 8.0, 0.5},  {0.0, 4.0, 1.2},
      {3.0, 3.0, 3.0},  {7.0, 5.0, 3.0},
  };
  return s;
}

namespace {

constexpr std::size_t kMaxReceivers = 32;
constexpr int kCoarsePoints = 24;
constexpr int kGoldenIterations = 24;

// Log-likelihood in terms of the offset s = tau - ref, with residual
// e_m = offsets[m] - s, offsets[m] = y_m - ref - d_m / c.
double profile_objective(const UwbErrorModel& err, std::span<const double> offsets, double s) {
  double ll = 0.0;
  for (double o : offsets) ll += err.log_density(o - s);
  return ll;
}

}  // namespace

double uwb_loglik(const UwbScene& scene, const UwbErrorModel& err, const Eigen::Vector3d& p,
                  double tau, std::span<const double> arrivals) {
  if (arrivals.size() != scene.receivers.size()) {
    throw std::invalid_argument("uwb_loglik: arrival count does not match receivers");
  }
  double ll = 0.0;
  for (std::size_t m = 0; m < arrivals.size(); ++m) {
    const double e = (arrivals[m] - tau) - (scene.receivers[m] - p).norm() / scene.c;
    ll += err.log_density(e);
  }
  return ll;
}

ProfiledPulse profile_pulse_time(const UwbScene& scene, const UwbErrorModel& err,
                                 const Eigen::Vector3d& p, std::span<const double> arrivals) {
  const std::size_t M = arrivals.size();
  if (M != scene.receivers.size() || M > kMaxReceivers) {
    throw std::invalid_argument("profile_pulse_time: arrival count does not match receivers");
  }
  const double ref = *std::min_element(arrivals.begin(), arrivals.end());
  std::array<double, kMaxReceivers> buf{};
  for (std::size_t m = 0; m < M; ++m) {
    buf[m] = (arrivals[m] - ref) - (scene.receivers[m] - p).norm() / scene.c;
  }
  const std::span<const double> offsets(buf.data(), M);

  // tau lies within the earliest arrival minus the largest range, padded by
  // a few Gaussian widths on both sides.
  const double pad = 5.0 * err.sigma;
  const double lo = -scene.extent() / scene.c - pad;
  const double hi = pad;

  const double step = (hi - lo) / (kCoarsePoints - 1);
  int best = 0;
  double best_val = -INFINITY;
  for (int i = 0; i < kCoarsePoints; ++i) {
    const double v = profile_objective(err, offsets, lo + step * i);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = lo + step * std::max(best - 1, 0);
  double b = lo + step * std::min(best + 1, kCoarsePoints - 1);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = profile_objective(err, offsets, x1);
  double f2 = profile_objective(err, offsets, x2);
  for (int it = 0; it < kGoldenIterations; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = profile_objective(err, offsets, x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = profile_objective(err, offsets, x1);
    }
  }
  ProfiledPulse out;
  double s = f1 > f2 ? x1 : x2;
  out.loglik = std::max(f1, f2);
  if (best_val > out.loglik) {
    s = lo + step * best;
    out.loglik = best_val;
  }
  out.tau = ref + s;
  return out;
}

}  // namespace smcs::models
