#include "smcs/models/imu_uwb.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

#include <fmt/format.h>
#include <fmt/os.h>
#include <json.hpp>

namespace smcs::models {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

using Vec3 = Eigen::Vector3d;

double gaussian3_logpdf(const Vec3& r, double sd) {
  return -0.5 * r.squaredNorm() / (sd * sd) - 3.0 * std::log(sd) - 1.5 * kLog2Pi;
}

// log of the Haar-measure factor 2 (1 - cos a) / a^2 of the rotation-vector
// chart at angle a.
double log_haar_factor(double angle) {
  if (angle < 1e-4) return std::log1p(-angle * angle / 12.0);
  return std::log(2.0 * (1.0 - std::cos(angle)) / (angle * angle));
}

Vec3 normal3(Rng& rng) { return {rng.normal(), rng.normal(), rng.normal()}; }

Vec3 read3(ConstStateView x, std::size_t offset) {
  return {x[offset], x[offset + 1], x[offset + 2]};
}

void write3(const Vec3& v, StateView x, std::size_t offset) {
  x[offset] = v.x();
  x[offset + 1] = v.y();
  x[offset + 2] = v.z();
}

Quaternion read_q(ConstStateView x) { return load_quaternion(x.subspan(6, 4)); }

}  // namespace

ImuUwbModel::ImuUwbModel(UwbScene scene, UwbErrorModel error, ImuReadings imu, UwbSamples uwb,
                         ImuNoise noise, InitialPose prior)
    : scene_(std::move(scene)),
      error_(error),
      imu_(std::move(imu)),
      uwb_(std::move(uwb)),
      noise_(std::move(noise)),
      prior_(std::move(prior)),
      horizon_(static_cast<std::size_t>(imu_.acc.rows())),
      ts_(scene_.sample_period()) {
  scene_.validate();
  error_.validate();
  if (horizon_ < 1 || imu_.gyro.rows() != imu_.acc.rows()) {
    throw std::invalid_argument("IMU/UWB model: accelerometer and gyroscope lengths differ");
  }
  if (uwb_.arrivals.rows() != static_cast<Eigen::Index>(uwb_.step.size()) ||
      uwb_.arrivals.cols() != static_cast<Eigen::Index>(scene_.receivers.size())) {
    throw std::invalid_argument("IMU/UWB model: UWB sample shape does not match the scene");
  }
  if (!(noise_.sigma_acc >= 0.0 && noise_.sigma_gyro >= 0.0 && noise_.sigma_pos >= 0.0 &&
        noise_.sigma_vel >= 0.0)) {
    throw std::invalid_argument("IMU/UWB model: negative noise level");
  }
  if (!(prior_.sd_position > 0.0 && prior_.sd_velocity > 0.0 && prior_.sd_angle > 0.0)) {
    throw std::invalid_argument("IMU/UWB model: prior spreads must be positive");
  }
  uwb_at_.assign(horizon_, -1);
  for (std::size_t k = 0; k < uwb_.step.size(); ++k) {
    const std::size_t t = uwb_.step[k];
    if (t < 1 || t > horizon_ || uwb_at_[t - 1] >= 0) {
      throw std::invalid_argument("IMU/UWB model: UWB step outside horizon or repeated");
    }
    uwb_at_[t - 1] = static_cast<std::ptrdiff_t>(k);
  }
  prior_.orientation.normalize();

  const double sa2 = noise_.sigma_acc * noise_.sigma_acc;
  Eigen::Matrix2d cov;
  cov << ts_ * ts_ * sa2 + noise_.sigma_vel * noise_.sigma_vel, 0.5 * ts_ * ts_ * ts_ * sa2,
      0.5 * ts_ * ts_ * ts_ * sa2,
      0.25 * ts_ * ts_ * ts_ * ts_ * sa2 + noise_.sigma_pos * noise_.sigma_pos;
  if (cov.determinant() > 0.0) {
    kin_inv_ = cov.inverse();
    kin_log_norm_ = -kLog2Pi - 0.5 * std::log(cov.determinant());
  } else {
    kin_inv_.setZero();
  }
}

void ImuUwbModel::propagate(std::size_t t, ConstStateView x_prev, const StepNoise& e,
                            StateView x) const {
  const auto row = static_cast<Eigen::Index>(t - 2);
  const Vec3 p = read3(x_prev, 0);
  const Vec3 v = read3(x_prev, 3);
  const Quaternion q = read_q(x_prev);
  const Vec3 y_acc = imu_.acc.row(row).transpose();
  const Vec3 y_gyro = imu_.gyro.row(row).transpose();

  const Vec3 a = rotation_matrix(q) * (y_acc - noise_.bias_acc - e.acc) + kGravity;
  const Vec3 omega = y_gyro - noise_.bias_gyro - e.gyro;
  write3(p + ts_ * v + 0.5 * ts_ * ts_ * a + e.pos, x, 0);
  write3(v + ts_ * a + e.vel, x, 3);
  store_quaternion(quaternion_product(q, quaternion_exp(omega, 0.5 * ts_)), x.subspan(6, 4));
}

void ImuUwbModel::sample_initial(Rng& rng, StateView x) const {
  const Vec3 dp = prior_.sd_position * normal3(rng);
  const Vec3 dv = prior_.sd_velocity * normal3(rng);
  const Vec3 dtheta = prior_.sd_angle * normal3(rng);
  write3(prior_.position + dp, x, 0);
  write3(prior_.velocity + dv, x, 3);
  store_quaternion(quaternion_product(prior_.orientation, quaternion_exp(dtheta, 0.5)),
                   x.subspan(6, 4));
}

double ImuUwbModel::log_initial(ConstStateView x) const {
  const Vec3 dp = read3(x, 0) - prior_.position;
  const Vec3 dv = read3(x, 3) - prior_.velocity;
  const Vec3 dtheta = 2.0 * quaternion_log(prior_.orientation.conjugate() * read_q(x));
  return gaussian3_logpdf(dp, prior_.sd_position) + gaussian3_logpdf(dv, prior_.sd_velocity) +
         gaussian3_logpdf(dtheta, prior_.sd_angle) - log_haar_factor(dtheta.norm());
}

void ImuUwbModel::sample_transition(std::size_t t, ConstStateView x_prev, Rng& rng,
                                    StateView x) const {
  StepNoise e;
  e.acc = noise_.sigma_acc * normal3(rng);
  e.gyro = noise_.sigma_gyro * normal3(rng);
  e.pos = noise_.sigma_pos * normal3(rng);
  e.vel = noise_.sigma_vel * normal3(rng);
  propagate(t, x_prev, e, x);
}

double ImuUwbModel::log_transition(std::size_t t, ConstStateView x_prev,
                                   ConstStateView x) const {
  if (noise_.sigma_acc == 0.0 || noise_.sigma_gyro == 0.0 || noise_.sigma_pos == 0.0) {
    throw ModelError("IMU/UWB model: transition density is singular with zero noise");
  }
  const auto row = static_cast<Eigen::Index>(t - 2);
  const Vec3 p_prev = read3(x_prev, 0);
  const Vec3 v_prev = read3(x_prev, 3);
  const Quaternion q_prev = read_q(x_prev);
  const Vec3 y_acc = imu_.acc.row(row).transpose();
  const Vec3 y_gyro = imu_.gyro.row(row).transpose();

  // With u = R e_acc isotropic, each axis of (velocity, position) residual
  // around the noise-free update is an independent bivariate Gaussian.
  const Vec3 a = rotation_matrix(q_prev) * (y_acc - noise_.bias_acc) + kGravity;
  const Vec3 rv = read3(x, 3) - v_prev - ts_ * a;
  const Vec3 rp = read3(x, 0) - p_prev - ts_ * v_prev - 0.5 * ts_ * ts_ * a;
  double quad = 0.0;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector2d r(rv(k), rp(k));
    quad += r.dot(kin_inv_ * r);
  }
  double lp = 3.0 * kin_log_norm_ - 0.5 * quad;

  // Orientation increment as a rotation vector theta = Ts omega.
  const Vec3 theta = 2.0 * quaternion_log(q_prev.conjugate() * read_q(x));
  const Vec3 e_gyro = y_gyro - noise_.bias_gyro - theta / ts_;
  lp += gaussian3_logpdf(e_gyro, noise_.sigma_gyro) - 3.0 * std::log(ts_) -
        log_haar_factor(theta.norm());
  return lp;
}

double ImuUwbModel::log_observation(std::size_t t, ConstStateView x) const {
  const std::ptrdiff_t k = uwb_at_[t - 1];
  if (k < 0) return 0.0;
  const auto row = uwb_.arrivals.row(k);
  const std::span<const double> arrivals(row.data(), static_cast<std::size_t>(row.size()));
  return profile_pulse_time(scene_, error_, read3(x, 0), arrivals).loglik;
}

void ImuUwbModel::initial_mean(StateView x) const {
  write3(prior_.position, x, 0);
  write3(prior_.velocity, x, 3);
  store_quaternion(prior_.orientation, x.subspan(6, 4));
}

void ImuUwbModel::mean_transition(std::size_t t, ConstStateView x_prev, StateView x) const {
  propagate(t, x_prev, StepNoise{}, x);
}

namespace {

struct PathSample {
  Vec3 acc;    // navigation frame, m/s^2
  Vec3 omega;  // body frame, rad/s
};

struct FigureEight {
  const WalkOptions& o;

  // Speed factor of the time warp: quintic smoothstep over the ramp.
  [[nodiscard]] double warp_rate(double time) const {
    if (time >= o.ramp_time) return 1.0;
    const double u = time / o.ramp_time;
    return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
  }
  [[nodiscard]] double warp_accel(double time) const {
    if (time >= o.ramp_time) return 0.0;
    const double u = time / o.ramp_time;
    return 30.0 * u * u * (1.0 - u) * (1.0 - u) / o.ramp_time;
  }
  [[nodiscard]] double warp(double time) const {
    if (time >= o.ramp_time) return 0.5 * o.ramp_time + (time - o.ramp_time);
    const double u = time / o.ramp_time;
    return o.ramp_time * u * u * u * u * (2.5 - 3.0 * u + u * u);
  }

  [[nodiscard]] Vec3 position(double time) const {
    const double phi = o.loop_rate * warp(time);
    return o.center + Vec3(o.half_extent.x() * std::sin(phi),
                           o.half_extent.y() * std::sin(2.0 * phi), 0.05 * std::sin(phi));
  }

  [[nodiscard]] PathSample sample(double time) const {
    const double phi = o.loop_rate * warp(time);
    const double rate = o.loop_rate * warp_rate(time);
    const double rate_dot = o.loop_rate * warp_accel(time);
    const Vec3 d1(o.half_extent.x() * std::cos(phi), 2.0 * o.half_extent.y() * std::cos(2.0 * phi),
                  0.05 * std::cos(phi));
    const Vec3 d2(-o.half_extent.x() * std::sin(phi),
                  -4.0 * o.half_extent.y() * std::sin(2.0 * phi), -0.05 * std::sin(phi));
    PathSample s;
    s.acc = d2 * rate * rate + d1 * rate_dot;
    const double lam = warp_rate(time);
    s.omega = lam * Vec3(0.10 * std::sin(0.7 * time), 0.08 * std::cos(0.5 * time),
                         0.30 * std::sin(0.2 * time + 0.3));
    return s;
  }
};

}  // namespace

UwbDataset generate_uwb_walk(const UwbScene& scene_in, const WalkOptions& options,
                             const RandomSource& rng) {
  if (!(options.duration >= 2.0)) throw std::invalid_argument("walk duration must be >= 2 s");
  scene_in.validate();
  options.error.validate();

  UwbDataset data;
  data.scene = scene_in;
  data.options = options;
  const double ts = scene_in.sample_period();
  const auto T = static_cast<std::size_t>(std::llround(options.duration * scene_in.imu_rate));
  const FigureEight path{options};

  data.start.position = path.position(0.0);
  data.start.velocity = Vec3::Zero();
  data.start.orientation = Quaternion::Identity();

  Rng acc_rng = rng.rng(1);
  Rng gyro_rng = rng.rng(2);
  Rng uwb_rng = rng.rng(3);
  Rng pulse_rng = rng.rng(4);

  data.truth = Trajectory(T, kImuUwbStateDim);
  data.imu.acc.resize(static_cast<Eigen::Index>(T), 3);
  data.imu.gyro.resize(static_cast<Eigen::Index>(T), 3);

  Vec3 p = data.start.position;
  Vec3 v = data.start.velocity;
  Quaternion q = data.start.orientation;
  const ImuNoise& n = options.noise;
  for (std::size_t t = 1; t <= T; ++t) {
    auto x = data.truth.state(t);
    write3(p, x, 0);
    write3(v, x, 3);
    store_quaternion(q, x.subspan(6, 4));

    const PathSample s = path.sample(static_cast<double>(t - 1) * ts);
    const Vec3 e_acc = n.sigma_acc * normal3(acc_rng);
    const Vec3 e_gyro = n.sigma_gyro * normal3(gyro_rng);
    const auto row = static_cast<Eigen::Index>(t - 1);
    data.imu.acc.row(row) =
        (rotation_matrix(q).transpose() * (s.acc - kGravity) + n.bias_acc + e_acc).transpose();
    data.imu.gyro.row(row) = (s.omega + n.bias_gyro + e_gyro).transpose();

    // Same discrete dynamics as the model, driven by the noise-free inputs.
    p = p + ts * v + 0.5 * ts * ts * s.acc;
    v = v + ts * s.acc;
    q = quaternion_product(q, quaternion_exp(s.omega, 0.5 * ts));
  }

  const std::size_t stride = scene_in.imu_per_uwb();
  const std::size_t M = scene_in.receivers.size();
  for (std::size_t t = 1; t <= T; t += stride) data.uwb.step.push_back(t);
  data.uwb.arrivals.resize(static_cast<Eigen::Index>(data.uwb.step.size()),
                           static_cast<Eigen::Index>(M));
  data.scene.pulse_times.clear();
  for (std::size_t k = 0; k < data.uwb.step.size(); ++k) {
    const std::size_t t = data.uwb.step[k];
    const double tau = static_cast<double>(t - 1) * ts + options.max_pulse_jitter * pulse_rng.uniform();
    data.scene.pulse_times.push_back(tau);
    const Vec3 pos = read3(data.truth.state(t), 0);
    for (std::size_t m = 0; m < M; ++m) {
      const double e = options.uwb_noise ? options.error.sample(uwb_rng) : 0.0;
      data.uwb.arrivals(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) =
          tau + (scene_in.receivers[m] - pos).norm() / scene_in.c + e;
    }
  }
  return data;
}

std::shared_ptr<ImuUwbModel> imu_uwb_model(const UwbDataset& data) {
  UwbScene scene = data.scene;
  scene.pulse_times.clear();  // not available to the estimator
  return std::make_shared<ImuUwbModel>(std::move(scene), data.options.error, data.imu, data.uwb,
                                       data.options.noise, data.start);
}

void write_uwb_dataset(const std::filesystem::path& dir, const UwbDataset& data,
                       std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  const double ts = data.scene.sample_period();
  {
    auto out = fmt::output_file((dir / "truth.csv").string());
    out.print("t,time,px,py,pz,vx,vy,vz,qw,qx,qy,qz\n");
    for (std::size_t t = 1; t <= data.truth.horizon(); ++t) {
      out.print("{},{:.17g}", t, static_cast<double>(t - 1) * ts);
      for (double v : data.truth.state(t)) out.print(",{:.17g}", v);
      out.print("\n");
    }
  }
  {
    auto out = fmt::output_file((dir / "imu.csv").string());
    out.print("t,time,acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z\n");
    for (Eigen::Index r = 0; r < data.imu.acc.rows(); ++r) {
      out.print("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r + 1,
                static_cast<double>(r) * ts, data.imu.acc(r, 0), data.imu.acc(r, 1),
                data.imu.acc(r, 2), data.imu.gyro(r, 0), data.imu.gyro(r, 1), data.imu.gyro(r, 2));
    }
  }
  {
    auto out = fmt::output_file((dir / "uwb.csv").string());
    out.print("sample,t,receiver,arrival\n");
    for (Eigen::Index k = 0; k < data.uwb.arrivals.rows(); ++k) {
      for (Eigen::Index m = 0; m < data.uwb.arrivals.cols(); ++m) {
        out.print("{},{},{},{:.17g}\n", k + 1, data.uwb.step[static_cast<std::size_t>(k)], m + 1,
                  data.uwb.arrivals(k, m));
      }
    }
  }
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["c"] = data.scene.c;
  j["imu_rate"] = data.scene.imu_rate;
  j["uwb_rate"] = data.scene.uwb_rate;
  j["duration"] = data.options.duration;
  j["horizon"] = data.truth.horizon();
  auto& rx = j["receivers"] = nlohmann::ordered_json::array();
  for (const auto& r : data.scene.receivers) rx.push_back({r.x(), r.y(), r.z()});
  j["pulse_times"] = data.scene.pulse_times;
  const ImuNoise& n = data.options.noise;
  j["noise"] = {{"sigma_acc", n.sigma_acc},
                {"sigma_gyro", n.sigma_gyro},
                {"sigma_pos", n.sigma_pos},
                {"sigma_vel", n.sigma_vel},
                {"bias_acc", {n.bias_acc.x(), n.bias_acc.y(), n.bias_acc.z()}},
                {"bias_gyro", {n.bias_gyro.x(), n.bias_gyro.y(), n.bias_gyro.z()}}};
  j["uwb_error"] = {{"alpha", data.options.error.alpha},
                    {"sigma", data.options.error.sigma},
                    {"gamma", data.options.error.gamma}};
  std::ofstream js(dir / "scene.json");
  js << j.dump(2) << '\n';
}

}  // namespace smcs::models
