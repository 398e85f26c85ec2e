#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

#include "smcs/filter.hpp"
#include "smcs/models/hmm.hpp"
#include "smcs/models/imu_uwb.hpp"
#include "smcs/models/landscape.hpp"
#include "smcs/models/linear_gaussian.hpp"
#include "smcs/models/quaternion.hpp"
#include "smcs/models/uwb.hpp"
#include "smcs/smoother.hpp"

using namespace smcs;
using namespace smcs::models;

namespace {

constexpr double kPi = std::numbers::pi;

// Composite 5-point Gauss-Legendre rule; never evaluates the end points.
template <class F>
double gauss_legendre(F f, double a, double b, int panels) {
  static const double x[] = {0.0, 0.5384693101056831, -0.5384693101056831, 0.9061798459386640,
                             -0.9061798459386640};
  static const double w[] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                             0.2369268850561891, 0.2369268850561891};
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (int i = 0; i < 5; ++i) sum += w[i] * f(mid + 0.5 * h * x[i]);
  }
  return 0.5 * h * sum;
}

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis_angle) {
  const double th = axis_angle.norm();
  const Eigen::Vector3d k = axis_angle / th;
  Eigen::Matrix3d K;
  K << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  return Eigen::Matrix3d::Identity() + std::sin(th) * K + (1.0 - std::cos(th)) * K * K;
}

// A model driven by fixed IMU readings with no UWB samples.
ImuUwbModel imu_only(const Eigen::Vector3d& acc, const Eigen::Vector3d& gyro, std::size_t T,
                     ImuNoise noise = {}) {
  ImuReadings r;
  r.acc.resize(static_cast<Eigen::Index>(T), 3);
  r.gyro.resize(static_cast<Eigen::Index>(T), 3);
  for (Eigen::Index i = 0; i < r.acc.rows(); ++i) {
    r.acc.row(i) = acc.transpose();
    r.gyro.row(i) = gyro.transpose();
  }
  UwbSamples none;
  none.arrivals.resize(0, 10);
  return {UwbScene::default_scene(), UwbErrorModel{}, r, none, noise, InitialPose{}};
}

std::vector<double> pose(const Eigen::Vector3d& p) {
  return {p.x(), p.y(), p.z(), 0, 0, 0, 1, 0, 0, 0};
}

}  // namespace

TEST_CASE("scalar LGSS instance") {
  const auto inst = lgss_model({1, 1});
  CHECK(inst.ssm->horizon() == 80);
  CHECK(inst.oracle.observations.rows() == 80);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const std::size_t t = 2 + static_cast<std::size_t>(rng.uniform() * 79);
    const std::vector<double> xp{2.0 * rng.normal()}, x{2.0 * rng.normal()};
    const double mean = 0.2 * xp[0] + inst.oracle.inputs(static_cast<Eigen::Index>(t - 2), 0);
    const double ref = -0.5 * (x[0] - mean) * (x[0] - mean) / 0.3 - 0.5 * std::log(2 * kPi * 0.3);
    CHECK(std::abs(inst.ssm->log_transition(t, xp, x) - ref) < 1e-12);
  }
}

TEST_CASE("stationary variance of the scalar model") {
  LgssParameters p;
  p.horizon = 100000;
  p.input_gain = 0.0;
  const auto inst = lgss_model({7, 1}, p);
  double s = 0.0, s2 = 0.0;
  for (std::size_t t = 1; t <= p.horizon; ++t) {
    s += inst.truth(t, 0);
    s2 += inst.truth(t, 0) * inst.truth(t, 0);
  }
  const double n = static_cast<double>(p.horizon);
  const double var = s2 / n - (s / n) * (s / n);
  CHECK(std::abs(var - 0.3125) < 0.05 * 0.3125);
}

TEST_CASE("landscape grid") {
  LandscapeParameters p;
  const auto grid = build_landscape_grid(p);
  CHECK(std::isfinite(std::exp(grid.log_lik.maxCoeff())));
  CHECK(std::abs(grid.at(50.0, left_ridge_center(p, 50.0)) + p.left_penalty) < 1e-3);
  const auto path = std::filesystem::temp_directory_path() / "smcs_grid_roundtrip.txt";
  write_landscape_grid(path, grid);
  const auto back = read_landscape_grid(path);
  CHECK(back.x == grid.x);
  CHECK(back.t == grid.t);
  CHECK(back.log_lik == grid.log_lik);
  std::filesystem::remove(path);
  CHECK_THROWS((void)read_landscape_grid(std::filesystem::temp_directory_path() / "no-such-grid"));
}

TEST_CASE("landscape: filter follows the right ridge, smoother the left") {
  LandscapeParameters p;
  const auto model = landscape_model(p);
  const double left = left_ridge_center(p, 50.0), right = right_ridge_center(p, 50.0);
  const auto pf = particle_filter(*model, 5000, {1, 3});
  const double fm = pf.filtered_means(49, 0);
  CHECK(std::abs(fm - right) < std::abs(fm - left));
  const auto chain = mcmc_smoother(*model, 50, 300, mean_rollout(*model), {1, 2});
  const double sm = estimate(chain, chain.burn_in, 0.99).means(49, 0);
  CHECK(std::abs(sm - left) < std::abs(sm - right));
}

TEST_CASE("discrete HMM as a state-space model") {
  const auto inst = hmm_model({3, 1});
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const std::vector<double> a{static_cast<double>(i)}, b{static_cast<double>(j)};
      CHECK(inst.ssm->log_transition(2, a, b) ==
            doctest::Approx(std::log(inst.oracle.transition(i, j))).epsilon(1e-14));
    }
  }
}

TEST_CASE("quaternion algebra") {
  const Quaternion q = quaternion_exp(Eigen::Vector3d(0.3, -1.1, 0.4), 0.7);
  const Quaternion id = Quaternion::Identity();
  CHECK((quaternion_product(q, id).coeffs() - q.coeffs()).norm() < 1e-15);
  CHECK((quaternion_product(q, q.conjugate()).coeffs() - id.coeffs()).norm() < 1e-12);

  const Quaternion qx = quaternion_exp(Eigen::Vector3d::UnitX(), kPi / 4.0);
  const Quaternion qy = quaternion_exp(Eigen::Vector3d::UnitY(), kPi / 4.0);
  Eigen::Matrix3d rx, ry;
  rx << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  ry << 0, 0, 1, 0, 1, 0, -1, 0, 0;
  CHECK((rotation_matrix(qx) - rx).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((rotation_matrix(qy) - ry).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((rotation_matrix(quaternion_product(qy, qx)) - ry * rx).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((rotation_matrix(quaternion_product(qx, qy)) - rx * ry).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("quaternion exponential") {
  CHECK((quaternion_exp(Eigen::Vector3d::Zero(), 0.01).coeffs() - Quaternion::Identity().coeffs())
            .norm() == 0.0);
  const double ts = 1.0 / 120.0;
  const auto full = quaternion_exp(Eigen::Vector3d(2 * kPi / ts, 0, 0), ts / 2.0);
  CHECK((rotation_matrix(full) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(std::abs(full.w()) - 1.0) < 1e-12);

  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d w(rng.normal(), rng.normal(), rng.normal());
    const double h = 0.05 + rng.uniform();
    const auto q = quaternion_exp(w, h);
    CHECK((rotation_matrix(q) - rodrigues(2.0 * h * w)).cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::Vector3d v = quaternion_log(q);
    const auto back = quaternion_exp(v, 1.0);
    CHECK((rotation_matrix(back) - rotation_matrix(q)).cwiseAbs().maxCoeff() < 1e-12);
  }
  const Eigen::Vector3d tiny(1e-9, -2e-9, 3e-9);
  CHECK((quaternion_log(quaternion_exp(tiny, 1.0)) - tiny).norm() < 1e-20);
}

TEST_CASE("roll, pitch and yaw") {
  const Quaternion q = Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitZ()) *
                       Eigen::AngleAxisd(-0.2, Eigen::Vector3d::UnitY()) *
                       Eigen::AngleAxisd(0.1, Eigen::Vector3d::UnitX());
  const auto rpy = roll_pitch_yaw(q);
  CHECK(rpy(0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(rpy(1) == doctest::Approx(-0.2).epsilon(1e-12));
  CHECK(rpy(2) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("error density") {
  SUBCASE("normalization") {
    for (double alpha : {0.1, 0.5, 1.0, 1.5, 1.9}) {
      const UwbErrorModel m{alpha, 0.3e-9, 1e-9};
      const double neg = gauss_legendre([&](double e) { return m.density(e); }, -40 * m.sigma, 0.0, 400);
      // e = gamma tan(theta) maps [0, inf) onto [0, pi/2).
      const double pos = gauss_legendre(
          [&](double th) { return m.density(m.gamma * std::tan(th)) * m.gamma / std::pow(std::cos(th), 2); },
          0.0, kPi / 2.0, 400);
      CHECK(std::abs(neg + pos - 1.0) < 1e-6);
      CHECK(neg == doctest::Approx((2.0 - alpha) / 2.0).epsilon(1e-9));
    }
  }
  SUBCASE("zero residuals use the Cauchy branch") {
    const UwbErrorModel m;
    const auto scene = UwbScene::default_scene();
    const Eigen::Vector3d p(4.0, 3.0, 1.0);
    std::vector<double> arrivals;
    for (const auto& r : scene.receivers) arrivals.push_back((r - p).norm() / scene.c);
    const double expect = 10.0 * (std::log(m.alpha) - std::log(kPi * m.gamma));
    CHECK(uwb_loglik(scene, m, p, 0.0, arrivals) == doctest::Approx(expect).epsilon(1e-14));
  }
  SUBCASE("heavy right tail") {
    const UwbErrorModel m;
    const double d = m.log_density(1e3 * m.gamma) - m.log_density(1e4 * m.gamma);
    CHECK(std::abs(d - 2.0 * std::log(10.0)) < 1e-3);
    CHECK(m.log_density(-1e3 * m.gamma) < m.log_density(1e3 * m.gamma) - 1e5);
  }
  SUBCASE("sampler branch masses") {
    const UwbErrorModel m{0.6, 0.3e-9, 1e-9};
    Rng rng(12);
    const int n = 100000;
    int negative = 0;
    for (int i = 0; i < n; ++i) negative += m.sample(rng) < 0.0 ? 1 : 0;
    const double p = (2.0 - m.alpha) / 2.0;
    CHECK(std::abs(negative / static_cast<double>(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("receiver scene") {
  auto scene = UwbScene::default_scene();
  CHECK_NOTHROW(scene.validate());
  CHECK(scene.imu_per_uwb() == 12);
  auto flat = scene;
  for (auto& r : flat.receivers) r.z() = 2.0;
  CHECK_THROWS(flat.validate());
  auto few = scene;
  few.receivers.resize(3);
  CHECK_THROWS(few.validate());
}

TEST_CASE("pulse time profiling recovers tau") {
  const auto scene = UwbScene::default_scene();
  const UwbErrorModel m;
  const Eigen::Vector3d p(6.0, 2.5, 1.3);
  const double tau = 1.234567;
  std::vector<double> arrivals;
  for (const auto& r : scene.receivers) arrivals.push_back(tau + (r - p).norm() / scene.c);
  const auto prof = profile_pulse_time(scene, m, p, arrivals);
  CHECK(std::abs(prof.tau - tau) < 0.05 * m.sigma);
  CHECK(prof.loglik >= uwb_loglik(scene, m, p, tau + 0.1 * m.sigma, arrivals));
}

TEST_CASE("IMU statics") {
  const auto model = imu_only(Eigen::Vector3d(0, 0, 9.81), Eigen::Vector3d::Zero(), 121,
                              ImuNoise{.bias_acc = Eigen::Vector3d::Zero(),
                                       .bias_gyro = Eigen::Vector3d::Zero()});
  auto x = pose({1.0, 2.0, 1.5});
  std::vector<double> next(10);
  for (std::size_t t = 2; t <= 121; ++t) {
    model.mean_transition(t, x, next);
    x = next;
  }
  CHECK(std::abs(x[0] - 1.0) < 1e-9);
  CHECK(std::abs(x[1] - 2.0) < 1e-9);
  CHECK(std::abs(x[2] - 1.5) < 1e-9);
}

TEST_CASE("constant-rate rotation") {
  const Eigen::Vector3d w(0.0, 0.0, 0.7);
  const std::size_t steps = 1000;
  const auto model = imu_only(Eigen::Vector3d(0, 0, 9.81), w, steps + 1,
                              ImuNoise{.bias_acc = Eigen::Vector3d::Zero(),
                                       .bias_gyro = Eigen::Vector3d::Zero()});
  auto x = pose(Eigen::Vector3d::Zero());
  std::vector<double> next(10);
  for (std::size_t t = 2; t <= steps + 1; ++t) {
    model.mean_transition(t, x, next);
    x = next;
  }
  const Eigen::Matrix3d expect = rodrigues(w * (static_cast<double>(steps) / 120.0));
  const auto q = load_quaternion(std::span<const double>(x).subspan(6, 4));
  CHECK((rotation_matrix(q) - expect).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("transition sampler agrees with the transition density") {
  WalkOptions o;
  o.duration = 4.0;
  o.noise.sigma_vel = 0.003;
  const auto data = generate_uwb_walk(UwbScene::default_scene(), o, {1, 0});
  const auto model = imu_uwb_model(data);
  const std::size_t t = 300;
  const auto xp = data.truth.state(t - 1);
  std::vector<double> mean(10), x(10);
  model->mean_transition(t, xp, mean);
  const double top = model->log_transition(t, xp, mean);
  // 2 (log f_max - log f) is chi-square with 9 degrees of freedom.
  Rng rng(3);
  const int n = 20000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    model->sample_transition(t, xp, rng, x);
    const double d = 2.0 * (top - model->log_transition(t, xp, x));
    s += d;
    s2 += d * d;
  }
  const double mean_d = s / n;
  CHECK(std::abs(mean_d - 9.0) < 4.0 * std::sqrt(18.0 / n));
  CHECK(std::abs(s2 / n - mean_d * mean_d - 18.0) < 1.5);
}

TEST_CASE("synthetic walk") {
  WalkOptions o;
  o.duration = 5.0;
  o.uwb_noise = false;
  const auto scene = UwbScene::default_scene();
  const auto data = generate_uwb_walk(scene, o, {2, 1});
  REQUIRE(data.uwb.step.size() == data.scene.pulse_times.size());

  SUBCASE("noise-free arrivals have zero residuals") {
    for (std::size_t k = 0; k < data.uwb.step.size(); ++k) {
      const auto s = data.uwb.step[k];
      const Eigen::Vector3d p(data.truth(s, 0), data.truth(s, 1), data.truth(s, 2));
      double nearest = 1e9;
      std::size_t nearest_m = 0, earliest_m = 0;
      for (std::size_t m = 0; m < scene.receivers.size(); ++m) {
        const double arrival = data.uwb.arrivals(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));
        const double e = arrival - data.scene.pulse_times[k] - (scene.receivers[m] - p).norm() / scene.c;
        CHECK(std::abs(e) < 1e-15);
        const double d = (scene.receivers[m] - p).norm();
        if (d < nearest) {
          nearest = d;
          nearest_m = m;
        }
        if (arrival < data.uwb.arrivals(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(earliest_m))) {
          earliest_m = m;
        }
      }
      CHECK(nearest_m == earliest_m);
    }
  }
  SUBCASE("gravity at standstill") {
    const Eigen::Vector3d a = data.imu.acc.row(0).transpose();
    CHECK(std::abs(a.norm() - 9.81) < 0.25);
  }
  SUBCASE("truth quaternions stay unit") {
    for (std::size_t t = 1; t <= data.truth.horizon(); ++t) {
      const auto x = data.truth.state(t);
      CHECK(std::abs(std::sqrt(x[6] * x[6] + x[7] * x[7] + x[8] * x[8] + x[9] * x[9]) - 1.0) < 1e-9);
    }
  }
}
