#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "smcs/filter.hpp"
#include "smcs/oracles.hpp"
#include "smcs/weights.hpp"
#include "toy_models.hpp"

using namespace smcs;

namespace {

std::vector<double> frequencies(const std::vector<std::uint32_t>& draws, std::size_t n) {
  std::vector<double> f(n, 0.0);
  for (auto d : draws) f[d] += 1.0;
  for (double& v : f) v /= static_cast<double>(draws.size());
  return f;
}

}  // namespace

TEST_CASE("multinomial resampling") {
  SUBCASE("point mass") {
    const auto a = resample_multinomial(std::vector<double>{1.0, 0.0, 0.0}, 5, {1, 0});
    CHECK(a == std::vector<std::uint32_t>(5, 0));
  }
  SUBCASE("fair coin within a 3 sigma band") {
    const auto f = frequencies(resample_multinomial(std::vector<double>{0.5, 0.5}, 100000, {2, 0}), 2);
    CHECK(f[0] >= 0.494);
    CHECK(f[0] <= 0.506);
  }
  SUBCASE("uniform over four") {
    const std::size_t M = 400000;
    const auto f = frequencies(resample_multinomial(std::vector<double>(4, 0.25), M, {3, 0}), 4);
    const double sd = std::sqrt(0.25 * 0.75 / static_cast<double>(M));
    for (double v : f) CHECK(std::abs(v - 0.25) <= 3.0 * sd);
  }
  SUBCASE("chi-square goodness of fit") {
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    const std::size_t M = 50000;
    const auto f = frequencies(resample_multinomial(p, M, {4, 0}), 4);
    double chi2 = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const double e = p[i] * static_cast<double>(M);
      const double o = f[i] * static_cast<double>(M);
      chi2 += (o - e) * (o - e) / e;
    }
    CHECK(chi2 < 16.27);  // 0.999 quantile with 3 degrees of freedom
  }
  SUBCASE("invalid probabilities") {
    CHECK_THROWS((void)resample_multinomial(std::vector<double>{0.5, 0.6}, 3, {1, 0}));
  }
}

TEST_CASE("particle filter tracks the Kalman filter") {
  const auto inst = models::lgss_model({11, 1});
  const auto kf = kalman_filter(inst.oracle);
  const auto pf = particle_filter(*inst.ssm, 2000, {11, 2});
  double sq = 0.0;
  for (std::size_t t = 1; t <= 80; ++t) {
    const double m = kf.filtered.means[t - 1](0);
    const double sd = std::sqrt(kf.filtered.covariances[t - 1](0, 0));
    const double d = pf.filtered_means(static_cast<Eigen::Index>(t - 1), 0) - m;
    CHECK(std::abs(d) <= 4.0 * sd / std::sqrt(pf.ess[t - 1]));
    sq += d * d;
  }
  CHECK(std::sqrt(sq / 80.0) < 0.1);
}

TEST_CASE("flat likelihood and deterministic dynamics") {
  const toy::Drift model(20, 0.5);
  const auto pf = particle_filter(model, 7, {1, 0});
  for (std::size_t t = 1; t <= 20; ++t) {
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(pf.system.particle(t, i)[0] == 0.5 * static_cast<double>(t - 1));
    }
    const auto w = normalize_weights(pf.system.log_weights(t));
    for (double v : w) CHECK(v == doctest::Approx(1.0 / 7.0));
  }
}

TEST_CASE("single particle") {
  const auto inst = models::lgss_model({5, 1});
  const auto pf = particle_filter(*inst.ssm, 1, {5, 2});
  CHECK(pf.system.count() == 1);
  CHECK(pf.system.trace(0).all_finite());
  CHECK(measure_path_degeneracy(pf) == std::vector<std::size_t>(80, 1));
}

TEST_CASE("path degeneracy measure") {
  SUBCASE("identity ancestry") {
    ParticleSystem sys(6, 5, 1);
    for (std::size_t t = 1; t <= 6; ++t) {
      for (std::uint32_t i = 0; i < 5; ++i) sys.ancestors(t)[i] = i;
    }
    CHECK(measure_path_degeneracy(sys) == std::vector<std::size_t>(6, 5));
  }
  SUBCASE("hand-built genealogy") {
    ParticleSystem sys(3, 3, 1);
    const std::uint32_t a2[] = {0, 0, 2};
    const std::uint32_t a3[] = {1, 1, 0};
    std::copy(std::begin(a2), std::end(a2), sys.ancestors(2).begin());
    std::copy(std::begin(a3), std::end(a3), sys.ancestors(3).begin());
    CHECK(measure_path_degeneracy(sys) == std::vector<std::size_t>{1, 2, 3});
  }
  SUBCASE("monotone on a filter run") {
    models::LgssParameters p;
    p.horizon = 40;
    const auto inst = models::lgss_model({3, 1}, p);
    const auto counts = measure_path_degeneracy(particle_filter(*inst.ssm, 100, {3, 2}));
    CHECK(counts.back() == 100);
    CHECK(std::is_sorted(counts.begin(), counts.end()));
  }
}
