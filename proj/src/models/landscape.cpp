#include "smcs/models/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace smcs::models {

namespace {

double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

// Position of `v` in a uniform coordinate vector: index of the left node and
// the fractional offset, clamped to the ends.
std::pair<std::size_t, double> locate(const std::vector<double>& axis, double v) {
  if (axis.size() == 1 || v <= axis.front()) return {0, 0.0};
  if (v >= axis.back()) return {axis.size() - 2, 1.0};
  const double step = (axis.back() - axis.front()) / static_cast<double>(axis.size() - 1);
  auto i = static_cast<std::size_t>((v - axis.front()) / step);
  i = std::min(i, axis.size() - 2);
  return {i, (v - axis[i]) / (axis[i + 1] - axis[i])};
}

}  // namespace

double LandscapeGrid::at(double time, double state) const {
  const auto [ix, fx] = locate(x, state);
  const auto [it, ft] = locate(t, time);
  const auto r = static_cast<Eigen::Index>(ix);
  const auto c = static_cast<Eigen::Index>(it);
  if (x.size() == 1 || t.size() == 1) return log_lik(r, c);
  const double v00 = log_lik(r, c);
  const double v10 = log_lik(r + 1, c);
  const double v01 = log_lik(r, c + 1);
  const double v11 = log_lik(r + 1, c + 1);
  return (1 - fx) * (1 - ft) * v00 + fx * (1 - ft) * v10 + (1 - fx) * ft * v01 + fx * ft * v11;
}

double left_ridge_center(const LandscapeParameters& p, double t) {
  return -p.ridge_offset * (1.0 - std::exp(-t / p.ramp));
}

double right_ridge_center(const LandscapeParameters& p, double t) {
  return p.ridge_offset * (1.0 - std::exp(-t / p.ramp));
}

LandscapeGrid build_landscape_grid(const LandscapeParameters& p) {
  if (!(p.x_max > p.x_min) || !(p.dx > 0.0) || p.horizon < 1) {
    throw std::invalid_argument("landscape: invalid grid parameters");
  }
  LandscapeGrid grid;
  const auto rows = static_cast<std::size_t>(std::llround((p.x_max - p.x_min) / p.dx)) + 1;
  for (std::size_t i = 0; i < rows; ++i) grid.x.push_back(p.x_min + p.dx * static_cast<double>(i));
  for (std::size_t j = 0; j <= p.horizon; ++j) grid.t.push_back(static_cast<double>(j));
  grid.log_lik.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(grid.t.size()));

  for (std::size_t j = 0; j < grid.t.size(); ++j) {
    const double t = grid.t[j];
    const bool cut = t >= p.valley_start && t <= p.valley_end;
    const double right_height = cut ? p.valley_level : 0.0;
    const double left_height = -p.left_penalty;
    for (std::size_t i = 0; i < rows; ++i) {
      const double x = grid.x[i];
      const double zl = (x - left_ridge_center(p, t)) / p.ridge_width;
      const double zr = (x - right_ridge_center(p, t)) / p.ridge_width;
      const double left = left_height - 0.5 * zl * zl;
      const double right = right_height - 0.5 * zr * zr;
      grid.log_lik(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::max({left, right, p.floor_level});
    }
  }
  return grid;
}

void write_landscape_grid(const std::filesystem::path& path, const LandscapeGrid& grid) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  out << "smcs-landscape v1 " << grid.x.size() << ' ' << grid.t.size() << '\n';
  for (std::size_t j = 0; j < grid.t.size(); ++j) out << (j ? " " : "") << grid.t[j];
  out << '\n';
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    out << grid.x[i];
    for (std::size_t j = 0; j < grid.t.size(); ++j) {
      out << ' ' << grid.log_lik(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    out << '\n';
  }
}

LandscapeGrid read_landscape_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string magic, version;
  std::size_t rows = 0, cols = 0;
  in >> magic >> version >> rows >> cols;
  if (magic != "smcs-landscape" || version != "v1" || rows < 1 || cols < 1) {
    throw std::runtime_error("not a landscape grid file: " + path.string());
  }
  LandscapeGrid grid;
  grid.t.resize(cols);
  grid.x.resize(rows);
  grid.log_lik.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (auto& v : grid.t) in >> v;
  for (std::size_t i = 0; i < rows; ++i) {
    in >> grid.x[i];
    for (std::size_t j = 0; j < cols; ++j) {
      in >> grid.log_lik(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  if (!in) throw std::runtime_error("truncated landscape grid file: " + path.string());
  if (!grid.log_lik.allFinite()) throw std::runtime_error("landscape grid has non-finite values");
  return grid;
}

LandscapeModel::LandscapeModel(LandscapeGrid grid, double sigma, std::size_t horizon)
    : grid_(std::move(grid)), sigma_(sigma), horizon_(horizon) {
  if (!(sigma_ > 0.0)) throw std::invalid_argument("landscape: sigma must be positive");
  if (!grid_.log_lik.allFinite()) throw std::invalid_argument("landscape: non-finite grid");
  if (horizon_ < 1) throw std::invalid_argument("landscape: empty horizon");
}

void LandscapeModel::sample_initial(Rng& rng, StateView x) const { x[0] = sigma_ * rng.normal(); }

double LandscapeModel::log_initial(ConstStateView x) const {
  return normal_logpdf(x[0], 0.0, sigma_);
}

void LandscapeModel::sample_transition(std::size_t, ConstStateView x_prev, Rng& rng,
                                       StateView x) const {
  x[0] = x_prev[0] + sigma_ * rng.normal();
}

double LandscapeModel::log_transition(std::size_t, ConstStateView x_prev,
                                      ConstStateView x) const {
  return normal_logpdf(x[0], x_prev[0], sigma_);
}

double LandscapeModel::log_observation(std::size_t t, ConstStateView x) const {
  return grid_.at(static_cast<double>(t), x[0]);
}

std::shared_ptr<LandscapeModel> landscape_model(const LandscapeParameters& p) {
  return std::make_shared<LandscapeModel>(build_landscape_grid(p), p.sigma, p.horizon);
}

}  // namespace smcs::models
