#include "smcs/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <utility>

#include <fmt/format.h>
#include <fmt/os.h>

#include "smcs/filter.hpp"
#include "smcs/models/hmm.hpp"
#include "smcs/models/imu_uwb.hpp"
#include "smcs/models/landscape.hpp"
#include "smcs/models/linear_gaussian.hpp"
#include "smcs/oracles.hpp"
#include "smcs/smoother.hpp"
#include "smcs/weights.hpp"

#ifndef SMCS_VERSION
#define SMCS_VERSION "0.0.0"
#endif

namespace smcs::experiments {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Stream ids under the run seed.
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kSmootherStream = 2;
constexpr std::uint64_t kFilterStream = 3;
constexpr std::uint64_t kFfbsiStream = 4;

// Above this many particle-steps (N K T) a run is flagged as long.
constexpr double kLongRunParticleSteps = 2e8;

// ---------------------------------------------------------------------------
// Configuration

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "experiment", "N",         "K",           "M",            "burn_in",
      "thinning",   "seed",      "level",       "threads",      "execution",
      "output",     "model",     "budget",      "filter_particles", "ffbsi_particles",
      "density_bin", "output_stride", "checkpoints"};
  return keys;
}

const std::vector<std::string>& model_keys(Experiment e) {
  static const std::vector<std::string> lgss = {"a",  "q",       "r",          "m1",
                                                "p1", "horizon", "input_pole", "input_gain"};
  static const std::vector<std::string> landscape = {
      "x_min",        "x_max",      "dx",          "horizon",      "sigma",
      "ridge_offset", "ramp",       "ridge_width", "left_penalty", "valley_start",
      "valley_end",   "valley_level", "floor_level", "grid_file"};
  static const std::vector<std::string> indoor = {
      "duration",   "sigma_acc", "sigma_gyro",  "sigma_pos",   "sigma_vel",
      "bias_acc",   "bias_gyro", "alpha",       "uwb_sigma",   "gamma",
      "imu_rate",   "uwb_rate",  "sd_position", "sd_velocity", "sd_angle",
      "uwb_noise",  "pulse_jitter"};
  static const std::vector<std::string> hmm = {"states", "horizon", "stay", "emission_sd",
                                               "uniform_emissions"};
  switch (e) {
    case Experiment::lgss: return lgss;
    case Experiment::landscape: return landscape;
    case Experiment::indoor: return indoor;
    case Experiment::hmm_oracle: return hmm;
  }
  return lgss;
}

bool contains(const std::vector<std::string>& v, const std::string& key) {
  return std::find(v.begin(), v.end(), key) != v.end();
}

template <class T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

std::size_t get_count(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw ConfigError(fmt::format("config key '{}' must be a non-negative integer", key));
  }
  if (v.is_number_integer() && v.get<long long>() < 0) {
    throw ConfigError(fmt::format("config key '{}' must be a non-negative integer", key));
  }
  return v.get<std::size_t>();
}

// Sets the value at a dotted path, creating intermediate objects.
void set_path(json& doc, std::string_view path, json value) {
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key(path.substr(start, dot == std::string_view::npos ? path.npos : dot - start));
    if (key.empty()) throw ConfigError(fmt::format("invalid override key '{}'", path));
    if (!node->is_object()) throw ConfigError(fmt::format("override '{}' is not an object path", path));
    if (dot == std::string_view::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

void merge_into(json& base, const json& patch) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it.key() == "model" && it.value().is_object()) {
      for (auto m = it.value().begin(); m != it.value().end(); ++m) base["model"][m.key()] = m.value();
    } else {
      base[it.key()] = it.value();
    }
  }
}

std::vector<std::size_t> default_checkpoints(Experiment e) {
  switch (e) {
    case Experiment::lgss: return {10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000, 20000};
    case Experiment::hmm_oracle: return {500, 1000, 2000, 5000, 10000, 20000, 50000};
    default: return {};
  }
}

// ---------------------------------------------------------------------------
// Output helpers

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

class Csv {
 public:
  Csv(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(fmt::output_file(path.string())) {
    for (std::size_t i = 0; i < header.size(); ++i) out_.print("{}{}", i ? "," : "", header[i]);
    out_.print("\n");
  }

  template <class... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((out_.print("{}{}", first ? "" : ",", cell(fields)), first = false), ...);
    out_.print("\n");
  }
  void raw(std::string_view line) { out_.print("{}\n", line); }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }

  fmt::ostream out_;
};

class Stopwatch {
 public:
  void start(std::string phase) {
    phase_ = std::move(phase);
    begin_ = std::chrono::steady_clock::now();
  }
  void stop() {
    const auto dt = std::chrono::steady_clock::now() - begin_;
    timings_[phase_] = std::chrono::duration<double>(dt).count();
  }
  [[nodiscard]] const ordered_json& timings() const { return timings_; }

 private:
  std::string phase_;
  std::chrono::steady_clock::time_point begin_;
  ordered_json timings_ = ordered_json::object();
};

void write_json(const std::filesystem::path& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ordered_json base_manifest(const ExperimentConfig& config) {
  ordered_json m;
  m["experiment"] = experiment_name(config.experiment);
  m["library_version"] = library_version();
  m["config"] = config.to_json();
  return m;
}

RandomSource stream(const ExperimentConfig& c, std::uint64_t id) { return {c.seed, id}; }

McmcOptions mcmc_options(const ExperimentConfig& c) {
  McmcOptions o;
  o.exec = c.execution;
  o.thinning = c.thinning;
  o.burn_in = c.burn_in;
  return o;
}

std::vector<std::size_t> checkpoints_up_to(const ExperimentConfig& c) {
  std::vector<std::size_t> out;
  for (std::size_t k : c.checkpoints) {
    if (k <= c.iterations) out.push_back(k);
  }
  if (out.empty() || out.back() != c.iterations) out.push_back(c.iterations);
  return out;
}

/// Estimate from the first `k` iterations with a k / 10 burn-in, if enough
/// samples remain.
std::optional<SmoothingEstimate> prefix_estimate(const SmoothingChain& chain, std::size_t k,
                                                 double level) {
  const std::size_t stored = std::min(chain.trajectories.size(), k / chain.thinning);
  const std::size_t burn = stored / 10;
  if (stored < burn + 10) return std::nullopt;
  return estimate(std::span(chain.trajectories).subspan(burn, stored - burn), level);
}

void write_chain(const std::filesystem::path& path, const SmoothingChain& chain,
                 std::size_t stride) {
  const std::size_t T = chain.trajectories.front().horizon();
  const std::size_t n = chain.trajectories.front().dim();
  std::vector<std::string> header = {"iteration", "component"};
  for (std::size_t t = 1; t <= T; t += stride) header.push_back(fmt::format("x_{}", t));
  Csv csv(path, header);
  std::string line;
  for (std::size_t s = 0; s < chain.trajectories.size(); ++s) {
    const auto& tr = chain.trajectories[s];
    for (std::size_t k = 0; k < n; ++k) {
      line = fmt::format("{},{}", (s + 1) * chain.thinning, k);
      for (std::size_t t = 1; t <= T; t += stride) {
        line += ',';
        line += num(tr(t, k));
      }
      csv.raw(line);
    }
  }
}

void write_estimate(const std::filesystem::path& path, const SmoothingEstimate& est,
                    const Trajectory* truth) {
  Csv csv(path, {"t", "component", "mean", "variance", "lower", "upper", "truth"});
  for (Eigen::Index r = 0; r < est.means.rows(); ++r) {
    const auto t = static_cast<std::size_t>(r + 1);
    for (Eigen::Index c = 0; c < est.means.cols(); ++c) {
      const double tv = truth ? (*truth)(t, static_cast<std::size_t>(c))
                              : std::numeric_limits<double>::quiet_NaN();
      csv.row(t, static_cast<std::size_t>(c), est.means(r, c), est.variances(r, c),
              est.lower(r, c), est.upper(r, c), tv);
    }
  }
}

// Particle genealogy; `survivor` marks ancestors of the final-time particles.
void write_lineage(const std::filesystem::path& path, const ParticleSystem& sys) {
  const std::size_t T = sys.horizon();
  const std::size_t N = sys.count();
  std::vector<char> alive(N, 1);
  std::vector<std::vector<char>> survivor(T);
  survivor[T - 1] = alive;
  for (std::size_t t = T; t >= 2; --t) {
    std::vector<char> prev(N, 0);
    for (std::size_t i = 0; i < N; ++i) {
      if (survivor[t - 1][i]) prev[sys.ancestors(t)[i]] = 1;
    }
    survivor[t - 2] = std::move(prev);
  }
  Csv csv(path, {"t", "particle", "ancestor", "x_0", "weight", "survivor"});
  for (std::size_t t = 1; t <= T; ++t) {
    const auto w = normalize_weights(sys.log_weights(t));
    for (std::size_t i = 0; i < N; ++i) {
      csv.row(t, i, static_cast<std::size_t>(sys.ancestors(t)[i]), sys.particle(t, i)[0], w[i],
              static_cast<std::size_t>(survivor[t - 1][i]));
    }
  }
}

ordered_json chain_diagnostics(const SmoothingChain& chain) {
  ordered_json d;
  const auto& ur = chain.update_rate;
  double sum = 0.0;
  for (double u : ur) sum += u;
  d["ancestor_fallbacks"] = chain.ancestor_fallbacks;
  d["update_rate_min"] = *std::min_element(ur.begin(), ur.end());
  d["update_rate_mean"] = sum / static_cast<double>(ur.size());
  d["update_rate_max"] = *std::max_element(ur.begin(), ur.end());
  d["stored_trajectories"] = chain.trajectories.size();
  d["burn_in"] = chain.burn_in;
  return d;
}

ordered_json finish(const ExperimentConfig& config, ordered_json manifest, const Stopwatch& watch,
                    const std::map<std::string, double>& metrics) {
  manifest["timings_s"] = watch.timings();
  ordered_json m = ordered_json::object();
  for (const auto& [k, v] : metrics) m[k] = v;
  manifest["metrics"] = m;
  write_json(config.output / "manifest.json", manifest);
  return manifest;
}

void prepare_output(const ExperimentConfig& config) {
  std::filesystem::create_directories(config.output);
  set_thread_count(config.threads);
}

// ---------------------------------------------------------------------------
// Model parameters from overrides

template <class T>
void read_if(const json& m, const char* key, T& field) {
  if (m.contains(key)) field = get_as<T>(m, key);
}

models::LgssParameters lgss_parameters(const json& m) {
  models::LgssParameters p;
  read_if(m, "a", p.a);
  read_if(m, "q", p.q);
  read_if(m, "r", p.r);
  read_if(m, "m1", p.m1);
  read_if(m, "p1", p.p1);
  if (m.contains("horizon")) p.horizon = get_count(m, "horizon");
  read_if(m, "input_pole", p.input_pole);
  read_if(m, "input_gain", p.input_gain);
  if (p.horizon < 2 || !(p.q > 0.0) || !(p.r > 0.0) || !(p.p1 > 0.0)) {
    throw ConfigError("lgss: need horizon >= 2 and positive q, r, p1");
  }
  return p;
}

models::LandscapeParameters landscape_parameters(const json& m) {
  models::LandscapeParameters p;
  read_if(m, "x_min", p.x_min);
  read_if(m, "x_max", p.x_max);
  read_if(m, "dx", p.dx);
  if (m.contains("horizon")) p.horizon = get_count(m, "horizon");
  read_if(m, "sigma", p.sigma);
  read_if(m, "ridge_offset", p.ridge_offset);
  read_if(m, "ramp", p.ramp);
  read_if(m, "ridge_width", p.ridge_width);
  read_if(m, "left_penalty", p.left_penalty);
  read_if(m, "valley_start", p.valley_start);
  read_if(m, "valley_end", p.valley_end);
  read_if(m, "valley_level", p.valley_level);
  read_if(m, "floor_level", p.floor_level);
  if (!(p.x_max > p.x_min) || !(p.dx > 0.0) || p.horizon < 2 || !(p.sigma > 0.0) ||
      !(p.ridge_width > 0.0) || !(p.ramp > 0.0)) {
    throw ConfigError("landscape: invalid surface parameters");
  }
  return p;
}

Eigen::Vector3d vec3(const json& m, const char* key) {
  const auto v = get_as<std::vector<double>>(m, key);
  if (v.size() != 3) throw ConfigError(fmt::format("config key '{}' needs 3 values", key));
  return {v[0], v[1], v[2]};
}

struct IndoorSetup {
  models::UwbScene scene;
  models::WalkOptions walk;
  models::InitialPose prior;
};

IndoorSetup indoor_setup(const json& m) {
  IndoorSetup s;
  s.scene = models::UwbScene::default_scene();
  read_if(m, "imu_rate", s.scene.imu_rate);
  read_if(m, "uwb_rate", s.scene.uwb_rate);
  read_if(m, "duration", s.walk.duration);
  read_if(m, "sigma_acc", s.walk.noise.sigma_acc);
  read_if(m, "sigma_gyro", s.walk.noise.sigma_gyro);
  read_if(m, "sigma_pos", s.walk.noise.sigma_pos);
  read_if(m, "sigma_vel", s.walk.noise.sigma_vel);
  if (m.contains("bias_acc")) s.walk.noise.bias_acc = vec3(m, "bias_acc");
  if (m.contains("bias_gyro")) s.walk.noise.bias_gyro = vec3(m, "bias_gyro");
  read_if(m, "alpha", s.walk.error.alpha);
  read_if(m, "uwb_sigma", s.walk.error.sigma);
  read_if(m, "gamma", s.walk.error.gamma);
  read_if(m, "uwb_noise", s.walk.uwb_noise);
  read_if(m, "pulse_jitter", s.walk.max_pulse_jitter);
  read_if(m, "sd_position", s.prior.sd_position);
  read_if(m, "sd_velocity", s.prior.sd_velocity);
  read_if(m, "sd_angle", s.prior.sd_angle);
  if (!(s.walk.duration >= 2.0)) throw ConfigError("indoor: duration must be at least 2 s");
  if (!(s.walk.noise.sigma_acc > 0.0) || !(s.walk.noise.sigma_gyro > 0.0) ||
      !(s.walk.noise.sigma_pos > 0.0) || !(s.walk.noise.sigma_vel >= 0.0)) {
    throw ConfigError("indoor: sigma_acc, sigma_gyro and sigma_pos must be positive");
  }
  try {
    s.scene.validate();
    s.walk.error.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("indoor: {}", e.what()));
  }
  return s;
}

models::HmmParameters hmm_parameters(const json& m) {
  models::HmmParameters p;
  if (m.contains("states")) p.states = get_count(m, "states");
  if (m.contains("horizon")) p.horizon = get_count(m, "horizon");
  read_if(m, "stay", p.stay);
  read_if(m, "emission_sd", p.emission_sd);
  read_if(m, "uniform_emissions", p.uniform_emissions);
  if (p.states < 2 || p.horizon < 1 || !(p.stay >= 0.0 && p.stay <= 1.0) ||
      !(p.emission_sd > 0.0)) {
    throw ConfigError("hmm-oracle: invalid model parameters");
  }
  return p;
}

void validate(const ExperimentConfig& c) {
  if (c.particles < 2) throw ConfigError("N must be at least 2 for the MCMC smoother");
  if (c.iterations < 1) throw ConfigError("K must be at least 1");
  if (c.thinning < 1) throw ConfigError("thinning must be at least 1");
  if (!(c.level > 0.0 && c.level < 1.0)) throw ConfigError("level must lie in (0, 1)");
  if (c.threads < 0) throw ConfigError("threads must be non-negative");
  const std::size_t stored = std::max<std::size_t>(c.iterations / c.thinning, 1);
  const std::size_t burn = c.burn_in.value_or(stored / 10);
  if (burn >= stored) throw ConfigError("burn_in must be smaller than the number of stored iterations");
  if (stored - burn < 10) {
    throw ConfigError("at least 10 trajectories must remain after burn-in");
  }
  if (c.experiment == Experiment::landscape) {
    if (c.filter_particles < 1 || c.ffbsi_particles < 1 || c.draws < 1) {
      throw ConfigError("landscape: filter_particles, ffbsi_particles and M must be positive");
    }
    if (!(c.density_bin > 0.0)) throw ConfigError("landscape: density_bin must be positive");
  }
  if (c.experiment == Experiment::indoor && c.output_stride < 1) {
    throw ConfigError("indoor: output_stride must be positive");
  }
  for (const auto& [key, value] : c.model.items()) {
    if (!contains(model_keys(c.experiment), key)) {
      throw ConfigError(fmt::format("unknown model parameter '{}' for {}", key,
                                    experiment_name(c.experiment)));
    }
  }
  switch (c.experiment) {
    case Experiment::lgss: (void)lgss_parameters(c.model); break;
    case Experiment::landscape: (void)landscape_parameters(c.model); break;
    case Experiment::indoor: (void)indoor_setup(c.model); break;
    case Experiment::hmm_oracle: (void)hmm_parameters(c.model); break;
  }
}

}  // namespace

std::string library_version() { return SMCS_VERSION; }

std::vector<std::string> config_warnings(const ExperimentConfig& config) {
  std::vector<std::string> out;
  if (config.experiment != Experiment::indoor) return out;
  const auto setup = indoor_setup(config.model);
  const double steps = std::floor(setup.walk.duration * setup.scene.imu_rate + 0.5);
  const double work =
      static_cast<double>(config.particles) * static_cast<double>(config.iterations) * steps;
  if (work > kLongRunParticleSteps) {
    out.push_back(fmt::format(
        "long runtime expected: N K T = {:.3g} particle steps (desk-scale default N=100, K=200)",
        work));
  }
  return out;
}

Experiment parse_experiment(std::string_view name) {
  if (name == "lgss") return Experiment::lgss;
  if (name == "landscape") return Experiment::landscape;
  if (name == "indoor") return Experiment::indoor;
  if (name == "hmm-oracle") return Experiment::hmm_oracle;
  throw ConfigError(fmt::format("unknown experiment '{}'", name));
}

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::lgss: return "lgss";
    case Experiment::landscape: return "landscape";
    case Experiment::indoor: return "indoor";
    case Experiment::hmm_oracle: return "hmm-oracle";
  }
  return "?";
}

ordered_json ExperimentConfig::to_json() const {
  ordered_json j;
  j["experiment"] = experiment_name(experiment);
  j["N"] = particles;
  j["K"] = iterations;
  j["M"] = draws;
  j["burn_in"] = burn_in ? ordered_json(*burn_in) : ordered_json(nullptr);
  j["thinning"] = thinning;
  j["seed"] = seed;
  j["level"] = level;
  j["threads"] = threads;
  j["execution"] = execution == Execution::serial ? "serial" : "parallel";
  j["output"] = output.string();
  j["model"] = ordered_json::parse(model.dump());
  j["budget"] = budget;
  j["filter_particles"] = filter_particles;
  j["ffbsi_particles"] = ffbsi_particles;
  j["density_bin"] = density_bin;
  j["output_stride"] = output_stride;
  j["checkpoints"] = checkpoints;
  return j;
}

json default_config(Experiment e) {
  json j;
  j["experiment"] = experiment_name(e);
  j["M"] = 0;
  j["burn_in"] = nullptr;
  j["thinning"] = 1;
  j["seed"] = 1;
  j["level"] = 0.99;
  j["threads"] = 0;
  j["execution"] = "parallel";
  j["output"] = "smcs-out";
  j["model"] = json::object();
  j["budget"] = 0;
  j["filter_particles"] = 0;
  j["ffbsi_particles"] = 0;
  j["density_bin"] = 0.0;
  j["output_stride"] = 0;
  j["checkpoints"] = default_checkpoints(e);
  switch (e) {
    case Experiment::lgss:
      j["N"] = 2;
      j["K"] = 1000;
      j["filter_particles"] = 100;  // lineage.csv
      break;
    case Experiment::landscape:
      j["N"] = 50;
      j["K"] = 0;  // derived from the budget
      j["M"] = 100;
      j["budget"] = 50000;
      j["filter_particles"] = 50000;
      j["ffbsi_particles"] = 500;
      j["density_bin"] = 0.5;
      break;
    case Experiment::indoor:
      j["N"] = 100;
      j["K"] = 200;
      j["output_stride"] = 12;
      break;
    case Experiment::hmm_oracle:
      j["N"] = 5;
      j["K"] = 20000;
      break;
  }
  return j;
}

ExperimentConfig resolve_config(Experiment e, const json& file_in,
                                const std::vector<std::string>& overrides) {
  if (!file_in.is_null() && !file_in.is_object()) throw ConfigError("config must be a JSON object");
  const json& file = (file_in.is_object() && file_in.contains("config") &&
                      file_in.at("config").is_object())
                         ? file_in.at("config")
                         : file_in;
  json doc = default_config(e);
  if (file.is_object()) {
    if (file.contains("experiment") && file.at("experiment") != experiment_name(e)) {
      throw ConfigError(fmt::format("config is for experiment '{}', not '{}'",
                                    file.at("experiment").dump(), experiment_name(e)));
    }
    merge_into(doc, file);
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError(fmt::format("override '{}' is not of the form key=value", o));
    }
    set_path(doc, std::string_view(o).substr(0, eq), parse_value(o.substr(eq + 1)));
  }
  for (const auto& [key, value] : doc.items()) {
    if (!contains(known_keys(), key)) throw ConfigError(fmt::format("unknown config key '{}'", key));
  }
  if (doc.at("experiment") != experiment_name(e)) throw ConfigError("experiment id mismatch");
  if (!doc.at("model").is_object()) throw ConfigError("'model' must be an object");

  ExperimentConfig c;
  c.experiment = e;
  c.particles = get_count(doc, "N");
  c.iterations = get_count(doc, "K");
  c.draws = get_count(doc, "M");
  if (!doc.at("burn_in").is_null()) c.burn_in = get_count(doc, "burn_in");
  c.thinning = get_count(doc, "thinning");
  c.seed = get_as<std::uint64_t>(doc, "seed");
  c.level = get_as<double>(doc, "level");
  c.threads = get_as<int>(doc, "threads");
  const auto exec = get_as<std::string>(doc, "execution");
  if (exec == "serial") {
    c.execution = Execution::serial;
  } else if (exec == "parallel") {
    c.execution = Execution::parallel;
  } else {
    throw ConfigError("execution must be 'serial' or 'parallel'");
  }
  c.output = get_as<std::string>(doc, "output");
  c.model = doc.at("model");
  c.budget = get_count(doc, "budget");
  c.filter_particles = get_count(doc, "filter_particles");
  c.ffbsi_particles = get_count(doc, "ffbsi_particles");
  c.density_bin = get_as<double>(doc, "density_bin");
  c.output_stride = get_count(doc, "output_stride");
  c.checkpoints = get_as<std::vector<std::size_t>>(doc, "checkpoints");
  std::sort(c.checkpoints.begin(), c.checkpoints.end());

  if (e == Experiment::landscape && c.iterations == 0) {
    if (c.particles < 2 || c.budget == 0) throw ConfigError("landscape: K or budget must be set");
    // (N - 1) K freshly sampled particles per time step cover the budget.
    c.iterations = (c.budget + c.particles - 2) / (c.particles - 1);
  }
  validate(c);
  return c;
}

// ---------------------------------------------------------------------------

ExperimentResult run_lgss(const ExperimentConfig& config) {
  prepare_output(config);
  Stopwatch watch;
  ExperimentResult result;
  auto manifest = base_manifest(config);

  watch.start("simulate");
  const auto params = lgss_parameters(config.model);
  const auto inst = models::lgss_model(stream(config, kDataStream), params);
  watch.stop();

  watch.start("oracle");
  const auto kf = kalman_filter(inst.oracle);
  const auto rts = rts_smoother(inst.oracle, kf);
  watch.stop();

  std::optional<FilterResult> pf;
  if (config.filter_particles > 0) {
    watch.start("particle_filter");
    pf = particle_filter(*inst.ssm, config.filter_particles, stream(config, kFilterStream),
                         config.execution);
    watch.stop();
  }

  watch.start("mcmc_smoother");
  const auto chain = mcmc_smoother(*inst.ssm, config.particles, config.iterations,
                                   mean_rollout(*inst.ssm), stream(config, kSmootherStream),
                                   mcmc_options(config));
  watch.stop();

  watch.start("write");
  const auto est = estimate(chain, chain.burn_in, config.level);
  const std::size_t T = params.horizon;
  if (pf) write_lineage(config.output / "lineage.csv", pf->system);
  write_chain(config.output / "chain.csv", chain, 1);
  write_estimate(config.output / "estimate.csv", est, &inst.truth);
  {
    Csv csv(config.output / "oracle.csv", {"t", "component", "mean", "variance", "filtered_mean",
                                            "filtered_variance", "observation", "input"});
    for (std::size_t t = 1; t <= T; ++t) {
      const auto r = static_cast<Eigen::Index>(t - 1);
      csv.row(t, std::size_t{0}, rts.means[t - 1](0), rts.covariances[t - 1](0, 0),
              kf.filtered.means[t - 1](0), kf.filtered.covariances[t - 1](0, 0),
              inst.oracle.observations(r, 0), inst.oracle.inputs(r, 0));
    }
  }
  {
    Csv csv(config.output / "error_vs_k.csv",
            {"iterations", "mean_abs_error", "max_abs_error", "max_rel_sd_error"});
    for (std::size_t k : checkpoints_up_to(config)) {
      const auto e = prefix_estimate(chain, k, config.level);
      if (!e) continue;
      double mean_abs = 0.0, max_abs = 0.0, max_rel = 0.0;
      for (std::size_t t = 1; t <= T; ++t) {
        const double d = std::abs(e->means(static_cast<Eigen::Index>(t - 1), 0) - rts.means[t - 1](0));
        const double sd_ref = std::sqrt(rts.covariances[t - 1](0, 0));
        const double sd = std::sqrt(e->variances(static_cast<Eigen::Index>(t - 1), 0));
        mean_abs += d / static_cast<double>(T);
        max_abs = std::max(max_abs, d);
        max_rel = std::max(max_rel, std::abs(sd - sd_ref) / sd_ref);
      }
      csv.row(k, mean_abs, max_abs, max_rel);
    }
  }
  watch.stop();

  double mean_abs = 0.0, max_abs = 0.0, max_rel = 0.0;
  for (std::size_t t = 1; t <= T; ++t) {
    const auto r = static_cast<Eigen::Index>(t - 1);
    const double d = std::abs(est.means(r, 0) - rts.means[t - 1](0));
    const double sd_ref = std::sqrt(rts.covariances[t - 1](0, 0));
    mean_abs += d / static_cast<double>(T);
    max_abs = std::max(max_abs, d);
    max_rel = std::max(max_rel, std::abs(std::sqrt(est.variances(r, 0)) - sd_ref) / sd_ref);
  }
  result.metrics = {{"mean_abs_mean_error", mean_abs},
                    {"max_abs_mean_error", max_abs},
                    {"max_rel_sd_error", max_rel},
                    {"ancestor_fallbacks", static_cast<double>(chain.ancestor_fallbacks)}};
  manifest["diagnostics"] = chain_diagnostics(chain);
  manifest["per_t"] = {{"update_rate", chain.update_rate}};
  manifest["outputs"] = {"chain.csv", "estimate.csv", "oracle.csv", "error_vs_k.csv"};
  if (pf) {
    manifest["outputs"].push_back("lineage.csv");
    manifest["per_t"]["filter_surviving_ancestors"] = measure_path_degeneracy(*pf);
    result.metrics["filter_time1_ancestors"] =
        static_cast<double>(measure_path_degeneracy(*pf).front());
  }
  result.manifest = finish(config, std::move(manifest), watch, result.metrics);
  return result;
}

// ---------------------------------------------------------------------------

namespace {

struct Density {
  double x_min = 0.0;
  double bin = 1.0;
  std::size_t bins = 0;
  std::size_t horizon = 0;
  std::vector<double> counts;  // horizon x bins

  Density(double lo, double hi, double width, std::size_t T)
      : x_min(lo), bin(width), horizon(T) {
    bins = static_cast<std::size_t>(std::ceil((hi - lo) / width - 1e-9));
    bins = std::max<std::size_t>(bins, 1);
    counts.assign(T * bins, 0.0);
  }
  void add(std::size_t t, double x) {
    auto b = static_cast<long long>(std::floor((x - x_min) / bin));
    b = std::clamp<long long>(b, 0, static_cast<long long>(bins) - 1);
    counts[(t - 1) * bins + static_cast<std::size_t>(b)] += 1.0;
  }
  void write(const std::filesystem::path& path) const {
    Csv csv(path, {"t", "x", "density"});
    for (std::size_t t = 1; t <= horizon; ++t) {
      double total = 0.0;
      for (std::size_t b = 0; b < bins; ++b) total += counts[(t - 1) * bins + b];
      for (std::size_t b = 0; b < bins; ++b) {
        const double v = total > 0.0 ? counts[(t - 1) * bins + b] / total : 0.0;
        csv.row(t, x_min + (static_cast<double>(b) + 0.5) * bin, v);
      }
    }
  }
};

struct RidgeMass {
  double inside = 0.0;
  double total = 0.0;
  [[nodiscard]] double fraction() const { return total > 0.0 ? inside / total : 0.0; }
};

}  // namespace

ExperimentResult run_landscape(const ExperimentConfig& config) {
  prepare_output(config);
  Stopwatch watch;
  ExperimentResult result;
  auto manifest = base_manifest(config);

  watch.start("build");
  const auto params = landscape_parameters(config.model);
  std::shared_ptr<models::LandscapeModel> model;
  if (config.model.contains("grid_file")) {
    const auto grid = models::read_landscape_grid(get_as<std::string>(config.model, "grid_file"));
    model = std::make_shared<models::LandscapeModel>(grid, params.sigma, params.horizon);
  } else {
    model = models::landscape_model(params);
  }
  models::write_landscape_grid(config.output / "landscape_grid.txt", model->grid());
  const std::size_t T = model->horizon();
  watch.stop();

  const double band = 2.0 * params.ridge_width;
  auto near_left = [&](std::size_t t, double x) {
    return std::abs(x - models::left_ridge_center(params, static_cast<double>(t))) <= band;
  };

  watch.start("particle_filter");
  const auto pf = particle_filter(*model, config.filter_particles, stream(config, kFilterStream),
                                  config.execution);
  watch.stop();

  watch.start("ffbsi");
  const auto fb = ffbsi(*model, config.ffbsi_particles, config.draws,
                        stream(config, kFfbsiStream), config.execution);
  Density ffbsi_density(params.x_min, params.x_max, config.density_bin, T);
  RidgeMass ffbsi_mass;
  for (std::size_t t = 1; t <= T; ++t) {
    for (std::size_t i = 0; i < config.ffbsi_particles; ++i) {
      const double x = fb.forward.system.particle(t, i)[0];
      ffbsi_density.add(t, x);
      ffbsi_mass.inside += near_left(t, x) ? 1.0 : 0.0;
      ffbsi_mass.total += 1.0;
    }
  }
  const auto ffbsi_est = estimate(fb.trajectories, config.level);
  watch.stop();

  watch.start("mcmc_smoother");
  Density mcmc_density(params.x_min, params.x_max, config.density_bin, T);
  RidgeMass mcmc_mass;
  auto options = mcmc_options(config);
  const std::size_t free = config.particles - 1;
  options.observer = [&](std::size_t, const CpfasSweep& sweep) {
    for (std::size_t t = 1; t <= T; ++t) {
      for (std::size_t i = 0; i < free; ++i) {
        const double x = sweep.system.particle(t, i)[0];
        mcmc_density.add(t, x);
        mcmc_mass.inside += near_left(t, x) ? 1.0 : 0.0;
        mcmc_mass.total += 1.0;
      }
    }
  };
  const auto chain = mcmc_smoother(*model, config.particles, config.iterations,
                                   mean_rollout(*model), stream(config, kSmootherStream), options);
  const auto est = estimate(chain, chain.burn_in, config.level);
  watch.stop();

  watch.start("write");
  write_chain(config.output / "chain.csv", chain, 1);
  write_estimate(config.output / "estimate.csv", est, nullptr);
  mcmc_density.write(config.output / "density_mcmc.csv");
  ffbsi_density.write(config.output / "density_ffbsi.csv");
  double pf_dist = 0.0, mcmc_dist = 0.0, ffbsi_dist = 0.0;
  std::size_t window = 0;
  {
    Csv csv(config.output / "paths.csv",
            {"t", "left_center", "right_center", "filter_mean", "ffbsi_mean", "mcmc_mean",
             "mcmc_lower", "mcmc_upper"});
    for (std::size_t t = 1; t <= T; ++t) {
      const auto r = static_cast<Eigen::Index>(t - 1);
      const double left = models::left_ridge_center(params, static_cast<double>(t));
      const double right = models::right_ridge_center(params, static_cast<double>(t));
      csv.row(t, left, right, pf.filtered_means(r, 0), ffbsi_est.means(r, 0), est.means(r, 0),
              est.lower(r, 0), est.upper(r, 0));
      if (t >= 30 && t <= 60) {
        pf_dist += std::abs(pf.filtered_means(r, 0) - left);
        mcmc_dist += std::abs(est.means(r, 0) - left);
        ffbsi_dist += std::abs(ffbsi_est.means(r, 0) - left);
        ++window;
      }
    }
  }
  watch.stop();

  const double w = static_cast<double>(std::max<std::size_t>(window, 1));
  result.metrics = {
      {"filter_left_distance", pf_dist / w},
      {"mcmc_left_distance", mcmc_dist / w},
      {"ffbsi_left_distance", ffbsi_dist / w},
      {"mcmc_left_mass", mcmc_mass.fraction()},
      {"ffbsi_left_mass", ffbsi_mass.fraction()},
      {"mcmc_sampled_per_step", static_cast<double>(free * config.iterations)},
      {"ffbsi_sampled", static_cast<double>(config.ffbsi_particles * config.draws)},
      {"ancestor_fallbacks", static_cast<double>(chain.ancestor_fallbacks)}};
  manifest["diagnostics"] = chain_diagnostics(chain);
  manifest["budget"] = {{"configured", config.budget},
                        {"mcmc_sampled_per_step", free * config.iterations},
                        {"filter_particles_per_step", config.filter_particles},
                        {"ffbsi_forward_times_draws", config.ffbsi_particles * config.draws}};
  manifest["per_t"] = {{"update_rate", chain.update_rate}, {"filter_ess", pf.ess}};
  manifest["outputs"] = {"chain.csv",         "estimate.csv",      "paths.csv",
                         "density_mcmc.csv",  "density_ffbsi.csv", "landscape_grid.txt"};
  result.manifest = finish(config, std::move(manifest), watch, result.metrics);
  return result;
}

// ---------------------------------------------------------------------------

ExperimentResult run_indoor(const ExperimentConfig& config) {
  prepare_output(config);
  Stopwatch watch;
  ExperimentResult result;
  auto manifest = base_manifest(config);
  ordered_json warnings = ordered_json::array();

  watch.start("simulate");
  const auto setup = indoor_setup(config.model);
  const auto data = models::generate_uwb_walk(setup.scene, setup.walk, stream(config, kDataStream));
  models::write_uwb_dataset(config.output / "dataset", data, config.seed);
  auto shifted = data;
  shifted.start.sd_position = setup.prior.sd_position;
  shifted.start.sd_velocity = setup.prior.sd_velocity;
  shifted.start.sd_angle = setup.prior.sd_angle;
  const auto model = models::imu_uwb_model(shifted);
  const std::size_t T = model->horizon();
  watch.stop();

  for (const auto& w : config_warnings(config)) {
    warnings.push_back(w);
    std::cerr << "warning: " << w << '\n';
  }

  watch.start("mcmc_smoother");
  const auto chain = mcmc_smoother(*model, config.particles, config.iterations,
                                   mean_rollout(*model), stream(config, kSmootherStream),
                                   mcmc_options(config));
  const auto est = estimate(chain, chain.burn_in, config.level);
  watch.stop();

  watch.start("write");
  write_chain(config.output / "chain.csv", chain, config.output_stride);
  write_estimate(config.output / "estimate.csv", est, &data.truth);

  double se = 0.0;
  std::size_t covered = 0;
  std::array<std::size_t, 3> covered_axis{0, 0, 0};
  for (std::size_t t = 1; t <= T; ++t) {
    const auto r = static_cast<Eigen::Index>(t - 1);
    bool all = true;
    for (Eigen::Index k = 0; k < 3; ++k) {
      const double truth = data.truth(t, static_cast<std::size_t>(k));
      se += (est.means(r, k) - truth) * (est.means(r, k) - truth);
      const bool in = truth >= est.lower(r, k) && truth <= est.upper(r, k);
      covered_axis[static_cast<std::size_t>(k)] += in ? 1 : 0;
      all = all && in;
    }
    covered += all ? 1 : 0;
  }

  // Orientation: sign-aligned average of the retained quaternions.
  {
    Csv csv(config.output / "orientation.csv",
            {"t", "qw", "qx", "qy", "qz", "roll", "pitch", "yaw", "truth_roll", "truth_pitch",
             "truth_yaw"});
    const auto retained = std::span(chain.trajectories).subspan(chain.burn_in);
    for (std::size_t t = 1; t <= T; ++t) {
      Eigen::Vector4d acc = Eigen::Vector4d::Zero();
      Eigen::Vector4d ref;
      for (std::size_t s = 0; s < retained.size(); ++s) {
        const auto x = retained[s].state(t);
        Eigen::Vector4d q(x[6], x[7], x[8], x[9]);
        if (s == 0) ref = q;
        if (q.dot(ref) < 0.0) q = -q;
        acc += q;
      }
      acc.normalize();
      const models::Quaternion mean(acc(0), acc(1), acc(2), acc(3));
      const auto rpy = models::roll_pitch_yaw(mean);
      const auto truth_rpy =
          models::roll_pitch_yaw(models::load_quaternion(data.truth.state(t).subspan(6, 4)));
      csv.row(t, acc(0), acc(1), acc(2), acc(3), rpy(0), rpy(1), rpy(2), truth_rpy(0),
              truth_rpy(1), truth_rpy(2));
    }
  }
  watch.stop();

  const double Td = static_cast<double>(T);
  result.metrics = {
      {"position_rmse", std::sqrt(se / Td)},
      {"position_coverage", static_cast<double>(covered) / Td},
      {"coverage_x", static_cast<double>(covered_axis[0]) / Td},
      {"coverage_y", static_cast<double>(covered_axis[1]) / Td},
      {"coverage_z", static_cast<double>(covered_axis[2]) / Td},
      {"ancestor_fallbacks", static_cast<double>(chain.ancestor_fallbacks)}};
  manifest["warnings"] = warnings;
  manifest["diagnostics"] = chain_diagnostics(chain);
  manifest["per_t"] = {{"update_rate", chain.update_rate}};
  manifest["outputs"] = {"chain.csv", "estimate.csv", "orientation.csv", "dataset/"};
  result.manifest = finish(config, std::move(manifest), watch, result.metrics);
  return result;
}

// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd occupancy(std::span<const Trajectory> samples, std::size_t states) {
  const std::size_t T = samples.front().horizon();
  Eigen::MatrixXd occ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T),
                                              static_cast<Eigen::Index>(states));
  for (const auto& tr : samples) {
    for (std::size_t t = 1; t <= T; ++t) {
      const auto s = static_cast<Eigen::Index>(std::llround(tr(t, 0)));
      occ(static_cast<Eigen::Index>(t - 1), s) += 1.0;
    }
  }
  return occ / static_cast<double>(samples.size());
}

double max_tv(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return 0.5 * (a - b).cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

ExperimentResult run_hmm_oracle(const ExperimentConfig& config) {
  prepare_output(config);
  Stopwatch watch;
  ExperimentResult result;
  auto manifest = base_manifest(config);

  watch.start("build");
  const auto params = hmm_parameters(config.model);
  const auto inst = models::hmm_model(stream(config, kDataStream), params);
  const Eigen::MatrixXd exact = hmm_forward_backward(inst.oracle);
  const std::size_t T = params.horizon;
  const std::size_t S = params.states;
  watch.stop();

  watch.start("mcmc_smoother");
  const auto chain = mcmc_smoother(*inst.ssm, config.particles, config.iterations,
                                   mean_rollout(*inst.ssm), stream(config, kSmootherStream),
                                   mcmc_options(config));
  const auto retained = std::span(chain.trajectories).subspan(chain.burn_in);
  const Eigen::MatrixXd empirical = occupancy(retained, S);
  watch.stop();

  watch.start("write");
  write_chain(config.output / "chain.csv", chain, 1);
  write_estimate(config.output / "estimate.csv", estimate(chain, chain.burn_in, config.level),
                 nullptr);
  {
    Csv csv(config.output / "oracle.csv", {"t", "state", "probability"});
    for (std::size_t t = 1; t <= T; ++t) {
      for (std::size_t s = 0; s < S; ++s) {
        csv.row(t, s, exact(static_cast<Eigen::Index>(t - 1), static_cast<Eigen::Index>(s)));
      }
    }
  }
  {
    Csv csv(config.output / "marginals.csv", {"t", "state", "empirical", "exact"});
    for (std::size_t t = 1; t <= T; ++t) {
      for (std::size_t s = 0; s < S; ++s) {
        const auto r = static_cast<Eigen::Index>(t - 1);
        const auto c = static_cast<Eigen::Index>(s);
        csv.row(t, s, empirical(r, c), exact(r, c));
      }
    }
  }
  std::vector<double> tv_per_t(T);
  for (std::size_t t = 0; t < T; ++t) {
    const auto r = static_cast<Eigen::Index>(t);
    tv_per_t[t] = 0.5 * (empirical.row(r) - exact.row(r)).cwiseAbs().sum();
  }
  {
    Csv csv(config.output / "tv_vs_k.csv", {"iterations", "max_tv"});
    for (std::size_t k : checkpoints_up_to(config)) {
      const std::size_t stored = std::min(chain.trajectories.size(), k / chain.thinning);
      const std::size_t burn = stored / 10;
      if (stored <= burn) continue;
      const auto part = std::span(chain.trajectories).subspan(burn, stored - burn);
      csv.row(k, max_tv(occupancy(part, S), exact));
    }
  }
  watch.stop();

  result.metrics = {{"max_tv", max_tv(empirical, exact)},
                    {"ancestor_fallbacks", static_cast<double>(chain.ancestor_fallbacks)}};
  manifest["diagnostics"] = chain_diagnostics(chain);
  manifest["per_t"] = {{"update_rate", chain.update_rate}, {"tv", tv_per_t}};
  manifest["outputs"] = {"chain.csv", "estimate.csv", "oracle.csv", "marginals.csv",
                         "tv_vs_k.csv"};
  result.manifest = finish(config, std::move(manifest), watch, result.metrics);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  switch (config.experiment) {
    case Experiment::lgss: return run_lgss(config);
    case Experiment::landscape: return run_landscape(config);
    case Experiment::indoor: return run_indoor(config);
    case Experiment::hmm_oracle: return run_hmm_oracle(config);
  }
  throw ConfigError("unknown experiment");
}

void write_failure_manifest(const ExperimentConfig& config, std::string_view kind,
                            std::string_view message, std::optional<std::size_t> time) {
  std::filesystem::create_directories(config.output);
  auto manifest = base_manifest(config);
  manifest["error"] = {{"kind", kind}, {"message", message}};
  if (time) manifest["error"]["time"] = *time;
  write_json(config.output / "manifest.json", manifest);
}

}  // namespace smcs::experiments
