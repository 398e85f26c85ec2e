#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "smcs/experiments.hpp"

namespace fs = std::filesystem;
using namespace smcs::experiments;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(SMCS_TEST_TMP) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> csv_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.path().extension() == ".csv") out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

ExperimentConfig small(Experiment e, const std::string& out, std::vector<std::string> extra = {}) {
  extra.push_back("output=\"" + scratch(out).string() + "\"");
  return resolve_config(e, json::object(), extra);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SMCS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("experiment names") {
  CHECK(parse_experiment("hmm-oracle") == Experiment::hmm_oracle);
  CHECK(experiment_name(Experiment::landscape) == "landscape");
  CHECK_THROWS_AS((void)parse_experiment("fig5"), ConfigError);
}

TEST_CASE("config resolution") {
  SUBCASE("defaults") {
    const auto c = resolve_config(Experiment::lgss, json::object(), {});
    CHECK(c.particles == 2);
    CHECK(c.iterations == 1000);
    CHECK(c.level == 0.99);
    const auto i = resolve_config(Experiment::indoor, json::object(), {});
    CHECK(i.particles == 100);
    CHECK(i.iterations == 200);
  }
  SUBCASE("file, then overrides") {
    const json file = {{"N", 7}, {"model", {{"q", 0.5}}}};
    const auto c = resolve_config(Experiment::lgss, file,
                                  {"K=300", "model.horizon=40", "execution=serial", "burn_in=20"});
    CHECK(c.particles == 7);
    CHECK(c.iterations == 300);
    CHECK(c.model.at("q") == 0.5);
    CHECK(c.model.at("horizon") == 40);
    CHECK(c.execution == smcs::Execution::serial);
    CHECK(c.burn_in == std::optional<std::size_t>(20));
  }
  SUBCASE("manifest echo is accepted") {
    const auto first = resolve_config(Experiment::hmm_oracle, json::object(), {"K=900", "seed=4"});
    const json manifest = {{"config", json::parse(first.to_json().dump())}, {"metrics", json::object()}};
    const auto again = resolve_config(Experiment::hmm_oracle, manifest, {});
    CHECK(again.to_json() == first.to_json());
  }
  SUBCASE("landscape iterations follow the budget") {
    const auto c = resolve_config(Experiment::landscape, json::object(), {});
    const long long sampled = static_cast<long long>((c.particles - 1) * c.iterations);
    CHECK(std::llabs(sampled - 50000) <= static_cast<long long>(c.particles));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS((void)resolve_config(Experiment::lgss, json::object(), {"N=1"}), ConfigError);
    CHECK_THROWS_AS((void)resolve_config(Experiment::lgss, json::object(), {"K=0"}), ConfigError);
    CHECK_THROWS_AS((void)resolve_config(Experiment::lgss, json::object(), {"colour=3"}), ConfigError);
    CHECK_THROWS_AS((void)resolve_config(Experiment::lgss, json::object(), {"model.zz=3"}), ConfigError);
    CHECK_THROWS_AS((void)resolve_config(Experiment::lgss, json::object(), {"execution=fast"}),
                    ConfigError);
    CHECK_THROWS_AS((void)resolve_config(Experiment::lgss, json::object(), {"N=-2"}), ConfigError);
    CHECK_THROWS_AS((void)resolve_config(Experiment::lgss, json::object(), {"noequals"}), ConfigError);
    CHECK_THROWS_AS((void)resolve_config(Experiment::lgss, json::object(), {"K=50", "burn_in=45"}),
                    ConfigError);
    CHECK_THROWS_AS((void)resolve_config(Experiment::lgss, json{{"experiment", "indoor"}}, {}),
                    ConfigError);
    CHECK_THROWS_AS((void)resolve_config(Experiment::indoor, json::object(), {"model.alpha=3"}),
                    ConfigError);
  }
}

TEST_CASE("large indoor config is accepted with a warning") {
  const auto c = resolve_config(Experiment::indoor, json::object(), {"N=500", "K=1000"});
  CHECK(config_warnings(c).size() == 1);
  CHECK(config_warnings(resolve_config(Experiment::indoor, json::object(), {})).empty());
}

TEST_CASE("lgss output bundle and determinism") {
  const auto a = small(Experiment::lgss, "lgss-a", {"K=120"});
  const auto b = small(Experiment::lgss, "lgss-b", {"K=120"});
  const auto ra = run_lgss(a);
  (void)run_lgss(b);
  const auto fa = csv_files(a.output), fb = csv_files(b.output);
  CHECK(fa.size() == 5);
  CHECK(fa == fb);
  std::istringstream chain(fa.at("chain.csv"));
  std::string line;
  std::getline(chain, line);
  CHECK(std::count(line.begin(), line.end(), ',') == 81);
  std::size_t rows = 0;
  while (std::getline(chain, line)) ++rows;
  CHECK(rows == 120);
  CHECK(ra.manifest.at("metrics").contains("max_abs_mean_error"));
  CHECK(fs::exists(a.output / "manifest.json"));
}

TEST_CASE("hmm-oracle bundle") {
  const auto c = small(Experiment::hmm_oracle, "hmm", {"K=2000"});
  const auto r = run_hmm_oracle(c);
  CHECK(r.metrics.at("max_tv") < 0.1);
  CHECK(fs::exists(c.output / "tv_vs_k.csv"));
  CHECK(fs::exists(c.output / "marginals.csv"));
}

TEST_CASE("uniform emissions recover the prior chain marginals") {
  const auto c = small(Experiment::hmm_oracle, "hmm-flat", {"K=20000", "model.uniform_emissions=true"});
  CHECK(run_hmm_oracle(c).metrics.at("max_tv") <= 0.03);
}

TEST_CASE("landscape bundle") {
  const auto c = small(Experiment::landscape, "landscape",
                       {"budget=2000", "filter_particles=500", "ffbsi_particles=50", "M=40"});
  const auto r = run_landscape(c);
  CHECK(r.manifest.at("budget").at("mcmc_sampled_per_step").get<long long>() >= 2000 - 50);
  for (const char* name : {"density_mcmc.csv", "density_ffbsi.csv"}) {
    std::ifstream in(c.output / name);
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,x,density");
    double total = 0.0;
    while (std::getline(in, line)) total += std::stod(line.substr(line.rfind(',') + 1));
    CHECK(total == doctest::Approx(100.0).epsilon(1e-9));
  }
  const auto again = small(Experiment::landscape, "landscape-2",
                           {"budget=2000", "filter_particles=500", "ffbsi_particles=50", "M=40"});
  (void)run_landscape(again);
  CHECK(csv_files(c.output) == csv_files(again.output));
}

TEST_CASE("indoor bundle") {
  const std::vector<std::string> o = {"N=8", "K=12", "model.duration=2"};
  const auto c = small(Experiment::indoor, "indoor", o);
  const auto r = run_indoor(c);
  CHECK(r.metrics.count("position_rmse") == 1);
  CHECK(fs::exists(c.output / "dataset" / "truth.csv"));
  CHECK(fs::exists(c.output / "dataset" / "scene.json"));
  std::ifstream in(c.output / "orientation.csv");
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    CHECK(std::abs(v[1] * v[1] + v[2] * v[2] + v[3] * v[3] + v[4] * v[4] - 1.0) < 1e-9);
    ++rows;
  }
  CHECK(rows == 240);
  const auto again = small(Experiment::indoor, "indoor-2", o);
  (void)run_indoor(again);
  CHECK(csv_files(c.output) == csv_files(again.output));
}

TEST_CASE("command-line exit codes") {
  const auto out = scratch("cli");
  CHECK(run_cli("lgss --out " + out.string() + " --override K=40") == 0);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(run_cli("nonsense") == 2);
  CHECK(run_cli("lgss --override colour=1") == 2);
  CHECK(run_cli("lgss --config /no/such/file.json") == 2);
  CHECK(run_cli("lgss --bogus-flag") == 2);

  const auto bad = scratch("cli-degenerate");
  CHECK(run_cli("lgss --out " + bad.string() + " --override model.r=1e-320") == 3);
  const auto manifest = json::parse(slurp(bad / "manifest.json"));
  CHECK(manifest.at("error").at("kind") == "degenerate_weights");
  CHECK(manifest.at("error").at("time") == 1);
}

TEST_CASE("command line runs from a config file and is reproducible") {
  const auto dir = scratch("cli-config");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"N": 3, "K": 60, "model": {"horizon": 30}})";
  }
  const auto a = dir / "a", b = dir / "b";
  CHECK(run_cli("lgss --config " + (dir / "cfg.json").string() + " --seed 9 --threads 2 --out " + a.string()) == 0);
  CHECK(run_cli("lgss --config " + (a / "manifest.json").string() + " --out " + b.string()) == 0);
  CHECK(csv_files(a) == csv_files(b));
  CHECK(json::parse(slurp(b / "manifest.json")).at("config").at("seed") == 9);
}
