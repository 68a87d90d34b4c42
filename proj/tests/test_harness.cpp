#include "qsee/errors.hpp"
#include "qsee/harness.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qsee;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& file) {
  std::ifstream in(file);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qsee_test_" + name);
  fs::remove_all(dir);
  return dir;
}

Json small(const std::string& experiment) {
  Json c = resolve_config(Json::object());
  c["experiment"] = experiment;
  c["n_paths"] = 2;
  c["noise"]["T"] = 0.01;
  c["triple"]["N"] = 32;
  return c;
}

std::string header(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS(resolve_config(Json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Json{{"experiment", "nope"}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Json{{"triple", {{"p", 3.0}, {"q", 3.0}}}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Json{{"model", {{"diffusivity", "linear"}}}}), ConfigError);
  CHECK_NOTHROW(resolve_config(Json::object()));
}

TEST_CASE("overrides") {
  Json c = resolve_config(Json::object());
  const Json before = c;
  apply_override(c, "noise.seed=");
  CHECK(c == before);
  apply_override(c, "noise.seed=7");
  CHECK(c["noise"]["seed"] == 7);
  apply_override(c, "model.flux=burgers");
  CHECK(c["model"]["flux"] == "burgers");
  CHECK_THROWS_AS(apply_override(c, "noise.nothing=1"), ConfigError);
}

TEST_CASE("localized_run schema and byte-identical reruns") {
  const Json c = small("localized_run");
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  CHECK(run_experiment(c, a).exit_code == exit_ok);
  CHECK(run_experiment(c, b).exit_code == exit_ok);
  CHECK(header(a / "results.csv") == "path,anchor_index,tau_n,monitor_lp,termination");
  CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  const Json manifest = Json::parse(slurp(a / "manifest.json"));
  CHECK(manifest["seed"] == 42);
  CHECK(manifest["config"] == c);
}

TEST_CASE("series files") {
  Json c = small("localized_run");
  c["write_series"] = true;
  const fs::path dir = scratch("series");
  run_experiment(c, dir);
  CHECK(header(dir / "series_0.csv") == "t,norm_E,norm_Ep,norm_E1,theta,monitor");
  CHECK(fs::exists(dir / "series_1.csv"));
}

TEST_CASE("ou_convergence schema") {
  Json c = small("ou_convergence");
  c["ou"]["T"] = 0.01;
  const fs::path dir = scratch("ou");
  const RunSummary r = run_experiment(c, dir);
  CHECK(header(dir / "results.csv") == "dt,strong_error,weak_mean_error,weak_var_error");
  CHECK(r.summary.contains("strong_slope"));
  CHECK(Json::parse(slurp(dir / "manifest.json"))["summary"].contains("strong_slope"));
}

TEST_CASE("sweep with an empty override reproduces the base run") {
  const Json c = small("localized_run");
  const fs::path base = scratch("sweep_base"), sweep = scratch("sweep");
  run_experiment(c, base);
  CHECK(run_sweep(c, {"budget.lambda=,0.005"}, sweep) == exit_ok);
  CHECK(slurp(sweep / "point_000" / "results.csv") == slurp(base / "results.csv"));
  CHECK(slurp(sweep / "point_001" / "results.csv") != slurp(base / "results.csv"));
  CHECK(fs::exists(sweep / "summary.csv"));
}

TEST_CASE("sweep records failing points and continues") {
  const Json c = small("localized_run");
  const fs::path sweep = scratch("sweep_fail");
  CHECK(run_sweep(c, {"budget.lambda=0.05,-1,0.2"}, sweep) == exit_config);
  CHECK(fs::exists(sweep / "point_001" / "error.json"));
  CHECK(fs::exists(sweep / "point_002" / "results.csv"));
  CHECK_THROWS_AS(run_sweep(c, {}, sweep), ConfigError);
}

TEST_CASE("property suite passes at defaults") {
  Json c = resolve_config(Json::object());
  c["experiment"] = "property_suite";
  const fs::path dir = scratch("props");
  CHECK(run_experiment(c, dir).exit_code == exit_ok);
  CHECK(header(dir / "results.csv") == "property,passed,value,detail");
}

TEST_CASE("loglog_slope") {
  CHECK(loglog_slope({1.0, 2.0, 4.0}, {3.0, 12.0, 48.0}) == doctest::Approx(2.0));
  CHECK(format_real(0.1) == "0.10000000000000001");
}
