#include "qsee/errors.hpp"
#include "qsee/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

int report(int code, const std::string& kind, const std::string& message) {
  std::cerr << qsee::Json{{"error", {{"exit_code", code}, {"kind", kind}, {"message", message}}}}.dump() << '\n';
  return code;
}

qsee::Json load(const std::string& file, const std::vector<std::string>& overrides, const std::string& seed,
                int paths) {
  std::ifstream in(file);
  if (!in) throw qsee::ConfigError("cannot open config " + file);
  qsee::Json user = qsee::Json::parse(in);
  qsee::Json config = qsee::resolve_config(user);
  if (!seed.empty()) qsee::apply_override(config, "noise.seed=" + seed);
  if (paths > 0) config["n_paths"] = paths;
  for (const auto& o : overrides) qsee::apply_override(config, o);
  qsee::validate_config(config);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Localized solver for quasilinear stochastic evolution equations"};
  app.set_version_flag("--version", QSEE_VERSION);
  app.require_subcommand(1);

  std::string config_file;
  std::string out_dir = "out";
  std::string seed;
  int paths = 0;
  std::vector<std::string> overrides;
  std::vector<std::string> grid;

  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("config", config_file, "JSON config")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--paths", paths, "number of Monte Carlo paths")->check(CLI::PositiveNumber);
  run->add_option("--override", overrides, "key=value, dotted keys")->take_all();

  auto* sweep = app.add_subcommand("sweep", "Cartesian sweep over config overrides");
  sweep->add_option("config", config_file, "JSON config template")->required();
  sweep->add_option("--grid", grid, "key=v1,v2,...")->required()->take_all();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--seed", seed, "master seed");
  sweep->add_option("--paths", paths, "number of Monte Carlo paths")->check(CLI::PositiveNumber);
  sweep->add_option("--override", overrides, "key=value applied to every point")->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : qsee::exit_config;
  }

  try {
    const qsee::Json config = load(config_file, overrides, seed, paths);
    if (*run) {
      const auto result = qsee::run_experiment(config, out_dir);
      std::cout << result.summary.dump() << '\n';
      return result.exit_code;
    }
    return qsee::run_sweep(config, grid, out_dir);
  } catch (const qsee::ConfigError& e) {
    return report(qsee::exit_config, "config", e.what());
  } catch (const qsee::Json::exception& e) {
    return report(qsee::exit_config, "config", e.what());
  } catch (const std::exception& e) {
    return report(qsee::exit_runtime, "runtime", e.what());
  }
}
