#pragma once

// Configuration, experiment orchestration and CSV/JSON output.

#include "qsee/localizer.hpp"
#include "qsee/model_spec.hpp"
#include "qsee/mr_constants.hpp"
#include "qsee/noise.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace qsee {

using Json = nlohmann::json;

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_runtime = 3, exit_property = 4 };

/// Every key with its default; user configs are merged over this.
Json default_config();

/// Deep merge of `user` over the defaults followed by validation.
Json resolve_config(const Json& user);

/// Applies "a.b.c=value"; value is parsed as JSON when possible, else kept
/// as a string. An empty value leaves the config unchanged.
void apply_override(Json& config, const std::string& assignment);

/// Throws ConfigError on any inconsistent field.
void validate_config(const Json& config);

struct BuiltModel {
  std::shared_ptr<const SpaceTriple> triple;
  ModelSpec model;
  GridField u0;
};

BuiltModel build_model(const Json& config);
GridField build_initial_state(const Json& u0_config, const GridShape& shape);

struct ResolvedBudget {
  SmallnessBudget budget;
  MRConstants mr;
  double margin;
};

/// Fills "auto" entries: C_Q by sampling, L-constants by an ε-split of the
/// model's Lipschitz data, λ by choose_lambda.
ResolvedBudget resolve_budget(const Json& config, const ModelSpec& model);

NoiseSpec noise_spec(const Json& config);
Caps caps_from(const Json& config);

struct RunSummary {
  int exit_code = exit_ok;
  Json summary;
};

/// Runs the configured experiment and writes manifest.json, results.csv and
/// optional series files into out_dir.
RunSummary run_experiment(const Json& config, const std::filesystem::path& out_dir);

/// Cartesian product of "key=v1,v2,..." axes; one point_### directory per
/// combination and a summary.csv. Returns the worst exit code.
int run_sweep(const Json& base, const std::vector<std::string>& grid, const std::filesystem::path& out_dir);

/// Formats with 17 significant digits.
std::string format_real(double v);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qsee
