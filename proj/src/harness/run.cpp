#include "qsee/errors.hpp"
#include "qsee/experiments.hpp"
#include "qsee/harness.hpp"

#include <fstream>
#include <sstream>

namespace qsee {

namespace {

namespace fs = std::filesystem;

class CsvWriter {
 public:
  CsvWriter(const fs::path& file, const std::vector<std::string>& header) : out_(file) {
    if (!out_) throw NumericalError("cannot write " + file.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

std::string cell(double v) { return format_real(v); }
std::string cell(int v) { return std::to_string(v); }
std::string cell(bool v) { return v ? "true" : "false"; }

Json budget_json(const ResolvedBudget& rb) {
  return {{"C_Q", rb.budget.C_Q},          {"L_F1", rb.budget.L_F1},     {"L_F2", rb.budget.L_F2},
          {"L_B1", rb.budget.L_B1},        {"L_B2", rb.budget.L_B2},     {"lambda", rb.budget.lambda},
          {"c_mrd_hat", rb.mr.c_mrd_hat},  {"c_mrs_hat", rb.mr.c_mrs_hat}, {"margin", rb.margin},
          {"smallness", rb.budget.smallness(rb.mr)}};
}

void write_series(const fs::path& file, const LocalizedRun& run, const SpaceTriple& triple) {
  CsvWriter csv(file, {"t", "norm_E", "norm_Ep", "norm_E1", "theta", "monitor"});
  for (std::size_t m = 0; m < run.states.size(); ++m) {
    const GridField& u = run.states[m];
    csv.row({cell(run.times[m]), cell(triple.norm_E(u)), cell(triple.norm_Ep(u)), cell(triple.norm_E1(u)),
             cell(run.theta[m]), cell(run.monitor[m])});
  }
}

Json run_localized_experiment(const Json& c, const fs::path& dir) {
  const bool series = c["write_series"].get<bool>();
  const auto runs = localized_study(c, series);
  const BuiltModel bm = build_model(c);
  CsvWriter csv(dir / "results.csv", {"path", "anchor_index", "tau_n", "monitor_lp", "termination"});
  Json counts = {{"reached_T", 0}, {"blow_up_flag", 0}, {"step_floor", 0}};
  double anchors = 0.0;
  for (const auto& r : runs) {
    const std::string term = to_string(r.run.record.termination);
    counts[term] = counts[term].get<int>() + 1;
    anchors += static_cast<double>(r.run.record.anchors.size());
    const int path = c["path_offset"].get<int>() + r.path;
    for (std::size_t a = 0; a < r.run.record.anchors.size(); ++a) {
      const Anchor& an = r.run.record.anchors[a];
      csv.row({cell(path), cell(static_cast<int>(a)), cell(an.time), cell(an.monitor_lp), term});
    }
    if (series) write_series(dir / ("series_" + std::to_string(path) + ".csv"), r.run, *bm.triple);
  }
  return {{"terminations", counts},
          {"mean_anchor_count", anchors / static_cast<double>(runs.size())},
          {"budget", budget_json(resolve_budget(c, bm.model))}};
}

Json run_ou(const Json& c, const fs::path& dir) {
  const OuStudy s = ou_convergence_study(c);
  CsvWriter csv(dir / "results.csv", {"dt", "strong_error", "weak_mean_error", "weak_var_error"});
  for (std::size_t l = 0; l < s.dts.size(); ++l)
    csv.row({cell(s.dts[l]), cell(s.strong_error[l]), cell(s.weak_mean_error[l]), cell(s.weak_var_error[l])});
  Json modes = Json::array();
  for (const auto& m : s.modes)
    modes.push_back({{"mode", m.mode},
                     {"rate", m.rate},
                     {"exact_mean", m.exact_mean},
                     {"empirical_mean", m.empirical_mean},
                     {"mean_se", m.mean_se},
                     {"exact_variance", m.exact_variance},
                     {"empirical_variance", m.empirical_variance},
                     {"variance_se", m.variance_se},
                     {"within_3se", m.within_3se()}});
  return {{"strong_slope", s.strong_slope}, {"modes_at_finest_dt", modes}};
}

Json run_hierarchy(const Json& c, const fs::path& dir) {
  const auto paths = hierarchy_study(c);
  CsvWriter csv(dir / "results.csv", {"path", "level_n", "gamma_member", "sigma_n", "termination"});
  int violations = 0;
  int failures = 0;
  for (const auto& p : paths) {
    violations += p.monotonicity_violations;
    failures += p.equality_failures;
    for (std::size_t j = 0; j < p.levels.size(); ++j)
      csv.row({cell(c["path_offset"].get<int>() + p.path), cell(p.levels[j]), cell(static_cast<bool>(p.members[j])),
               cell(p.sigma[j]), p.termination[j]});
  }
  return {{"monotonicity_violations", violations}, {"equality_failures", failures}};
}

Json run_moment(const Json& c, const fs::path& dir) {
  const auto reports = moment_study(c);
  CsvWriter csv(dir / "results.csv", {"alpha", "scale", "u0_norm", "empirical_lhs", "std_error", "ratio", "used_paths",
                                      "excluded_paths"});
  Json summary = Json::array();
  for (const auto& r : reports) {
    for (const auto& s : r.u0_scale_sweep)
      csv.row({cell(r.alpha), cell(s.scale), cell(s.u0_norm), cell(s.empirical_lhs), cell(s.std_error), cell(s.ratio),
               cell(s.used_paths), cell(s.excluded_paths)});
    summary.push_back({{"alpha", r.alpha}, {"ratio_variation", r.ratio_variation()}, {"valid", r.valid}});
  }
  return {{"reports", summary}};
}

Json run_mr(const Json& c, const fs::path& dir) {
  const auto rows = mr_study(c);
  CsvWriter csv(dir / "results.csv", {"n_samples", "c_mrd_hat", "c_mrs_hat"});
  for (const auto& r : rows) csv.row({cell(r.n_samples), cell(r.c_mrd_hat), cell(r.c_mrs_hat)});
  const BuiltModel bm = build_model(c);
  return {{"budget", budget_json(resolve_budget(c, bm.model))}};
}

Json run_picard(const Json& c, const fs::path& dir) {
  const auto inst = picard_study(c);
  CsvWriter csv(dir / "results.csv", {"instance", "iteration", "distance", "ratio"});
  double worst = 0.0;
  for (const auto& p : inst) {
    for (std::size_t k = 0; k < p.distances.size(); ++k)
      csv.row({cell(p.instance), cell(static_cast<int>(k)), cell(p.distances[k]),
               k == 0 ? std::string() : cell(p.ratios[k - 1])});
    for (std::size_t k = 2; k < p.ratios.size() + 1; ++k) worst = std::max(worst, p.ratios[k - 1]);
  }
  return {{"max_ratio_past_second", worst},
          {"lambda", inst.empty() ? 0.0 : inst.front().lambda},
          {"smallness", inst.empty() ? 0.0 : inst.front().smallness}};
}

Json run_ito(const Json& c, const fs::path& dir) {
  const ItoStudy s = ito_residual_study(c);
  CsvWriter csv(dir / "results.csv", {"dt", "residual"});
  for (std::size_t l = 0; l < s.dts.size(); ++l) csv.row({cell(s.dts[l]), cell(s.residuals[l])});
  return {{"slope", s.slope}};
}

Json run_properties(const Json& c, const fs::path& dir, bool& failed) {
  const auto props = property_suite(c);
  CsvWriter csv(dir / "results.csv", {"property", "passed", "value", "detail"});
  failed = false;
  Json values = Json::object();
  for (const auto& p : props) {
    csv.row({p.name, cell(p.passed), cell(p.value), p.detail});
    values[p.name] = p.value;
    failed = failed || !p.passed;
  }
  // q_bounds carries the measured discrete-norm slack ε_h.
  return {{"all_passed", !failed}, {"values", values}};
}

}  // namespace

RunSummary run_experiment(const Json& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const std::string exp = config["experiment"].get<std::string>();
  RunSummary out;
  if (exp == "localized_run") {
    out.summary = run_localized_experiment(config, out_dir);
  } else if (exp == "ou_convergence") {
    out.summary = run_ou(config, out_dir);
  } else if (exp == "truncation_hierarchy") {
    out.summary = run_hierarchy(config, out_dir);
  } else if (exp == "moment_verify") {
    out.summary = run_moment(config, out_dir);
  } else if (exp == "mr_estimate") {
    out.summary = run_mr(config, out_dir);
  } else if (exp == "picard_study") {
    out.summary = run_picard(config, out_dir);
  } else if (exp == "ito_residual") {
    out.summary = run_ito(config, out_dir);
  } else if (exp == "property_suite") {
    bool failed = false;
    out.summary = run_properties(config, out_dir, failed);
    if (failed) out.exit_code = exit_property;
  } else {
    throw ConfigError("unknown experiment");
  }
  Json manifest = {{"experiment", exp},
                   {"version", QSEE_VERSION},
                   {"seed", config["noise"]["seed"]},
                   {"config", config},
                   {"summary", out.summary},
                   {"exit_code", out.exit_code}};
  std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << '\n';
  return out;
}

int run_sweep(const Json& base, const std::vector<std::string>& grid, const fs::path& out_dir) {
  if (grid.empty()) throw ConfigError("sweep grid must not be empty");
  struct Axis {
    std::string key;
    std::vector<std::string> values;
  };
  std::vector<Axis> axes;
  for (const auto& g : grid) {
    const auto eq = g.find('=');
    if (eq == std::string::npos) throw ConfigError("grid axis must look like key=v1,v2: '" + g + "'");
    Axis a{g.substr(0, eq), {}};
    std::stringstream ss(g.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) a.values.push_back(item);
    if (g.back() == ',') a.values.push_back("");
    if (a.values.empty()) a.values.push_back("");
    axes.push_back(std::move(a));
  }
  fs::create_directories(out_dir);
  std::ofstream summary(out_dir / "summary.csv");
  summary << "point,assignment,exit_code,summary,message\n";
  const auto quote = [](std::string text) {
    std::string out = "\"";
    for (char ch : text) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return out + "\"";
  };
  std::vector<std::size_t> idx(axes.size(), 0);
  int worst = exit_ok;
  for (int point = 0;; ++point) {
    std::string assignment;
    Json config = base;
    int code = exit_ok;
    std::string message;
    Json point_summary = Json::object();
    char name[32];
    std::snprintf(name, sizeof name, "point_%03d", point);
    const fs::path dir = out_dir / name;
    try {
      for (std::size_t a = 0; a < axes.size(); ++a) {
        const std::string kv = axes[a].key + "=" + axes[a].values[idx[a]];
        assignment += (a ? ";" : "") + kv;
        apply_override(config, kv);
      }
      validate_config(config);
      RunSummary r = run_experiment(config, dir);
      code = r.exit_code;
      point_summary = std::move(r.summary);
    } catch (const ConfigError& e) {
      code = exit_config;
      message = e.what();
    } catch (const std::exception& e) {
      code = exit_runtime;
      message = e.what();
    }
    if (code == exit_config || code == exit_runtime) {
      fs::create_directories(dir);
      std::ofstream(dir / "error.json") << Json{{"error", {{"exit_code", code}, {"message", message}}}}.dump(2) << '\n';
    }
    worst = std::max(worst, code);
    summary << point << ',' << assignment << ',' << code << ',' << quote(point_summary.dump()) << ','
            << quote(message) << '\n';
    std::size_t a = 0;
    for (; a < axes.size(); ++a) {
      if (++idx[a] < axes[a].values.size()) break;
      idx[a] = 0;
    }
    if (a == axes.size()) break;
  }
  return worst;
}

}  // namespace qsee
