#pragma once

// Monte Carlo studies behind the harness experiments. Each takes a resolved
// configuration (see default_config) and returns plain data.

#include "qsee/harness.hpp"
#include "qsee/models.hpp"

#include <vector>

namespace qsee {

struct OuModeCheck {
  int mode;  // 1-based
  double rate;
  double exact_mean;
  double empirical_mean;
  double mean_se;
  double exact_variance;
  double empirical_variance;
  double variance_se;
  bool within_3se() const;
};

struct OuStudy {
  std::vector<double> dts;
  std::vector<double> strong_error;     // RMS over paths of ‖u_dt(T) − u_ref(T)‖_{L²}
  std::vector<double> weak_mean_error;  // max over checked modes
  std::vector<double> weak_var_error;
  double strong_slope = 0.0;
  std::vector<OuModeCheck> modes;  // at the finest dt
};

/// Linear constant-coefficient model with additive noise against the
/// per-mode OU oracle; all step sizes share noise coarsened from the
/// reference grid.
OuStudy ou_convergence_study(const Json& config);

struct PicardInstance {
  int instance;
  double lambda;
  double smallness;
  std::vector<double> distances;
  std::vector<double> ratios;
  int iterations;
  bool converged;
};

/// Random small instances of the frozen segment solved by Picard iteration
/// with λ from choose_lambda.
std::vector<PicardInstance> picard_study(const Json& config);

struct ItoStudy {
  std::vector<double> dts;
  std::vector<double> residuals;  // mean over paths of the max-in-time residual
  double slope = 0.0;
};

ItoStudy ito_residual_study(const Json& config);

struct HierarchyPathResult {
  int path;
  std::vector<double> levels;
  std::vector<bool> members;
  std::vector<double> sigma;
  std::vector<std::string> termination;
  int monotonicity_violations;  // member pairs with σ_n > σ_{2n}
  int equality_failures;        // member pairs differing before σ_n
};

std::vector<HierarchyPathResult> hierarchy_study(const Json& config);

std::vector<MomentReport> moment_study(const Json& config);

struct LocalizedPathResult {
  int path;
  LocalizedRun run;
};

/// localized_run over n_paths paths (path index = path_offset + i).
std::vector<LocalizedPathResult> localized_study(const Json& config, bool keep_states);

struct ConsistencyStudy {
  std::vector<double> dts;
  std::vector<double> sup_diff;  // mean over paths of max_t ‖u_loc − u_direct‖_{E_p}
  std::vector<double> ratio;     // sup_diff / dt
  double ratio_spread = 0.0;     // max ratio / min ratio
};

/// Localized path against direct coefficient-update stepping on identical
/// (coarsened) noise.
ConsistencyStudy consistency_study(const Json& config);

struct QBoundStudy {
  double lambda = 0.0;
  double C_Q = 0.0;
  int pairs = 0;
  double max_growth_ratio = 0.0;     // ‖Q‖_{L^p(E)} / (4 C_Q λ²)
  double max_lipschitz_ratio = 0.0;  // ‖Q(u) − Q(v)‖ / (6 C_Q λ (‖u−v‖_{L^p E^1} + ‖u−v‖_{C E_p}))
  int active_paths = 0;              // paths on which θ < 1 somewhere
  double epsilon_h() const;
};

/// Random monitored path pairs sharing one anchor; θ is taken from the
/// inclusive monitor of each path.
QBoundStudy q_bound_study(const Json& config);

struct MrRow {
  int n_samples;
  double c_mrd_hat;
  double c_mrs_hat;
};

std::vector<MrRow> mr_study(const Json& config);

struct PropertyResult {
  std::string name;
  bool passed;
  double value;
  std::string detail;
};

/// Fast invariant checks (cut-off, retraction, φ_n, norms, noise,
/// monitor monotonicity, Q bounds on a reduced sample).
std::vector<PropertyResult> property_suite(const Json& config);

}  // namespace qsee
