#pragma once

// Gluing of frozen-coefficient segments at stopping times, the truncation
// hierarchy for locally Lipschitz coefficients, and blow-up classification.

#include "qsee/model_spec.hpp"
#include "qsee/noise.hpp"
#include "qsee/spaces.hpp"
#include "qsee/stepper.hpp"

#include <string>
#include <vector>

namespace qsee {

enum class Termination { reached_T, blow_up_flag, step_floor };

std::string to_string(Termination t);

struct Anchor {
  double time;
  int step;
  GridField state;
  double monitor_lp;  // (Σ dt‖u‖_{E^1}^p)^{1/p} accumulated up to this anchor
};

struct StoppingRecord {
  std::vector<Anchor> anchors;  // first entry is (0, u0)
  Termination termination = Termination::reached_T;
  double total_monitor_lp = 0.0;  // (Σ_segments Σ dt‖u‖_{E^1}^p)^{1/p}
  double final_time = 0.0;
};

struct Caps {
  double field_cap = 1e6;
  int min_segment_steps = 2;
};

struct LocalizedRun {
  std::vector<double> times;
  std::vector<GridField> states;
  std::vector<double> theta;    // θ used in the step ending at times[m] (entry 0 is 1)
  std::vector<double> monitor;  // monitor value at times[m] within its segment (entry 0 is 0)
  StoppingRecord record;
};

/// Steps from u0 over the whole noise grid, restarting a frozen segment
/// whenever its monitor exceeds λ.
LocalizedRun run_localized(const ModelSpec& model, const GridField& u0, const SmallnessBudget& budget,
                           const NoisePath& noise, const Caps& caps);
LocalizedRun run_localized(const ModelSpec& model, const GridField& u0, const SmallnessBudget& budget,
                           const NoiseSpec& spec, std::uint64_t path_index, double T, const Caps& caps);

/// R_n y: y inside the E_p ball of radius n, its radial projection outside.
GridField truncate_Rn(const GridField& y, double n, const SpaceTriple& triple);

struct TruncationLevel {
  double n;
  bool gamma_set_member;  // ‖u0‖_{E_p} ≤ n/2
  double sigma_n;         // first grid time with ‖u_n‖_{E_p} > n, else the run's end time
  int sigma_step;         // index of σ_n in run.times; run.states.size() when never exceeded
  LocalizedRun run;
};

struct HierarchyRun {
  std::vector<double> times;
  std::vector<GridField> states;  // stitched path
  std::vector<TruncationLevel> levels;
};

/// Runs every level of the R_n-truncated model on the same noise. A level
/// outside Γ_n starts from 0. The stitched path uses, at each time, the
/// smallest member level whose σ_n has not yet passed.
HierarchyRun run_truncated_hierarchy(const ModelSpec& model, const GridField& u0, const SmallnessBudget& budget,
                                     const NoisePath& noise, const std::vector<double>& levels, const Caps& caps);

/// Doubling levels n0, 2n0, ..., (count entries).
std::vector<double> doubling_levels(double n0, int count);

struct TerminationReport {
  std::string status;  // "global", "blow_up_flag" or "step_floor"
  double final_time;
  int anchor_count;
  double total_monitor_lp;
};

TerminationReport classify_termination(const StoppingRecord& record);

}  // namespace qsee
