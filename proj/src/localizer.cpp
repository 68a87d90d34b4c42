#include "qsee/localizer.hpp"

#include "qsee/errors.hpp"

#include <algorithm>
#include <cmath>

namespace qsee {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::reached_T:
      return "reached_T";
    case Termination::blow_up_flag:
      return "blow_up_flag";
    case Termination::step_floor:
      return "step_floor";
  }
  return "unknown";
}

LocalizedRun run_localized(const ModelSpec& model, const GridField& u0, const SmallnessBudget& budget,
                           const NoisePath& noise, const Caps& caps) {
  budget.validate();
  if (!u0.is_finite()) throw ConfigError("initial state is not finite");
  if (caps.min_segment_steps < 1) throw ConfigError("min_segment_steps must be positive");
  const double p = model.triple->p();
  const int M = noise.n_steps();

  LocalizedRun out;
  out.times.push_back(0.0);
  out.states.push_back(u0);
  out.theta.push_back(1.0);
  out.monitor.push_back(0.0);
  out.record.anchors.push_back({0.0, 0, u0, 0.0});

  SegmentOptions options;
  options.lambda = budget.lambda;
  options.field_cap = caps.field_cap;
  double lp_power = 0.0;
  int short_segments = 0;
  int step = 0;
  Termination term = Termination::reached_T;
  while (step < M) {
    const SegmentResult seg = solve_frozen_segment(out.states.back(), model, noise, step, M, options);
    for (int m = 1; m <= seg.steps(); ++m) {
      out.times.push_back(seg.times[m]);
      out.states.push_back(seg.states[m]);
      out.theta.push_back(seg.theta_history[m - 1]);
      out.monitor.push_back(seg.monitor.value_at(m - 1));
    }
    lp_power += seg.monitor.lp_power_sum;
    step += seg.steps();
    if (seg.blown_up) {
      term = Termination::blow_up_flag;
      break;
    }
    if (!seg.stop_index || step >= M) break;
    if (seg.steps() < caps.min_segment_steps) {
      if (++short_segments >= 2) {
        term = Termination::step_floor;
        break;
      }
    } else {
      short_segments = 0;
    }
    out.record.anchors.push_back({seg.final_time(), step, seg.final_state(), std::pow(lp_power, 1.0 / p)});
  }
  out.record.termination = term;
  out.record.total_monitor_lp = std::pow(lp_power, 1.0 / p);
  out.record.final_time = out.times.back();
  return out;
}

LocalizedRun run_localized(const ModelSpec& model, const GridField& u0, const SmallnessBudget& budget,
                           const NoiseSpec& spec, std::uint64_t path_index, double T, const Caps& caps) {
  NoiseSpec s = spec;
  s.n_steps = static_cast<int>(std::llround(T / spec.dt));
  if (std::abs(s.n_steps * spec.dt - T) > 1e-9 * T) throw ConfigError("T is not a multiple of dt");
  return run_localized(model, u0, budget, sample_path(s, path_index), caps);
}

GridField truncate_Rn(const GridField& y, double n, const SpaceTriple& triple) {
  if (!(n > 0.0)) throw ConfigError("truncation radius must be positive");
  const double norm = triple.norm_Ep(y);
  if (norm <= n) return y;
  return (n / norm) * y;
}

std::vector<double> doubling_levels(double n0, int count) {
  if (!(n0 > 0.0) || count < 1) throw ConfigError("invalid truncation levels");
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(n0 * std::pow(2.0, i));
  return out;
}

HierarchyRun run_truncated_hierarchy(const ModelSpec& model, const GridField& u0, const SmallnessBudget& budget,
                                     const NoisePath& noise, const std::vector<double>& levels, const Caps& caps) {
  if (levels.empty()) throw ConfigError("no truncation levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (!(levels[i] > levels[i - 1])) throw ConfigError("truncation levels must increase");
  const SpaceTriple& triple = *model.triple;
  const double u0_norm = triple.norm_Ep(u0);
  if (!(u0_norm <= levels.back() / 2.0)) throw ConfigError("initial state outside every truncation level");

  HierarchyRun out;
  for (double n : levels) {
    ModelSpec level_model = model;
    level_model.truncation_radius = n;
    TruncationLevel level{n, u0_norm <= n / 2.0, 0.0, 0, {}};
    const GridField start = level.gamma_set_member ? u0 : GridField::zeros(u0.shape());
    level.run = run_localized(level_model, start, budget, noise, caps);
    const auto& states = level.run.states;
    level.sigma_step = static_cast<int>(states.size());
    for (std::size_t m = 0; m < states.size(); ++m) {
      if (triple.norm_Ep(states[m]) > n) {
        level.sigma_step = static_cast<int>(m);
        break;
      }
    }
    level.sigma_n = level.run.times[std::min<std::size_t>(level.sigma_step, states.size() - 1)];
    out.levels.push_back(std::move(level));
  }

  const std::vector<double>& grid_times = out.levels.back().run.times;
  for (std::size_t m = 0; m < grid_times.size(); ++m) {
    const TruncationLevel* chosen = nullptr;
    for (const auto& level : out.levels) {
      if (level.gamma_set_member && static_cast<int>(m) < level.sigma_step) {
        chosen = &level;
        break;
      }
    }
    if (!chosen) chosen = &out.levels.back();
    if (m >= chosen->run.states.size()) break;
    out.times.push_back(grid_times[m]);
    out.states.push_back(chosen->run.states[m]);
  }
  return out;
}

TerminationReport classify_termination(const StoppingRecord& record) {
  TerminationReport r;
  switch (record.termination) {
    case Termination::reached_T:
      r.status = "global";
      break;
    case Termination::blow_up_flag:
      r.status = "blow_up_flag";
      break;
    case Termination::step_floor:
      r.status = "step_floor";
      break;
  }
  r.final_time = record.final_time;
  r.anchor_count = static_cast<int>(record.anchors.size());
  r.total_monitor_lp = record.total_monitor_lp;
  return r;
}

}  // namespace qsee
