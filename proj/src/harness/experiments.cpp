#include "qsee/experiments.hpp"

#include "qsee/discrete_operator.hpp"
#include "qsee/errors.hpp"
#include "qsee/parallel.hpp"
#include "qsee/picard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qsee {

namespace {

int steps_for(double T, double dt) { return static_cast<int>(std::llround(T / dt)); }

NoiseSpec spec_with(const Json& config, double dt, double T) {
  NoiseSpec s = noise_spec(config);
  s.dt = dt;
  s.n_steps = steps_for(T, dt);
  return s;
}

std::uint64_t path_id(const Json& config, int i) {
  return static_cast<std::uint64_t>(config["path_offset"].get<int>() + i);
}

// Scaled to the given E_p norm (zero stays zero).
GridField with_ep_norm(GridField f, double target, const SpaceTriple& triple) {
  const double n = triple.norm_Ep(f);
  if (n > 0.0) f *= target / n;
  return f;
}

}  // namespace

bool OuModeCheck::within_3se() const {
  return std::abs(empirical_mean - exact_mean) <= 3.0 * mean_se &&
         std::abs(empirical_variance - exact_variance) <= 3.0 * variance_se;
}

OuStudy ou_convergence_study(const Json& config) {
  Json c = config;
  c["model"]["kind"] = "linear";
  c["model"]["additive_noise"] = config["ou"]["b"];
  const BuiltModel bm = build_model(c);
  const ModelSpec& model = bm.model;
  const Eigenbasis& basis = bm.triple->eigenbasis();
  const auto& ou = c["ou"];
  const double T = ou["T"].get<double>();
  const double ref_dt = ou["reference_dt"].get<double>();
  std::vector<double> dts = ou["dts"].get<std::vector<double>>();
  const int n_modes = std::min<int>(ou["modes"].get<int>(), model.n_modes());
  if (n_modes < 1) throw ConfigError("ou_convergence needs at least one noise mode");
  const int n_paths = c["n_paths"].get<int>();
  const NoiseSpec fine_spec = spec_with(c, ref_dt, T);
  const bool periodic = bm.triple->shape().boundary == Boundary::periodic;

  SegmentOptions options;
  options.lambda = std::numeric_limits<double>::max();
  options.stop_at_exceedance = false;
  options.track_monitor = false;

  const std::size_t L = dts.size();
  // Per path: squared L² error per dt and mode coefficients per dt.
  std::vector<std::vector<double>> err2(n_paths, std::vector<double>(L));
  std::vector<std::vector<Eigen::VectorXd>> coeff(n_paths, std::vector<Eigen::VectorXd>(L));
  parallel_for(n_paths, [&](int i) {
    const NoisePath fine = sample_path(fine_spec, path_id(c, i));
    const SegmentResult ref = solve_frozen_segment(bm.u0, model, fine, 0, fine.n_steps(), options);
    for (std::size_t l = 0; l < L; ++l) {
      const int factor = static_cast<int>(std::llround(dts[l] / ref_dt));
      const NoisePath coarse = coarsen(fine, factor);
      const SegmentResult run = solve_frozen_segment(bm.u0, model, coarse, 0, coarse.n_steps(), options);
      const GridField diff = run.final_state() - ref.final_state();
      err2[i][l] = std::pow(lq_norm(diff, 2.0), 2);
      coeff[i][l] = basis.coefficients(run.final_state()).head(n_modes);
    }
  });

  OuStudy out;
  out.dts = dts;
  const Eigen::VectorXd c0 = basis.coefficients(bm.u0);
  const double b = c["ou"]["b"].get<double>();
  const double s_B = c["model"]["s_B"].get<double>();
  for (std::size_t l = 0; l < L; ++l) {
    double se = 0.0;
    for (int i = 0; i < n_paths; ++i) se += err2[i][l];
    out.strong_error.push_back(std::sqrt(se / n_paths));
    double worst_mean = 0.0;
    double worst_var = 0.0;
    std::vector<OuModeCheck> checks;
    for (int k = 0; k < n_modes; ++k) {
      double s1 = 0.0, s2 = 0.0;
      for (int i = 0; i < n_paths; ++i) s1 += coeff[i][l][k];
      const double mean = s1 / n_paths;
      double m4 = 0.0;
      for (int i = 0; i < n_paths; ++i) {
        const double d = coeff[i][l][k] - mean;
        s2 += d * d;
        m4 += d * d * d * d;
      }
      const double var = s2 / (n_paths - 1);
      m4 /= n_paths;
      const double rate = basis.values()[k] - (periodic ? 1.0 : 0.0) + model.shift;
      const OuMoments exact = ou_oracle(rate, b * std::pow(k + 1.0, -s_B), T, c0[k]);
      worst_mean = std::max(worst_mean, std::abs(mean - exact.mean));
      worst_var = std::max(worst_var, std::abs(var - exact.variance));
      checks.push_back({k + 1, rate, exact.mean, mean, std::sqrt(var / n_paths), exact.variance, var,
                        std::sqrt(std::max(0.0, m4 - var * var) / n_paths)});
    }
    out.weak_mean_error.push_back(worst_mean);
    out.weak_var_error.push_back(worst_var);
    if (l + 1 == L) out.modes = checks;
  }
  out.strong_slope = loglog_slope(out.dts, out.strong_error);
  return out;
}

std::vector<PicardInstance> picard_study(const Json& config) {
  const BuiltModel bm = build_model(config);
  const ResolvedBudget rb = resolve_budget(config, bm.model);
  const auto& pc = config["picard"];
  const int instances = pc["instances"].get<int>();
  const int steps = pc["steps"].get<int>();
  const double T = pc["T"].get<double>();
  const double fraction = pc["u0_fraction"].get<double>();
  const double tol = pc["tol"].get<double>();
  const int max_iter = pc["max_iter"].get<int>();
  const SpaceTriple& triple = *bm.triple;
  const std::uint64_t seed = config["noise"]["seed"].get<std::uint64_t>();

  std::vector<PicardInstance> out(instances);
  parallel_for(instances, [&](int i) {
    const double decay = 2.0 + uniform_variate(seed, i, 0, 0x9ca7ULL);
    const GridField u0 = with_ep_norm(random_spectral_field(triple.eigenbasis(), seed ^ 0x9ca7ULL, i, decay),
                                      fraction * rb.budget.lambda, triple);
    DiscreteOperator op = assemble_operator(bm.model, bm.model.truncated(u0));
    op.eigen_factorize();
    NoiseSpec spec = noise_spec(config);
    spec.dt = T / steps;
    spec.n_steps = steps;
    const NoisePath noise = sample_path(spec, path_id(config, i));
    const PicardResult r = picard_solve(op, bm.model, u0, noise, rb.budget.lambda, tol, max_iter);
    out[i] = {i, rb.budget.lambda, rb.budget.smallness(rb.mr), r.distances, r.ratios, r.iterations, r.converged};
  });
  return out;
}

ItoStudy ito_residual_study(const Json& config) {
  const BuiltModel bm = build_model(config);
  const ResolvedBudget rb = resolve_budget(config, bm.model);
  const auto& ic = config["ito"];
  const double T = ic["T"].get<double>();
  std::vector<double> dts = ic["dts"].get<std::vector<double>>();
  const double finest = dts.back();
  const NoiseSpec fine_spec = spec_with(config, finest, T);
  const Caps caps = caps_from(config);
  const int n_paths = config["n_paths"].get<int>();

  std::vector<std::vector<double>> res(n_paths, std::vector<double>(dts.size()));
  parallel_for(n_paths, [&](int i) {
    const NoisePath fine = sample_path(fine_spec, path_id(config, i));
    for (std::size_t l = 0; l < dts.size(); ++l) {
      const NoisePath coarse = coarsen(fine, static_cast<int>(std::llround(dts[l] / finest)));
      const LocalizedRun run = run_localized(bm.model, bm.u0, rb.budget, coarse, caps);
      if (run.record.termination != Termination::reached_T)
        throw NumericalError("ito_residual path did not reach T");
      res[i][l] = ito_energy_residual(run.states, coarse, bm.model);
    }
  });
  ItoStudy out;
  out.dts = dts;
  for (std::size_t l = 0; l < dts.size(); ++l) {
    double s = 0.0;
    for (int i = 0; i < n_paths; ++i) s += res[i][l];
    out.residuals.push_back(s / n_paths);
  }
  out.slope = loglog_slope(out.dts, out.residuals);
  return out;
}

std::vector<HierarchyPathResult> hierarchy_study(const Json& config) {
  Json c = config;
  c["model"]["truncation_radius"] = nullptr;
  const BuiltModel bm = build_model(c);
  const ResolvedBudget rb = resolve_budget(c, bm.model);
  const std::vector<double> levels =
      doubling_levels(c["hierarchy"]["n0"].get<double>(), c["hierarchy"]["count"].get<int>());
  const NoiseSpec spec = noise_spec(c);
  const Caps caps = caps_from(c);
  const int n_paths = c["n_paths"].get<int>();

  std::vector<HierarchyPathResult> out(n_paths);
  parallel_for(n_paths, [&](int i) {
    const NoisePath noise = sample_path(spec, path_id(c, i));
    const HierarchyRun h = run_truncated_hierarchy(bm.model, bm.u0, rb.budget, noise, levels, caps);
    HierarchyPathResult r{i, {}, {}, {}, {}, 0, 0};
    for (const auto& lv : h.levels) {
      r.levels.push_back(lv.n);
      r.members.push_back(lv.gamma_set_member);
      r.sigma.push_back(lv.sigma_n);
      r.termination.push_back(to_string(lv.run.record.termination));
    }
    for (std::size_t j = 0; j + 1 < h.levels.size(); ++j) {
      const TruncationLevel& lo = h.levels[j];
      const TruncationLevel& hi = h.levels[j + 1];
      if (!lo.gamma_set_member) continue;
      if (lo.sigma_n > hi.sigma_n) ++r.monotonicity_violations;
      const std::size_t upto = std::min<std::size_t>(lo.sigma_step, lo.run.states.size());
      bool equal = hi.run.states.size() >= upto;
      for (std::size_t m = 0; equal && m < upto; ++m)
        equal = lo.run.states[m].values() == hi.run.states[m].values();
      if (!equal) ++r.equality_failures;
    }
    out[i] = std::move(r);
  });
  return out;
}

std::vector<MomentReport> moment_study(const Json& config) {
  const BuiltModel bm = build_model(config);
  const ResolvedBudget rb = resolve_budget(config, bm.model);
  const NoiseSpec spec = noise_spec(config);
  const Caps caps = caps_from(config);
  const int offset = config["path_offset"].get<int>();
  const PathRunner runner = [&](const GridField& u0, std::uint64_t path) {
    return run_localized(bm.model, u0, rb.budget, sample_path(spec, offset + path), caps);
  };
  return moment_sweep(bm.u0, config["moment"]["alphas"].get<std::vector<double>>(), config["n_paths"].get<int>(),
                      runner, config["moment"]["scales"].get<std::vector<double>>());
}

std::vector<LocalizedPathResult> localized_study(const Json& config, bool keep_states) {
  const BuiltModel bm = build_model(config);
  const ResolvedBudget rb = resolve_budget(config, bm.model);
  const NoiseSpec spec = noise_spec(config);
  const Caps caps = caps_from(config);
  const int n_paths = config["n_paths"].get<int>();
  std::vector<LocalizedPathResult> out(n_paths);
  parallel_for(n_paths, [&](int i) {
    LocalizedRun run = run_localized(bm.model, bm.u0, rb.budget, sample_path(spec, path_id(config, i)), caps);
    if (!keep_states) {
      run.states.clear();
      run.states.shrink_to_fit();
    }
    out[i] = {i, std::move(run)};
  });
  return out;
}

ConsistencyStudy consistency_study(const Json& config) {
  const BuiltModel bm = build_model(config);
  const ResolvedBudget rb = resolve_budget(config, bm.model);
  std::vector<double> dts = config["consistency"]["dts"].get<std::vector<double>>();
  const double finest = *std::min_element(dts.begin(), dts.end());
  const double T = config["noise"]["T"].get<double>();
  const NoiseSpec fine_spec = spec_with(config, finest, T);
  const Caps caps = caps_from(config);
  const int n_paths = config["n_paths"].get<int>();
  const SpaceTriple& triple = *bm.triple;

  std::vector<std::vector<double>> diff(n_paths, std::vector<double>(dts.size()));
  parallel_for(n_paths, [&](int i) {
    const NoisePath fine = sample_path(fine_spec, path_id(config, i));
    for (std::size_t l = 0; l < dts.size(); ++l) {
      const NoisePath coarse = coarsen(fine, static_cast<int>(std::llround(dts[l] / finest)));
      const LocalizedRun loc = run_localized(bm.model, bm.u0, rb.budget, coarse, caps);
      const std::vector<GridField> direct = direct_coefficient_update(bm.u0, bm.model, coarse, 0, coarse.n_steps());
      const std::size_t n = std::min(loc.states.size(), direct.size());
      double worst = 0.0;
      for (std::size_t m = 0; m < n; ++m) worst = std::max(worst, triple.norm_Ep(loc.states[m] - direct[m]));
      diff[i][l] = worst;
    }
  });
  ConsistencyStudy out;
  out.dts = dts;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t l = 0; l < dts.size(); ++l) {
    double s = 0.0;
    for (int i = 0; i < n_paths; ++i) s += diff[i][l];
    out.sup_diff.push_back(s / n_paths);
    out.ratio.push_back(out.sup_diff.back() / dts[l]);
    lo = std::min(lo, out.ratio.back());
    hi = std::max(hi, out.ratio.back());
  }
  out.ratio_spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  return out;
}

double QBoundStudy::epsilon_h() const {
  return std::max(0.0, std::max(max_growth_ratio, max_lipschitz_ratio) - 1.0);
}

QBoundStudy q_bound_study(const Json& config) {
  const BuiltModel bm = build_model(config);
  const ResolvedBudget rb = resolve_budget(config, bm.model);
  const ModelSpec& model = bm.model;
  const SpaceTriple& triple = *bm.triple;
  const Eigenbasis& basis = triple.eigenbasis();
  const int pairs = config["q_bounds"]["pairs"].get<int>();
  const int M = config["q_bounds"]["steps"].get<int>();
  const double dt = config["noise"]["T"].get<double>() / M;
  const double lambda = rb.budget.lambda;
  const double C_Q = rb.budget.C_Q;
  const double p = triple.p();
  const std::uint64_t seed = config["noise"]["seed"].get<std::uint64_t>() ^ 0x0b0dULL;
  if (!(C_Q > 0.0)) throw ConfigError("Q bounds need a positive C_Q");

  struct PairResult {
    double growth;
    double lipschitz;
    bool active;
  };
  std::vector<PairResult> results(pairs);
  parallel_for(pairs, [&](int i) {
    const std::uint64_t s = static_cast<std::uint64_t>(i);
    auto U = [&](int k) { return uniform_variate(seed, s, static_cast<std::uint64_t>(k), 0x51ULL); };
    auto field = [&](int k, double norm) {
      return with_ep_norm(random_spectral_field(basis, seed, 8 * s + k, 1.5 + 2.0 * U(10 + k)), norm, triple);
    };
    const GridField anchor = field(0, 2.0 * lambda * U(0));
    const GridField w1 = field(1, 1.5 * lambda * U(1));
    const GridField w2 = field(2, 1.5 * lambda * U(2));
    const GridField w3 = field(3, lambda * std::pow(10.0, -3.0 * U(3)));
    const double freq = 1.0 + std::floor(3.0 * U(4));
    std::vector<GridField> u, v;
    for (int m = 0; m <= M; ++m) {
      const double r = static_cast<double>(m) / M;
      GridField um = anchor + r * w1 + std::sin(3.14159265358979 * freq * r) * w2;
      GridField vm = um + (r * (1.0 - 0.5 * r)) * w3;
      u.push_back(std::move(um));
      v.push_back(std::move(vm));
    }
    const std::vector<double> mu = inclusive_monitor(u, triple, dt);
    const std::vector<double> mv = inclusive_monitor(v, triple, dt);
    double q_norm = 0.0;
    double dq_norm = 0.0;
    double lp_diff = 0.0;
    double sup_diff = 0.0;
    bool active = false;
    for (int m = 1; m <= M; ++m) {
      const double tu = theta_lambda(mu[m], lambda);
      const double tv = theta_lambda(mv[m], lambda);
      active = active || tu < 1.0;
      const GridField qu = truncated_quasilinearity(u[m], anchor, tu, model);
      const GridField qv = truncated_quasilinearity(v[m], anchor, tv, model);
      q_norm += dt * std::pow(triple.norm_E(qu), p);
      dq_norm += dt * std::pow(triple.norm_E(qu - qv), p);
      const GridField d = u[m] - v[m];
      lp_diff += dt * std::pow(triple.norm_E1(d), p);
      sup_diff = std::max(sup_diff, triple.norm_Ep(d));
    }
    q_norm = std::pow(q_norm, 1.0 / p);
    dq_norm = std::pow(dq_norm, 1.0 / p);
    const double denom = std::pow(lp_diff, 1.0 / p) + sup_diff;
    results[i] = {q_norm / (4.0 * C_Q * lambda * lambda),
                  denom > 0.0 ? dq_norm / (6.0 * C_Q * lambda * denom) : 0.0, active};
  });
  QBoundStudy out;
  out.lambda = lambda;
  out.C_Q = C_Q;
  out.pairs = pairs;
  for (const auto& r : results) {
    out.max_growth_ratio = std::max(out.max_growth_ratio, r.growth);
    out.max_lipschitz_ratio = std::max(out.max_lipschitz_ratio, r.lipschitz);
    out.active_paths += r.active ? 1 : 0;
  }
  return out;
}

std::vector<MrRow> mr_study(const Json& config) {
  const BuiltModel bm = build_model(config);
  DiscreteOperator op = assemble_operator(bm.model, GridField::zeros(bm.model.shape()));
  op.eigen_factorize();
  const NoiseSpec base = noise_spec(config);
  NoiseSpec spec;
  spec.master_seed = base.master_seed ^ 0x6d72ULL;
  spec.n_modes = std::max(1, bm.model.n_modes());
  spec.n_steps = config["budget"]["mr_steps"].get<int>();
  spec.dt = base.horizon() / spec.n_steps;
  const int total = config["budget"]["mr_samples"].get<int>();
  std::vector<MrRow> out;
  for (int n = 1; n <= total; n = (n == total ? total + 1 : std::min(2 * n, total))) {
    const MRConstants mr = estimate_mr_constants(op, *bm.triple, spec, n);
    out.push_back({n, mr.c_mrd_hat, mr.c_mrs_hat});
  }
  return out;
}

}  // namespace qsee
