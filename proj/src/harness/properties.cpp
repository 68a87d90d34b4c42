#include "qsee/errors.hpp"
#include "qsee/experiments.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>

namespace qsee {

std::vector<PropertyResult> property_suite(const Json& config) {
  std::vector<PropertyResult> out;
  const std::uint64_t seed = config["noise"]["seed"].get<std::uint64_t>();

  {
    int violations = 0;
    for (int i = 0; i < 100000; ++i) {
      const double lambda = 0.01 + 10.0 * uniform_variate(seed, i, 0, 0x7e7aULL);
      const double x = 3.0 * lambda * uniform_variate(seed, i, 1, 0x7e7aULL);
      const double y = 3.0 * lambda * uniform_variate(seed, i, 2, 0x7e7aULL);
      const double tx = theta_lambda(x, lambda);
      const double ty = theta_lambda(y, lambda);
      if (std::abs(tx - ty) > std::abs(x - y) / lambda * (1.0 + 1e-12) + 4.0 * DBL_EPSILON) ++violations;
      if ((x < y && tx < ty) || (y < x && ty < tx)) ++violations;
    }
    out.push_back({"theta_lipschitz_monotone", violations == 0, static_cast<double>(violations), "1e5 random pairs"});
  }

  const BuiltModel bm = build_model(config);
  const SpaceTriple& triple = *bm.triple;
  const Eigenbasis& basis = triple.eigenbasis();
  {
    int violations = 0;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double n = 0.5 + uniform_variate(seed, i, 0, 0x4e4eULL);
      GridField x = random_spectral_field(basis, seed ^ 0x4e4eULL, 2 * i, 2.5);
      GridField y = random_spectral_field(basis, seed ^ 0x4e4eULL, 2 * i + 1, 2.5);
      x *= 3.0 * n * uniform_variate(seed, i, 1, 0x4e4eULL) / triple.norm_Ep(x);
      y *= 3.0 * n * uniform_variate(seed, i, 2, 0x4e4eULL) / triple.norm_Ep(y);
      const double d = triple.norm_Ep(x - y);
      if (d == 0.0) continue;
      const double r = triple.norm_Ep(truncate_Rn(x, n, triple) - truncate_Rn(y, n, triple)) / d;
      worst = std::max(worst, r);
      if (r > 2.0 * (1.0 + 1e-12)) ++violations;
    }
    out.push_back({"retraction_2_lipschitz", violations == 0, worst, "max ratio over 1e3 pairs"});
  }

  {
    int violations = 0;
    for (double alpha : {2.0, 3.0, 4.0, 6.0}) {
      for (double n : {1.0, 2.0, 5.0}) {
        for (int i = 0; i <= 2000; ++i) {
          const double xi = -10.0 + 0.01 * i;
          const double f = phi_n(xi, n, alpha);
          const double d1 = phi_n_d1(xi, n, alpha);
          const double d2 = phi_n_d2(xi, n, alpha);
          const double tol = 1e-12 * std::max(1.0, std::abs(alpha * alpha * (1.0 + f)));
          if (std::abs(xi * d1) > alpha * f + tol) ++violations;
          if (std::abs(d1) > alpha * (1.0 + f) + tol) ++violations;
          if (xi * xi * d2 > alpha * (alpha - 1.0) * f + tol) ++violations;
          if (d2 > alpha * (alpha - 1.0) * (1.0 + f) + tol) ++violations;
          if (d2 < 0.0) ++violations;
          if (f > std::pow(std::abs(xi), alpha) * (1.0 + 1e-12) + 1e-300) ++violations;
        }
      }
    }
    out.push_back({"phi_n_inequalities", violations == 0, static_cast<double>(violations), "xi in [-10,10]"});
  }

  {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const GridField f = random_spectral_field(basis, seed ^ 0x40e0ULL, i, 2.0);
      const double c = -3.0 + 6.0 * uniform_variate(seed, i, 0, 0x40e0ULL);
      for (auto norm : {&SpaceTriple::norm_E, &SpaceTriple::norm_half, &SpaceTriple::norm_Ep, &SpaceTriple::norm_E1}) {
        const double a = (triple.*norm)(c * f);
        const double b = std::abs(c) * (triple.*norm)(f);
        worst = std::max(worst, std::abs(a - b) / std::max(b, 1e-300));
      }
    }
    out.push_back({"norm_homogeneity", worst < 1e-12, worst, "max relative defect"});
  }

  {
    NoiseSpec spec = noise_spec(config);
    spec.n_steps = 64;
    const NoisePath a = sample_path(spec, 7);
    const NoisePath b = sample_path(spec, 7);
    const NoisePath c = coarsen(a, 8);
    const double drift = (a.increments.colwise().sum() - c.increments.colwise().sum()).cwiseAbs().maxCoeff();
    const bool ok = a.increments == b.increments && drift < 1e-12;
    out.push_back({"noise_determinism_coarsening", ok, drift, "regeneration and telescoping sums"});
  }

  {
    Json c = config;
    c["n_paths"] = 1;
    c["noise"]["T"] = std::min(config["noise"]["T"].get<double>(), 200 * config["noise"]["dt"].get<double>());
    const auto runs = localized_study(c, true);
    const LocalizedRun& run = runs.front().run;
    bool ok = true;
    std::size_t anchor = 1;
    for (std::size_t m = 1; m < run.monitor.size(); ++m) {
      const bool restart = anchor < run.record.anchors.size() && run.record.anchors[anchor].step == static_cast<int>(m) - 1;
      if (restart) ++anchor;
      if (!restart && run.monitor[m] + 1e-15 < run.monitor[m - 1]) ok = false;
    }
    bool anchors_ok = true;
    for (const auto& a : run.record.anchors)
      anchors_ok = anchors_ok && a.state.values() == run.states[a.step].values();
    out.push_back({"monitor_nondecreasing", ok, static_cast<double>(run.monitor.size()), "within each segment"});
    out.push_back({"anchor_consistency", anchors_ok, static_cast<double>(run.record.anchors.size()), "bit-exact"});
  }

  if (bm.model.form == ModelForm::divergence && bm.model.lipschitz.L_a > 0.0) {
    Json c = config;
    c["q_bounds"]["pairs"] = std::min(100, config["q_bounds"]["pairs"].get<int>());
    const QBoundStudy q = q_bound_study(c);
    out.push_back({"q_bounds", q.epsilon_h() <= 0.5, q.epsilon_h(), "epsilon_h over reduced sample"});
  }
  return out;
}

}  // namespace qsee
