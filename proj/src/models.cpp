#include "qsee/models.hpp"

#include "qsee/discrete_operator.hpp"
#include "qsee/errors.hpp"
#include "qsee/parallel.hpp"
#include "stencil.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace qsee {

namespace {

void check_params(const std::shared_ptr<const SpaceTriple>& triple, const ModelParams& params) {
  if (!triple) throw ConfigError("model has no space triple");
  if (!(params.ellipticity_floor > 0.0)) throw ConfigError("ellipticity floor must be positive");
  if (params.n_modes < 0) throw ConfigError("number of noise modes must be nonnegative");
  if (!(params.shift >= 0.0)) throw ConfigError("shift must be nonnegative");
}

}  // namespace

double sampled_lipschitz(const ScalarFn& f, double range) {
  if (!f) return 0.0;
  const int n = 4000;
  const double step = 2.0 * range / n;
  double best = 0.0;
  double prev = f(-range);
  for (int i = 1; i <= n; ++i) {
    const double cur = f(-range + i * step);
    best = std::max(best, std::abs(cur - prev) / step);
    prev = cur;
  }
  return best;
}

ModelSpec make_gdiv_model(std::shared_ptr<const SpaceTriple> triple, ScalarFn a, ScalarFn G, ScalarFn g,
                          const ModelParams& params) {
  check_params(triple, params);
  if (!a) throw ConfigError("divergence model needs a diffusivity");
  if (triple->shape().boundary != Boundary::dirichlet) throw ConfigError("divergence model needs a Dirichlet grid");
  const double floor = params.ellipticity_floor;
  for (int i = -5000; i <= 5000; ++i) {
    const double u = 0.01 * i;
    if (!(a(u) >= floor * (1.0 - 1e-12))) throw ConfigError("diffusivity below the ellipticity floor");
  }
  ModelSpec m;
  m.name = params.name.empty() ? "gdiv" : params.name;
  m.form = ModelForm::divergence;
  m.triple = triple;
  m.diffusivity = a;
  m.flux = G;
  m.noise_multiplier = g;
  m.additive_noise = params.additive_noise;
  m.noise_modes = make_noise_modes(*triple, params.n_modes, params.s_B);
  m.shift = params.shift;
  m.compensate_shift = true;
  m.ellipticity_floor = floor;
  m.lipschitz.L_a = sampled_lipschitz(a, 20.0);
  m.lipschitz.L_G = sampled_lipschitz(G, 20.0);
  m.lipschitz.L_B = sampled_lipschitz(g, 20.0);
  m.validate();
  return m;
}

ModelSpec make_nondivergence_model(std::shared_ptr<const SpaceTriple> triple, CoefficientFn a, ScalarFn g,
                                   const ModelParams& params) {
  check_params(triple, params);
  if (!a) throw ConfigError("non-divergence model needs coefficients");
  if (triple->shape().boundary != Boundary::periodic) throw ConfigError("non-divergence model needs a periodic grid");
  const double floor = params.ellipticity_floor;
  const GridShape& s = triple->shape();
  for (int k = 0; k < s.size(); k += std::max(1, s.size() / 16)) {
    const Point x = s.point(k);
    for (int iu = -20; iu <= 20; ++iu) {
      for (int ig = -10; ig <= 10; ++ig) {
        const double u = 0.5 * iu;
        const Point grad{1.0 * ig, s.dim == 2 ? -0.5 * ig : 0.0};
        const Eigen::Matrix2d c = a(x, u, grad);
        double lowest = c(0, 0);
        if (s.dim == 2) {
          Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(0.5 * (c + c.transpose()));
          lowest = es.eigenvalues()(0);
        }
        if (!(lowest >= floor * (1.0 - 1e-12))) throw ConfigError("ellipticity floor violated");
      }
    }
  }
  ModelSpec m;
  m.name = params.name.empty() ? "nondivergence" : params.name;
  m.form = ModelForm::nondivergence;
  m.triple = triple;
  m.coefficients = a;
  m.noise_multiplier = g;
  m.additive_noise = params.additive_noise;
  m.noise_modes = make_noise_modes(*triple, params.n_modes, params.s_B);
  m.shift = params.shift;
  m.compensate_shift = true;
  m.ellipticity_floor = floor;
  m.lipschitz.L_B = sampled_lipschitz(g, 20.0);
  m.validate();
  return m;
}

ModelSpec make_linear_model(std::shared_ptr<const SpaceTriple> triple, const ModelParams& params) {
  check_params(triple, params);
  ModelSpec m;
  m.name = params.name.empty() ? "linear" : params.name;
  m.triple = triple;
  if (triple->shape().boundary == Boundary::dirichlet) {
    m.form = ModelForm::divergence;
    m.diffusivity = [](double) { return 1.0; };
  } else {
    m.form = ModelForm::nondivergence;
    m.coefficients = [](const Point&, double, const Point&) { return Eigen::Matrix2d::Identity().eval(); };
  }
  m.additive_noise = params.additive_noise;
  m.noise_modes = make_noise_modes(*triple, params.n_modes, params.s_B);
  m.shift = params.shift;
  m.compensate_shift = false;
  m.ellipticity_floor = 1.0;
  m.validate();
  return m;
}

OuMoments ou_oracle(double lambda_k, double b_k, double t, double u0_k) {
  if (!(lambda_k > 0.0)) throw ConfigError("OU rate must be positive");
  return {u0_k * std::exp(-lambda_k * t), b_k * b_k * (-std::expm1(-2.0 * lambda_k * t)) / (2.0 * lambda_k)};
}

double phi_n(double xi, double n, double alpha) {
  const double a = std::abs(xi);
  if (alpha == 2.0) return xi * xi;
  if (a <= n) return std::pow(a, alpha);
  return std::pow(n, alpha - 2.0) *
         (alpha * (alpha - 1.0) * xi * xi / 2.0 - alpha * (alpha - 2.0) * n * a + (alpha - 1.0) * (alpha - 2.0) * n * n / 2.0);
}

double phi_n_d1(double xi, double n, double alpha) {
  const double a = std::abs(xi);
  const double sgn = xi > 0.0 ? 1.0 : (xi < 0.0 ? -1.0 : 0.0);
  if (alpha == 2.0) return 2.0 * xi;
  if (a <= n) return alpha * std::pow(a, alpha - 1.0) * sgn;
  return std::pow(n, alpha - 2.0) * (alpha * (alpha - 1.0) * xi - alpha * (alpha - 2.0) * n * sgn);
}

double phi_n_d2(double xi, double n, double alpha) {
  const double a = std::abs(xi);
  if (alpha == 2.0) return 2.0;
  if (a <= n) return alpha * (alpha - 1.0) * std::pow(a, alpha - 2.0);
  return alpha * (alpha - 1.0) * std::pow(n, alpha - 2.0);
}

double MomentReport::ratio_variation() const {
  if (u0_scale_sweep.empty()) return 1.0;
  double lo = u0_scale_sweep.front().ratio;
  double hi = lo;
  for (const auto& s : u0_scale_sweep) {
    lo = std::min(lo, s.ratio);
    hi = std::max(hi, s.ratio);
  }
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

std::vector<MomentReport> moment_sweep(const GridField& u0, const std::vector<double>& alphas, int n_paths,
                                       const PathRunner& runner, const std::vector<double>& scales) {
  if (n_paths < 1) throw ConfigError("need at least one path");
  if (scales.empty()) throw ConfigError("need at least one scale");
  for (std::size_t i = 1; i < scales.size(); ++i)
    if (!(scales[i] > scales[i - 1])) throw ConfigError("scales must increase");
  for (double a : alphas)
    if (!(a >= 2.0)) throw ConfigError("alpha must be at least 2");

  std::vector<MomentReport> reports;
  for (double a : alphas) reports.push_back({a, 0.0, {}, true});
  for (double scale : scales) {
    const GridField start = scale * u0;
    // sup_t ‖u(t)‖_{L^α}^α per path and α; NaN marks an excluded path.
    std::vector<std::vector<double>> sups(n_paths, std::vector<double>(alphas.size(), 0.0));
    parallel_for(n_paths, [&](int i) {
      const LocalizedRun run = runner(start, static_cast<std::uint64_t>(i));
      if (run.record.termination != Termination::reached_T) {
        std::fill(sups[i].begin(), sups[i].end(), std::numeric_limits<double>::quiet_NaN());
        return;
      }
      for (std::size_t j = 0; j < alphas.size(); ++j) {
        double best = 0.0;
        for (const auto& s : run.states) best = std::max(best, std::pow(lq_norm(s, alphas[j]), alphas[j]));
        sups[i][j] = best;
      }
    });
    for (std::size_t j = 0; j < alphas.size(); ++j) {
      const double alpha = alphas[j];
      double sum = 0.0;
      double sum_sq = 0.0;
      int used = 0;
      for (int i = 0; i < n_paths; ++i) {
        const double v = sups[i][j];
        if (std::isnan(v)) continue;
        sum += v;
        sum_sq += v * v;
        ++used;
      }
      MomentScale ms{};
      ms.scale = scale;
      ms.u0_norm = lq_norm(start, alpha);
      ms.used_paths = used;
      ms.excluded_paths = n_paths - used;
      ms.valid = ms.excluded_paths <= 0.05 * n_paths;
      if (used > 0) {
        const double mean = sum / used;
        const double var = used > 1 ? std::max(0.0, (sum_sq - used * mean * mean) / (used - 1)) : 0.0;
        ms.empirical_lhs = std::pow(mean, 1.0 / alpha);
        ms.std_error = mean > 0.0 ? ms.empirical_lhs * std::sqrt(var / used) / (alpha * mean) : 0.0;
      }
      ms.ratio = ms.empirical_lhs / (1.0 + ms.u0_norm);
      reports[j].u0_scale_sweep.push_back(ms);
      reports[j].valid = reports[j].valid && ms.valid && used > 0;
    }
  }
  for (auto& r : reports) r.empirical_lhs = r.u0_scale_sweep.front().empirical_lhs;
  return reports;
}

MomentReport moment_verify(const ModelSpec& model, const GridField& u0, double alpha, int n_paths,
                           const PathRunner& runner, const std::vector<double>& scales) {
  if (model.form != ModelForm::divergence) throw ConfigError("moment verification expects a divergence-form model");
  if (alpha != 2.0 && alpha != 4.0 && alpha != 6.0) throw ConfigError("alpha must be 2, 4 or 6");
  return moment_sweep(u0, {alpha}, n_paths, runner, scales).front();
}

double ito_energy_residual(const std::vector<GridField>& states, const NoisePath& noise, const ModelSpec& model,
                           int first_step) {
  if (states.empty()) return 0.0;
  if (first_step < 0 || first_step + static_cast<int>(states.size()) - 1 > noise.n_steps())
    throw ConfigError("path longer than the noise");
  const double dt = noise.dt;
  const double w = std::pow(states.front().h(), states.front().shape().dim);
  auto inner = [w](const GridField& a, const GridField& b) { return w * a.values().dot(b.values()); };
  const double e0 = inner(states.front(), states.front());
  double acc = 0.0;
  double worst = 0.0;
  for (std::size_t m = 0; m + 1 < states.size(); ++m) {
    const GridField& u = states[m];
    const GridField ut = model.truncated(u);
    const int step = first_step + static_cast<int>(m);
    // ⟨a∇u,∇u⟩ = ⟨u, (A − γ)u⟩ for the flux stencil.
    const GridField Au = assemble_operator(model, ut).apply(u);
    double incr = 2.0 * dt * (inner(u, Au) - model.shift * inner(u, u));
    GridField lower = explicit_drift(model, step * dt, u, ut);
    if (model.compensate_shift) lower.values() -= model.shift * u.values();
    else incr += 2.0 * dt * model.shift * inner(u, u);
    incr -= 2.0 * dt * inner(u, lower);
    if (model.n_modes() > 0) {
      incr -= 2.0 * inner(u, noise_term(model, ut, noise.increments.row(step).transpose()));
      const Eigen::MatrixXd B = noise_coefficients(model, ut);
      incr -= dt * w * B.squaredNorm();
    }
    acc += incr;
    const double r = inner(states[m + 1], states[m + 1]) - e0 + acc;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

double gauss_divergence_defect(const ScalarFn& G, const ScalarFn& phi2, const std::function<double(double)>& u,
                               int N) {
  if (N < 2) throw ConfigError("grid needs at least 2 intervals");
  const double h = 1.0 / N;
  double acc = 0.0;
  for (int i = 1; i < N; ++i) {
    const double ui = u(i * h);
    const double du = (u((i + 1) * h) - u((i - 1) * h)) / (2.0 * h);
    acc += h * phi2(ui) * du * G(ui);
  }
  return std::abs(acc);
}

ScalarFn diffusivity_by_name(const std::string& name, double kappa) {
  if (name == "constant") return [kappa](double) { return kappa; };
  if (name == "bounded_quadratic") return [kappa](double u) { return 1.0 + kappa * 0.5 * u * u / (1.0 + u * u); };
  if (name == "quadratic") return [kappa](double u) { return 1.0 + kappa * u * u; };
  if (name == "linear") return [](double u) { return u; };
  throw ConfigError("unknown diffusivity '" + name + "'");
}

ScalarFn flux_by_name(const std::string& name, double kappa) {
  if (name == "zero") return {};
  if (name == "sine") return [kappa](double u) { return kappa * std::sin(u); };
  if (name == "burgers") return [kappa](double u) { return 0.5 * kappa * u * u; };
  throw ConfigError("unknown flux '" + name + "'");
}

ScalarFn multiplier_by_name(const std::string& name, double sigma) {
  if (name == "zero") return {};
  if (name == "linear") return [sigma](double u) { return sigma * u; };
  if (name == "sine") return [sigma](double u) { return sigma * std::sin(u); };
  throw ConfigError("unknown noise multiplier '" + name + "'");
}

CoefficientFn nondivergence_by_name(const std::string& name, double kappa) {
  if (name == "identity") return [](const Point&, double, const Point&) { return Eigen::Matrix2d::Identity().eval(); };
  if (name == "sine_squared") {
    return [kappa](const Point&, double u, const Point&) {
      const double s = std::sin(u);
      return ((1.0 + kappa * s * s) * Eigen::Matrix2d::Identity()).eval();
    };
  }
  if (name == "gradient") {
    return [kappa](const Point&, double u, const Point& g) {
      const double s = std::sin(u);
      const double gx2 = g[0] * g[0];
      Eigen::Matrix2d m = Eigen::Matrix2d::Identity();
      m(0, 0) += kappa * (s * s + gx2 / (1.0 + gx2));
      m(1, 1) += kappa * s * s;
      return m;
    };
  }
  throw ConfigError("unknown non-divergence coefficient '" + name + "'");
}

}  // namespace qsee
