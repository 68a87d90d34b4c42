#include "qsee/discrete_operator.hpp"
#include "qsee/errors.hpp"
#include "qsee/harness.hpp"
#include "qsee/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace qsee {

Json default_config() {
  return Json::parse(R"({
    "experiment": "localized_run",
    "n_paths": 4,
    "path_offset": 0,
    "write_series": false,
    "triple": {"p": 8, "q": 4, "d": 1, "N": 64},
    "model": {
      "kind": "gdiv",
      "diffusivity": "bounded_quadratic", "kappa_a": 1.0,
      "flux": "sine", "kappa_G": 0.5,
      "noise_multiplier": "linear", "sigma": 0.5,
      "additive_noise": 0.0, "s_B": 1.5,
      "coefficients": "sine_squared", "kappa": 0.25,
      "shift": 1.0, "ellipticity_floor": 1.0,
      "truncation_radius": null
    },
    "u0": {"profile": "sine", "amplitude": 0.1, "mode": 1},
    "noise": {"seed": 42, "K": 16, "dt": 1e-4, "T": 0.25},
    "budget": {
      "C_Q": "auto", "cq_radius": 1.0, "cq_samples": 64,
      "L_F1": "auto", "L_F2": 0.0, "L_B1": "auto", "L_B2": 0.0, "epsilon": 0.1,
      "lambda": "auto", "margin": 0.6, "lambda_max": 10.0,
      "mr_samples": 9, "mr_steps": 64
    },
    "caps": {"field_cap": 1e6, "min_segment_steps": 2},
    "ou": {"dts": [1e-3, 5e-4, 2.5e-4], "reference_dt": 3.125e-5, "modes": 4, "T": 0.05, "b": 1.0},
    "hierarchy": {"n0": 1.0, "count": 3},
    "moment": {"alphas": [2, 4], "scales": [1, 2, 4]},
    "picard": {"instances": 10, "steps": 32, "T": 0.05, "u0_fraction": 0.5, "tol": 1e-10, "max_iter": 40},
    "ito": {"dts": [4e-4, 2e-4, 1e-4], "T": 0.05},
    "consistency": {"dts": [4e-4, 2e-4, 1e-4]},
    "q_bounds": {"pairs": 1000, "steps": 32}
  })");
}

namespace {

void deep_merge(Json& base, const Json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("configuration must be a JSON object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown configuration key '" + key + "'");
    if (base[it.key()].is_object() && it.value().is_object()) {
      deep_merge(base[it.key()], it.value(), key);
    } else {
      base[it.key()] = it.value();
    }
  }
}

bool is_multiple(double a, double b) {
  const double r = a / b;
  return std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, r) && std::round(r) >= 1.0;
}

double number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError("'" + what + "' must be a number");
  return j.get<double>();
}

}  // namespace

Json resolve_config(const Json& user) {
  Json config = default_config();
  deep_merge(config, user, "");
  validate_config(config);
  return config;
}

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override must look like key=value: '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  if (text.empty()) return;
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  Json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) throw ConfigError("unknown configuration key '" + key + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

void validate_config(const Json& c) {
  static const std::vector<std::string> experiments{"localized_run", "truncation_hierarchy", "moment_verify",
                                                    "ou_convergence", "mr_estimate",          "picard_study",
                                                    "ito_residual",  "property_suite"};
  if (!c["experiment"].is_string() ||
      std::find(experiments.begin(), experiments.end(), c["experiment"].get<std::string>()) == experiments.end())
    throw ConfigError("unknown experiment");
  const auto& t = c["triple"];
  const double p = number(t["p"], "triple.p");
  const double q = number(t["q"], "triple.q");
  if (!t["d"].is_number_integer() || (t["d"] != 1 && t["d"] != 2)) throw ConfigError("triple.d must be 1 or 2");
  if (!t["N"].is_number_integer() || t["N"].get<int>() < 4) throw ConfigError("triple.N must be an integer ≥ 4");
  if (!(p > 2.0) || !(q > 2.0)) throw ConfigError("triple.p and triple.q must exceed 2");
  if (!(1.0 - 2.0 / p - t["d"].get<double>() / q > 1e-12)) throw ConfigError("integrability condition 1 - 2/p > d/q violated");
  if (!c["n_paths"].is_number_integer() || c["n_paths"].get<int>() < 1) throw ConfigError("n_paths must be ≥ 1");
  const auto& n = c["noise"];
  if (!n["seed"].is_number_integer()) throw ConfigError("noise.seed must be an integer");
  if (!n["K"].is_number_integer() || n["K"].get<int>() < 0) throw ConfigError("noise.K must be ≥ 0");
  const double dt = number(n["dt"], "noise.dt");
  const double T = number(n["T"], "noise.T");
  if (!(dt > 0.0) || !(T > 0.0)) throw ConfigError("noise.dt and noise.T must be positive");
  if (!is_multiple(T, dt)) throw ConfigError("noise.T must be a multiple of noise.dt");
  const auto& b = c["budget"];
  const double margin = number(b["margin"], "budget.margin");
  if (!(margin > 0.0 && margin < 1.0)) throw ConfigError("budget.margin must lie in (0,1)");
  for (const char* key : {"C_Q", "L_F1", "L_F2", "L_B1", "L_B2", "lambda"}) {
    const Json& v = b[key];
    if (!(v.is_number() || (v.is_string() && v == "auto"))) throw ConfigError(std::string("budget.") + key + " must be a number or \"auto\"");
    if (v.is_number() && !(v.get<double>() >= 0.0)) throw ConfigError(std::string("budget.") + key + " must be nonnegative");
  }
  if (b["lambda"].is_number() && !(b["lambda"].get<double>() > 0.0)) throw ConfigError("budget.lambda must be positive");
  const auto& ou = c["ou"];
  const double ref = number(ou["reference_dt"], "ou.reference_dt");
  const double ou_T = number(ou["T"], "ou.T");
  for (const auto& d : ou["dts"]) {
    const double v = number(d, "ou.dts");
    if (!is_multiple(v, ref)) throw ConfigError("ou.dts must be multiples of ou.reference_dt");
    if (!is_multiple(ou_T, v)) throw ConfigError("ou.T must be a multiple of every ou.dts entry");
  }
  const auto& ito = c["ito"];
  const double ito_T = number(ito["T"], "ito.T");
  if (ito["dts"].empty()) throw ConfigError("ito.dts must not be empty");
  const double finest = number(ito["dts"].back(), "ito.dts");
  for (const auto& d : ito["dts"]) {
    const double v = number(d, "ito.dts");
    if (!is_multiple(v, finest)) throw ConfigError("ito.dts must be multiples of the finest entry");
    if (!is_multiple(ito_T, v)) throw ConfigError("ito.T must be a multiple of every ito.dts entry");
  }
  if (c["caps"]["min_segment_steps"].get<int>() < 1) throw ConfigError("caps.min_segment_steps must be ≥ 1");
  // Ellipticity, grid/boundary compatibility and coefficient names.
  build_model(c);
}

GridField build_initial_state(const Json& u0, const GridShape& shape) {
  const std::string profile = u0.at("profile").get<std::string>();
  const double amp = u0.at("amplitude").get<double>();
  const int mode = u0.value("mode", 1);
  const double pi = std::numbers::pi;
  const bool periodic = shape.boundary == Boundary::periodic;
  auto axis = [&](double x) {
    if (profile == "sine") return periodic ? std::sin(2.0 * pi * mode * x) : std::sin(pi * mode * x);
    if (profile == "bump") return periodic ? 0.5 * (1.0 - std::cos(2.0 * pi * x)) : 4.0 * x * (1.0 - x);
    if (profile == "zero") return 0.0;
    throw ConfigError("unknown u0 profile '" + profile + "'");
  };
  return GridField::from_function(shape, [&](const Point& x) {
    return amp * axis(x[0]) * (shape.dim == 2 ? axis(x[1]) : 1.0);
  });
}

BuiltModel build_model(const Json& c) {
  const auto& t = c["triple"];
  const auto& m = c["model"];
  const std::string kind = m["kind"].get<std::string>();
  GridShape shape;
  shape.dim = t["d"].get<int>();
  shape.intervals = t["N"].get<int>();
  shape.boundary = kind == "nondivergence" ? Boundary::periodic : Boundary::dirichlet;
  const ScaleKind scale = kind == "nondivergence" ? ScaleKind::nondivergence_form : ScaleKind::divergence_form;
  auto triple = std::make_shared<const SpaceTriple>(t["p"].get<double>(), t["q"].get<double>(), shape, scale);

  ModelParams params;
  params.n_modes = c["noise"]["K"].get<int>();
  params.s_B = m["s_B"].get<double>();
  params.additive_noise = m["additive_noise"].get<double>();
  params.shift = m["shift"].get<double>();
  params.ellipticity_floor = m["ellipticity_floor"].get<double>();
  params.name = kind;
  const ScalarFn g = multiplier_by_name(m["noise_multiplier"].get<std::string>(), m["sigma"].get<double>());

  BuiltModel out{triple, {}, GridField::zeros(shape)};
  if (kind == "gdiv") {
    out.model = make_gdiv_model(triple, diffusivity_by_name(m["diffusivity"].get<std::string>(), m["kappa_a"].get<double>()),
                                flux_by_name(m["flux"].get<std::string>(), m["kappa_G"].get<double>()), g, params);
  } else if (kind == "nondivergence") {
    out.model = make_nondivergence_model(
        triple, nondivergence_by_name(m["coefficients"].get<std::string>(), m["kappa"].get<double>()), g, params);
  } else if (kind == "linear") {
    out.model = make_linear_model(triple, params);
  } else {
    throw ConfigError("unknown model kind '" + kind + "'");
  }
  if (!m["truncation_radius"].is_null()) out.model.truncation_radius = m["truncation_radius"].get<double>();
  out.model.validate();
  out.u0 = build_initial_state(c["u0"], shape);
  return out;
}

NoiseSpec noise_spec(const Json& c) {
  const auto& n = c["noise"];
  NoiseSpec s;
  s.master_seed = n["seed"].get<std::uint64_t>();
  s.n_modes = std::max(1, n["K"].get<int>());
  s.dt = n["dt"].get<double>();
  s.n_steps = static_cast<int>(std::llround(n["T"].get<double>() / s.dt));
  return s;
}

Caps caps_from(const Json& c) {
  Caps caps;
  caps.field_cap = c["caps"]["field_cap"].get<double>();
  caps.min_segment_steps = c["caps"]["min_segment_steps"].get<int>();
  return caps;
}

ResolvedBudget resolve_budget(const Json& c, const ModelSpec& model) {
  const auto& b = c["budget"];
  const NoiseSpec base = noise_spec(c);
  DiscreteOperator op = assemble_operator(model, GridField::zeros(model.shape()));
  op.eigen_factorize();
  NoiseSpec mr_spec;
  mr_spec.master_seed = base.master_seed ^ 0x6d72ULL;
  mr_spec.n_modes = std::max(1, model.n_modes());
  mr_spec.n_steps = b["mr_steps"].get<int>();
  mr_spec.dt = base.horizon() / mr_spec.n_steps;

  ResolvedBudget out;
  out.margin = b["margin"].get<double>();
  out.mr = estimate_mr_constants(op, *model.triple, mr_spec, b["mr_samples"].get<int>());

  SmallnessBudget& bud = out.budget;
  const double eps = b["epsilon"].get<double>();
  const double noise_scale = model.n_modes() > 0 ? model.noise_modes.rowwise().norm().maxCoeff() : 0.0;
  bud.C_Q = b["C_Q"].is_number()
                ? b["C_Q"].get<double>()
                : estimate_cq(model, b["cq_radius"].get<double>(), b["cq_samples"].get<int>(), base.master_seed ^ 0x6371ULL);
  bud.L_F1 = b["L_F1"].is_number() ? b["L_F1"].get<double>() : eps * model.lipschitz.L_G;
  bud.L_F2 = b["L_F2"].is_number() ? b["L_F2"].get<double>() : 0.0;
  bud.L_B1 = b["L_B1"].is_number() ? b["L_B1"].get<double>() : eps * model.lipschitz.L_B * noise_scale;
  bud.L_B2 = b["L_B2"].is_number() ? b["L_B2"].get<double>() : 0.0;
  if (b["lambda"].is_number()) {
    bud.lambda = b["lambda"].get<double>();
  } else {
    bud.lambda = choose_lambda(bud, out.mr, out.margin, b["lambda_max"].get<double>());
  }
  bud.validate();
  return out;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope fit needs at least two points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace qsee
