#include "qsee/picard.hpp"

#include "qsee/errors.hpp"

#include <algorithm>
#include <cmath>

namespace qsee {

double path_distance(const std::vector<GridField>& a, const std::vector<GridField>& b, const SpaceTriple& triple,
                     double dt) {
  if (a.size() != b.size()) throw ConfigError("paths differ in length");
  double lp = 0.0;
  double sup = 0.0;
  for (std::size_t m = 1; m < a.size(); ++m) {
    const GridField d = a[m] - b[m];
    lp += dt * std::pow(triple.norm_E1(d), triple.p());
    sup = std::max(sup, triple.norm_Ep(d));
  }
  if (!a.empty()) sup = std::max(sup, triple.norm_Ep(a[0] - b[0]));
  return std::pow(lp, 1.0 / triple.p()) + sup;
}

std::vector<double> inclusive_monitor(const std::vector<GridField>& path, const SpaceTriple& triple, double dt) {
  std::vector<double> out(path.size(), 0.0);
  MonitorSeries series;
  series.p = triple.p();
  for (std::size_t m = 1; m < path.size(); ++m) {
    series.append(m * dt, triple.norm_Ep(path[m] - path[0]), triple.norm_E1(path[m]), dt);
    out[m] = series.value();
  }
  return out;
}

std::vector<GridField> picard_map(const DiscreteOperator& op, const ModelSpec& model, const GridField& u0,
                                  const NoisePath& noise, const std::vector<GridField>& phi,
                                  std::optional<double> lambda) {
  if (!op.has_eigen()) throw ConfigError("picard_solve needs an eigen-factorized operator");
  const int M = noise.n_steps();
  if (static_cast<int>(phi.size()) != M + 1) throw ConfigError("path length does not match the noise");
  const double dt = noise.dt;
  const Eigen::MatrixXd& V = op.eigenvectors();
  const Eigen::ArrayXd decay = (-dt * op.eigenvalues().array()).exp();
  std::vector<double> monitor;
  if (lambda) monitor = inclusive_monitor(phi, *model.triple, dt);

  std::vector<GridField> out;
  out.reserve(M + 1);
  out.push_back(u0);
  Eigen::VectorXd y = V.transpose() * u0.values();
  for (int m = 0; m < M; ++m) {
    const GridField& p = phi[m];
    const GridField pt = model.truncated(p);
    Eigen::VectorXd g = explicit_drift(model, m * dt, p, pt).values();
    if (lambda) {
      const double theta = theta_lambda(monitor[m], *lambda);
      if (theta != 0.0) g += theta * (op.apply(p.values()) - quasilinear_apply(model, p, pt).values());
    }
    Eigen::VectorXd inc = dt * g;
    if (model.n_modes() > 0) inc += noise_term(model, pt, noise.increments.row(m).transpose()).values();
    y = decay * (y + V.transpose() * inc).array();
    out.emplace_back(u0.shape(), V * y);
  }
  return out;
}

PicardResult picard_solve(const DiscreteOperator& op, const ModelSpec& model, const GridField& u0,
                          const NoisePath& noise, double kappa, double tol, int max_iter) {
  if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be positive");
  const std::optional<double> lambda = kappa > 0.0 ? std::optional<double>(kappa) : std::nullopt;
  const SpaceTriple& triple = *model.triple;
  const double dt = noise.dt;

  PicardResult out;
  std::vector<GridField> phi(noise.n_steps() + 1, u0);
  for (int k = 0; k < max_iter; ++k) {
    std::vector<GridField> next = picard_map(op, model, u0, noise, phi, lambda);
    for (const auto& s : next)
      if (!s.is_finite()) throw NumericalError("non-finite field");
    const double d = path_distance(next, phi, triple, dt);
    out.distances.push_back(d);
    if (k > 0) out.ratios.push_back(out.distances[k - 1] > 0.0 ? d / out.distances[k - 1] : 0.0);
    phi = std::move(next);
    out.iterations = k;
    if (d <= tol * out.distances.front()) {
      out.converged = true;
      break;
    }
  }
  out.path = std::move(phi);
  if (!out.converged) {
    if (!out.ratios.empty() && out.ratios.back() >= 1.0) throw NumericalError("no contraction");
    out.iterations = max_iter;
  }
  return out;
}

}  // namespace qsee
