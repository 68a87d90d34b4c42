#include "qsee/mr_constants.hpp"

#include "qsee/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qsee {

namespace {

double output_norm(const std::vector<GridField>& v, const SpaceTriple& triple, double dt) {
  double lp = 0.0;
  double sup = 0.0;
  for (std::size_t m = 1; m < v.size(); ++m) {
    lp += dt * std::pow(triple.norm_E1(v[m]), triple.p());
    sup = std::max(sup, triple.norm_Ep(v[m]));
  }
  return std::pow(lp, 1.0 / triple.p()) + sup;
}

// Temporal profile of sample family `kind` at step m.
double time_profile(int kind, int m, int M, std::uint64_t seed, std::uint64_t sample) {
  switch (kind) {
    case 0:
      return 1.0;
    case 1: {
      const double freq = 1.0 + std::floor(4.0 * uniform_variate(seed, sample, 0, 0x7a11ULL));
      return std::sin(std::numbers::pi * freq * (m + 0.5) / M);
    }
    default:
      return gaussian_variate(seed, sample, static_cast<std::uint64_t>(m), 0x3417ULL);
  }
}

}  // namespace

double mr_ratio_deterministic(const DiscreteOperator& op, const SpaceTriple& triple,
                              const std::vector<GridField>& h, double dt) {
  if (!op.has_eigen()) throw ConfigError("maximal-regularity estimate needs an eigen-factorized operator");
  double in = 0.0;
  for (const auto& hm : h) in += dt * std::pow(triple.norm_E(hm), triple.p());
  in = std::pow(in, 1.0 / triple.p());
  if (in == 0.0) return 0.0;
  const Eigen::MatrixXd& V = op.eigenvectors();
  const Eigen::ArrayXd lam = op.eigenvalues().array();
  const Eigen::ArrayXd decay = (-dt * lam).exp();
  // ∫_0^dt e^{−sλ} ds, exact on each step.
  const Eigen::ArrayXd weight = (1.0 - decay) / lam;
  std::vector<GridField> v;
  v.reserve(h.size() + 1);
  v.push_back(GridField::zeros(triple.shape()));
  Eigen::VectorXd y = Eigen::VectorXd::Zero(V.cols());
  for (const auto& hm : h) {
    y = (decay * y.array() + weight * (V.transpose() * hm.values()).array()).matrix();
    v.emplace_back(triple.shape(), V * y);
  }
  return output_norm(v, triple, dt) / in;
}

double mr_ratio_stochastic(const DiscreteOperator& op, const SpaceTriple& triple,
                           const std::vector<Eigen::MatrixXd>& g, const Eigen::MatrixXd& increments, double dt) {
  if (!op.has_eigen()) throw ConfigError("maximal-regularity estimate needs an eigen-factorized operator");
  if (static_cast<Eigen::Index>(g.size()) != increments.rows()) throw ConfigError("integrand and noise lengths differ");
  double in = 0.0;
  for (const auto& gm : g) in += dt * std::pow(triple.noise_norm(gm), triple.p());
  in = std::pow(in, 1.0 / triple.p());
  if (in == 0.0) return 0.0;
  const Eigen::MatrixXd& V = op.eigenvectors();
  const Eigen::ArrayXd decay = (-dt * op.eigenvalues().array()).exp();
  std::vector<GridField> v;
  v.reserve(g.size() + 1);
  v.push_back(GridField::zeros(triple.shape()));
  Eigen::VectorXd y = Eigen::VectorXd::Zero(V.cols());
  for (std::size_t m = 0; m < g.size(); ++m) {
    const Eigen::VectorXd inc = g[m] * increments.row(static_cast<Eigen::Index>(m)).transpose();
    y = (decay * (y + V.transpose() * inc).array()).matrix();
    v.emplace_back(triple.shape(), V * y);
  }
  return output_norm(v, triple, dt) / in;
}

MRConstants estimate_mr_constants(const DiscreteOperator& op, const SpaceTriple& triple, const NoiseSpec& spec,
                                  int n_samples) {
  spec.validate();
  if (n_samples < 1) throw ConfigError("need at least one sample");
  const Eigenbasis& basis = triple.eigenbasis();
  const int M = spec.n_steps;
  const int K = spec.n_modes;
  MRConstants out;
  int used_d = 0;
  int used_s = 0;
  for (int i = 0; i < n_samples; ++i) {
    const std::uint64_t sample = static_cast<std::uint64_t>(i);
    const int kind = i % 3;
    const double decay = 4.0 * uniform_variate(spec.master_seed, sample, 1, 0xdecaULL) - 1.0;
    const GridField shape_h = random_spectral_field(basis, spec.master_seed ^ 0xd00dULL, sample, decay);
    std::vector<GridField> h;
    h.reserve(M);
    for (int m = 0; m < M; ++m) h.push_back(time_profile(kind, m, M, spec.master_seed, sample) * shape_h);
    const double rd = mr_ratio_deterministic(op, triple, h, spec.dt);
    if (rd > 0.0) {
      out.c_mrd_hat = std::max(out.c_mrd_hat, rd);
      ++used_d;
    }

    std::vector<GridField> cols;
    for (int k = 0; k < K; ++k)
      cols.push_back(random_spectral_field(basis, spec.master_seed ^ 0x5707ULL, sample * 4096 + k, decay + 1.0));
    std::vector<Eigen::MatrixXd> g;
    g.reserve(M);
    for (int m = 0; m < M; ++m) {
      Eigen::MatrixXd gm(triple.shape().size(), K);
      const double prof = time_profile(kind, m, M, spec.master_seed ^ 0x1ULL, sample);
      for (int k = 0; k < K; ++k) gm.col(k) = prof * std::pow(k + 1.0, -1.0) * cols[k].values();
      g.push_back(std::move(gm));
    }
    const NoisePath noise = sample_path(spec, sample);
    const double rs = mr_ratio_stochastic(op, triple, g, noise.increments, spec.dt);
    if (rs > 0.0) {
      out.c_mrs_hat = std::max(out.c_mrs_hat, rs);
      ++used_s;
    }
  }
  if (used_d == 0 || used_s == 0) throw NumericalError("all maximal-regularity samples had zero norm");
  out.n_samples = n_samples;
  return out;
}

double choose_lambda(const SmallnessBudget& partial, const MRConstants& mr, double margin, double lambda_max) {
  if (!(margin > 0.0 && margin < 1.0)) throw ConfigError("margin must lie in (0,1)");
  if (!(lambda_max > 0.0)) throw ConfigError("lambda_max must be positive");
  SmallnessBudget probe = partial;
  probe.lambda = 1.0;
  probe.validate();
  const double rest = mr.c_mrd_hat * (partial.L_F1 + partial.L_F2) + mr.c_mrs_hat * (partial.L_B1 + partial.L_B2);
  if (!(rest < margin)) throw ConfigError("smallness condition unsatisfiable");
  const double denom = 6.0 * partial.C_Q * mr.c_mrd_hat;
  if (denom == 0.0) {
    if (!std::isfinite(lambda_max)) throw ConfigError("lambda unbounded: set lambda_max");
    return lambda_max;
  }
  return std::min((margin - rest) / denom, lambda_max);
}

double estimate_cq(const ModelSpec& model, double radius, int n_samples, std::uint64_t seed) {
  if (!(radius > 0.0)) throw ConfigError("radius must be positive");
  if (n_samples < 1) throw ConfigError("need at least one sample");
  const SpaceTriple& triple = *model.triple;
  const Eigenbasis& basis = triple.eigenbasis();
  double best = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const std::uint64_t s = static_cast<std::uint64_t>(i);
    const double decay_z = 1.5 + 2.0 * uniform_variate(seed, s, 0, 0xc0ULL);
    const double decay_v = 1.5 + 2.0 * uniform_variate(seed, s, 1, 0xc0ULL);
    GridField z = random_spectral_field(basis, seed, 3 * s, decay_z);
    GridField y = random_spectral_field(basis, seed, 3 * s + 1, decay_z);
    const GridField v = random_spectral_field(basis, seed, 3 * s + 2, decay_v);
    z *= radius * uniform_variate(seed, s, 2, 0xc0ULL) / std::max(triple.norm_Ep(z), 1e-300);
    y *= radius * uniform_variate(seed, s, 3, 0xc0ULL) / std::max(triple.norm_Ep(y), 1e-300);
    const double dz = triple.norm_Ep(z - y);
    const double nv = triple.norm_E1(v);
    if (dz == 0.0 || nv == 0.0) continue;
    const GridField diff = quasilinear_apply(model, v, model.truncated(z)) - quasilinear_apply(model, v, model.truncated(y));
    best = std::max(best, triple.norm_E(diff) / (dz * nv));
  }
  return best;
}

}  // namespace qsee
