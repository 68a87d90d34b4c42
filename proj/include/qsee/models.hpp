#pragma once

// Concrete models and the verifiers built on them: the divergence-form
// convection–diffusion equation on (0,1), a non-divergence equation on the
// torus, the OU oracle, the φ_n approximants, L^α moments and the discrete
// energy identity.

#include "qsee/localizer.hpp"
#include "qsee/model_spec.hpp"
#include "qsee/noise.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace qsee {

struct ModelParams {
  int n_modes = 16;
  double s_B = 1.5;           // β_k = k^{−s_B}
  double additive_noise = 0.0;
  double shift = 1.0;
  double ellipticity_floor = 1.0;
  std::string name;
};

using ScalarFn = std::function<double(double)>;
using CoefficientFn = std::function<Eigen::Matrix2d(const Point&, double, const Point&)>;

/// du = [div(a(u)∇u) + div G(u)]dt + [g(u) + b]·Σ_k β_k e_k dβ_k on (0,1)^d
/// with Dirichlet boundary. Rejects a floor δ_0 ≤ 0 and any sampled a < δ_0.
ModelSpec make_gdiv_model(std::shared_ptr<const SpaceTriple> triple, ScalarFn a, ScalarFn G, ScalarFn g,
                          const ModelParams& params);

/// du = [Σ a_ij(x,u,∇u)∂_i∂_j u]dt + ... on the torus. Rejects coefficients
/// whose symmetric part drops below δ_0 at sampled (x, u, ∇u).
ModelSpec make_nondivergence_model(std::shared_ptr<const SpaceTriple> triple, CoefficientFn a, ScalarFn g,
                                   const ModelParams& params);

/// du = −(A_0 + γ)u dt + b dW with A_0 the constant-coefficient reference
/// operator; every eigenmode is an OU process.
ModelSpec make_linear_model(std::shared_ptr<const SpaceTriple> triple, const ModelParams& params);

/// Sup of |f(u+δ) − f(u)|/δ over a sample grid of [−range, range].
double sampled_lipschitz(const ScalarFn& f, double range);

struct OuMoments {
  double mean;
  double variance;
};

OuMoments ou_oracle(double lambda_k, double b_k, double t, double u0_k);

/// C² approximant of |ξ|^α equal to |ξ|^α on [−n,n] and quadratic beyond.
double phi_n(double xi, double n, double alpha);
double phi_n_d1(double xi, double n, double alpha);
double phi_n_d2(double xi, double n, double alpha);

struct MomentScale {
  double scale;
  double u0_norm;        // ‖s·u0‖_{L^α}
  double empirical_lhs;  // (mean sup_t ‖u(t)‖_{L^α}^α)^{1/α}
  double std_error;
  double ratio;          // empirical_lhs / (1 + u0_norm)
  int used_paths;
  int excluded_paths;
  bool valid;            // at most 5% of paths excluded
};

struct MomentReport {
  double alpha;
  double empirical_lhs;  // at the first scale
  std::vector<MomentScale> u0_scale_sweep;
  bool valid;
  /// max ratio / min ratio across scales.
  double ratio_variation() const;
};

using PathRunner = std::function<LocalizedRun(const GridField& u0, std::uint64_t path_index)>;

/// Monte Carlo sweep over u0 scales; several α share the same paths.
/// Paths not reaching T are excluded and counted.
std::vector<MomentReport> moment_sweep(const GridField& u0, const std::vector<double>& alphas, int n_paths,
                                       const PathRunner& runner, const std::vector<double>& scales = {1.0, 2.0, 4.0});

MomentReport moment_verify(const ModelSpec& model, const GridField& u0, double alpha, int n_paths,
                           const PathRunner& runner, const std::vector<double>& scales = {1.0, 2.0, 4.0});

/// max_m of the defect in
///   ‖u_m‖² − ‖u_0‖² + 2Σ dt⟨a(u)∇u,∇u⟩ − 2Σ dt⟨u, div G(u) + F + f⟩
///   − 2Σ⟨u, (B(u)+b)ΔW⟩ − Σ dt Σ_k ‖B_k(u)+b_k‖²
/// with left-endpoint sums (the ⟨u, div G⟩ term vanishes in the continuum).
/// states[m] is the state at step first_step + m.
double ito_energy_residual(const std::vector<GridField>& states, const NoisePath& noise, const ModelSpec& model,
                           int first_step = 0);

/// h Σ_i φ''(u_i) ∂_h u_i G(u_i) for u sampled on a Dirichlet grid of N
/// intervals: the discrete form of an integral that vanishes by the
/// divergence theorem.
double gauss_divergence_defect(const ScalarFn& G, const ScalarFn& phi2, const std::function<double(double)>& u,
                               int N);

/// Named coefficient catalogue used by the configuration layer.
ScalarFn diffusivity_by_name(const std::string& name, double kappa);
ScalarFn flux_by_name(const std::string& name, double kappa);
ScalarFn multiplier_by_name(const std::string& name, double sigma);
CoefficientFn nondivergence_by_name(const std::string& name, double kappa);

}  // namespace qsee
