#pragma once

// Picard iteration for the mild formulation of a frozen-coefficient segment:
//   Kφ(t) = e^{−tA}u0 + ∫ e^{−(t−s)A}(F̃(φ) + f) ds + Σ_j e^{−(t−s_j)A}(B(φ) + b)ΔW_j
// with left-endpoint rectangle rules.

#include "qsee/discrete_operator.hpp"
#include "qsee/model_spec.hpp"
#include "qsee/noise.hpp"

#include <optional>
#include <vector>

namespace qsee {

struct PicardResult {
  std::vector<GridField> path;     // fixed point at steps 0..M
  std::vector<double> distances;   // d(φ_{k+1}, φ_k), k = 0, 1, ...
  std::vector<double> ratios;      // r_k = d_k / d_{k−1}, k ≥ 1
  int iterations = 0;
  bool converged = false;
};

/// (Σ_{m≥1} dt‖a_m − b_m‖_{E^1}^p)^{1/p} + max_m ‖a_m − b_m‖_{E_p}.
double path_distance(const std::vector<GridField>& a, const std::vector<GridField>& b, const SpaceTriple& triple,
                     double dt);

/// Inclusive monitor sup_{1≤j≤m}‖φ_j − φ_0‖_{E_p} + (Σ_{1≤j≤m} dt‖φ_j‖_{E^1}^p)^{1/p}
/// for every m (entry 0 is 0).
std::vector<double> inclusive_monitor(const std::vector<GridField>& path, const SpaceTriple& triple, double dt);

/// One application of K. When `lambda` is set, F̃ includes the cut-off
/// correction θ_λ(monitor)(A − A(φ))φ.
std::vector<GridField> picard_map(const DiscreteOperator& op, const ModelSpec& model, const GridField& u0,
                                  const NoisePath& noise, const std::vector<GridField>& phi,
                                  std::optional<double> lambda);

/// Iterates K from the constant path u0 until d(φ_{k+1},φ_k) < tol·d(φ_1,φ_0).
/// `kappa` is the cut-off level λ of F̃ (≤ 0 disables the correction).
/// Throws "no contraction" when max_iter is reached with a ratio ≥ 1.
PicardResult picard_solve(const DiscreteOperator& op, const ModelSpec& model, const GridField& u0,
                          const NoisePath& noise, double kappa, double tol, int max_iter);

}  // namespace qsee
