#pragma once

// Empirical maximal-regularity constants and the choice of the cut-off level λ.

#include "qsee/discrete_operator.hpp"
#include "qsee/model_spec.hpp"
#include "qsee/noise.hpp"
#include "qsee/stepper.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace qsee {

/// Output norm ‖v‖_{L^p(E^1)} + sup‖v‖_{E_p} over ‖h‖_{L^p(E)} for the
/// exact convolution v = ∫e^{−(t−s)A}h(s)ds of a step function h
/// (h[m] on [m dt, (m+1)dt)). Returns 0 for a zero input.
double mr_ratio_deterministic(const DiscreteOperator& op, const SpaceTriple& triple,
                              const std::vector<GridField>& h, double dt);

/// Same output norm for the left-endpoint stochastic convolution
/// Σ_j e^{−(t−s_j)A} g_j ΔW_j over (Σ dt‖g_m‖_{γ(ℓ²;E^{1/2})}^p)^{1/p}.
/// g[m] is a (nodes × K) mode matrix, increments an (M × K) table.
double mr_ratio_stochastic(const DiscreteOperator& op, const SpaceTriple& triple,
                           const std::vector<Eigen::MatrixXd>& g, const Eigen::MatrixXd& increments, double dt);

/// Running maxima of both ratios over n_samples random adapted step-function
/// integrands. Sample i is a pure function of (spec.master_seed, i).
MRConstants estimate_mr_constants(const DiscreteOperator& op, const SpaceTriple& triple, const NoiseSpec& spec,
                                  int n_samples);

/// λ = (margin − ĉ_MRD(L_F1+L_F2) − ĉ_MRS(L_B1+L_B2)) / (6 C_Q ĉ_MRD), capped by lambda_max.
double choose_lambda(const SmallnessBudget& partial, const MRConstants& mr, double margin,
                     double lambda_max = std::numeric_limits<double>::infinity());

/// Largest observed ‖(A(z) − A(y))v‖_E / (‖z − y‖_{E_p} ‖v‖_{E^1}) over random
/// smooth z, y in the E_p ball of the given radius.
double estimate_cq(const ModelSpec& model, double radius, int n_samples, std::uint64_t seed);

}  // namespace qsee
