#pragma once

// Truncated cylindrical Brownian motion W = Σ_k e_k β_k with counter-based,
// reproducible Gaussian increments.

#include "qsee/spaces.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace qsee {

struct NoiseSpec {
  std::uint64_t master_seed = 0;
  int n_modes = 1;  // K
  int n_steps = 1;  // M
  double dt = 1e-3;

  void validate() const;
  double horizon() const { return dt * n_steps; }
};

struct NoisePath {
  Eigen::MatrixXd increments;  // M × K, entry (m,k) ~ N(0, dt)
  double dt = 0.0;

  int n_steps() const { return static_cast<int>(increments.rows()); }
  int n_modes() const { return static_cast<int>(increments.cols()); }
};

/// Standard normal variate that is a pure function of the four keys.
double gaussian_variate(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t mode);

NoisePath sample_path(const NoiseSpec& spec, std::uint64_t path_index);

/// Sums `factor` consecutive increments per mode.
NoisePath coarsen(const NoisePath& path, int factor);

/// Random field Σ_k Z_k λ_k^{−decay/2} e_k with counter-based Z_k; a pure
/// function of (seed, index).
GridField random_spectral_field(const Eigenbasis& basis, std::uint64_t seed, std::uint64_t index, double decay);

/// Uniform variate in (0,1) keyed like gaussian_variate.
double uniform_variate(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t mode);

}  // namespace qsee
