#pragma once

#include "qsee/models.hpp"

#include <cmath>
#include <memory>

namespace qsee::test {

inline std::shared_ptr<const SpaceTriple> dirichlet_triple(int N = 64, double p = 8.0, double q = 4.0, int d = 1) {
  return std::make_shared<const SpaceTriple>(p, q, GridShape{d, N, Boundary::dirichlet}, ScaleKind::divergence_form);
}

inline std::shared_ptr<const SpaceTriple> periodic_triple(int N = 64, double p = 8.0, double q = 4.0, int d = 1) {
  return std::make_shared<const SpaceTriple>(p, q, GridShape{d, N, Boundary::periodic},
                                             ScaleKind::nondivergence_form);
}

inline ModelParams params(int modes = 1, double b = 0.0) {
  ModelParams out;
  out.n_modes = modes;
  out.additive_noise = b;
  return out;
}

/// a ≡ 1, no flux, no multiplicative noise.
inline ModelSpec heat_model(std::shared_ptr<const SpaceTriple> triple, int modes = 1, double b = 0.0) {
  return make_gdiv_model(std::move(triple), [](double) { return 1.0; }, nullptr, nullptr, params(modes, b));
}

inline GridField sine(const GridShape& shape, double amplitude = 1.0, int mode = 1) {
  return GridField::from_function(shape, [=](const Point& x) { return amplitude * std::sin(mode * M_PI * x[0]); });
}

inline NoiseSpec spec(int modes, int steps, double dt, std::uint64_t seed = 42) {
  NoiseSpec s;
  s.master_seed = seed;
  s.n_modes = modes;
  s.n_steps = steps;
  s.dt = dt;
  return s;
}

}  // namespace qsee::test
