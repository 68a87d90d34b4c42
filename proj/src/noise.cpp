#include "qsee/noise.hpp"

#include "qsee/errors.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace qsee {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

void NoiseSpec::validate() const {
  if (n_modes < 1) throw ConfigError("noise needs at least one mode");
  if (n_steps < 1) throw ConfigError("noise needs at least one step");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("noise dt must be positive");
}

double uniform_variate(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t mode) {
  std::uint64_t x = mix(seed);
  x = mix(x ^ path);
  x = mix(x ^ step);
  x = mix(x ^ mode);
  // 53-bit uniform strictly inside (0,1).
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

double gaussian_variate(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t mode) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, uniform_variate(seed, path, step, mode));
}

GridField random_spectral_field(const Eigenbasis& basis, std::uint64_t seed, std::uint64_t index, double decay) {
  Eigen::VectorXd c(basis.size());
  for (Eigen::Index k = 0; k < basis.size(); ++k)
    c[k] = gaussian_variate(seed, index, static_cast<std::uint64_t>(k), 0x51f7ULL) *
           std::pow(basis.values()[k], -0.5 * decay);
  return basis.synthesize(c);
}

NoisePath sample_path(const NoiseSpec& spec, std::uint64_t path_index) {
  spec.validate();
  NoisePath out;
  out.dt = spec.dt;
  out.increments.resize(spec.n_steps, spec.n_modes);
  const double scale = std::sqrt(spec.dt);
  for (int m = 0; m < spec.n_steps; ++m)
    for (int k = 0; k < spec.n_modes; ++k)
      out.increments(m, k) = scale * gaussian_variate(spec.master_seed, path_index, m, k);
  return out;
}

NoisePath coarsen(const NoisePath& path, int factor) {
  if (factor < 1 || path.n_steps() % factor != 0) throw ConfigError("coarsening factor must divide the step count");
  NoisePath out;
  out.dt = path.dt * factor;
  const int coarse = path.n_steps() / factor;
  out.increments = Eigen::MatrixXd::Zero(coarse, path.n_modes());
  for (int m = 0; m < coarse; ++m)
    for (int r = 0; r < factor; ++r) out.increments.row(m) += path.increments.row(m * factor + r);
  return out;
}

}  // namespace qsee
