#include "qsee/spaces.hpp"

#include "qsee/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace qsee {

namespace {

// Σ|v_i|^q with cheap paths for the exponents used in practice.
double abs_pow_sum(const Eigen::Ref<const Eigen::VectorXd>& v, double q) {
  if (q == 2.0) return v.squaredNorm();
  if (q == 4.0) return v.array().square().square().sum();
  if (q == 1.0) return v.array().abs().sum();
  const double qi = std::round(q);
  if (qi == q && qi > 0 && qi <= 16) {
    const int n = static_cast<int>(qi);
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double a = std::abs(v[i]);
      double r = 1.0;
      for (int k = 0; k < n; ++k) r *= a;
      s += r;
    }
    return s;
  }
  return v.array().abs().pow(q).sum();
}

double weighted_lq(const Eigen::VectorXd& v, double weight, double q) {
  if (!v.allFinite()) throw NumericalError("non-finite field");
  const double m = v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  // Scale by the maximum so that large q does not overflow.
  const Eigen::VectorXd scaled = v / m;
  return m * std::pow(weight * abs_pow_sum(scaled, q), 1.0 / q);
}

// Gradient components at quadrature nodes together with quadrature weights.
// Dirichlet grids are padded with the zero boundary nodes.
struct NodalGradient {
  std::vector<Eigen::VectorXd> components;
  Eigen::VectorXd weights;
};

NodalGradient nodal_gradient(const GridShape& shape, const Eigen::VectorXd& values) {
  const double h = shape.h();
  const int N = shape.intervals;
  NodalGradient out;
  if (shape.boundary == Boundary::periodic) {
    const int n = N;
    const int total = shape.size();
    out.weights = Eigen::VectorXd::Constant(total, std::pow(h, shape.dim));
    for (int axis = 0; axis < shape.dim; ++axis) {
      Eigen::VectorXd g(total);
      for (int k = 0; k < total; ++k) {
        const int ix = k % n;
        const int iy = k / n;
        int kp;
        int km;
        if (axis == 0) {
          kp = iy * n + (ix + 1) % n;
          km = iy * n + (ix + n - 1) % n;
        } else {
          kp = ((iy + 1) % n) * n + ix;
          km = ((iy + n - 1) % n) * n + ix;
        }
        g[k] = (values[kp] - values[km]) / (2.0 * h);
      }
      out.components.push_back(std::move(g));
    }
    return out;
  }
  // Dirichlet: padded grid of N+1 nodes per axis, boundary values 0.
  const int m = N + 1;
  const int inner = N - 1;
  const int total = shape.dim == 1 ? m : m * m;
  Eigen::VectorXd padded = Eigen::VectorXd::Zero(total);
  if (shape.dim == 1) {
    for (int i = 0; i < inner; ++i) padded[i + 1] = values[i];
  } else {
    for (int iy = 0; iy < inner; ++iy)
      for (int ix = 0; ix < inner; ++ix) padded[(iy + 1) * m + ix + 1] = values[iy * inner + ix];
  }
  auto trap = [&](int i) { return (i == 0 || i == N) ? 0.5 * h : h; };
  out.weights.resize(total);
  for (int k = 0; k < total; ++k) {
    const int ix = k % m;
    const int iy = k / m;
    out.weights[k] = shape.dim == 1 ? trap(ix) : trap(ix) * trap(iy);
  }
  for (int axis = 0; axis < shape.dim; ++axis) {
    Eigen::VectorXd g(total);
    const int stride = axis == 0 ? 1 : m;
    for (int k = 0; k < total; ++k) {
      const int i = axis == 0 ? k % m : k / m;
      if (i == 0) {
        g[k] = (padded[k + stride] - padded[k]) / h;
      } else if (i == N) {
        g[k] = (padded[k] - padded[k - stride]) / h;
      } else {
        g[k] = (padded[k + stride] - padded[k - stride]) / (2.0 * h);
      }
    }
    out.components.push_back(std::move(g));
  }
  return out;
}

double weighted_lq_pointwise(const Eigen::VectorXd& magnitude, const Eigen::VectorXd& weights, double q) {
  if (!magnitude.allFinite()) throw NumericalError("non-finite field");
  const double m = magnitude.size() == 0 ? 0.0 : magnitude.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  const Eigen::VectorXd scaled = magnitude.cwiseAbs() / m;
  double s = 0.0;
  if (q == 2.0) {
    s = weights.dot(scaled.cwiseAbs2());
  } else if (q == 4.0) {
    s = weights.dot(scaled.array().square().square().matrix());
  } else {
    s = weights.dot(scaled.array().pow(q).matrix());
  }
  return m * std::pow(s, 1.0 / q);
}

int dyadic_index(double lambda) {
  int j = static_cast<int>(std::floor(std::log(lambda) / std::log(4.0)));
  while (std::pow(4.0, j) > lambda) --j;
  while (std::pow(4.0, j + 1) <= lambda) ++j;
  return j;
}

}  // namespace

std::array<double, 2> GridShape::point(int k) const {
  const int n = nodes_per_axis();
  if (dim == 1) return {coordinate(k), 0.0};
  return {coordinate(k % n), coordinate(k / n)};
}

void GridShape::validate() const {
  if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
  if (intervals < 2) throw ConfigError("grid needs at least 2 intervals");
}

GridField::GridField(GridShape shape, Eigen::VectorXd values) : shape_(shape), values_(std::move(values)) {
  shape_.validate();
  if (values_.size() != shape_.size()) throw ConfigError("field size does not match grid");
}

GridField GridField::zeros(const GridShape& shape) { return GridField(shape, Eigen::VectorXd::Zero(shape.size())); }

GridField GridField::from_function(const GridShape& shape,
                                   const std::function<double(const std::array<double, 2>&)>& fn) {
  Eigen::VectorXd v(shape.size());
  for (int k = 0; k < shape.size(); ++k) v[k] = fn(shape.point(k));
  return GridField(shape, std::move(v));
}

GridField& GridField::operator+=(const GridField& other) {
  if (!(shape_ == other.shape_)) throw ConfigError("grid mismatch");
  values_ += other.values_;
  return *this;
}

GridField& GridField::operator-=(const GridField& other) {
  if (!(shape_ == other.shape_)) throw ConfigError("grid mismatch");
  values_ -= other.values_;
  return *this;
}

GridField& GridField::operator*=(double c) {
  values_ *= c;
  return *this;
}

Eigenbasis::Eigenbasis(const GridShape& shape) : shape_(shape) {
  shape_.validate();
  const int n = shape.nodes_per_axis();
  const double h = shape.h();
  const double pi = std::numbers::pi;
  axis_vectors_.resize(n, n);
  std::vector<double> axis_values(n);
  double shift = 0.0;
  if (shape.boundary == Boundary::dirichlet) {
    for (int k = 1; k <= n; ++k) {
      for (int i = 0; i < n; ++i) axis_vectors_(i, k - 1) = std::sqrt(2.0) * std::sin(k * pi * (i + 1) * h);
      const double s = std::sin(k * pi * h / 2.0);
      axis_values[k - 1] = 4.0 / (h * h) * s * s;
    }
  } else {
    shift = 1.0;
    int col = 0;
    for (int i = 0; i < n; ++i) axis_vectors_(i, col) = 1.0;
    axis_values[col++] = 0.0;
    for (int k = 1; 2 * k < n; ++k) {
      const double s = std::sin(pi * k * h);
      const double mu = 4.0 / (h * h) * s * s;
      for (int i = 0; i < n; ++i) axis_vectors_(i, col) = std::sqrt(2.0) * std::cos(2.0 * pi * k * i * h);
      axis_values[col++] = mu;
      for (int i = 0; i < n; ++i) axis_vectors_(i, col) = std::sqrt(2.0) * std::sin(2.0 * pi * k * i * h);
      axis_values[col++] = mu;
    }
    if (n % 2 == 0) {
      for (int i = 0; i < n; ++i) axis_vectors_(i, col) = (i % 2 == 0) ? 1.0 : -1.0;
      axis_values[col++] = 4.0 / (h * h);
    }
  }

  struct Pair {
    double value;
    std::array<int, 2> idx;
  };
  std::vector<Pair> pairs;
  if (shape.dim == 1) {
    for (int a = 0; a < n; ++a) pairs.push_back({shift + axis_values[a], {a, 0}});
  } else {
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a) pairs.push_back({shift + axis_values[a] + axis_values[b], {a, b}});
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.value < y.value; });
  for (const auto& pr : pairs) {
    if (!(pr.value > 0.0)) throw ConfigError("reference operator must have positive eigenvalues");
    values_.push_back(pr.value);
    axis_index_.push_back(pr.idx);
  }
  for (int pos = 0; pos < static_cast<int>(values_.size()); ++pos) {
    const int j = dyadic_index(values_[pos]);
    if (blocks_.empty() || blocks_.back().j != j) blocks_.push_back({j, {}});
    blocks_.back().positions.push_back(pos);
  }
  contiguous_blocks_ = shape.dim == 1;
  for (const auto& b : blocks_)
    block_ranges_.push_back({b.positions.front(), static_cast<int>(b.positions.size())});
}

Eigen::VectorXd Eigenbasis::coefficients(const GridField& f) const {
  if (!(f.shape() == shape_)) throw ConfigError("grid mismatch");
  const double h = shape_.h();
  const int n = shape_.nodes_per_axis();
  if (shape_.dim == 1) return h * (axis_vectors_.transpose() * f.values());
  Eigen::Map<const Eigen::MatrixXd> F(f.values().data(), n, n);
  const Eigen::MatrixXd C = (h * h) * (axis_vectors_.transpose() * F * axis_vectors_);
  Eigen::VectorXd c(size());
  for (Eigen::Index pos = 0; pos < size(); ++pos) c[pos] = C(axis_index_[pos][0], axis_index_[pos][1]);
  return c;
}

GridField Eigenbasis::synthesize(const Eigen::VectorXd& c) const {
  const int n = shape_.nodes_per_axis();
  if (shape_.dim == 1) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (Eigen::Index pos = 0; pos < size(); ++pos) v += c[pos] * axis_vectors_.col(axis_index_[pos][0]);
    return GridField(shape_, std::move(v));
  }
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index pos = 0; pos < size(); ++pos) C(axis_index_[pos][0], axis_index_[pos][1]) = c[pos];
  const Eigen::MatrixXd F = axis_vectors_ * C * axis_vectors_.transpose();
  return GridField(shape_, Eigen::Map<const Eigen::VectorXd>(F.data(), F.size()));
}

GridField Eigenbasis::project(const Eigen::VectorXd& c, const std::vector<int>& positions) const {
  const int n = shape_.nodes_per_axis();
  if (positions.empty()) return GridField::zeros(shape_);
  if (shape_.dim == 1) {
    const int first = positions.front();
    const int len = static_cast<int>(positions.size());
    if (positions.back() - first + 1 == len) {
      // Axis columns are already in ascending order in 1D.
      return GridField(shape_, axis_vectors_.middleCols(first, len) * c.segment(first, len));
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (int pos : positions) v += c[pos] * axis_vectors_.col(axis_index_[pos][0]);
    return GridField(shape_, std::move(v));
  }
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (int pos : positions) C(axis_index_[pos][0], axis_index_[pos][1]) = c[pos];
  const Eigen::MatrixXd F = axis_vectors_ * C * axis_vectors_.transpose();
  return GridField(shape_, Eigen::Map<const Eigen::VectorXd>(F.data(), F.size()));
}

GridField Eigenbasis::mode(int k) const {
  if (k < 0 || k >= size()) throw ConfigError("mode index out of range");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(size());
  c[k] = 1.0;
  return project(c, {k});
}

SpaceTriple::SpaceTriple(double p, double q, GridShape shape, ScaleKind scale)
    : p_(p), q_(q), shape_(shape), scale_(scale), basis_((shape.validate(), shape)) {
  if (!(p > 2.0)) throw ConfigError("p must exceed 2");
  if (!(q > 2.0)) throw ConfigError("q must exceed 2");
  if (!(1.0 - 2.0 / p - shape.dim / q > 1e-12)) throw ConfigError("integrability condition 1 - 2/p > d/q violated");
  if (scale == ScaleKind::divergence_form) {
    smoothness_ = {-1.0, 0.0, 1.0 - 2.0 / p, 1.0};
  } else {
    smoothness_ = {0.0, 1.0, 2.0 - 2.0 / p, 2.0};
  }
  if (basis_.size() == 0) throw ConfigError("empty eigenbasis");
}

double SpaceTriple::norm_E(const GridField& f) const { return fractional_norm(f, smoothness_.E, *this, p_); }
double SpaceTriple::norm_half(const GridField& f) const { return fractional_norm(f, smoothness_.half, *this, p_); }
double SpaceTriple::norm_Ep(const GridField& f) const { return fractional_norm(f, smoothness_.Ep, *this, p_); }
double SpaceTriple::norm_E1(const GridField& f) const { return fractional_norm(f, smoothness_.E1, *this, p_); }

double SpaceTriple::noise_norm(const Eigen::MatrixXd& modes) const {
  if (modes.rows() != shape_.size()) throw ConfigError("noise mode size does not match grid");
  if (!modes.allFinite()) throw NumericalError("non-finite field");
  const Eigen::VectorXd magnitude = modes.rowwise().norm();
  double total = weighted_lq(magnitude, std::pow(shape_.h(), shape_.dim), q_);
  if (scale_ == ScaleKind::nondivergence_form) {
    Eigen::VectorXd grad_sq;
    Eigen::VectorXd weights;
    for (Eigen::Index k = 0; k < modes.cols(); ++k) {
      const NodalGradient g = nodal_gradient(shape_, modes.col(k));
      if (grad_sq.size() == 0) {
        grad_sq = Eigen::VectorXd::Zero(g.weights.size());
        weights = g.weights;
      }
      for (const auto& c : g.components) grad_sq += c.cwiseAbs2();
    }
    if (grad_sq.size() > 0) total += weighted_lq_pointwise(grad_sq.cwiseSqrt(), weights, q_);
  }
  return total;
}

double lq_norm(const GridField& f, double q) {
  if (!(q >= 1.0)) throw ConfigError("q must be at least 1");
  return weighted_lq(f.values(), std::pow(f.h(), f.shape().dim), q);
}

double sobolev1_norm(const GridField& f, double q) {
  if (!(q >= 1.0)) throw ConfigError("q must be at least 1");
  const double base = lq_norm(f, q);
  const NodalGradient g = nodal_gradient(f.shape(), f.values());
  Eigen::VectorXd mag = g.components[0].cwiseAbs2();
  for (std::size_t a = 1; a < g.components.size(); ++a) mag += g.components[a].cwiseAbs2();
  return weighted_lq_pointwise(mag.cwiseSqrt(), g.weights, q) + base;
}

double fractional_norm(const GridField& f, double s, const SpaceTriple& triple, double outer_p) {
  const Eigenbasis& basis = triple.eigenbasis();
  if (basis.size() == 0) throw ConfigError("empty eigenbasis");
  if (!(outer_p >= 1.0)) throw ConfigError("outer exponent must be at least 1");
  if (!f.is_finite()) throw NumericalError("non-finite field");
  const Eigen::VectorXd c = basis.coefficients(f);
  std::vector<double> terms;
  terms.reserve(basis.blocks().size());
  for (const auto& block : basis.blocks()) {
    const GridField piece = basis.project(c, block.positions);
    terms.push_back(std::pow(2.0, block.j * s) * lq_norm(piece, triple.q()));
  }
  const double m = *std::max_element(terms.begin(), terms.end());
  if (m == 0.0) return 0.0;
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double t : terms) acc += std::pow(t / m, outer_p);
  return m * std::pow(acc, 1.0 / outer_p);
}

double theta_lambda(double x, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (x < 0.0 || std::isnan(x)) throw ConfigError("theta argument must be nonnegative");
  if (x <= lambda) return 1.0;
  if (x >= 2.0 * lambda) return 0.0;
  return 2.0 - x / lambda;
}

void MonitorSeries::append(double t, double sup_candidate, double e1_norm, double dt) {
  if (!times.empty() && !(t > times.back())) throw ConfigError("monitor times must increase");
  const double sup = std::max(sup_term(), sup_candidate);
  lp_power_sum += dt * std::pow(e1_norm, p);
  times.push_back(t);
  sup_terms.push_back(sup);
  lp_terms.push_back(std::pow(lp_power_sum, 1.0 / p));
}

MonitorSeries monitor_update(const MonitorSeries& series, const GridField& u_new, const GridField& u_anchor,
                             double dt, const SpaceTriple& triple) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  MonitorSeries out = series;
  out.p = triple.p();
  const double t = series.empty() ? dt : series.times.back() + dt;
  out.append(t, triple.norm_Ep(u_new - u_anchor), triple.norm_E1(u_new), dt);
  return out;
}

}  // namespace qsee
