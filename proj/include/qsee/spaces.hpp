#pragma once

// Discrete space scale E ⊃ E^{1/2} ⊃ E_p ⊃ E^1 on uniform grids, the cut-off
// function θ_λ and the stopping monitor.

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <vector>

namespace qsee {

enum class Boundary { dirichlet, periodic };

/// Uniform grid on the unit interval/square. Dirichlet grids store interior
/// nodes only (the boundary value 0 is implicit); periodic grids store one
/// period [0,1)^d.
struct GridShape {
  int dim = 1;
  int intervals = 64;
  Boundary boundary = Boundary::dirichlet;

  int nodes_per_axis() const { return boundary == Boundary::dirichlet ? intervals - 1 : intervals; }
  int size() const { return dim == 1 ? nodes_per_axis() : nodes_per_axis() * nodes_per_axis(); }
  double h() const { return 1.0 / intervals; }
  /// Coordinate of node `i` along one axis.
  double coordinate(int i) const { return boundary == Boundary::dirichlet ? (i + 1) * h() : i * h(); }
  /// Coordinates of flat node index `k` (x fastest); unused axis is 0.
  std::array<double, 2> point(int k) const;

  void validate() const;
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

class GridField {
 public:
  GridField() = default;
  GridField(GridShape shape, Eigen::VectorXd values);

  static GridField zeros(const GridShape& shape);
  static GridField from_function(const GridShape& shape,
                                 const std::function<double(const std::array<double, 2>&)>& fn);

  const GridShape& shape() const { return shape_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  double h() const { return shape_.h(); }
  Eigen::Index size() const { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_[i]; }
  double& operator[](Eigen::Index i) { return values_[i]; }

  bool is_finite() const { return values_.allFinite(); }

  GridField& operator+=(const GridField& other);
  GridField& operator-=(const GridField& other);
  GridField& operator*=(double c);

  friend GridField operator+(GridField a, const GridField& b) { return a += b; }
  friend GridField operator-(GridField a, const GridField& b) { return a -= b; }
  friend GridField operator*(double c, GridField a) { return a *= c; }
  friend GridField operator*(GridField a, double c) { return a *= c; }

 private:
  GridShape shape_;
  Eigen::VectorXd values_;
};

enum class ScaleKind { divergence_form, nondivergence_form };

/// Smoothness orders of the four spaces of a triple.
struct Smoothness {
  double E;
  double half;
  double Ep;
  double E1;
};

/// One dyadic block Λ_j = {k : λ_k ∈ [4^j, 4^{j+1})}. Positions refer to the
/// ascending order of the eigenvalues.
struct DyadicBlock {
  int j;
  std::vector<int> positions;
};

/// Eigenpairs of the discrete reference operator: the Dirichlet Laplacian
/// (−Δ_h) on Dirichlet grids, I − Δ_h on periodic grids. Eigenvectors are
/// orthonormal for the h^d-weighted inner product.
class Eigenbasis {
 public:
  explicit Eigenbasis(const GridShape& shape);

  const GridShape& shape() const { return shape_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(values_.size()); }
  /// Eigenvalues in ascending order.
  const std::vector<double>& values() const { return values_; }
  const std::vector<DyadicBlock>& blocks() const { return blocks_; }

  /// Expansion coefficients in ascending eigenvalue order.
  Eigen::VectorXd coefficients(const GridField& f) const;
  GridField synthesize(const Eigen::VectorXd& coefficients) const;
  /// Reconstruction of the projection onto the given positions.
  GridField project(const Eigen::VectorXd& coefficients, const std::vector<int>& positions) const;
  /// k-th eigenfunction (ascending order), unit norm in L^2.
  GridField mode(int k) const;

 private:
  GridShape shape_;
  Eigen::MatrixXd axis_vectors_;          // nodes × nodes, columns sorted by axis eigenvalue
  std::vector<double> values_;
  std::vector<std::array<int, 2>> axis_index_;
  std::vector<DyadicBlock> blocks_;
  bool contiguous_blocks_ = false;
  std::vector<std::array<int, 2>> block_ranges_;  // 1D fast path
};

/// Norm provider for (E, E^{1/2}, E_p, E^1) plus the noise norm.
class SpaceTriple {
 public:
  SpaceTriple(double p, double q, GridShape shape, ScaleKind scale);

  double p() const { return p_; }
  double q() const { return q_; }
  int d() const { return shape_.dim; }
  const GridShape& shape() const { return shape_; }
  ScaleKind scale() const { return scale_; }
  const Smoothness& smoothness() const { return smoothness_; }
  const Eigenbasis& eigenbasis() const { return basis_; }

  double norm_E(const GridField& f) const;
  double norm_half(const GridField& f) const;
  double norm_Ep(const GridField& f) const;
  double norm_E1(const GridField& f) const;

  /// ‖(g_k)_k‖_{γ(ℓ²;E^{1/2})} for a mode family stored column-wise
  /// (nodes × K). Uses γ(ℓ²;L^q) ≅ L^q(D;ℓ²); for E^{1/2} = W^{1,q} the
  /// gradient part is added.
  double noise_norm(const Eigen::MatrixXd& modes) const;

 private:
  double p_;
  double q_;
  GridShape shape_;
  ScaleKind scale_;
  Smoothness smoothness_;
  Eigenbasis basis_;
};

double lq_norm(const GridField& f, double q);

/// ‖∇f‖_q + ‖f‖_q with centered differences (one-sided at Dirichlet
/// boundary nodes, wrap-around on the torus). A periodic field that is not
/// continuous across the wrap gets a large gradient norm.
double sobolev1_norm(const GridField& f, double q);

/// Dyadic eigen-block surrogate of a Besov/Sobolev norm of smoothness `s`:
/// (Σ_j 2^{j s r} ‖Δ_j f‖_q^r)^{1/r} with r = outer_p.
double fractional_norm(const GridField& f, double s, const SpaceTriple& triple, double outer_p);

/// Φ_λ: 1 on [0,λ], 2 − x/λ on (λ,2λ), 0 beyond.
double theta_lambda(double x, double lambda);

/// Running value of sup_{s}‖u(s) − u_anchor‖_{E_p} + ‖u‖_{L^p(anchor,t;E^1)}.
struct MonitorSeries {
  std::vector<double> times;
  std::vector<double> sup_terms;
  std::vector<double> lp_terms;
  double lp_power_sum = 0.0;  // Σ dt ‖u‖_{E^1}^p
  double p = 2.0;

  bool empty() const { return times.empty(); }
  double sup_term() const { return sup_terms.empty() ? 0.0 : sup_terms.back(); }
  double lp_term() const { return lp_terms.empty() ? 0.0 : lp_terms.back(); }
  double value() const { return sup_term() + lp_term(); }
  double value_at(std::size_t i) const { return sup_terms.at(i) + lp_terms.at(i); }

  void append(double t, double sup_candidate, double e1_norm, double dt);
};

MonitorSeries monitor_update(const MonitorSeries& series, const GridField& u_new, const GridField& u_anchor,
                             double dt, const SpaceTriple& triple);

}  // namespace qsee
