#pragma once

// Coefficient bundle of the quasilinear equation
//   du = [−A(u)u + F(t,u) + f(t)]dt + [B(u) + b]dW
// with A(u) = −div(a(u)∇·) (divergence form) or −Σ a_ij(x,u,∇u)∂_i∂_j
// (non-divergence form), both shifted by γ.

#include "qsee/spaces.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace qsee {

enum class ModelForm { divergence, nondivergence };

using Point = std::array<double, 2>;

struct LipschitzData {
  double C_Q = 0.0;  // ‖A(z) − A(y)‖_{B(E^1,E)} ≤ C_Q ‖z − y‖_{E_p}
  double L_a = 0.0;
  double L_G = 0.0;
  double L_B = 0.0;
};

struct ModelSpec {
  std::string name;
  ModelForm form = ModelForm::divergence;
  std::shared_ptr<const SpaceTriple> triple;

  std::function<double(double)> diffusivity;  // a(u)
  std::function<double(double)> flux;         // G(u), the same along every axis
  std::function<Eigen::Matrix2d(const Point& x, double u, const Point& grad)> coefficients;  // a_ij

  std::function<double(double)> reaction;                 // pointwise part of F
  std::function<double(double, const Point&)> forcing;    // f(t,x)
  std::function<double(double)> noise_multiplier;         // g in B_k(u) = β_k g(u) e_k
  double additive_noise = 0.0;                            // b in b_k = β_k b e_k

  /// Columns β_k e_k (nodes × K).
  Eigen::MatrixXd noise_modes;

  /// γ in A(u) + γ; when `compensate_shift` the drift receives +γu so the
  /// continuous equation is unchanged.
  double shift = 1.0;
  bool compensate_shift = true;
  double ellipticity_floor = 1.0;
  LipschitzData lipschitz;
  /// Radius n of the retraction R_n applied inside A, F and B.
  std::optional<double> truncation_radius;

  const GridShape& shape() const { return triple->shape(); }
  int n_modes() const { return static_cast<int>(noise_modes.cols()); }

  /// R_n u when a truncation radius is set, u otherwise.
  GridField truncated(const GridField& u) const;
  void validate() const;
};

/// Columns k^{−s_B} e_k for the first K reference eigenfunctions.
Eigen::MatrixXd make_noise_modes(const SpaceTriple& triple, int n_modes, double s_B);

/// F(t,ũ) + f(t) + γu with ũ the truncated state.
GridField explicit_drift(const ModelSpec& model, double t, const GridField& u, const GridField& u_trunc);
GridField explicit_drift(const ModelSpec& model, double t, const GridField& u);

/// Central-difference divergence of G(u) (zero boundary values on Dirichlet grids).
GridField flux_divergence(const ModelSpec& model, const GridField& u);

/// Columns B_k(ũ) + b_k.
Eigen::MatrixXd noise_coefficients(const ModelSpec& model, const GridField& u_trunc);

/// Σ_k (B_k(ũ) + b_k) ΔW_k.
GridField noise_term(const ModelSpec& model, const GridField& u_trunc, const Eigen::VectorXd& dW);

}  // namespace qsee
