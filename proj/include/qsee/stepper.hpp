#pragma once

// Frozen-coefficient semi-implicit Euler–Maruyama segments.

#include "qsee/discrete_operator.hpp"
#include "qsee/model_spec.hpp"
#include "qsee/noise.hpp"
#include "qsee/spaces.hpp"

#include <Eigen/SparseLU>

#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace qsee {

struct MRConstants {
  double c_mrd_hat = 0.0;
  double c_mrs_hat = 0.0;
  int n_samples = 0;
};

struct SmallnessBudget {
  double C_Q = 0.0;
  double L_F1 = 0.0;
  double L_F2 = 0.0;
  double L_B1 = 0.0;
  double L_B2 = 0.0;
  double lambda = 1.0;

  /// C_MRD(6 C_Q λ + L_F1 + L_F2) + C_MRS(L_B1 + L_B2).
  double smallness(const MRConstants& mr) const;
  /// Throws ConfigError unless smallness(mr) < 1 and all entries are admissible.
  void validate(const MRConstants& mr) const;
  void validate() const;
};

/// Factorization of I + dt·A for repeated solves.
class ImplicitSolver {
 public:
  ImplicitSolver(const DiscreteOperator& op, double dt);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  double dt() const { return dt_; }

 private:
  double dt_;
  std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

/// One step of (I + dt A)u⁺ = u + dt[θ(A − A(u))u + F(t,u) + f(t)] + (B(u)+b)dW.
GridField semi_implicit_step(const GridField& u, const DiscreteOperator& op, const ImplicitSolver& solver,
                             const ModelSpec& model, double theta, double t, double dt, const Eigen::VectorXd& dW);
GridField semi_implicit_step(const GridField& u, const DiscreteOperator& op, const ModelSpec& model, double theta,
                             double t, double dt, const Eigen::VectorXd& dW);

/// θ(A(anchor) − A(u))u.
GridField truncated_quasilinearity(const GridField& u, const GridField& u_anchor, double theta,
                                   const ModelSpec& model);

struct SegmentOptions {
  double lambda = 1.0;
  /// Stop at the first step whose monitor exceeds λ; otherwise keep going
  /// and let θ_λ act.
  bool stop_at_exceedance = true;
  double field_cap = std::numeric_limits<double>::infinity();
  /// When false no monitor is kept, θ stays 1 and the segment never stops early.
  bool track_monitor = true;
};

struct SegmentResult {
  std::vector<double> times;       // times[0] = t0
  std::vector<GridField> states;   // states[0] = anchor
  MonitorSeries monitor;           // entry m−1 is the monitor after step m
  std::vector<double> theta_history;  // entry m−1 is the θ used in step m
  std::optional<int> stop_index;   // step count at the first exceedance
  bool blown_up = false;

  int steps() const { return static_cast<int>(states.size()) - 1; }
  const GridField& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
};

/// Steps [first_step, end_step) of the global noise grid from the anchor at
/// time first_step·dt. θ for step m+1 is θ_λ of the monitor after step m.
/// A blown-up step (non-finite or E_p norm above the cap) is not stored.
SegmentResult solve_frozen_segment(const GridField& u_anchor, const ModelSpec& model, const NoisePath& noise,
                                   int first_step, int end_step, const SegmentOptions& options);

SegmentResult solve_frozen_segment(const GridField& u_anchor, const ModelSpec& model, const SmallnessBudget& budget,
                                   const NoiseSpec& spec, std::uint64_t path_index, double t0, double t_end);

/// Reference scheme that re-assembles A(u) at every step (no freezing, no
/// cut-off). Returns the states at steps first_step..end_step.
std::vector<GridField> direct_coefficient_update(const GridField& u0, const ModelSpec& model, const NoisePath& noise,
                                                 int first_step, int end_step);

}  // namespace qsee
