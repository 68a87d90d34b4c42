#include "qsee/stepper.hpp"

#include "qsee/errors.hpp"

#include <cmath>

namespace qsee {

double SmallnessBudget::smallness(const MRConstants& mr) const {
  return mr.c_mrd_hat * (6.0 * C_Q * lambda + L_F1 + L_F2) + mr.c_mrs_hat * (L_B1 + L_B2);
}

void SmallnessBudget::validate() const {
  for (double v : {C_Q, L_F1, L_F2, L_B1, L_B2})
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("budget constants must be finite and nonnegative");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
}

void SmallnessBudget::validate(const MRConstants& mr) const {
  validate();
  if (!(smallness(mr) < 1.0)) throw ConfigError("smallness condition unsatisfiable");
}

ImplicitSolver::ImplicitSolver(const DiscreteOperator& op, double dt)
    : dt_(dt), lu_(std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>()) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  Eigen::SparseMatrix<double> id(op.size(), op.size());
  id.setIdentity();
  const Eigen::SparseMatrix<double> m = id + dt * op.matrix();
  lu_->compute(m);
  if (lu_->info() != Eigen::Success) throw NumericalError("linear solve failure");
}

Eigen::VectorXd ImplicitSolver::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = lu_->solve(rhs);
  if (lu_->info() != Eigen::Success) throw NumericalError("linear solve failure");
  return x;
}

GridField semi_implicit_step(const GridField& u, const DiscreteOperator& op, const ImplicitSolver& solver,
                             const ModelSpec& model, double theta, double t, double dt, const Eigen::VectorXd& dW) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in [0,1]");
  if (std::abs(solver.dt() - dt) > 1e-15 * dt) throw ConfigError("solver built for a different dt");
  const GridField ut = model.truncated(u);
  Eigen::VectorXd rhs = u.values();
  Eigen::VectorXd drift = explicit_drift(model, t, u, ut).values();
  if (theta != 0.0) drift += theta * (op.apply(u.values()) - quasilinear_apply(model, u, ut).values());
  rhs += dt * drift;
  if (model.n_modes() > 0) rhs += noise_term(model, ut, dW).values();
  return GridField(u.shape(), solver.solve(rhs));
}

GridField semi_implicit_step(const GridField& u, const DiscreteOperator& op, const ModelSpec& model, double theta,
                             double t, double dt, const Eigen::VectorXd& dW) {
  return semi_implicit_step(u, op, ImplicitSolver(op, dt), model, theta, t, dt, dW);
}

GridField truncated_quasilinearity(const GridField& u, const GridField& u_anchor, double theta,
                                   const ModelSpec& model) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in [0,1]");
  if (theta == 0.0) return GridField::zeros(u.shape());
  const GridField frozen = assemble_operator(model, model.truncated(u_anchor)).apply(u);
  const GridField current = quasilinear_apply(model, u, model.truncated(u));
  return theta * (frozen - current);
}

SegmentResult solve_frozen_segment(const GridField& u_anchor, const ModelSpec& model, const NoisePath& noise,
                                   int first_step, int end_step, const SegmentOptions& options) {
  if (!(options.lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (first_step < 0 || end_step > noise.n_steps() || first_step > end_step)
    throw ConfigError("segment outside the noise grid");
  if (!u_anchor.is_finite()) throw NumericalError("non-finite field");
  const SpaceTriple& triple = *model.triple;
  const double dt = noise.dt;
  const DiscreteOperator op = assemble_operator(model, model.truncated(u_anchor));
  const ImplicitSolver solver(op, dt);

  SegmentResult out;
  out.monitor.p = triple.p();
  out.times.push_back(first_step * dt);
  out.states.push_back(u_anchor);
  const double anchor_ep = std::isfinite(options.field_cap) && options.track_monitor ? triple.norm_Ep(u_anchor) : 0.0;
  double theta = 1.0;
  for (int m = first_step; m < end_step; ++m) {
    const double t = m * dt;
    GridField next = semi_implicit_step(out.states.back(), op, solver, model, theta, t, dt,
                                        noise.increments.row(m).transpose());
    if (!next.is_finite()) {
      out.blown_up = true;
      break;
    }
    if (!options.track_monitor) {
      if (std::isfinite(options.field_cap) && triple.norm_Ep(next) > options.field_cap) {
        out.blown_up = true;
        break;
      }
      out.theta_history.push_back(1.0);
      out.times.push_back((m + 1) * dt);
      out.states.push_back(std::move(next));
      continue;
    }
    const double diff_ep = triple.norm_Ep(next - u_anchor);
    if (std::isfinite(options.field_cap) && diff_ep + anchor_ep > options.field_cap &&
        triple.norm_Ep(next) > options.field_cap) {
      out.blown_up = true;
      break;
    }
    out.monitor.append((m + 1) * dt, diff_ep, triple.norm_E1(next), dt);
    out.theta_history.push_back(theta);
    out.times.push_back((m + 1) * dt);
    out.states.push_back(std::move(next));
    const double value = out.monitor.value();
    if (value > options.lambda && !out.stop_index) {
      out.stop_index = out.steps();
      if (options.stop_at_exceedance) break;
    }
    theta = theta_lambda(value, options.lambda);
  }
  return out;
}

SegmentResult solve_frozen_segment(const GridField& u_anchor, const ModelSpec& model, const SmallnessBudget& budget,
                                   const NoiseSpec& spec, std::uint64_t path_index, double t0, double t_end) {
  budget.validate();
  const NoisePath noise = sample_path(spec, path_index);
  const int first = static_cast<int>(std::llround(t0 / spec.dt));
  const int last = static_cast<int>(std::llround(t_end / spec.dt));
  SegmentOptions options;
  options.lambda = budget.lambda;
  return solve_frozen_segment(u_anchor, model, noise, first, last, options);
}

std::vector<GridField> direct_coefficient_update(const GridField& u0, const ModelSpec& model, const NoisePath& noise,
                                                 int first_step, int end_step) {
  if (first_step < 0 || end_step > noise.n_steps() || first_step > end_step)
    throw ConfigError("segment outside the noise grid");
  const double dt = noise.dt;
  std::vector<GridField> states{u0};
  for (int m = first_step; m < end_step; ++m) {
    const GridField& u = states.back();
    const GridField ut = model.truncated(u);
    const DiscreteOperator op = assemble_operator(model, ut);
    const ImplicitSolver solver(op, dt);
    Eigen::VectorXd rhs = u.values() + dt * explicit_drift(model, m * dt, u, ut).values();
    if (model.n_modes() > 0) rhs += noise_term(model, ut, noise.increments.row(m).transpose()).values();
    GridField next(u.shape(), solver.solve(rhs));
    if (!next.is_finite()) break;
    states.push_back(std::move(next));
  }
  return states;
}

}  // namespace qsee
