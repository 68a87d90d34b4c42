#include "support.hpp"

#include "qsee/discrete_operator.hpp"
#include "qsee/errors.hpp"
#include "qsee/mr_constants.hpp"
#include "qsee/noise.hpp"
#include "qsee/picard.hpp"
#include "qsee/stepper.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>

using namespace qsee;
using namespace qsee::test;

namespace {

std::vector<double> sorted_eigenvalues(const DiscreteOperator& op) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(op.matrix()));
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("unit diffusivity gives the shifted Laplacian spectrum") {
  const int N = 32;
  const auto triple = dirichlet_triple(N);
  const ModelSpec model = heat_model(triple);
  const DiscreteOperator op = assemble_operator(model, sine(triple->shape()));
  const auto ev = sorted_eigenvalues(op);
  const double h = 1.0 / N;
  for (int k = 1; k < N; ++k) {
    const double s = std::sin(k * M_PI * h / 2.0);
    CHECK(ev[k - 1] == doctest::Approx(4.0 / (h * h) * s * s + 1.0).epsilon(1e-12));
  }
}

TEST_CASE("constant diffusivity collapses to c times the Laplacian plus I") {
  const auto triple = dirichlet_triple(16, 8.0, 4.0, 2);
  const ModelSpec unit = heat_model(triple);
  const ModelSpec scaled =
      make_gdiv_model(triple, [](double) { return 2.5; }, nullptr, nullptr, params());
  const GridField anchor = random_spectral_field(triple->eigenbasis(), 1, 0, 1.0);
  const Eigen::MatrixXd L = Eigen::MatrixXd(assemble_operator(unit, anchor).matrix()) -
                            Eigen::MatrixXd::Identity(triple->shape().size(), triple->shape().size());
  const Eigen::MatrixXd expected = 2.5 * L + Eigen::MatrixXd::Identity(L.rows(), L.cols());
  CHECK((Eigen::MatrixXd(assemble_operator(scaled, anchor).matrix()) - expected).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("symmetric diffusivity gives a symmetric operator") {
  for (auto triple : {dirichlet_triple(64), dirichlet_triple(12, 8.0, 4.0, 2)}) {
    const ModelSpec model = make_gdiv_model(triple, diffusivity_by_name("bounded_quadratic", 1.0), nullptr,
                                            nullptr, params());
    const GridField anchor = 3.0 * random_spectral_field(triple->eigenbasis(), 2, 0, 1.5);
    CHECK(assemble_operator(model, anchor).is_symmetric(1e-12));
  }
}

TEST_CASE("semi_implicit_step examples") {
  const auto triple = dirichlet_triple(64);
  const Eigen::VectorXd dW = Eigen::VectorXd::Zero(1);
  const double dt = 1e-3;

  const ModelSpec heat = heat_model(triple);
  const GridField zero = GridField::zeros(triple->shape());
  const DiscreteOperator op0 = assemble_operator(heat, zero);
  CHECK(semi_implicit_step(zero, op0, heat, 1.0, 0.0, dt, dW).values().cwiseAbs().maxCoeff() == 0.0);

  const ModelSpec linear = make_linear_model(triple, params());
  const Eigenbasis& basis = triple->eigenbasis();
  for (int k : {0, 5, 40}) {
    const GridField e = basis.mode(k);
    const DiscreteOperator op = assemble_operator(linear, e);
    const GridField next = semi_implicit_step(e, op, linear, 1.0, 0.0, dt, dW);
    const double factor = 1.0 / (1.0 + dt * (basis.values()[k] + 1.0));
    CHECK((next.values() - factor * e.values()).cwiseAbs().maxCoeff() < 1e-12);
  }

  const GridField u = sine(triple->shape(), 0.7, 3);
  const DiscreteOperator op = assemble_operator(heat, sine(triple->shape(), 0.2));
  CHECK(semi_implicit_step(u, op, heat, 0.0, 0.0, dt, dW).values() ==
        semi_implicit_step(u, op, heat, 1.0, 0.0, dt, dW).values());
}

TEST_CASE("truncated_quasilinearity vanishes at the anchor and for theta = 0") {
  const auto triple = dirichlet_triple(64);
  const ModelSpec model =
      make_gdiv_model(triple, diffusivity_by_name("bounded_quadratic", 1.0), nullptr, nullptr, params());
  const GridField u = sine(triple->shape(), 2.0);
  const GridField anchor = sine(triple->shape(), 1.0, 2);
  CHECK(truncated_quasilinearity(u, u, 1.0, model).values().cwiseAbs().maxCoeff() == 0.0);
  CHECK(truncated_quasilinearity(u, anchor, 0.0, model).values().cwiseAbs().maxCoeff() == 0.0);
  CHECK(truncated_quasilinearity(u, anchor, 1.0, model).values().cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("frozen segment with a huge lambda never stops") {
  const auto triple = dirichlet_triple(32);
  const ModelSpec model = make_gdiv_model(triple, diffusivity_by_name("bounded_quadratic", 1.0),
                                          flux_by_name("sine", 0.5), multiplier_by_name("linear", 0.5), params(8));
  const NoisePath noise = sample_path(spec(8, 200, 1e-4), 0);
  SegmentOptions options;
  options.lambda = 1e9;
  const SegmentResult r = solve_frozen_segment(sine(triple->shape(), 0.5), model, noise, 0, 200, options);
  CHECK(!r.stop_index.has_value());
  CHECK(r.steps() == 200);
  CHECK(r.final_time() == doctest::Approx(0.02));
  for (double th : r.theta_history) CHECK(th == 1.0);
}

TEST_CASE("frozen segment stops after one step when lambda is below the first monitor") {
  const auto triple = dirichlet_triple(32);
  const ModelSpec model = heat_model(triple);
  const double dt = 1e-4;
  const GridField anchor = sine(triple->shape(), 0.5);
  SegmentOptions options;
  options.lambda = 0.5 * std::pow(dt, 1.0 / triple->p()) * triple->norm_E1(anchor);
  const SegmentResult r = solve_frozen_segment(anchor, model, sample_path(spec(1, 50, dt), 0), 0, 50, options);
  REQUIRE(r.stop_index.has_value());
  CHECK(*r.stop_index == 1);
}

TEST_CASE("heat decay monitor matches the closed form") {
  const auto triple = dirichlet_triple(64);
  const ModelSpec model = heat_model(triple);
  const double dt = 1e-4;
  const int M = 500;
  const GridField u0 = triple->eigenbasis().mode(0);
  SegmentOptions options;
  options.lambda = 1e9;
  const SegmentResult r = solve_frozen_segment(u0, model, sample_path(spec(1, M, dt), 0), 0, M, options);
  const double lam = triple->eigenbasis().values()[0];
  const double p = triple->p();
  const double t = M * dt;
  const double exact = -std::expm1(-lam * t) * triple->norm_Ep(u0) +
                       triple->norm_E1(u0) * std::pow(-std::expm1(-p * lam * t) / (p * lam), 1.0 / p);
  CHECK(r.monitor.value() == doctest::Approx(exact).epsilon(0.02));
}

TEST_CASE("picard trivial case converges in one iteration to the semigroup path") {
  const auto triple = dirichlet_triple(32);
  const ModelSpec model = make_linear_model(triple, params());
  const GridField u0 = sine(triple->shape(), 0.3, 2);
  DiscreteOperator op = assemble_operator(model, u0);
  op.eigen_factorize();
  const NoisePath noise = sample_path(spec(1, 16, 1e-3), 0);
  const PicardResult r = picard_solve(op, model, u0, noise, 0.0, 1e-12, 10);
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  for (int m = 0; m <= 16; ++m)
    CHECK((r.path[m].values() - op.semigroup(u0.values(), m * 1e-3)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("picard with a small linear reaction contracts") {
  const auto triple = dirichlet_triple(32);
  ModelSpec model = make_linear_model(triple, params(4, 0.5));
  model.reaction = [](double u) { return 2.0 * u; };
  const GridField u0 = sine(triple->shape(), 0.3);
  DiscreteOperator op = assemble_operator(model, u0);
  op.eigen_factorize();
  const PicardResult r = picard_solve(op, model, u0, sample_path(spec(4, 32, 1e-3), 1), 0.0, 1e-10, 40);
  REQUIRE(r.converged);
  REQUIRE(r.ratios.size() >= 3);
  // Volterra-type map: ratios stay below 1 and shrink rather than settle.
  for (std::size_t k = 0; k + 1 < r.ratios.size(); ++k) CHECK(r.ratios[k] < 1.0);
}

TEST_CASE("picard fixed point and semi-implicit path approach each other under refinement") {
  const auto triple = dirichlet_triple(32);
  const ModelSpec model = make_linear_model(triple, params(4, 0.5));
  const GridField u0 = sine(triple->shape(), 0.3);
  DiscreteOperator op = assemble_operator(model, u0);
  op.eigen_factorize();
  const double T = 0.02;
  const NoisePath fine = sample_path(spec(4, 256, T / 256), 3);
  std::vector<double> diffs;
  for (int factor : {16, 4, 1}) {
    const NoisePath noise = coarsen(fine, factor);
    const PicardResult pic = picard_solve(op, model, u0, noise, 0.0, 1e-12, 10);
    SegmentOptions options;
    options.track_monitor = false;
    const SegmentResult seg = solve_frozen_segment(u0, model, noise, 0, noise.n_steps(), options);
    double d = 0.0;
    for (int m = 0; m <= noise.n_steps(); ++m) d = std::max(d, triple->norm_Ep(pic.path[m] - seg.states[m]));
    diffs.push_back(d);
  }
  CHECK(diffs[1] < diffs[0]);
  CHECK(diffs[2] < diffs[1]);
}

TEST_CASE("scalar operator MR ratio matches the closed form") {
  const auto triple = dirichlet_triple(32);
  const int n = triple->shape().size();
  const double c = 2.0;
  Eigen::SparseMatrix<double> I(n, n);
  I.setIdentity();
  DiscreteOperator op(triple->shape(), c * I, 0.0);
  op.eigen_factorize();
  const int M = 1 << 12;
  const double T = 1.0, dt = T / M, p = triple->p();
  const GridField f = sine(triple->shape());
  const std::vector<GridField> h(M, f);
  // v(t) = (1 − e^{−ct})/c · f.
  double integral = 0.0;
  const int Q = 200000;
  for (int i = 0; i < Q; ++i) {
    const double t = (i + 0.5) * T / Q;
    integral += std::pow(-std::expm1(-c * t) / c, p) * T / Q;
  }
  const double exact = (std::pow(integral, 1.0 / p) * triple->norm_E1(f) + -std::expm1(-c * T) / c * triple->norm_Ep(f)) /
                       (std::pow(T, 1.0 / p) * triple->norm_E(f));
  CHECK(mr_ratio_deterministic(op, *triple, h, dt) == doctest::Approx(exact).epsilon(0.05));
}

TEST_CASE("stochastic MR ratio is invariant under relabeling of noise modes") {
  const auto triple = dirichlet_triple(32);
  const ModelSpec model = heat_model(triple, 4, 1.0);
  DiscreteOperator op = assemble_operator(model, GridField::zeros(triple->shape()));
  op.eigen_factorize();
  const int M = 32;
  const NoisePath noise = sample_path(spec(4, M, 1e-3), 5);
  std::vector<Eigen::MatrixXd> g, g_perm;
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(4);
  perm.indices() << 2, 0, 3, 1;
  for (int m = 0; m < M; ++m) {
    g.push_back((1.0 + 0.1 * m) * model.noise_modes);
    g_perm.push_back(g.back() * perm);
  }
  const double a = mr_ratio_stochastic(op, *triple, g, noise.increments, noise.dt);
  const double b = mr_ratio_stochastic(op, *triple, g_perm, noise.increments * perm, noise.dt);
  CHECK(a > 0.0);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("MR estimates are running maxima") {
  const auto triple = dirichlet_triple(32);
  const ModelSpec model = heat_model(triple, 4);
  DiscreteOperator op = assemble_operator(model, GridField::zeros(triple->shape()));
  op.eigen_factorize();
  const NoiseSpec s = spec(4, 32, 1e-3, 8);
  MRConstants prev;
  for (int n = 1; n <= 6; ++n) {
    const MRConstants mr = estimate_mr_constants(op, *triple, s, n);
    CHECK(mr.c_mrd_hat >= prev.c_mrd_hat);
    CHECK(mr.c_mrs_hat >= prev.c_mrs_hat);
    prev = mr;
  }
}

TEST_CASE("choose_lambda examples") {
  SmallnessBudget partial;
  partial.C_Q = 1.0;
  MRConstants mr{1.0, 1.0, 1};
  CHECK(choose_lambda(partial, mr, 0.6) == doctest::Approx(0.1).epsilon(1e-14));
  partial.C_Q = 1e12;
  CHECK(choose_lambda(partial, mr, 0.6) < 1e-12);
  partial.C_Q = 1.0;
  partial.L_F1 = 0.7;
  CHECK_THROWS_AS(choose_lambda(partial, mr, 0.6), ConfigError);
}

TEST_CASE("smallness validation") {
  SmallnessBudget b;
  b.C_Q = 1.0;
  b.lambda = 0.1;
  const MRConstants mr{1.0, 1.0, 1};
  CHECK(b.smallness(mr) == doctest::Approx(0.6));
  CHECK_NOTHROW(b.validate(mr));
  b.lambda = 0.2;
  CHECK_THROWS_AS(b.validate(mr), ConfigError);
}
