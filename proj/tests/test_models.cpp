#include "support.hpp"

#include "qsee/discrete_operator.hpp"
#include "qsee/errors.hpp"
#include "qsee/harness.hpp"
#include "qsee/localizer.hpp"
#include "qsee/noise.hpp"

#include <doctest.h>

using namespace qsee;
using namespace qsee::test;

TEST_CASE("gdiv construction") {
  const auto triple = dirichlet_triple(32);
  const ModelSpec heat = heat_model(triple);
  CHECK(heat.form == ModelForm::divergence);
  CHECK(heat.lipschitz.L_a == 0.0);
  const ModelSpec bq = make_gdiv_model(triple, [](double u) { return 1.0 + 0.5 * u * u / (1.0 + u * u); }, nullptr,
                                       nullptr, params());
  CHECK(bq.ellipticity_floor == 1.0);
  CHECK(bq.lipschitz.L_a > 0.0);
  CHECK(bq.lipschitz.L_a < 0.5);
  CHECK_THROWS_AS(make_gdiv_model(triple, [](double u) { return u; }, nullptr, nullptr, params()), ConfigError);
  CHECK_THROWS_AS(make_gdiv_model(periodic_triple(32), [](double) { return 1.0; }, nullptr, nullptr, params()),
                  ConfigError);
}

TEST_CASE("nondivergence construction") {
  const auto triple = periodic_triple(32);
  CHECK_NOTHROW(make_nondivergence_model(triple, nondivergence_by_name("identity", 0.0), nullptr, params()));
  CHECK_NOTHROW(make_nondivergence_model(triple, nondivergence_by_name("sine_squared", 0.25), nullptr, params()));
  CHECK_THROWS_AS(make_nondivergence_model(
                      triple, [](const Point&, double, const Point&) { return (0.5 * Eigen::Matrix2d::Identity()).eval(); },
                      nullptr, params()),
                  ConfigError);
}

TEST_CASE("constant field on the torus sees only the shift") {
  for (auto triple : {periodic_triple(32), periodic_triple(8, 8.0, 4.0, 2)}) {
    const ModelSpec model =
        make_nondivergence_model(triple, nondivergence_by_name("sine_squared", 0.25), nullptr, params());
    const GridField one = GridField::from_function(triple->shape(), [](const Point&) { return 1.0; });
    const GridField out = assemble_operator(model, one).apply(one);
    CHECK((out.values().array() - model.shift).abs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("ou_oracle examples") {
  const OuMoments det = ou_oracle(3.0, 0.0, 0.5, 2.0);
  CHECK(det.variance == 0.0);
  CHECK(det.mean == doctest::Approx(2.0 * std::exp(-1.5)));
  CHECK(ou_oracle(2.0, 1.5, 1e3, 0.0).variance == doctest::Approx(1.5 * 1.5 / 4.0));
  CHECK(ou_oracle(1.0, 1.0, 1.0, 0.0).variance == doctest::Approx(0.432332).epsilon(1e-6));
}

TEST_CASE("phi_n examples") {
  CHECK(phi_n(0.0, 2.0, 4.0) == 0.0);
  CHECK(phi_n(1.0, 2.0, 4.0) == 1.0);
  // n^{α−2}(6ξ² − 8n|ξ| + 3n²) = 4·(54 − 48 + 12) = 72
  CHECK(phi_n(3.0, 2.0, 4.0) == doctest::Approx(72.0).epsilon(1e-14));
  CHECK(phi_n(-3.0, 2.0, 4.0) == doctest::Approx(72.0).epsilon(1e-14));
  CHECK(phi_n(5.0, 3.0, 2.0) == 25.0);
}

TEST_CASE("phi_n is C^1 at the junction") {
  for (double alpha : {2.0, 3.0, 4.0, 6.0}) {
    for (double n : {1.0, 2.0, 5.0}) {
      const double below = std::nextafter(n, 0.0), above = std::nextafter(n, 2.0 * n);
      CHECK(std::abs(phi_n(above, n, alpha) - phi_n(below, n, alpha)) <= 1e-10 * std::max(1.0, phi_n(n, n, alpha)));
      CHECK(std::abs(phi_n_d1(above, n, alpha) - phi_n_d1(below, n, alpha)) <=
            1e-10 * std::max(1.0, std::abs(phi_n_d1(n, n, alpha))));
    }
  }
}

TEST_CASE("phi_n converges monotonically to |xi|^alpha") {
  for (double alpha : {2.0, 3.0, 4.0, 6.0}) {
    for (int i = 0; i <= 200; ++i) {
      const double xi = -10.0 + 0.1 * i;
      double prev = -1.0;
      for (double n = 1.0; n <= 16.0; n *= 2.0) {
        const double v = phi_n(xi, n, alpha);
        CHECK(v >= prev - 1e-12 * std::max(1.0, v));
        prev = v;
      }
      CHECK(phi_n(xi, 16.0, alpha) == doctest::Approx(std::pow(std::abs(xi), alpha)).epsilon(1e-12));
    }
  }
}

TEST_CASE("gauss divergence defect vanishes under refinement") {
  const ScalarFn G = [](double u) { return std::sin(u); };
  const ScalarFn phi2 = [](double u) { return phi_n_d2(u, 2.0, 4.0); };
  const auto u = [](double x) { return 1.5 * std::sin(M_PI * x) + 0.5 * std::sin(2.0 * M_PI * x); };
  std::vector<double> h, defect;
  for (int N : {32, 64, 128, 256}) {
    h.push_back(1.0 / N);
    defect.push_back(std::abs(gauss_divergence_defect(G, phi2, u, N)));
  }
  CHECK(loglog_slope(h, defect) >= 0.9);
}

TEST_CASE("moment_verify without noise recovers the initial norm") {
  const auto triple = dirichlet_triple(32);
  const ModelSpec model = heat_model(triple);
  const GridField u0 = sine(triple->shape(), 1.3);
  SmallnessBudget budget;
  budget.lambda = 10.0;
  const PathRunner runner = [&](const GridField& start, std::uint64_t path) {
    return run_localized(model, start, budget, sample_path(spec(1, 100, 1e-4), path), Caps{});
  };
  for (double alpha : {2.0, 4.0}) {
    const MomentReport r = moment_verify(model, u0, alpha, 3, runner, {1.0});
    CHECK(r.valid);
    CHECK(r.empirical_lhs == doctest::Approx(lq_norm(u0, alpha)).epsilon(1e-12));
  }
}

TEST_CASE("ito residual examples") {
  const auto triple = dirichlet_triple(32);
  const ModelSpec model = heat_model(triple);
  const NoisePath noise = sample_path(spec(1, 100, 1e-4), 0);
  const std::vector<GridField> zeros(101, GridField::zeros(triple->shape()));
  CHECK(ito_energy_residual(zeros, noise, model) == 0.0);

  std::vector<double> dts, res;
  for (int M : {50, 100, 200}) {
    const NoisePath n = sample_path(spec(1, M, 0.02 / M), 0);
    SegmentOptions options;
    options.track_monitor = false;
    const SegmentResult seg = solve_frozen_segment(sine(triple->shape()), model, n, 0, M, options);
    dts.push_back(n.dt);
    res.push_back(ito_energy_residual(seg.states, n, model));
  }
  CHECK(loglog_slope(dts, res) >= 0.9);
}
