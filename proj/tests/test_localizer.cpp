#include "support.hpp"

#include "qsee/errors.hpp"
#include "qsee/localizer.hpp"
#include "qsee/noise.hpp"

#include <doctest.h>

using namespace qsee;
using namespace qsee::test;

namespace {

SmallnessBudget budget_with(double lambda) {
  SmallnessBudget b;
  b.lambda = lambda;
  return b;
}

}  // namespace

TEST_CASE("linear model reaches T") {
  const auto triple = dirichlet_triple(32);
  const ModelSpec model = make_linear_model(triple, params(4, 1.0));
  for (std::uint64_t path : {0, 1, 2}) {
    const LocalizedRun r =
        run_localized(model, sine(triple->shape(), 0.2), budget_with(0.5), spec(4, 400, 1e-4), path, 0.04, Caps{});
    CHECK(r.record.termination == Termination::reached_T);
    CHECK(r.record.anchors.size() >= 1);
    CHECK(r.times.back() == doctest::Approx(0.04));
  }
}

TEST_CASE("zero data stays zero with a single anchor") {
  const auto triple = dirichlet_triple(32);
  const ModelSpec model = heat_model(triple);
  const LocalizedRun r = run_localized(model, GridField::zeros(triple->shape()), budget_with(0.1),
                                       sample_path(spec(1, 100, 1e-4), 0), Caps{});
  CHECK(r.record.termination == Termination::reached_T);
  CHECK(r.record.anchors.size() == 1);
  for (const auto& s : r.states) CHECK(s.values().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tiny lambda ends in step_floor") {
  const auto triple = dirichlet_triple(32);
  const ModelSpec model = heat_model(triple);
  Caps caps;
  caps.min_segment_steps = 2;
  const LocalizedRun r =
      run_localized(model, sine(triple->shape()), budget_with(1e-9), sample_path(spec(1, 100, 1e-4), 0), caps);
  CHECK(r.record.termination == Termination::step_floor);
  CHECK(classify_termination(r.record).status == "step_floor");
}

TEST_CASE("field cap gives blow_up_flag with the last finite time") {
  const auto triple = dirichlet_triple(32);
  ModelSpec model = make_linear_model(triple, params());
  model.reaction = [](double u) { return 200.0 * u; };
  const GridField u0 = sine(triple->shape());
  Caps caps;
  caps.field_cap = 10.0 * triple->norm_Ep(u0);
  const LocalizedRun r = run_localized(model, u0, budget_with(1e9), sample_path(spec(1, 1000, 1e-4), 0), caps);
  CHECK(r.record.termination == Termination::blow_up_flag);
  const TerminationReport rep = classify_termination(r.record);
  CHECK(rep.status == "blow_up_flag");
  CHECK(rep.final_time > 0.0);
  CHECK(rep.final_time < 0.1);
  CHECK(rep.final_time == r.times.back());
}

TEST_CASE("reached_T is reported as global") {
  StoppingRecord record;
  record.termination = Termination::reached_T;
  record.final_time = 1.0;
  CHECK(classify_termination(record).status == "global");
}

TEST_CASE("anchors match the glued path and runs are deterministic") {
  const auto triple = dirichlet_triple(32);
  const ModelSpec model = make_gdiv_model(triple, diffusivity_by_name("bounded_quadratic", 1.0),
                                          flux_by_name("sine", 0.5), multiplier_by_name("linear", 0.5), params(8));
  const NoisePath noise = sample_path(spec(8, 2000, 1e-4), 3);
  const LocalizedRun a = run_localized(model, sine(triple->shape(), 0.1), budget_with(0.1), noise, Caps{});
  const LocalizedRun b = run_localized(model, sine(triple->shape(), 0.1), budget_with(0.1), noise, Caps{});
  CHECK(a.record.termination == Termination::reached_T);
  REQUIRE(a.record.anchors.size() > 2);
  for (const auto& an : a.record.anchors) CHECK(an.state.values() == a.states[an.step].values());
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t m = 0; m < a.states.size(); ++m) CHECK(a.states[m].values() == b.states[m].values());
}

TEST_CASE("truncate_Rn branches") {
  const auto triple = dirichlet_triple(64);
  const GridField y = random_spectral_field(triple->eigenbasis(), 4, 0, 2.0);
  const double norm = triple->norm_Ep(y);
  CHECK(truncate_Rn(y, norm, *triple).values() == y.values());
  CHECK(truncate_Rn(y, 3.0 * norm, *triple).values() == y.values());
  CHECK(triple->norm_Ep(truncate_Rn(y, norm / 2.0, *triple)) == doctest::Approx(norm / 2.0).epsilon(1e-13));
  CHECK_THROWS_AS(truncate_Rn(y, 0.0, *triple), ConfigError);
}

TEST_CASE("truncate_Rn is 2-Lipschitz") {
  const auto triple = dirichlet_triple(32);
  int violations = 0;
  for (int i = 0; i < 500; ++i) {
    const double n = 0.5 + uniform_variate(5, i, 0, 0);
    GridField x = random_spectral_field(triple->eigenbasis(), 6, 2 * i, 2.0);
    GridField y = random_spectral_field(triple->eigenbasis(), 6, 2 * i + 1, 2.0);
    x *= 3.0 * n * uniform_variate(5, i, 1, 0) / triple->norm_Ep(x);
    y *= 3.0 * n * uniform_variate(5, i, 2, 0) / triple->norm_Ep(y);
    const double lhs = triple->norm_Ep(truncate_Rn(x, n, *triple) - truncate_Rn(y, n, *triple));
    if (lhs > 2.0 * triple->norm_Ep(x - y) * (1.0 + 1e-12)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("globally Lipschitz model below every level gives identical hierarchy paths") {
  const auto triple = dirichlet_triple(32);
  const ModelSpec model = make_gdiv_model(triple, diffusivity_by_name("bounded_quadratic", 1.0),
                                          flux_by_name("sine", 0.5), multiplier_by_name("linear", 0.5), params(8));
  const HierarchyRun h = run_truncated_hierarchy(model, sine(triple->shape(), 0.1), budget_with(0.1),
                                                 sample_path(spec(8, 200, 1e-4), 0), doubling_levels(100.0, 3),
                                                 Caps{});
  REQUIRE(h.levels.size() == 3);
  for (const auto& lv : h.levels) {
    CHECK(lv.gamma_set_member);
    CHECK(lv.sigma_n == doctest::Approx(0.02));
    REQUIRE(lv.run.states.size() == h.levels[0].run.states.size());
    for (std::size_t m = 0; m < lv.run.states.size(); ++m)
      CHECK(lv.run.states[m].values() == h.levels[0].run.states[m].values());
  }
}

TEST_CASE("doubling levels") {
  const auto levels = doubling_levels(0.5, 4);
  CHECK(levels == std::vector<double>{0.5, 1.0, 2.0, 4.0});
  CHECK_THROWS_AS(doubling_levels(0.0, 2), ConfigError);
}
