#include <doctest.h>

#include "test_support.hpp"
#include "tvs/error.hpp"
#include "tvs/plan.hpp"

#include <random>

using namespace tvs;
using namespace tvs::testing;

namespace {

CycleProfile sawtooth() {
  Eigen::MatrixXd p(2, 4);
  p << 200, 0, 200, 0, -100, -100, -100, -100;
  return make_profile(p, 1.0);
}

PlanConfig with(Formulation f, double alpha, double beta) {
  PlanConfig c;
  c.formulation = f;
  c.costs.alpha = alpha;
  c.costs.beta = beta;
  return c;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an exception");
  return ErrorKind::InvalidInput;
}

}  // namespace

TEST_CASE("simplified LP attains the closed-form limits on the sawtooth") {
  auto g = two_bus(1);
  auto h = compute_ptdf(g);
  auto lines = solve_plan(g, h, sawtooth(), with(Formulation::Simplified, 1.0, 1e-9));
  CHECK(lines.line_capacity[0] == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(lines.storage_capacity.sum() == doctest::Approx(100.0).epsilon(1e-9));

  auto store = solve_plan(g, h, sawtooth(), with(Formulation::Simplified, 1e-9, 1.0));
  CHECK(store.storage_capacity.sum() == doctest::Approx(100.0).epsilon(1e-9));

  auto relaxed = with(Formulation::Simplified, 1.0, 1.0);
  relaxed.relaxed_line_limits = true;
  auto r = solve_plan(g, h, sawtooth(), relaxed);
  CHECK(r.storage_capacity.sum() == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(r.line_expansion[0] == 0.0);
}

TEST_CASE("conventional LP on constant balanced profiles") {
  auto g = two_bus(1);
  auto h = compute_ptdf(g);
  Eigen::MatrixXd p(2, 4);
  p.row(0).setConstant(100.0);
  p.row(1).setConstant(-100.0);
  auto cfg = with(Formulation::Conventional, 1.0, 1.0);
  cfg.costs.gamma_plus = 1000.0;
  cfg.costs.gamma_minus = 1000.0;
  auto s = solve_plan(g, h, make_profile(p, 1.0), cfg);
  CHECK(s.line_expansion[0] == doctest::Approx(100.0));
  CHECK(s.storage_capacity.sum() == doctest::Approx(0.0));
  CHECK(s.objective == doctest::Approx(100.0));
  CHECK(s.lp_objective == doctest::Approx(100.0));
  CHECK(s.shedding_mwh == doctest::Approx(0.0));

  // Free shedding and curtailment: serve nothing, build nothing.
  cfg.costs.gamma_plus = 0.0;
  cfg.costs.gamma_minus = 0.0;
  auto none = solve_plan(g, h, make_profile(p, 1.0), cfg);
  CHECK(none.objective == doctest::Approx(0.0));
  CHECK(none.line_expansion[0] == doctest::Approx(0.0));
  CHECK(none.storage_capacity.sum() == doctest::Approx(0.0));
}

TEST_CASE("zero profile gives a zero plan") {
  auto g = triangle();
  auto h = compute_ptdf(g);
  auto prof = make_profile(Eigen::MatrixXd::Zero(3, 6), 1.0);
  for (auto f : {Formulation::Conventional, Formulation::Reformulated, Formulation::Simplified}) {
    auto s = solve_plan(g, h, prof, with(f, 1.0, 1.0));
    CHECK(s.objective == doctest::Approx(0.0));
    CHECK(s.flows.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
}

TEST_CASE("pinned minimum line capacity reproduces the closed-form storage") {
  auto g = two_bus(1);
  auto h = compute_ptdf(g);
  auto cfg = with(Formulation::Reformulated, 1.0, 1.0);
  cfg.costs.gamma_plus = 1e4;
  cfg.costs.gamma_minus = 1e4;
  cfg.pinned_line_capacity = Eigen::VectorXd::Constant(1, 100.0);
  auto s = solve_plan(g, h, sawtooth(), cfg);
  CHECK(s.storage_capacity[0] == doctest::Approx(100.0));
  CHECK(s.storage_capacity[1] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(s.soc(0, 3) == doctest::Approx(s.initial_soc[0]));
  CHECK(s.soc_balance.max_abs <= 1e-6);
}

TEST_CASE("peak reduction on the sawtooth") {
  auto g = two_bus(1);
  auto h = compute_ptdf(g);
  Eigen::MatrixXd p(2, 4);
  p << 200, 0, 200, 0, -200, 0, -200, 0;  // original flow 200, 0, 200, 0
  auto prof = make_profile(p, 1.0);
  CHECK(min_storage_for_peak_reduction(g, h, prof, 0.0).storage_capacity.sum() == doctest::Approx(0.0));
  CHECK(min_storage_for_peak_reduction(g, h, prof, 0.5).storage_capacity.sum() == doctest::Approx(200.0));
  CHECK(kind_of([&] { min_storage_for_peak_reduction(g, h, prof, 0.6); }) == ErrorKind::InfeasibleModel);
  try {
    min_storage_for_peak_reduction(g, h, prof, 0.6);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
}

TEST_CASE("simplified LP rejects an imbalanced cycle") {
  auto g = two_bus(1);
  Eigen::MatrixXd p(2, 4);
  p << 200, 0, 210, 0, -100, -100, -100, -100;  // 10 MWh surplus
  CHECK(kind_of([&] { build_simplified(g, make_profile(p, 1.0), {}); }) == ErrorKind::InfeasibleModel);
}

TEST_CASE("config validation") {
  PlanConfig c;
  c.peak_reduction_fraction = 0.1;
  CHECK_THROWS_AS(validate(c), Error);
  c.formulation = Formulation::PeakMin;
  CHECK_NOTHROW(validate(c));
  c.peak_reduction_fraction = 1.0;
  CHECK_THROWS_AS(validate(c), Error);
  CHECK(parse_formulation("reformulated") == Formulation::Reformulated);
  CHECK_THROWS_AS(parse_formulation("nope"), Error);
}

TEST_CASE("tampered solutions are rejected") {
  auto g = two_bus(1);
  auto h = compute_ptdf(g);
  for (auto f : {Formulation::Conventional, Formulation::Simplified}) {
    auto model = build_plan_model(g, h, sawtooth(), with(f, 1.0, 1.0));
    auto raw = lp::solve(model.lp);
    CHECK_NOTHROW(extract_plan(model, raw, g, h, sawtooth()));
    raw.x[static_cast<std::size_t>(model.S[0])] -= 30.0;
    CHECK(kind_of([&] { extract_plan(model, raw, g, h, sawtooth()); }) == ErrorKind::SolutionInconsistency);
  }
}

TEST_CASE("conventional and reformulated optima agree") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int trial = 0; trial < 8; ++trial) {
    const int nb = 2 + trial % 5;
    auto g = random_grid(rng, nb, trial % 3);
    auto h = compute_ptdf(g);
    auto prof = make_profile(random_balanced_power(rng, nb, 8), 1.0);
    PlanConfig cfg;
    cfg.costs.alpha = u(rng);
    cfg.costs.beta = u(rng);
    cfg.costs.gamma_plus = 3.0 * u(rng);
    cfg.costs.gamma_minus = 5.0 * u(rng);
    if (trial % 2) cfg.storage_power_duration = 4.0;
    cfg.formulation = Formulation::Conventional;
    auto a = solve_plan(g, h, prof, cfg);
    cfg.formulation = Formulation::Reformulated;
    auto b = solve_plan(g, h, prof, cfg);
    CHECK(a.lp_objective == doctest::Approx(b.lp_objective).epsilon(1e-6));
    CHECK(a.recheck_violation <= 1e-6);
    CHECK(b.recheck_violation <= 1e-6);
  }
}

TEST_CASE("sweep is monotone in the storage cost") {
  auto g = two_bus(1);
  auto h = compute_ptdf(g);
  Eigen::MatrixXd p(2, 4);
  p << 200, 0, 200, 0, -200, 0, -200, 0;
  auto pts = sweep_tradeoff(g, h, make_profile(p, 1.0), {1.0}, sample_range(0.01, 100.0, 9), {}, 2);
  REQUIRE(pts.size() == 9);
  for (std::size_t j = 1; j < pts.size(); ++j) {
    CHECK(pts[j].ok);
    CHECK(pts[j].total_storage <= pts[j - 1].total_storage + 1e-6);
  }
  CHECK(pts.front().total_storage == doctest::Approx(200.0));
  CHECK(pts.front().total_line_expansion == doctest::Approx(100.0));
  CHECK(pts.back().total_storage == doctest::Approx(0.0));
  CHECK(pts.back().total_line_expansion == doctest::Approx(200.0));
  CHECK(sample_range(1.0, 100.0, 3)[1] == doctest::Approx(10.0));
  CHECK(sample_range(2.0, 2.0, 5).size() == 1);
}
