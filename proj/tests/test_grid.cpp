#include <doctest.h>

#include "test_support.hpp"
#include "tvs/error.hpp"
#include "tvs/grid.hpp"

#include <random>

using namespace tvs;
using namespace tvs::testing;

namespace {

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

TEST_CASE("build_grid accepts small connected grids") {
  auto g = two_bus();
  CHECK(g.num_buses() == 2);
  CHECK(g.num_lines() == 1);
  CHECK(g.reference() == 0);

  auto path = GridModel::build(plain_buses(3), {Line{1, 1, 2, 0.1}, Line{2, 2, 3, 0.1}}, 1);
  CHECK(path.num_lines() == 2);
  CHECK(path.lines()[1].from_bus == 1);  // normalised to indices
}

TEST_CASE("build_grid rejects malformed networks") {
  CHECK(kind_of([] { GridModel::build(plain_buses(4), {Line{1, 1, 2, 0.1}, Line{2, 3, 4, 0.1}}, 1); }) ==
        ErrorKind::DisconnectedGraph);
  CHECK(kind_of([] { GridModel::build(plain_buses(2), {Line{1, 1, 2, 0.1}, Line{1, 1, 2, 0.2}}, 1); }) ==
        ErrorKind::DuplicateId);
  CHECK(kind_of([] {
          auto b = plain_buses(2);
          b[1].id = 1;
          GridModel::build(b, {Line{1, 1, 2, 0.1}}, 1);
        }) == ErrorKind::DuplicateId);
  CHECK(kind_of([] { GridModel::build(plain_buses(2), {Line{1, 1, 7, 0.1}}, 1); }) ==
        ErrorKind::UnknownBusReference);
  CHECK(kind_of([] { GridModel::build(plain_buses(2), {Line{1, 1, 2, 0.1}}, 9); }) ==
        ErrorKind::UnknownBusReference);
  CHECK(kind_of([] { GridModel::build(plain_buses(2), {Line{1, 1, 2, 0.0}}, 1); }) ==
        ErrorKind::NonpositiveReactance);
}

TEST_CASE("disconnected-graph message lists the components") {
  try {
    GridModel::build(plain_buses(4), {Line{1, 1, 2, 0.1}, Line{2, 3, 4, 0.1}}, 1);
    FAIL("expected DisconnectedGraph");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("{1,2} {3,4}") != std::string::npos);
  }
}

TEST_CASE("cheap shedding triggers a warning") {
  auto b = plain_buses(2);
  b[1].curtailment_cost = 10.0;
  b[1].shedding_cost = 5.0;
  auto g = GridModel::build(b, {Line{1, 1, 2, 0.1}}, 1);
  CHECK(g.warnings().size() == 1);
}

TEST_CASE("ptdf on the 2-bus grid") {
  auto h = compute_ptdf(two_bus(1));
  CHECK(h.entries(0, 0) == 0.0);
  CHECK(h.entries(0, 1) == doctest::Approx(-1.0));

  Eigen::VectorXd p(2);
  p << 100.0, -100.0;
  CHECK(flows_from_injections(h, p)[0] == doctest::Approx(100.0));
  p << 200.0, -100.0;  // residual absorbed at the reference
  CHECK(flows_from_injections(h, p)[0] == doctest::Approx(100.0));
  CHECK_THROWS_AS(flows_from_injections(h, Eigen::VectorXd(Eigen::VectorXd::Zero(3))), Error);
}

TEST_CASE("ptdf on the equal-reactance triangle") {
  auto g = triangle(3);
  auto h = compute_ptdf(g);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
  e1[0] = 1.0;
  const Eigen::VectorXd oracle = dc_flow_oracle(g, e1);
  // Frozen from the direct DC solve: 1/3, 2/3, 1/3.
  CHECK(oracle[0] == doctest::Approx(1.0 / 3.0));
  CHECK(oracle[1] == doctest::Approx(2.0 / 3.0));
  CHECK(oracle[2] == doctest::Approx(1.0 / 3.0));
  const Eigen::VectorXd f = flows_from_injections(h, e1);
  for (int k = 0; k < 3; ++k) CHECK(f[k] == doctest::Approx(oracle[k]).epsilon(1e-12));

  Eigen::VectorXd p(3);
  p << 1.0, -1.0, 0.0;
  CHECK(flows_from_injections(h, p)[0] == doctest::Approx(2.0 / 3.0));
  CHECK(dc_flow_oracle(g, p)[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("ptdf properties on random grids") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int nb = 2 + trial % 9;
    auto g = random_grid(rng, nb, trial % 5);
    auto h = compute_ptdf(g);
    CHECK(h.entries.col(g.reference()).cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd p(nb);
    for (int i = 0; i < nb; ++i) p[i] = u(rng);
    p[g.reference()] -= p.sum();  // balanced
    const Eigen::VectorXd f = flows_from_injections(h, p);
    const Eigen::VectorXd oracle = dc_flow_oracle(g, p);
    CHECK((f - oracle).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + p.cwiseAbs().maxCoeff()));

    // Conservation: net outflow at every bus equals its injection.
    const Eigen::VectorXd net = g.incidence() * f;
    CHECK((net - p).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + p.cwiseAbs().maxCoeff()));

    // Reversing one line's orientation negates its row.
    std::vector<Bus> buses = g.buses();
    std::vector<Line> lines = g.lines();
    for (auto& l : lines) {
      l.from_bus = buses[l.from_bus].id;
      l.to_bus = buses[l.to_bus].id;
    }
    std::swap(lines[0].from_bus, lines[0].to_bus);
    auto h2 = compute_ptdf(GridModel::build(buses, lines, g.reference_id()));
    CHECK((h2.entries.row(0) + h.entries.row(0)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("parallel lines keep their own ids and share flow by susceptance") {
  auto g = GridModel::build(plain_buses(2), {Line{1, 1, 2, 0.1}, Line{2, 1, 2, 0.3}}, 1);
  Eigen::VectorXd p(2);
  p << 100.0, -100.0;
  auto f = flows_from_injections(compute_ptdf(g), p);
  CHECK(f[0] == doctest::Approx(75.0));
  CHECK(f[1] == doctest::Approx(25.0));
}

TEST_CASE("line outages") {
  auto g = triangle(3);
  auto path = apply_line_outage(g, 2);
  CHECK(path.num_lines() == 2);
  CHECK(kind_of([] { apply_line_outage(two_bus(), 1); }) == ErrorKind::IslandingOutage);
  auto star = GridModel::build(plain_buses(4), {Line{1, 1, 2, 0.1}, Line{2, 1, 3, 0.1}, Line{3, 1, 4, 0.1}}, 1);
  CHECK(kind_of([&] { apply_line_outage(star, 3); }) == ErrorKind::IslandingOutage);
}

TEST_CASE("lodf on the triangle") {
  auto g = triangle(3);
  auto h = compute_ptdf(g);
  auto d = compute_lodf(g, h, 2);  // trip line (1,3)
  CHECK(d[1] == -1.0);
  Eigen::VectorXd p(3);
  p << 1.0, 0.0, -1.0;
  const Eigen::VectorXd pre = flows_from_injections(h, p);
  const Eigen::VectorXd post = pre + d * pre[1];
  // Oracle: PTDF recomputed on the 2-line path puts the full unit on (1,2).
  const Eigen::VectorXd oracle = dc_flow_oracle(apply_line_outage(g, 2), p);
  CHECK(oracle[0] == doctest::Approx(1.0));
  CHECK(post[0] == doctest::Approx(1.0));
  CHECK(post[1] == doctest::Approx(0.0));

  auto path = GridModel::build(plain_buses(3), {Line{1, 1, 2, 0.1}, Line{2, 2, 3, 0.1}}, 1);
  CHECK(kind_of([&] { compute_lodf(path, compute_ptdf(path), 1); }) == ErrorKind::IslandingOutage);
}

TEST_CASE("lodf agrees with ptdf recomputation on random grids") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int nb = 3 + trial % 8;
    auto g = random_grid(rng, nb, 1 + trial % 4);
    auto h = compute_ptdf(g);
    Eigen::VectorXd p(nb);
    for (int i = 0; i < nb; ++i) p[i] = u(rng);
    p[g.reference()] -= p.sum();
    const Eigen::VectorXd pre = flows_from_injections(h, p);
    for (const auto& line : g.lines()) {
      GridModel outaged = g;
      try {
        outaged = apply_line_outage(g, line.id);
      } catch (const Error&) {
        CHECK_THROWS_AS(compute_lodf(g, h, line.id), Error);
        continue;
      }
      const Eigen::VectorXd d = compute_lodf(g, h, line.id);
      const int o = g.line_index(line.id);
      const Eigen::VectorXd post = pre + d * pre[o];
      const Eigen::VectorXd direct = flows_from_injections(compute_ptdf(outaged), p);
      for (int k = 0, kk = 0; k < g.num_lines(); ++k) {
        if (k == o) {
          CHECK(std::abs(post[k]) <= 1e-8);
          continue;
        }
        CHECK(std::abs(post[k] - direct[kk++]) <= 1e-8);
      }
      ++checked;
    }
  }
  CHECK(checked > 20);
}

TEST_CASE("kvl loops hold for ptdf flows") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int nb = 2 + trial % 9;
    auto g = random_grid(rng, nb, trial % 6);
    auto loops = kvl_loops(g);
    CHECK(static_cast<int>(loops.size()) == g.num_lines() - g.num_buses() + 1);
    Eigen::VectorXd p(nb);
    for (int i = 0; i < nb; ++i) p[i] = u(rng);
    const Eigen::VectorXd f = flows_from_injections(compute_ptdf(g), p);
    for (const auto& loop : loops) {
      double s = 0.0;
      for (auto [k, coef] : loop) s += coef * f[k];
      CHECK(std::abs(s) <= 1e-9);
    }
  }
  CHECK(kvl_loops(triangle()).size() == 1);
}
