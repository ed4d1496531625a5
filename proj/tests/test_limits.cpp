#include <doctest.h>

#include "test_support.hpp"
#include "tvs/error.hpp"
#include "tvs/limits.hpp"

#include <random>

using namespace tvs;
using namespace tvs::testing;

namespace {

// Generator at bus 1 alternating 200/0 MW, constant 100 MW load at bus 2.
CycleProfile sawtooth() {
  Eigen::MatrixXd p(2, 4);
  p << 200, 0, 200, 0, -100, -100, -100, -100;
  return make_profile(p, 1.0);
}

FlowSeries series(std::initializer_list<double> v, double h = 1.0) {
  Eigen::MatrixXd f(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index t = 0;
  for (double x : v) f(0, t++) = x;
  return make_flow_series(f, h, FlowTag::Original);
}

// Oracle: step the state of charge slot by slot and report the worst bound
// violation for the given capacity and initial state.
double simulate_violation(const GridModel& g, const Eigen::MatrixXd& power, const Eigen::MatrixXd& flows, double h,
                          const Eigen::VectorXd& cap, const Eigen::VectorXd& x0) {
  const Eigen::MatrixXd out = g.incidence() * flows;
  double worst = 0.0;
  for (int i = 0; i < g.num_buses(); ++i) {
    double x = x0[i];
    worst = std::max({worst, -x, x - cap[i]});
    for (int t = 0; t < power.cols(); ++t) {
      x += h * (power(i, t) - out(i, t));
      worst = std::max({worst, -x, x - cap[i]});
    }
    worst = std::max(worst, std::abs(x - x0[i]));
  }
  return worst;
}

}  // namespace

TEST_CASE("line limits on the 2-bus sawtooth") {
  auto g = two_bus(1);
  auto orig = original_flows(compute_ptdf(g), sawtooth());
  CHECK(orig.flows(0, 0) == doctest::Approx(100.0));
  CHECK(min_line_capacity(orig)[0] == doctest::Approx(100.0));
  CHECK(peak_flow(orig)[0] == doctest::Approx(100.0));

  CHECK(min_line_capacity(series({200, 0, 200, 0}))[0] == doctest::Approx(100.0));
  CHECK(min_line_capacity(series({100, -100}))[0] == doctest::Approx(100.0));
  CHECK(net_transfer_capacity(series({100, -100}))[0] == doctest::Approx(0.0));
  CHECK(peak_flow(series({200, 0, 200, 0}))[0] == doctest::Approx(200.0));
}

TEST_CASE("min storage given flows") {
  auto g = two_bus(1);
  CumulativeSeries net;
  net.values.resize(2, 4);
  net.values << 200, 200, 400, 400, -100, -200, -300, -400;
  auto f = make_flow_series((Eigen::MatrixXd(1, 4) << 100, 100, 100, 100).finished(), 1.0, FlowTag::WithStorage);
  CHECK(f.cumulative(0, 3) == doctest::Approx(400.0));
  auto s = min_storage_given_flows(g, net, f);
  CHECK(s.capacity[0] == doctest::Approx(100.0));
  CHECK(s.initial_soc[0] == doctest::Approx(0.0));
  CHECK(s.capacity[1] == doctest::Approx(0.0));

  const Eigen::MatrixXd p = sawtooth().power;
  CHECK(simulate_violation(g, p, f.flows, 1.0, s.capacity, s.initial_soc) <= 1e-9);
  Eigen::VectorXd smaller = s.capacity;
  smaller[0] -= 1.0;
  CHECK(simulate_violation(g, p, f.flows, 1.0, smaller, s.initial_soc) > 0.5);

  CHECK_THROWS_AS(min_storage_given_flows(triangle(), net, f), Error);
}

TEST_CASE("total storage examples") {
  CumulativeSeries e;
  e.values = cumulative_energy(sawtooth()).values;
  CHECK(total_min_storage(e).capacity_mwh == doctest::Approx(100.0));
  CHECK(total_min_storage(e).balance.balanced);

  e.values = Eigen::MatrixXd::Zero(2, 4);
  CHECK(total_min_storage(e).capacity_mwh == 0.0);

  e.values.resize(1, 3);
  e.values << 50, 0, 0;
  CHECK(total_min_storage(e).capacity_mwh == doctest::Approx(50.0));

  e.values << 50, 60, 40;
  auto unbalanced = total_min_storage(e);
  CHECK_FALSE(unbalanced.balance.balanced);
  CHECK(unbalanced.warnings.size() == 1);
}

TEST_CASE("storage at the minimum line capacity on the 2-bus sawtooth") {
  auto g = two_bus(1);
  const auto prof = sawtooth();
  auto orig = original_flows(compute_ptdf(g), prof);
  auto s = closedform_storage_at_min_line(g, cumulative_energy(prof), orig);
  CHECK(s.capacity[0] == doctest::Approx(100.0));
  CHECK(s.capacity[1] == doctest::Approx(0.0));
  CHECK(s.trajectory(0, 3) == doctest::Approx(s.initial_soc[0]));

  auto r = compute_limits(g, compute_ptdf(g), prof);
  CHECK(r.reference_bus_id == 1);
  CHECK(r.total_min_storage == doctest::Approx(100.0));
  CHECK(r.min_storage[0] == doctest::Approx(100.0));
  CHECK(r.warnings.empty());
}

TEST_CASE("reversing flows are reported") {
  auto g = two_bus(1);
  Eigen::MatrixXd p(2, 2);
  p << 100, -100, -100, 100;
  auto r = compute_limits(g, compute_ptdf(g), make_profile(p, 1.0));
  CHECK(r.min_line_capacity[0] == doctest::Approx(100.0));
  CHECK(r.net_transfer_capacity[0] == doctest::Approx(0.0));
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("soc balance residuals") {
  auto g = two_bus(1);
  const auto prof = sawtooth();
  auto orig = original_flows(compute_ptdf(g), prof);
  const auto net = cumulative_energy(prof);
  CHECK(verify_soc_balance(g, orig, orig, net).max_abs <= 1e-9);

  Eigen::MatrixXd shifted = orig.flows;
  shifted(0, 2) += 5.0;
  auto c = verify_soc_balance(g, make_flow_series(shifted, 1.0, FlowTag::WithStorage), orig, net);
  CHECK(c.line_residual[0] == doctest::Approx(5.0));
  CHECK(c.max_abs == doctest::Approx(5.0));
}

TEST_CASE("closed-form storage is feasible on random grids") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const int nb = 2 + trial % 7;
    const int slots = 4 + trial % 21;
    auto g = random_grid(rng, nb, trial % 4);
    auto h = compute_ptdf(g);
    const auto prof = make_profile(random_balanced_power(rng, nb, slots), 0.5 + 0.25 * (trial % 3));
    auto orig = original_flows(h, prof);
    auto s = closedform_storage_at_min_line(g, cumulative_energy(prof), orig);

    Eigen::MatrixXd constant(g.num_lines(), slots);
    const Eigen::VectorXd mean = orig.flows.rowwise().mean();
    for (int t = 0; t < slots; ++t) constant.col(t) = mean;
    const double scale = 1.0 + prof.power.cwiseAbs().maxCoeff() * prof.duration_hours();
    CHECK(simulate_violation(g, prof.power, constant, prof.slot_hours, s.capacity, s.initial_soc) <= 1e-9 * scale);

    // Aggregation: total storage never exceeds the per-bus sum.
    auto total = total_min_storage(cumulative_energy(prof));
    CHECK(total.capacity_mwh <= s.capacity.sum() + 1e-9 * scale);
    // With the original flows only the reference bus, which absorbs each
    // slot's imbalance, needs storage, and that equals the total requirement.
    auto none = min_storage_given_flows(g, cumulative_energy(prof), orig);
    for (int i = 0; i < nb; ++i) {
      if (i != g.reference()) CHECK(none.capacity[i] <= 1e-9 * scale);
    }
    CHECK(none.capacity[g.reference()] == doctest::Approx(total.capacity_mwh).epsilon(1e-9));
  }
}

TEST_CASE("limits scale linearly with the profile") {
  std::mt19937 rng(17);
  auto g = random_grid(rng, 6, 3);
  auto h = compute_ptdf(g);
  const Eigen::MatrixXd p = random_balanced_power(rng, 6, 24);
  auto a = compute_limits(g, h, make_profile(p, 1.0));
  auto b = compute_limits(g, h, make_profile(3.7 * p, 1.0));
  const double tol = 1e-9 * (1.0 + a.min_storage.cwiseAbs().maxCoeff());
  CHECK((b.min_line_capacity - 3.7 * a.min_line_capacity).cwiseAbs().maxCoeff() <= tol * 10);
  CHECK((b.min_storage - 3.7 * a.min_storage).cwiseAbs().maxCoeff() <= tol * 10);
  CHECK(b.total_min_storage == doctest::Approx(3.7 * a.total_min_storage));
}
