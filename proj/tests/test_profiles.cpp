#include <doctest.h>

#include "test_support.hpp"
#include "tvs/error.hpp"
#include "tvs/profiles.hpp"

#include <random>
#include <sstream>

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

Eigen::MatrixXd row(std::initializer_list<double> v) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) m(0, k++) = x;
  return m;
}

// Oracle: the plain nested-sum definition, no running accumulator.
double energy_by_definition(const Eigen::MatrixXd& p, double h, int bus, int t) {
  double s = 0.0;
  for (int k = 0; k <= t; ++k) s += p(bus, k);
  return h * s;
}

}  // namespace

TEST_CASE("ingest long-form profile into cycles") {
  auto g = two_bus();
  std::ostringstream os;
  os << "bus_id,slot,power_mw\n";
  for (int t = 0; t < 48; ++t) {
    os << "1," << t << "," << 100 + t << "\n";
    os << "2," << t << "," << -(100 + t) << "\n";
  }
  std::istringstream in(os.str());
  auto mc = parse_profile(in, g, {24, 1.0});
  REQUIRE(mc.num_cycles() == 2);
  CHECK(mc.cycles[1].power(0, 0) == 124.0);
  CHECK(mc.cycles[1].power(1, 23) == -147.0);
  CHECK(mc.labels[1] == "day2");
}

TEST_CASE("ingest wide-form profile with names and ids") {
  auto g = two_bus();
  std::istringstream in("# comment\nslot,b1,2\n0,1,-1\n1,2,-2\n");
  auto mc = parse_profile(in, g, {2, 0.5});
  REQUIRE(mc.num_cycles() == 1);
  CHECK(mc.cycles[0].power(0, 1) == 2.0);
  CHECK(mc.cycles[0].power(1, 1) == -2.0);
  CHECK(mc.cycles[0].slot_hours == 0.5);
}

TEST_CASE("ingest errors") {
  auto g = two_bus();
  CHECK(kind_of([&] {
          std::ostringstream os;
          os << "slot,b1,b2\n";
          for (int t = 0; t < 25; ++t) os << t << ",1,-1\n";
          std::istringstream in(os.str());
          parse_profile(in, g, {24, 1.0});
        }) == ErrorKind::RaggedSeries);
  CHECK(kind_of([&] {
          std::istringstream in("bus_id,slot,power_mw\n99,0,5\n");
          parse_profile(in, g, {1, 1.0});
        }) == ErrorKind::UnknownBus);
  CHECK(kind_of([&] {
          std::istringstream in("slot,b1,b9\n0,1,1\n");
          parse_profile(in, g, {1, 1.0});
        }) == ErrorKind::UnknownBus);
  CHECK(kind_of([&] {
          std::istringstream in("slot,b1,b2\n1,1,-1\n0,1,-1\n");
          parse_profile(in, g, {1, 1.0});
        }) == ErrorKind::NonmonotoneTimestamps);
  CHECK(kind_of([&] {
          std::istringstream in("bus_id,slot,power_mw\n1,1,5\n1,1,6\n");
          parse_profile(in, g, {1, 1.0});
        }) == ErrorKind::NonmonotoneTimestamps);
  CHECK(kind_of([&] { ingest_profile("/nonexistent/profile.csv", g, {1, 1.0}); }) == ErrorKind::InvalidInput);
}

TEST_CASE("cumulative energy") {
  auto p = make_profile(row({200, 0, 200, 0}), 1.0);
  auto e = cumulative_energy(p);
  CHECK(e.kind == CumulativeKind::Local);
  const double expected[] = {200, 200, 400, 400};
  for (int t = 0; t < 4; ++t) {
    CHECK(energy_by_definition(p.power, 1.0, 0, t) == expected[t]);
    CHECK(e.values(0, t) == expected[t]);
  }
  CHECK(cumulative_energy(make_profile(Eigen::MatrixXd::Zero(2, 5), 1.0)).values.isZero());
  auto half = cumulative_energy(make_profile(row({100, 100}), 0.5));
  CHECK(half.values(0, 0) == 50.0);
  CHECK(half.values(0, 1) == 100.0);
}

TEST_CASE("cumulative energy telescopes to h times the row sum") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd p = random_balanced_power(rng, 4, 24);
    const double h = 0.25 + 0.25 * trial;
    auto e = cumulative_energy(make_profile(p, h));
    for (int i = 0; i < 4; ++i) {
      const double direct = h * p.row(i).sum();
      CHECK(std::abs(e.values(i, 23) - direct) <= 1e-9 * (1.0 + std::abs(direct)));
      CHECK(e.values(i, 11) == doctest::Approx(energy_by_definition(p, h, i, 11)).epsilon(1e-12));
    }
  }
}

TEST_CASE("sign split views") {
  std::mt19937 rng(5);
  std::normal_distribution<double> n(0.0, 50.0);
  Eigen::MatrixXd m(3, 10);
  for (int i = 0; i < 3; ++i)
    for (int t = 0; t < 10; ++t) m(i, t) = n(rng);
  auto p = make_profile(m, 1.0);
  const Eigen::MatrixXd plus = p.production(), minus = p.consumption();
  CHECK((plus - minus - m).cwiseAbs().maxCoeff() == 0.0);
  CHECK(plus.cwiseProduct(minus).cwiseAbs().maxCoeff() == 0.0);
  CHECK(plus.minCoeff() >= 0.0);
  CHECK(minus.minCoeff() >= 0.0);
}

TEST_CASE("net cumulative energy") {
  Eigen::MatrixXd m(2, 4);
  m << 200, 0, 200, 0, -100, -100, -100, -100;
  auto p = make_profile(m, 1.0);
  auto full = net_cumulative_energy(p, p.production(), p.consumption());
  CHECK(full.kind == CumulativeKind::Net);
  CHECK((full.values - cumulative_energy(p).values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(net_cumulative_energy(p, Eigen::MatrixXd::Zero(2, 4), Eigen::MatrixXd::Zero(2, 4)).values.isZero());
  Eigen::MatrixXd over = p.production();
  over(0, 0) = 201.0;
  CHECK(kind_of([&] { net_cumulative_energy(p, over, p.consumption()); }) ==
        ErrorKind::CurtailmentBoundViolation);
}

TEST_CASE("energy balance check") {
  Eigen::MatrixXd m(2, 4);
  m << 200, 0, 200, 0, -100, -100, -100, -100;
  auto r = check_energy_balance(make_profile(m, 1.0), 1e-9);
  CHECK(r.residual_mwh == 0.0);
  CHECK(r.balanced);

  m << 100, 100, 100, 100, -90, -90, -90, -90;
  r = check_energy_balance(make_profile(m, 1.0), 1e-9);
  CHECK(r.residual_mwh == doctest::Approx(40.0));
  CHECK_FALSE(r.balanced);

  CHECK(check_energy_balance(make_profile(Eigen::MatrixXd::Zero(3, 4), 1.0), 0.0).balanced);
}

TEST_CASE("balance_normalize") {
  auto r = balance_normalize(row({250, 250, 250, 250}), row({80, 80, 80, 80}), 100.0);
  CHECK(r.supply_factor == doctest::Approx(0.4));
  CHECK(r.demand_factor == doctest::Approx(1.25));
  CHECK(r.profile.power(1, 0) == doctest::Approx(-100.0));
  CHECK(check_energy_balance(r.profile, 1e-9 * 4 * 100).balanced);

  CHECK(kind_of([] { balance_normalize(row({0, 0}), row({1, 1}), 100.0); }) == ErrorKind::ZeroMeanSeries);

  // Idempotent at the target.
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 300.0);
  Eigen::MatrixXd s(2, 24), d(3, 24);
  for (int t = 0; t < 24; ++t) {
    for (int i = 0; i < 2; ++i) s(i, t) = u(rng);
    for (int i = 0; i < 3; ++i) d(i, t) = u(rng);
  }
  auto once = balance_normalize(s, d, 100.0);
  CHECK(check_energy_balance(once.profile, 1e-9 * 24 * 100).balanced);
  auto twice = balance_normalize(once.profile.power.topRows(2), once.profile.power.bottomRows(3), 100.0);
  CHECK((twice.profile.power - once.profile.power).cwiseAbs().maxCoeff() <= 1e-12 * 300.0);
}
