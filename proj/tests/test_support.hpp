#pragma once

// Shared fixtures and independent oracles for the test suites.

#include "tvs/grid.hpp"
#include "tvs/profiles.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

namespace tvs::testing {

inline std::vector<Bus> plain_buses(int n, double beta = 1.0) {
  std::vector<Bus> b;
  for (int i = 1; i <= n; ++i) b.push_back(Bus{i, "b" + std::to_string(i), beta, 0.0, 0.0});
  return b;
}

/// Buses 1..3, lines (1,2)=1, (1,3)=2, (2,3)=3, all x = 0.1.
inline GridModel triangle(int ref = 3) {
  return GridModel::build(plain_buses(3),
                          {Line{1, 1, 2, 0.1, 0.0, 1.0}, Line{2, 1, 3, 0.1, 0.0, 1.0}, Line{3, 2, 3, 0.1, 0.0, 1.0}},
                          ref);
}

inline GridModel two_bus(int ref = 1, double alpha = 1.0, double beta = 1.0) {
  return GridModel::build(plain_buses(2, beta), {Line{1, 1, 2, 0.1, 0.0, alpha}}, ref);
}

/// Random connected grid: random spanning tree plus extra lines.
inline GridModel random_grid(std::mt19937& rng, int nb, int extra) {
  std::uniform_real_distribution<double> x(0.05, 0.5);
  std::vector<Line> lines;
  int id = 1;
  for (int v = 2; v <= nb; ++v) {
    std::uniform_int_distribution<int> parent(1, v - 1);
    lines.push_back(Line{id++, parent(rng), v, x(rng), 0.0, 1.0});
  }
  std::uniform_int_distribution<int> any(1, nb);
  for (int e = 0; e < extra; ++e) {
    int a = any(rng), b = any(rng);
    if (a == b) continue;
    lines.push_back(Line{id++, a, b, x(rng), 0.0, 1.0});
  }
  std::uniform_int_distribution<int> ref(1, nb);
  return GridModel::build(plain_buses(nb), lines, ref(rng));
}

/// Oracle: solve the full DC power flow with the reference angle pinned and the
/// reference absorbing the residual, then evaluate b (theta_from - theta_to).
inline Eigen::VectorXd dc_flow_oracle(const GridModel& g, const Eigen::VectorXd& p) {
  const int n = g.num_buses();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const auto& l : g.lines()) {
    const double b = 1.0 / l.reactance;
    lap(l.from_bus, l.from_bus) += b;
    lap(l.to_bus, l.to_bus) += b;
    lap(l.from_bus, l.to_bus) -= b;
    lap(l.to_bus, l.from_bus) -= b;
  }
  Eigen::VectorXd rhs = p;
  rhs[g.reference()] = 0.0;
  lap.row(g.reference()).setZero();
  lap(g.reference(), g.reference()) = 1.0;
  Eigen::VectorXd theta = lap.fullPivLu().solve(rhs);
  Eigen::VectorXd f(g.num_lines());
  for (int k = 0; k < g.num_lines(); ++k) {
    const auto& l = g.lines()[k];
    f[k] = (theta[l.from_bus] - theta[l.to_bus]) / l.reactance;
  }
  return f;
}

/// Random profile with each bus a generator or load, scaled so total energy balances.
inline Eigen::MatrixXd random_balanced_power(std::mt19937& rng, int nb, int slots) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd p(nb, slots);
  std::vector<bool> gen(static_cast<std::size_t>(nb));
  for (int i = 0; i < nb; ++i) gen[i] = (i % 2 == 0);
  for (int i = 0; i < nb; ++i) {
    const double level = 20.0 + 80.0 * u(rng);
    const double phase = 6.283185307179586 * u(rng);
    for (int t = 0; t < slots; ++t) {
      const double shape = 1.0 + 0.6 * std::sin(6.283185307179586 * t / slots + phase) + 0.3 * (u(rng) - 0.5);
      p(i, t) = (gen[i] ? 1.0 : -1.0) * level * std::max(0.05, shape);
    }
  }
  double g = 0.0, d = 0.0;
  for (int i = 0; i < nb; ++i) (gen[i] ? g : d) += std::abs(p.row(i).sum());
  const double target = 0.5 * (g + d);
  for (int i = 0; i < nb; ++i) p.row(i) *= target / (gen[i] ? g : d);
  return p;
}

}  // namespace tvs::testing
