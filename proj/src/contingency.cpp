#include "tvs/contingency.hpp"

#include "tvs/error.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tvs {

ScreeningResult screen_serious_days(const PtdfMatrix& ptdf, const MultiCycleProfile& profiles, int jobs) {
  const int days = profiles.num_cycles();
  if (days < 1) throw Error(ErrorKind::InvalidInput, "screening needs at least one cycle");
  const int nl = ptdf.num_lines();
  ScreeningResult r;
  r.day_labels = profiles.labels;
  r.daily_mean_abs_flow.resize(nl, days);
  detail::parallel_for(static_cast<std::size_t>(days), jobs, [&](std::size_t d) {
    const auto& cycle = profiles.cycles[d];
    if (cycle.num_buses() != ptdf.num_buses()) {
      throw Error(ErrorKind::DimensionMismatch, "cycle " + std::to_string(d + 1) + " does not match the grid");
    }
    r.daily_mean_abs_flow.col(static_cast<Eigen::Index>(d)) =
        flows_from_injections(ptdf, cycle.power).cwiseAbs().rowwise().mean();
  });

  r.serious_day.resize(static_cast<std::size_t>(nl));
  r.serious_value.resize(nl);
  std::set<int> unique;
  for (int k = 0; k < nl; ++k) {
    int best = 0;
    for (int d = 1; d < days; ++d) {
      if (r.daily_mean_abs_flow(k, d) > r.daily_mean_abs_flow(k, best)) best = d;
    }
    r.serious_day[k] = best;
    r.serious_value[k] = r.daily_mean_abs_flow(k, best);
    unique.insert(best);
    ++r.day_frequency[best];
  }
  r.serious_days.assign(unique.begin(), unique.end());
  return r;
}

std::vector<DayInjection> serious_day_injections(const ScreeningResult& screening,
                                                 const MultiCycleProfile& profiles) {
  std::vector<DayInjection> out;
  for (int d : screening.serious_days) {
    out.push_back({d, profiles.cycles.at(static_cast<std::size_t>(d)).power.rowwise().mean()});
  }
  return out;
}

Eigen::VectorXd rebalance_after_bus_trip(const Eigen::VectorXd& injection, int bus) {
  const double lost = injection[bus];
  Eigen::VectorXd out = injection;
  out[bus] = 0.0;
  if (lost == 0.0) return out;
  double pool = 0.0;
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    if (j != bus && out[j] * lost > 0.0) pool += out[j];
  }
  if (pool == 0.0) {
    throw Error(ErrorKind::DegenerateRebalance, "no other bus injects with the sign of bus index " +
                                                    std::to_string(bus) + " to cover its trip");
  }
  const double scale = (pool + lost) / pool;
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    if (j != bus && out[j] * lost > 0.0) out[j] *= scale;
  }
  return out;
}

namespace {

TripRequirements empty_requirements(int nl) {
  TripRequirements t;
  t.required = Eigen::VectorXd::Zero(nl);
  t.worst_case.assign(static_cast<std::size_t>(nl), -1);
  t.worst_day.assign(static_cast<std::size_t>(nl), -1);
  return t;
}

// Keeps the first case reaching the largest |flow| per line, in evaluation order.
void absorb(TripRequirements& t, const Eigen::VectorXd& flows, int case_id, int day) {
  for (Eigen::Index k = 0; k < flows.size(); ++k) {
    const double v = std::abs(flows[k]);
    if (t.worst_day[k] < 0 || v > t.required[k]) {
      t.required[k] = v;
      t.worst_case[k] = case_id;
      t.worst_day[k] = day;
    }
  }
}

struct CaseFlows {
  bool excluded = false;
  std::vector<Eigen::VectorXd> per_day;
};

}  // namespace

TripRequirements line_trip_requirements(const GridModel& grid, const PtdfMatrix& ptdf,
                                        const std::vector<DayInjection>& days, int jobs) {
  const int nl = grid.num_lines();
  TripRequirements t = empty_requirements(nl);
  std::vector<Eigen::VectorXd> base;
  for (const auto& d : days) base.push_back(flows_from_injections(ptdf, d.injection));
  for (std::size_t d = 0; d < days.size(); ++d) absorb(t, base[d], -1, days[d].day);

  std::vector<CaseFlows> cases(static_cast<std::size_t>(nl));
  detail::parallel_for(cases.size(), jobs, [&](std::size_t o) {
    const int id = grid.lines()[o].id;
    Eigen::VectorXd lodf;
    try {
      lodf = compute_lodf(grid, ptdf, id);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::IslandingOutage) throw;
      cases[o].excluded = true;
      return;
    }
    for (const auto& f : base) {
      Eigen::VectorXd post = f + lodf * f[static_cast<Eigen::Index>(o)];
      post[static_cast<Eigen::Index>(o)] = 0.0;
      cases[o].per_day.push_back(std::move(post));
    }
  });
  for (int o = 0; o < nl; ++o) {
    if (cases[o].excluded) {
      t.excluded.push_back(grid.lines()[o].id);
      continue;
    }
    for (std::size_t d = 0; d < days.size(); ++d) absorb(t, cases[o].per_day[d], grid.lines()[o].id, days[d].day);
  }
  std::sort(t.excluded.begin(), t.excluded.end());
  return t;
}

TripRequirements element_trip_requirements(const GridModel& grid, const PtdfMatrix& ptdf,
                                           const std::vector<DayInjection>& days, int jobs) {
  const int nl = grid.num_lines(), nb = grid.num_buses();
  TripRequirements t = empty_requirements(nl);
  for (const auto& d : days) absorb(t, flows_from_injections(ptdf, d.injection), -1, d.day);

  // A bus counts as degenerate if its trip cannot be rebalanced on any day.
  std::vector<CaseFlows> cases(static_cast<std::size_t>(nb));
  detail::parallel_for(cases.size(), jobs, [&](std::size_t b) {
    for (const auto& d : days) {
      try {
        cases[b].per_day.push_back(
            flows_from_injections(ptdf, rebalance_after_bus_trip(d.injection, static_cast<int>(b))));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateRebalance) throw;
        cases[b].excluded = true;
        cases[b].per_day.emplace_back();
      }
    }
  });
  for (int b = 0; b < nb; ++b) {
    if (cases[b].excluded) t.excluded.push_back(grid.buses()[b].id);
    for (std::size_t d = 0; d < days.size(); ++d) {
      if (cases[b].per_day[d].size() == 0) continue;
      absorb(t, cases[b].per_day[d], grid.buses()[b].id, days[d].day);
    }
  }
  std::sort(t.excluded.begin(), t.excluded.end());
  return t;
}

ContingencyReport contingency_report(const GridModel& grid, const PtdfMatrix& ptdf, const ScreeningResult& screening,
                                     const MultiCycleProfile& profiles, const std::optional<Eigen::VectorXd>& baseline,
                                     int jobs) {
  if (baseline && baseline->size() != grid.num_lines()) {
    throw Error(ErrorKind::BaselineDimensionMismatch, "baseline has " + std::to_string(baseline->size()) +
                                                          " values, grid has " + std::to_string(grid.num_lines()) +
                                                          " lines");
  }
  const auto days = serious_day_injections(screening, profiles);
  ContingencyReport r;
  r.base = Eigen::VectorXd::Zero(grid.num_lines());
  for (const auto& d : days) r.base = r.base.cwiseMax(flows_from_injections(ptdf, d.injection).cwiseAbs());
  r.line_trip = line_trip_requirements(grid, ptdf, days, jobs);
  r.element_trip = element_trip_requirements(grid, ptdf, days, jobs);
  r.both = r.line_trip.required.cwiseMax(r.element_trip.required);
  r.total_base = r.base.sum();
  r.total_line_trip = r.line_trip.required.sum();
  r.total_element_trip = r.element_trip.required.sum();
  r.total_both = r.both.sum();
  if (baseline) {
    r.baseline = baseline;
    r.total_baseline = baseline->sum();
    if (r.total_baseline > 0.0) {
      r.reduction_line_trip = 1.0 - r.total_line_trip / r.total_baseline;
      r.reduction_element_trip = 1.0 - r.total_element_trip / r.total_baseline;
      r.reduction_both = 1.0 - r.total_both / r.total_baseline;
    }
  }
  return r;
}

}  // namespace tvs
