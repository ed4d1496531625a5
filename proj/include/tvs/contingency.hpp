#pragma once

// Serious-day screening over many cycles and N-1 capacity requirements on
// daily mean-flow operating points.

#include "tvs/grid.hpp"
#include "tvs/profiles.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tvs {

struct ScreeningResult {
  Eigen::MatrixXd daily_mean_abs_flow;  // L x days, mean |f'| per cycle, MW
  std::vector<int> serious_day;         // per line, day index (earliest on ties)
  Eigen::VectorXd serious_value;        // per line, MW
  std::vector<int> serious_days;        // sorted unique day indices
  std::map<int, int> day_frequency;     // day index -> number of lines peaking that day
  std::vector<std::string> day_labels;
};

ScreeningResult screen_serious_days(const PtdfMatrix& ptdf, const MultiCycleProfile& profiles, int jobs = 1);

/// Daily mean net injection of one day, the constant-flow operating point.
struct DayInjection {
  int day = 0;
  Eigen::VectorXd injection;  // per bus, MW
};

std::vector<DayInjection> serious_day_injections(const ScreeningResult& screening,
                                                 const MultiCycleProfile& profiles);

/// Injections after every device at `bus` trips: the bus goes to zero and its
/// injection is made up by scaling the remaining injections of the same sign.
/// Throws DegenerateRebalance if no other bus has an injection of that sign.
Eigen::VectorXd rebalance_after_bus_trip(const Eigen::VectorXd& injection, int bus);

struct TripRequirements {
  Eigen::VectorXd required;       // per line, MW
  std::vector<int> worst_case;    // per line: tripped line / bus id, -1 for the intact grid
  std::vector<int> worst_day;     // per line, day index
  std::vector<int> excluded;      // islanding line ids or degenerate bus ids, sorted
};

/// max over days and over the intact grid plus every non-islanding line
/// outage of |post-outage flow| per line.
TripRequirements line_trip_requirements(const GridModel& grid, const PtdfMatrix& ptdf,
                                        const std::vector<DayInjection>& days, int jobs = 1);

/// Same for bus (element) trips with proportional same-sign rebalancing.
TripRequirements element_trip_requirements(const GridModel& grid, const PtdfMatrix& ptdf,
                                           const std::vector<DayInjection>& days, int jobs = 1);

struct ContingencyReport {
  Eigen::VectorXd base;  // intact-grid requirement per line, MW
  TripRequirements line_trip;
  TripRequirements element_trip;
  Eigen::VectorXd both;  // per-line max of the two
  double total_base = 0.0;
  double total_line_trip = 0.0;
  double total_element_trip = 0.0;
  double total_both = 0.0;
  std::optional<Eigen::VectorXd> baseline;
  double total_baseline = 0.0;
  // 1 - total required / total baseline, when a baseline is given.
  std::optional<double> reduction_line_trip, reduction_element_trip, reduction_both;
};

/// Throws BaselineDimensionMismatch if the baseline has the wrong length.
ContingencyReport contingency_report(const GridModel& grid, const PtdfMatrix& ptdf, const ScreeningResult& screening,
                                     const MultiCycleProfile& profiles,
                                     const std::optional<Eigen::VectorXd>& baseline = std::nullopt, int jobs = 1);

}  // namespace tvs
