#pragma once

// Per-bus power time series over storage cycles and their cumulative energies.
// Units: MW for power, MWh for energy, hours for slot length.

#include "tvs/grid.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace tvs {

struct CycleSpec {
  int slots = 24;
  double slot_hours = 1.0;
};

/// One storage cycle of N slots. power(i, t) > 0 is production at bus i.
struct CycleProfile {
  double slot_hours = 1.0;
  Eigen::MatrixXd power;  // B x N

  int num_buses() const { return static_cast<int>(power.rows()); }
  int num_slots() const { return static_cast<int>(power.cols()); }
  double duration_hours() const { return slot_hours * num_slots(); }

  Eigen::MatrixXd production() const { return power.cwiseMax(0.0); }
  Eigen::MatrixXd consumption() const { return (-power).cwiseMax(0.0); }
};

/// Builds a profile, rejecting h <= 0 or an empty slot range.
CycleProfile make_profile(Eigen::MatrixXd power, double slot_hours);

enum class CumulativeKind { Local, Net };

/// values(i, t) is the energy up to and including slot t (t = 0..N-1); the
/// implicit value before the first slot is zero.
struct CumulativeSeries {
  Eigen::MatrixXd values;
  CumulativeKind kind = CumulativeKind::Local;
  double slot_hours = 1.0;
};

struct MultiCycleProfile {
  std::vector<CycleProfile> cycles;
  std::vector<std::string> labels;

  int num_cycles() const { return static_cast<int>(cycles.size()); }
};

/// Reads a profile file, long (`bus_id,slot,power_mw`) or wide
/// (`slot,<bus name or id>...`) form, chosen by the header. Buses absent from
/// the file have zero power; missing long-form cells are zero.
MultiCycleProfile ingest_profile(const std::filesystem::path& path, const GridModel& grid, CycleSpec spec);
MultiCycleProfile parse_profile(std::istream& in, const GridModel& grid, CycleSpec spec);

/// Splits a contiguous B x (k N) power matrix into k cycles.
MultiCycleProfile split_cycles(const Eigen::MatrixXd& power, CycleSpec spec);

CumulativeSeries cumulative_energy(const CycleProfile& profile);

/// Cumulative energy of the delivered powers after curtailment and shedding.
/// Throws CurtailmentBoundViolation unless 0 <= delivered <= original elementwise.
CumulativeSeries net_cumulative_energy(const CycleProfile& profile, const Eigen::MatrixXd& delivered_production,
                                       const Eigen::MatrixXd& delivered_consumption);

struct BalanceReport {
  double residual_mwh = 0.0;  // sum over buses of the end-of-cycle cumulative energy
  double tolerance_mwh = 0.0;
  bool balanced = true;
};

BalanceReport check_energy_balance(const CycleProfile& profile, double tolerance_mwh);

struct NormalizedProfile {
  CycleProfile profile;  // supply rows first, then demand rows (negative)
  double supply_factor = 1.0;
  double demand_factor = 1.0;
};

/// Scales supply rows by one factor and demand rows by another so total supply
/// averages +target_mw and total demand -target_mw. Demand rows may be given as
/// positive consumption or as negative injections.
NormalizedProfile balance_normalize(const Eigen::MatrixXd& supply, const Eigen::MatrixXd& demand, double target_mw,
                                    double slot_hours = 1.0);

}  // namespace tvs
