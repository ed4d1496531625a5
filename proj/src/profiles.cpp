#include "tvs/profiles.hpp"

#include "text_util.hpp"
#include "tvs/error.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace tvs {

CycleProfile make_profile(Eigen::MatrixXd power, double slot_hours) {
  if (!(slot_hours > 0.0)) throw Error(ErrorKind::InvalidInput, "slot length must be positive");
  if (power.cols() < 1) throw Error(ErrorKind::InvalidInput, "a cycle needs at least one slot");
  return CycleProfile{slot_hours, std::move(power)};
}

MultiCycleProfile split_cycles(const Eigen::MatrixXd& power, CycleSpec spec) {
  if (spec.slots < 1) throw Error(ErrorKind::InvalidInput, "slots per cycle must be >= 1");
  if (!(spec.slot_hours > 0.0)) throw Error(ErrorKind::InvalidInput, "slot length must be positive");
  const auto total = power.cols();
  if (total == 0 || total % spec.slots != 0) {
    throw Error(ErrorKind::RaggedSeries, std::to_string(total) + " slots do not divide into cycles of " +
                                             std::to_string(spec.slots));
  }
  MultiCycleProfile out;
  for (Eigen::Index start = 0; start < total; start += spec.slots) {
    out.cycles.push_back(make_profile(power.middleCols(start, spec.slots), spec.slot_hours));
    out.labels.push_back("day" + std::to_string(out.cycles.size()));
  }
  return out;
}

namespace {

void require_increasing(const std::vector<double>& slots) {
  for (std::size_t k = 1; k < slots.size(); ++k) {
    if (!(slots[k] > slots[k - 1])) {
      throw Error(ErrorKind::NonmonotoneTimestamps,
                  "slot " + std::to_string(slots[k]) + " does not follow " + std::to_string(slots[k - 1]));
    }
  }
}

int resolve_bus(const GridModel& grid, const std::string& key) {
  for (int i = 0; i < grid.num_buses(); ++i) {
    if (grid.buses()[i].name == key) return i;
  }
  if (detail::is_int(key)) {
    const int idx = grid.bus_index(detail::parse_int(key, "bus"));
    if (idx >= 0) return idx;
  }
  throw Error(ErrorKind::UnknownBus, "profile references unknown bus '" + key + "'");
}

}  // namespace

MultiCycleProfile parse_profile(std::istream& in, const GridModel& grid, CycleSpec spec) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (detail::skippable(line)) continue;
    header = detail::split_fields(line);
    break;
  }
  if (header.empty()) throw Error(ErrorKind::InvalidInput, "profile file is empty");

  const int nb = grid.num_buses();
  std::vector<double> slot_values;
  std::vector<Eigen::VectorXd> columns;

  const bool long_form = header.size() == 3 && header[0] == "bus_id" && header[1] == "slot" && header[2] == "power_mw";
  if (long_form) {
    std::map<double, Eigen::VectorXd> by_slot;
    std::vector<double> last_slot(static_cast<std::size_t>(nb), -std::numeric_limits<double>::infinity());
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (detail::skippable(line)) continue;
      auto f = detail::split_fields(line);
      const std::string ctx = "profile line " + std::to_string(lineno);
      if (f.size() != 3) throw Error(ErrorKind::InvalidInput, ctx + ": expected 3 fields");
      const int bus_id = detail::parse_int(f[0], ctx);
      const int bus = grid.bus_index(bus_id);
      if (bus < 0) throw Error(ErrorKind::UnknownBus, ctx + ": bus id " + f[0]);
      const double slot = detail::parse_double(f[1], ctx);
      if (!(slot > last_slot[bus])) {
        throw Error(ErrorKind::NonmonotoneTimestamps, ctx + ": slot " + f[1] + " for bus " + f[0] +
                                                          " is not after the previous one");
      }
      last_slot[bus] = slot;
      auto it = by_slot.try_emplace(slot, Eigen::VectorXd::Zero(nb)).first;
      it->second[bus] = detail::parse_double(f[2], ctx);
    }
    for (auto& [slot, col] : by_slot) {
      slot_values.push_back(slot);
      columns.push_back(col);
    }
  } else {
    if (header.size() < 2 || header[0] != "slot") {
      throw Error(ErrorKind::InvalidInput,
                  "profile header must be 'bus_id,slot,power_mw' or 'slot,<bus>...'");
    }
    std::vector<int> bus_of_column;
    for (std::size_t c = 1; c < header.size(); ++c) bus_of_column.push_back(resolve_bus(grid, header[c]));
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (detail::skippable(line)) continue;
      auto f = detail::split_fields(line);
      const std::string ctx = "profile line " + std::to_string(lineno);
      if (f.size() != header.size()) throw Error(ErrorKind::InvalidInput, ctx + ": wrong number of fields");
      slot_values.push_back(detail::parse_double(f[0], ctx));
      Eigen::VectorXd col = Eigen::VectorXd::Zero(nb);
      for (std::size_t c = 1; c < f.size(); ++c) col[bus_of_column[c - 1]] += detail::parse_double(f[c], ctx);
      columns.push_back(col);
    }
    require_increasing(slot_values);
  }

  Eigen::MatrixXd power(nb, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t t = 0; t < columns.size(); ++t) power.col(static_cast<Eigen::Index>(t)) = columns[t];
  return split_cycles(power, spec);
}

MultiCycleProfile ingest_profile(const std::filesystem::path& path, const GridModel& grid, CycleSpec spec) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open profile file " + path.string());
  return parse_profile(in, grid, spec);
}

namespace {

Eigen::MatrixXd running_energy(const Eigen::MatrixXd& power, double h) {
  Eigen::MatrixXd e(power.rows(), power.cols());
  for (Eigen::Index i = 0; i < power.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index t = 0; t < power.cols(); ++t) {
      acc += h * power(i, t);
      e(i, t) = acc;
    }
  }
  return e;
}

}  // namespace

CumulativeSeries cumulative_energy(const CycleProfile& profile) {
  return CumulativeSeries{running_energy(profile.power, profile.slot_hours), CumulativeKind::Local,
                          profile.slot_hours};
}

CumulativeSeries net_cumulative_energy(const CycleProfile& profile, const Eigen::MatrixXd& delivered_production,
                                       const Eigen::MatrixXd& delivered_consumption) {
  const Eigen::MatrixXd prod = profile.production();
  const Eigen::MatrixXd cons = profile.consumption();
  if (delivered_production.rows() != prod.rows() || delivered_production.cols() != prod.cols() ||
      delivered_consumption.rows() != cons.rows() || delivered_consumption.cols() != cons.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "delivered power matrices do not match the profile");
  }
  constexpr double kSlack = 1e-9;
  for (Eigen::Index i = 0; i < prod.rows(); ++i) {
    for (Eigen::Index t = 0; t < prod.cols(); ++t) {
      const bool bad_prod = delivered_production(i, t) < -kSlack || delivered_production(i, t) > prod(i, t) + kSlack;
      const bool bad_cons = delivered_consumption(i, t) < -kSlack || delivered_consumption(i, t) > cons(i, t) + kSlack;
      if (bad_prod || bad_cons) {
        throw Error(ErrorKind::CurtailmentBoundViolation,
                    "bus index " + std::to_string(i) + ", slot " + std::to_string(t + 1));
      }
    }
  }
  return CumulativeSeries{running_energy(delivered_production - delivered_consumption, profile.slot_hours),
                          CumulativeKind::Net, profile.slot_hours};
}

BalanceReport check_energy_balance(const CycleProfile& profile, double tolerance_mwh) {
  BalanceReport r;
  r.residual_mwh = profile.slot_hours * profile.power.sum();
  r.tolerance_mwh = tolerance_mwh;
  r.balanced = std::abs(r.residual_mwh) <= tolerance_mwh;
  return r;
}

NormalizedProfile balance_normalize(const Eigen::MatrixXd& supply, const Eigen::MatrixXd& demand, double target_mw,
                                    double slot_hours) {
  if (supply.cols() != demand.cols() || supply.cols() == 0) {
    throw Error(ErrorKind::DimensionMismatch, "supply and demand must share a non-empty slot range");
  }
  if (!(target_mw > 0.0)) throw Error(ErrorKind::InvalidInput, "target average must be positive");
  const double n = static_cast<double>(supply.cols());
  const double supply_mean = supply.sum() / n;
  const double demand_mean = demand.sum() / n;
  if (std::abs(supply_mean) < 1e-12) throw Error(ErrorKind::ZeroMeanSeries, "supply has zero mean");
  if (std::abs(demand_mean) < 1e-12) throw Error(ErrorKind::ZeroMeanSeries, "demand has zero mean");

  NormalizedProfile out;
  out.supply_factor = target_mw / std::abs(supply_mean);
  out.demand_factor = target_mw / std::abs(demand_mean);
  // Supply is stored as production, demand as negative injection.
  const double supply_sign = supply_mean > 0.0 ? 1.0 : -1.0;
  const double demand_sign = demand_mean > 0.0 ? -1.0 : 1.0;
  Eigen::MatrixXd power(supply.rows() + demand.rows(), supply.cols());
  power.topRows(supply.rows()) = supply_sign * out.supply_factor * supply;
  power.bottomRows(demand.rows()) = demand_sign * out.demand_factor * demand;
  out.profile = make_profile(std::move(power), slot_hours);
  return out;
}

}  // namespace tvs
