#include "tvs/limits.hpp"

#include "tvs/error.hpp"

#include <algorithm>
#include <cmath>

namespace tvs {

namespace {

Eigen::MatrixXd running_sum(const Eigen::MatrixXd& rate, double h) {
  Eigen::MatrixXd out(rate.rows(), rate.cols());
  for (Eigen::Index r = 0; r < rate.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index t = 0; t < rate.cols(); ++t) {
      acc += h * rate(r, t);
      out(r, t) = acc;
    }
  }
  return out;
}

// Range of each row over {0} U {row entries}, and the matching SoC trajectory.
StorageRequirement from_deviation(const Eigen::MatrixXd& deviation) {
  StorageRequirement s;
  const auto nb = deviation.rows();
  s.capacity.resize(nb);
  s.initial_soc.resize(nb);
  s.trajectory.resize(nb, deviation.cols());
  for (Eigen::Index i = 0; i < nb; ++i) {
    const double lo = std::min(0.0, deviation.row(i).minCoeff());
    const double hi = std::max(0.0, deviation.row(i).maxCoeff());
    s.capacity[i] = hi - lo;
    s.initial_soc[i] = -lo;
    s.trajectory.row(i) = deviation.row(i).array() - lo;
  }
  return s;
}

}  // namespace

FlowSeries make_flow_series(Eigen::MatrixXd flows, double slot_hours, FlowTag tag) {
  FlowSeries f;
  f.cumulative = running_sum(flows, slot_hours);
  f.flows = std::move(flows);
  f.tag = tag;
  f.slot_hours = slot_hours;
  return f;
}

FlowSeries original_flows(const PtdfMatrix& ptdf, const CycleProfile& profile) {
  if (profile.num_buses() != ptdf.num_buses()) {
    throw Error(ErrorKind::DimensionMismatch, "profile has " + std::to_string(profile.num_buses()) +
                                                  " buses, PTDF has " + std::to_string(ptdf.num_buses()));
  }
  return make_flow_series(flows_from_injections(ptdf, profile.power), profile.slot_hours, FlowTag::Original);
}

Eigen::VectorXd min_line_capacity(const FlowSeries& original) {
  return original.flows.cwiseAbs().rowwise().mean();
}

Eigen::VectorXd net_transfer_capacity(const FlowSeries& original) {
  return original.flows.rowwise().mean().cwiseAbs();
}

Eigen::VectorXd peak_flow(const FlowSeries& original) {
  return original.flows.cwiseAbs().rowwise().maxCoeff();
}

StorageRequirement min_storage_given_flows(const GridModel& grid, const CumulativeSeries& net,
                                           const FlowSeries& flows) {
  if (net.values.rows() != grid.num_buses() || flows.num_lines() != grid.num_lines() ||
      net.values.cols() != flows.num_slots()) {
    throw Error(ErrorKind::DimensionMismatch, "cumulative series and flows do not match the grid");
  }
  // Outgoing transferred energy per bus is the incidence applied to line energies.
  const Eigen::MatrixXd deviation = net.values - grid.incidence() * flows.cumulative;
  return from_deviation(deviation);
}

TotalStorage total_min_storage(const CumulativeSeries& local, double balance_tolerance_mwh) {
  TotalStorage out;
  const Eigen::RowVectorXd total = local.values.colwise().sum();
  const double hi = std::max(0.0, total.maxCoeff());
  const double lo = std::min(0.0, total.minCoeff());
  out.capacity_mwh = hi - lo;
  out.balance.residual_mwh = total[total.size() - 1];
  out.balance.tolerance_mwh = balance_tolerance_mwh;
  out.balance.balanced = std::abs(out.balance.residual_mwh) <= balance_tolerance_mwh;
  if (!out.balance.balanced) {
    out.warnings.push_back("cycle is not energy balanced (residual " + std::to_string(out.balance.residual_mwh) +
                           " MWh); curtailment or shedding is unavoidable");
  }
  return out;
}

StorageRequirement closedform_storage_at_min_line(const GridModel& grid, const CumulativeSeries& local,
                                                  const FlowSeries& original) {
  if (local.values.rows() != grid.num_buses() || original.num_lines() != grid.num_lines() ||
      local.values.cols() != original.num_slots()) {
    throw Error(ErrorKind::DimensionMismatch, "cumulative series and flows do not match the grid");
  }
  const Eigen::VectorXd mean = original.flows.rowwise().mean();
  const Eigen::VectorXd outflow = grid.incidence() * mean;  // constant MW leaving each bus
  Eigen::MatrixXd deviation = local.values;
  for (Eigen::Index t = 0; t < deviation.cols(); ++t) {
    deviation.col(t) -= static_cast<double>(t + 1) * original.slot_hours * outflow;
  }
  return from_deviation(deviation);
}

SocBalanceCheck verify_soc_balance(const GridModel& grid, const FlowSeries& flows, const FlowSeries& original,
                                   const CumulativeSeries& net) {
  if (flows.num_lines() != original.num_lines() || flows.num_slots() != original.num_slots() ||
      net.values.cols() != flows.num_slots() || net.values.rows() != grid.num_buses() ||
      flows.num_lines() != grid.num_lines()) {
    throw Error(ErrorKind::DimensionMismatch, "series dimensions do not match");
  }
  SocBalanceCheck c;
  const auto last = flows.num_slots() - 1;
  c.line_residual = flows.cumulative.col(last) - original.cumulative.col(last);
  c.bus_residual = grid.incidence() * flows.cumulative.col(last) - net.values.col(last);
  c.max_abs = std::max(c.line_residual.size() ? c.line_residual.cwiseAbs().maxCoeff() : 0.0,
                       c.bus_residual.cwiseAbs().maxCoeff());
  return c;
}

LimitsReport compute_limits(const GridModel& grid, const PtdfMatrix& ptdf, const CycleProfile& profile) {
  LimitsReport r;
  r.reference_bus_id = grid.reference_id();
  const FlowSeries orig = original_flows(ptdf, profile);
  const CumulativeSeries local = cumulative_energy(profile);
  r.min_line_capacity = min_line_capacity(orig);
  r.net_transfer_capacity = net_transfer_capacity(orig);
  r.peak_flow = peak_flow(orig);
  const auto store = closedform_storage_at_min_line(grid, local, orig);
  r.min_storage = store.capacity;
  r.initial_soc = store.initial_soc;
  r.soc_trajectory = store.trajectory;
  const double scale = std::max(1.0, profile.power.cwiseAbs().maxCoeff() * profile.duration_hours());
  auto total = total_min_storage(local, 1e-9 * scale);
  r.total_min_storage = total.capacity_mwh;
  r.balance = total.balance;
  r.warnings = std::move(total.warnings);
  for (Eigen::Index k = 0; k < orig.flows.rows(); ++k) {
    if (r.min_line_capacity[k] > r.net_transfer_capacity[k] + 1e-9 * (1.0 + r.min_line_capacity[k])) {
      r.warnings.push_back("line " + std::to_string(grid.lines()[k].id) +
                           ": original flow reverses direction within the cycle");
    }
  }
  return r;
}

}  // namespace tvs
