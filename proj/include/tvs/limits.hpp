#pragma once

// Closed-form fundamental limits of lines and storage from cumulative energies.

#include "tvs/grid.hpp"
#include "tvs/profiles.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace tvs {

enum class FlowTag { WithStorage, Original };

/// Line flows over one cycle and their running transferred energy
/// (cumulative(k, t) = h * sum_{s <= t} flows(k, s)).
struct FlowSeries {
  Eigen::MatrixXd flows;       // L x N, MW
  Eigen::MatrixXd cumulative;  // L x N, MWh
  FlowTag tag = FlowTag::Original;
  double slot_hours = 1.0;

  int num_lines() const { return static_cast<int>(flows.rows()); }
  int num_slots() const { return static_cast<int>(flows.cols()); }
};

FlowSeries make_flow_series(Eigen::MatrixXd flows, double slot_hours, FlowTag tag);

/// Flows before any new storage: f'[t] = H p[t].
FlowSeries original_flows(const PtdfMatrix& ptdf, const CycleProfile& profile);

/// Mean absolute original flow per line, (1/N) sum_s |f'[s]|.
Eigen::VectorXd min_line_capacity(const FlowSeries& original);

/// |mean f'| per line: the net energy each line must carry over the cycle
/// divided by the cycle length. Equals min_line_capacity when a line's
/// original flow keeps one direction, and is smaller when it reverses.
Eigen::VectorXd net_transfer_capacity(const FlowSeries& original);

/// max_t |f'[t]| per line.
Eigen::VectorXd peak_flow(const FlowSeries& original);

struct StorageRequirement {
  Eigen::VectorXd capacity;     // S_i, MWh
  Eigen::VectorXd initial_soc;  // x_i[0], MWh
  Eigen::MatrixXd trajectory;   // x_i[t] after slot t, B x N, MWh
};

/// Minimum storage per bus that lets the given flows serve the delivered
/// energy: S_i is the range of E_net_i[t] - sum_j F_ij[t] over t in {0..N},
/// with the t = 0 value taken as zero.
StorageRequirement min_storage_given_flows(const GridModel& grid, const CumulativeSeries& net,
                                           const FlowSeries& flows);

struct TotalStorage {
  double capacity_mwh = 0.0;
  BalanceReport balance;
  std::vector<std::string> warnings;
};

/// max_t sum_i E_i[t] - min_t sum_i E_i[t], t in {0..N}. A warning is attached
/// when the cycle is not energy balanced within `balance_tolerance_mwh`.
TotalStorage total_min_storage(const CumulativeSeries& local, double balance_tolerance_mwh = 1e-6);

/// Storage per bus when every line carries a constant flow equal to its mean
/// original flow: transferred energy on line k by slot t is t h mean(f'_k).
StorageRequirement closedform_storage_at_min_line(const GridModel& grid, const CumulativeSeries& local,
                                                  const FlowSeries& original);

struct SocBalanceCheck {
  Eigen::VectorXd line_residual;  // F_k[N] - F'_k[N], MWh
  Eigen::VectorXd bus_residual;   // sum_j F_ij[N] - E_net_i[N], MWh
  double max_abs = 0.0;
};

SocBalanceCheck verify_soc_balance(const GridModel& grid, const FlowSeries& flows, const FlowSeries& original,
                                   const CumulativeSeries& net);

struct LimitsReport {
  int reference_bus_id = 0;
  Eigen::VectorXd min_line_capacity;      // per line, MW
  Eigen::VectorXd net_transfer_capacity;  // per line, MW
  Eigen::VectorXd peak_flow;              // per line, MW
  Eigen::VectorXd min_storage;            // per bus at the minimum line capacity, MWh
  Eigen::VectorXd initial_soc;            // per bus, MWh
  Eigen::MatrixXd soc_trajectory;         // B x N, MWh
  double total_min_storage = 0.0;         // MWh, unlimited lines
  BalanceReport balance;
  std::vector<std::string> warnings;
};

LimitsReport compute_limits(const GridModel& grid, const PtdfMatrix& ptdf, const CycleProfile& profile);

}  // namespace tvs
