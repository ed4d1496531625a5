#pragma once

// Static network model, DC power transfer distribution factors and
// single-line outage handling.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace tvs {

struct Bus {
  int id = 0;  // caller's id; the bus's position in GridModel::buses() is its index
  std::string name;
  double storage_cost = 0.0;      // $/MWh of storage capacity, discounted
  double curtailment_cost = 0.0;  // $/MWh of curtailed generation
  double shedding_cost = 0.0;     // $/MWh of shed load
};

struct Line {
  int id = 0;
  int from_bus = 0;  // bus id on input, bus index once inside a GridModel
  int to_bus = 0;
  double reactance = 0.0;  // p.u.
  double capacity = 0.0;   // existing capacity, MW
  double expansion_cost = 0.0;  // $/MW, discounted
};

class GridModel {
 public:
  /// Validates and normalises a network. Line endpoints and the reference are
  /// given as bus ids; inside the model they become indices 0..B-1 in input order.
  static GridModel build(std::vector<Bus> buses, std::vector<Line> lines, int reference_bus_id);

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  int num_buses() const { return static_cast<int>(buses_.size()); }
  int num_lines() const { return static_cast<int>(lines_.size()); }

  /// Index of the reference bus.
  int reference() const { return reference_; }
  int reference_id() const { return buses_[static_cast<std::size_t>(reference_)].id; }

  /// Index of the bus with the given id, or -1.
  int bus_index(int bus_id) const;
  /// Index of the line with the given id, or -1.
  int line_index(int line_id) const;

  /// B x L incidence: +1 at the from bus, -1 at the to bus.
  Eigen::MatrixXd incidence() const;

  /// Non-fatal input observations (e.g. shedding priced below curtailment).
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  int reference_ = 0;
  std::vector<std::string> warnings_;
};

/// Connected components of the bus graph, each a sorted list of bus indices.
std::vector<std::vector<int>> connected_components(int num_buses, const std::vector<Line>& lines);

struct PtdfMatrix {
  Eigen::MatrixXd entries;  // L x B
  int reference = 0;        // bus index whose column is zero

  int num_lines() const { return static_cast<int>(entries.rows()); }
  int num_buses() const { return static_cast<int>(entries.cols()); }
};

PtdfMatrix compute_ptdf(const GridModel& grid);

/// f = H p for one injection vector (MW). Any residual is absorbed at the reference bus.
Eigen::VectorXd flows_from_injections(const PtdfMatrix& ptdf, const Eigen::VectorXd& injections);

/// Column-wise version: injections is B x N, result is L x N.
Eigen::MatrixXd flows_from_injections(const PtdfMatrix& ptdf, const Eigen::MatrixXd& injections);

/// One Kirchhoff voltage-law row per fundamental cycle: sum of coef * f_line = 0
/// holds for every DC power flow on the grid (coef = +-reactance).
using LoopRow = std::vector<std::pair<int, double>>;
std::vector<LoopRow> kvl_loops(const GridModel& grid);

/// The grid with one line removed. Throws IslandingOutage if that splits the network.
GridModel apply_line_outage(const GridModel& grid, int line_id);

/// Line outage distribution factors for tripping `line_id`: post-outage flow on
/// line k is f_k + d_k f_o. The entry for the tripped line is -1.
Eigen::VectorXd compute_lodf(const GridModel& grid, const PtdfMatrix& ptdf, int line_id);

}  // namespace tvs
