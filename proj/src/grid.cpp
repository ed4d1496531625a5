#include "tvs/grid.hpp"

#include "tvs/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace tvs {

namespace {

int find_root(std::vector<int>& parent, int v) {
  while (parent[v] != v) {
    parent[v] = parent[parent[v]];
    v = parent[v];
  }
  return v;
}

bool is_connected(int num_buses, const std::vector<Line>& lines) {
  return connected_components(num_buses, lines).size() <= 1;
}

}  // namespace

std::vector<std::vector<int>> connected_components(int num_buses, const std::vector<Line>& lines) {
  std::vector<int> parent(static_cast<std::size_t>(num_buses));
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& l : lines) {
    const int a = find_root(parent, l.from_bus);
    const int b = find_root(parent, l.to_bus);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::vector<int>> comps;
  std::unordered_map<int, std::size_t> slot;
  for (int v = 0; v < num_buses; ++v) {
    const int r = find_root(parent, v);
    auto [it, fresh] = slot.try_emplace(r, comps.size());
    if (fresh) comps.emplace_back();
    comps[it->second].push_back(v);
  }
  return comps;
}

GridModel GridModel::build(std::vector<Bus> buses, std::vector<Line> lines, int reference_bus_id) {
  if (buses.empty()) throw Error(ErrorKind::InvalidInput, "grid has no buses");

  GridModel g;
  std::unordered_map<int, int> index;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (!index.emplace(buses[i].id, static_cast<int>(i)).second) {
      throw Error(ErrorKind::DuplicateId, "bus id " + std::to_string(buses[i].id) + " appears twice");
    }
    const auto& b = buses[i];
    if (b.storage_cost < 0.0 || b.curtailment_cost < 0.0 || b.shedding_cost < 0.0) {
      throw Error(ErrorKind::InvalidInput, "bus " + std::to_string(b.id) + " has a negative cost");
    }
    if (b.shedding_cost < b.curtailment_cost) {
      g.warnings_.push_back("bus " + std::to_string(b.id) +
                            ": shedding cost is below curtailment cost");
    }
  }

  std::set<int> line_ids;
  for (auto& l : lines) {
    if (!line_ids.insert(l.id).second) {
      throw Error(ErrorKind::DuplicateId, "line id " + std::to_string(l.id) + " appears twice");
    }
    auto from = index.find(l.from_bus);
    auto to = index.find(l.to_bus);
    if (from == index.end() || to == index.end()) {
      throw Error(ErrorKind::UnknownBusReference,
                  "line " + std::to_string(l.id) + " references unknown bus " +
                      std::to_string(from == index.end() ? l.from_bus : l.to_bus));
    }
    if (from->second == to->second) {
      throw Error(ErrorKind::InvalidInput, "line " + std::to_string(l.id) + " connects a bus to itself");
    }
    if (!(l.reactance > 0.0)) {
      throw Error(ErrorKind::NonpositiveReactance, "line " + std::to_string(l.id));
    }
    if (l.capacity < 0.0 || l.expansion_cost < 0.0) {
      throw Error(ErrorKind::InvalidInput, "line " + std::to_string(l.id) + " has a negative capacity or cost");
    }
    l.from_bus = from->second;
    l.to_bus = to->second;
  }

  auto ref = index.find(reference_bus_id);
  if (ref == index.end()) {
    throw Error(ErrorKind::UnknownBusReference, "reference bus " + std::to_string(reference_bus_id));
  }

  const auto comps = connected_components(static_cast<int>(buses.size()), lines);
  if (comps.size() > 1) {
    std::ostringstream os;
    os << comps.size() << " components:";
    for (const auto& c : comps) {
      os << " {";
      for (std::size_t k = 0; k < c.size(); ++k) os << (k ? "," : "") << buses[static_cast<std::size_t>(c[k])].id;
      os << "}";
    }
    throw Error(ErrorKind::DisconnectedGraph, os.str());
  }

  g.buses_ = std::move(buses);
  g.lines_ = std::move(lines);
  g.reference_ = ref->second;
  return g;
}

int GridModel::bus_index(int bus_id) const {
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    if (buses_[i].id == bus_id) return static_cast<int>(i);
  }
  return -1;
}

int GridModel::line_index(int line_id) const {
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    if (lines_[i].id == line_id) return static_cast<int>(i);
  }
  return -1;
}

Eigen::MatrixXd GridModel::incidence() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(num_buses(), num_lines());
  for (int k = 0; k < num_lines(); ++k) {
    a(lines_[k].from_bus, k) = 1.0;
    a(lines_[k].to_bus, k) = -1.0;
  }
  return a;
}

PtdfMatrix compute_ptdf(const GridModel& grid) {
  const int nb = grid.num_buses();
  const int nl = grid.num_lines();
  const int ref = grid.reference();
  PtdfMatrix h{Eigen::MatrixXd::Zero(nl, nb), ref};
  if (nb == 1) return h;

  // Reduced nodal susceptance matrix: reference row and column removed.
  auto reduced = [ref](int bus) { return bus < ref ? bus : bus - 1; };
  Eigen::MatrixXd bbus = Eigen::MatrixXd::Zero(nb - 1, nb - 1);
  for (const auto& l : grid.lines()) {
    const double b = 1.0 / l.reactance;
    const int i = l.from_bus, j = l.to_bus;
    if (i != ref) bbus(reduced(i), reduced(i)) += b;
    if (j != ref) bbus(reduced(j), reduced(j)) += b;
    if (i != ref && j != ref) {
      bbus(reduced(i), reduced(j)) -= b;
      bbus(reduced(j), reduced(i)) -= b;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(bbus);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
    throw Error(ErrorKind::SingularSusceptanceMatrix,
                "reduced susceptance matrix is not positive definite (check reactances)");
  }
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(nb - 1, nb - 1));

  for (int k = 0; k < nl; ++k) {
    const auto& l = grid.lines()[k];
    const double b = 1.0 / l.reactance;
    for (int bus = 0; bus < nb; ++bus) {
      if (bus == ref) continue;
      const int c = reduced(bus);
      const double from = l.from_bus == ref ? 0.0 : inv(reduced(l.from_bus), c);
      const double to = l.to_bus == ref ? 0.0 : inv(reduced(l.to_bus), c);
      h.entries(k, bus) = b * (from - to);
    }
  }
  return h;
}

Eigen::VectorXd flows_from_injections(const PtdfMatrix& ptdf, const Eigen::VectorXd& injections) {
  if (injections.size() != ptdf.num_buses()) {
    throw Error(ErrorKind::DimensionMismatch, "injection vector has " + std::to_string(injections.size()) +
                                                  " entries, grid has " + std::to_string(ptdf.num_buses()) +
                                                  " buses");
  }
  return ptdf.entries * injections;
}

Eigen::MatrixXd flows_from_injections(const PtdfMatrix& ptdf, const Eigen::MatrixXd& injections) {
  if (injections.rows() != ptdf.num_buses()) {
    throw Error(ErrorKind::DimensionMismatch, "injection matrix has " + std::to_string(injections.rows()) +
                                                  " rows, grid has " + std::to_string(ptdf.num_buses()) +
                                                  " buses");
  }
  return ptdf.entries * injections;
}

std::vector<LoopRow> kvl_loops(const GridModel& grid) {
  const int nb = grid.num_buses();
  // BFS spanning tree; parent_line[v] is the tree line joining v to its parent.
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(nb));
  for (int k = 0; k < grid.num_lines(); ++k) {
    adj[grid.lines()[k].from_bus].push_back(k);
    adj[grid.lines()[k].to_bus].push_back(k);
  }
  std::vector<int> parent(static_cast<std::size_t>(nb), -1), parent_line(parent.size(), -1), depth(parent.size(), -1);
  std::vector<bool> in_tree(static_cast<std::size_t>(grid.num_lines()), false);
  std::vector<int> queue{grid.reference()};
  depth[grid.reference()] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (int k : adj[u]) {
      const auto& l = grid.lines()[k];
      const int v = l.from_bus == u ? l.to_bus : l.from_bus;
      if (depth[v] >= 0) continue;
      depth[v] = depth[u] + 1;
      parent[v] = u;
      parent_line[v] = k;
      in_tree[k] = true;
      queue.push_back(v);
    }
  }

  // Angle drop from u to its parent expressed through the tree line's flow.
  auto step = [&](int u, LoopRow& row, double sign) {
    const int k = parent_line[u];
    const auto& l = grid.lines()[k];
    // theta_u - theta_parent = +x f if the line runs u -> parent, else -x f.
    const double s = l.from_bus == u ? 1.0 : -1.0;
    row.emplace_back(k, sign * s * l.reactance);
  };

  std::vector<LoopRow> loops;
  for (int k = 0; k < grid.num_lines(); ++k) {
    if (in_tree[k]) continue;
    const auto& l = grid.lines()[k];
    // x_k f_k = theta_a - theta_b = (theta_a - theta_lca) - (theta_b - theta_lca)
    LoopRow row{{k, l.reactance}};
    int a = l.from_bus, b = l.to_bus;
    while (a != b) {
      if (depth[a] >= depth[b]) {
        step(a, row, -1.0);
        a = parent[a];
      } else {
        step(b, row, 1.0);
        b = parent[b];
      }
    }
    loops.push_back(std::move(row));
  }
  return loops;
}

GridModel apply_line_outage(const GridModel& grid, int line_id) {
  const int k = grid.line_index(line_id);
  if (k < 0) throw Error(ErrorKind::InvalidInput, "no line with id " + std::to_string(line_id));
  std::vector<Line> remaining;
  for (int i = 0; i < grid.num_lines(); ++i) {
    if (i != k) remaining.push_back(grid.lines()[i]);
  }
  if (!is_connected(grid.num_buses(), remaining)) {
    throw Error(ErrorKind::IslandingOutage, "tripping line " + std::to_string(line_id) + " splits the grid");
  }
  // Rebuild from ids so the result is validated the same way as any input grid.
  std::vector<Bus> buses = grid.buses();
  for (auto& l : remaining) {
    l.from_bus = grid.buses()[l.from_bus].id;
    l.to_bus = grid.buses()[l.to_bus].id;
  }
  return GridModel::build(std::move(buses), std::move(remaining), grid.reference_id());
}

Eigen::VectorXd compute_lodf(const GridModel& grid, const PtdfMatrix& ptdf, int line_id) {
  const int o = grid.line_index(line_id);
  if (o < 0) throw Error(ErrorKind::InvalidInput, "no line with id " + std::to_string(line_id));
  std::vector<Line> remaining;
  for (int i = 0; i < grid.num_lines(); ++i) {
    if (i != o) remaining.push_back(grid.lines()[i]);
  }
  if (!is_connected(grid.num_buses(), remaining)) {
    throw Error(ErrorKind::IslandingOutage, "tripping line " + std::to_string(line_id) + " splits the grid");
  }
  const auto& line = grid.lines()[o];
  // Sensitivity of every line to a unit transfer from the tripped line's from bus to its to bus.
  const Eigen::VectorXd transfer = ptdf.entries.col(line.from_bus) - ptdf.entries.col(line.to_bus);
  const double denom = 1.0 - transfer[o];
  if (std::abs(denom) < 1e-10) {
    throw Error(ErrorKind::IslandingOutage, "tripping line " + std::to_string(line_id) + " splits the grid");
  }
  Eigen::VectorXd d = transfer / denom;
  d[o] = -1.0;
  return d;
}

}  // namespace tvs
