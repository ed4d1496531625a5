#pragma once

// Input files (grid, key=value settings, baseline capacities) and report
// serialisation: fixed 6-decimal delimited tables and full-precision JSON.

#include "tvs/contingency.hpp"
#include "tvs/grid.hpp"
#include "tvs/limits.hpp"
#include "tvs/plan.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tvs {

/// Grid file: a `[buses]` section with header id,name,beta,gamma_plus,gamma_minus
/// and a `[lines]` section with header id,from,to,reactance,capacity,alpha.
/// Blank lines and `#` comments are ignored.
struct GridData {
  std::vector<Bus> buses;
  std::vector<Line> lines;
};

GridData parse_grid(std::istream& in);
GridData read_grid_file(const std::filesystem::path& path);
GridModel load_grid(const std::filesystem::path& path, int reference_bus_id);

/// `key = value` lines; `#` starts a comment. Duplicate keys are an error.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);

struct RunSettings {
  PlanConfig plan;
  std::optional<int> reference_bus;
  std::optional<int> slots;
  std::optional<double> slot_hours;
};

/// Recognised keys: formulation, duration, peak_reduction, relaxed_line_limits,
/// transport_model, alpha, beta, gamma_plus, gamma_minus, reference_bus,
/// slots, slot_hours. Unknown keys throw InvalidInput.
RunSettings settings_from(const KeyValues& kv);

/// Baseline installed capacity per line, header `line_id,capacity_mw`,
/// returned in grid line order. Any missing, extra or unknown line throws
/// BaselineDimensionMismatch.
Eigen::VectorXd parse_baseline(std::istream& in, const GridModel& grid);
Eigen::VectorXd read_baseline(const std::filesystem::path& path, const GridModel& grid);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Fixed six decimals; infinities print as "inf" and negative zero as zero.
std::string format_fixed(double v);
std::string to_csv(const Table& t);

Table limits_line_table(const GridModel& grid, const LimitsReport& r);
Table limits_bus_table(const GridModel& grid, const LimitsReport& r);
/// One row per slot 0..N, one column per bus.
Table soc_table(const GridModel& grid, const Eigen::VectorXd& initial, const Eigen::MatrixXd& trajectory);

Table plan_line_table(const GridModel& grid, const PlanSolution& s);
Table plan_bus_table(const GridModel& grid, const PlanSolution& s);
Table plan_flow_table(const GridModel& grid, const PlanSolution& s);

Table sweep_table(const std::vector<SweepPoint>& points);

Table screening_table(const GridModel& grid, const ScreeningResult& r);
Table day_frequency_table(const ScreeningResult& r);
Table contingency_table(const GridModel& grid, const ContingencyReport& r);

nlohmann::json to_json(const GridModel& grid, const LimitsReport& r);
nlohmann::json to_json(const GridModel& grid, const PlanSolution& s);
nlohmann::json to_json(const std::vector<SweepPoint>& points);
nlohmann::json to_json(const GridModel& grid, const ScreeningResult& r);
nlohmann::json to_json(const GridModel& grid, const ContingencyReport& r);

}  // namespace tvs
