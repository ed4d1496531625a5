#include "tvs/io.hpp"

#include "tvs/error.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace tvs {

using detail::parse_double;
using detail::parse_int;
using detail::skippable;
using detail::split_fields;
using detail::trim;

namespace {

std::ifstream open_or_throw(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, std::string("cannot open ") + what + " " + path.string());
  return in;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Column positions for the required names of a section header.
std::vector<std::size_t> column_map(const std::vector<std::string>& header, const std::vector<std::string>& names,
                                    const std::string& section, int line_no) {
  std::vector<std::size_t> pos;
  for (const auto& n : names) {
    auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) { return lower(h) == n; });
    if (it == header.end()) {
      throw Error(ErrorKind::InvalidInput,
                  "line " + std::to_string(line_no) + ": " + section + " header lacks column '" + n + "'");
    }
    pos.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  return pos;
}

}  // namespace

GridData parse_grid(std::istream& in) {
  static const std::vector<std::string> bus_cols{"id", "name", "beta", "gamma_plus", "gamma_minus"};
  static const std::vector<std::string> line_cols{"id", "from", "to", "reactance", "capacity", "alpha"};
  GridData g;
  std::string section;
  std::vector<std::size_t> cols;
  bool need_header = false;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (skippable(raw)) continue;
    std::string_view t = trim(raw);
    std::string name = lower(t);
    if (name.size() > 2 && name.front() == '[' && name.back() == ']') name = name.substr(1, name.size() - 2);
    if (name == "buses" || name == "lines") {
      section = name;
      need_header = true;
      continue;
    }
    if (section.empty()) {
      throw Error(ErrorKind::InvalidInput, "line " + std::to_string(line_no) + ": data before a [buses] or [lines] section");
    }
    const auto f = split_fields(t);
    if (need_header) {
      cols = column_map(f, section == "buses" ? bus_cols : line_cols, section, line_no);
      need_header = false;
      continue;
    }
    const std::size_t need = *std::max_element(cols.begin(), cols.end()) + 1;
    const std::string ctx = "line " + std::to_string(line_no);
    if (f.size() < need) throw Error(ErrorKind::InvalidInput, ctx + ": too few fields");
    if (section == "buses") {
      g.buses.push_back(Bus{parse_int(f[cols[0]], ctx), f[cols[1]], parse_double(f[cols[2]], ctx),
                            parse_double(f[cols[3]], ctx), parse_double(f[cols[4]], ctx)});
    } else {
      g.lines.push_back(Line{parse_int(f[cols[0]], ctx), parse_int(f[cols[1]], ctx), parse_int(f[cols[2]], ctx),
                             parse_double(f[cols[3]], ctx), parse_double(f[cols[4]], ctx),
                             parse_double(f[cols[5]], ctx)});
    }
  }
  if (g.buses.empty()) throw Error(ErrorKind::InvalidInput, "grid file has no buses");
  return g;
}

GridData read_grid_file(const std::filesystem::path& path) {
  auto in = open_or_throw(path, "grid file");
  try {
    return parse_grid(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

GridModel load_grid(const std::filesystem::path& path, int reference_bus_id) {
  auto data = read_grid_file(path);
  return GridModel::build(std::move(data.buses), std::move(data.lines), reference_bus_id);
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string_view t = trim(std::string_view(raw).substr(0, hash));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::InvalidInput, "line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key(trim(t.substr(0, eq)));
    std::string value(trim(t.substr(eq + 1)));
    if (key.empty()) throw Error(ErrorKind::InvalidInput, "line " + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, value).second) {
      throw Error(ErrorKind::InvalidInput, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  auto in = open_or_throw(path, "config file");
  return parse_key_values(in);
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  const std::string l = lower(v);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  throw Error(ErrorKind::InvalidInput, key + ": '" + v + "' is not a boolean");
}

}  // namespace

RunSettings settings_from(const KeyValues& kv) {
  RunSettings s;
  for (const auto& [key, value] : kv) {
    if (key == "formulation") s.plan.formulation = parse_formulation(value);
    else if (key == "duration") s.plan.storage_power_duration = parse_double(value, key);
    else if (key == "peak_reduction") s.plan.peak_reduction_fraction = parse_double(value, key);
    else if (key == "relaxed_line_limits") s.plan.relaxed_line_limits = parse_bool(value, key);
    else if (key == "transport_model") s.plan.transport_model = parse_bool(value, key);
    else if (key == "alpha") s.plan.costs.alpha = parse_double(value, key);
    else if (key == "beta") s.plan.costs.beta = parse_double(value, key);
    else if (key == "gamma_plus") s.plan.costs.gamma_plus = parse_double(value, key);
    else if (key == "gamma_minus") s.plan.costs.gamma_minus = parse_double(value, key);
    else if (key == "reference_bus") s.reference_bus = parse_int(value, key);
    else if (key == "slots") s.slots = parse_int(value, key);
    else if (key == "slot_hours") s.slot_hours = parse_double(value, key);
    else throw Error(ErrorKind::InvalidInput, "unknown config key '" + key + "'");
  }
  return s;
}

Eigen::VectorXd parse_baseline(std::istream& in, const GridModel& grid) {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(grid.num_lines(), std::nan(""));
  std::string raw;
  int line_no = 0;
  bool header = true;
  std::vector<std::size_t> cols;
  int seen = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (skippable(raw)) continue;
    const auto f = split_fields(trim(raw));
    if (header) {
      cols = column_map(f, {"line_id", "capacity_mw"}, "baseline", line_no);
      header = false;
      continue;
    }
    const std::string ctx = "line " + std::to_string(line_no);
    if (f.size() <= std::max(cols[0], cols[1])) throw Error(ErrorKind::InvalidInput, ctx + ": too few fields");
    const int id = parse_int(f[cols[0]], ctx);
    const int k = grid.line_index(id);
    if (k < 0) throw Error(ErrorKind::BaselineDimensionMismatch, ctx + ": unknown line " + std::to_string(id));
    if (!std::isnan(out[k])) throw Error(ErrorKind::BaselineDimensionMismatch, ctx + ": line " + std::to_string(id) + " repeated");
    out[k] = parse_double(f[cols[1]], ctx);
    ++seen;
  }
  if (seen != grid.num_lines()) {
    throw Error(ErrorKind::BaselineDimensionMismatch, "baseline lists " + std::to_string(seen) + " lines, grid has " +
                                                          std::to_string(grid.num_lines()));
  }
  return out;
}

Eigen::VectorXd read_baseline(const std::filesystem::path& path, const GridModel& grid) {
  auto in = open_or_throw(path, "baseline file");
  return parse_baseline(in, grid);
}

std::string format_fixed(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string to_csv(const Table& t) {
  std::ostringstream os;
  auto row = [&os](const std::vector<std::string>& r) {
    for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << r[k];
    os << '\n';
  };
  row(t.header);
  for (const auto& r : t.rows) row(r);
  return os.str();
}

namespace {

std::string id_of(const GridModel& g, int bus_index) { return std::to_string(g.buses()[bus_index].id); }

// Adding zero turns -0.0 into 0.0.
double clean(double v) { return v + 0.0; }

nlohmann::json vec(const Eigen::VectorXd& v) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(clean(v[i]));
  return out;
}

nlohmann::json rows(const Eigen::MatrixXd& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vec(m.row(r).transpose()));
  return out;
}

nlohmann::json per_line(const GridModel& g, const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::object();
  for (int k = 0; k < g.num_lines(); ++k) out[std::to_string(g.lines()[k].id)] = clean(v[k]);
  return out;
}

nlohmann::json per_bus(const GridModel& g, const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::object();
  for (int i = 0; i < g.num_buses(); ++i) out[id_of(g, i)] = clean(v[i]);
  return out;
}

nlohmann::json requirements_json(const GridModel& g, const TripRequirements& t) {
  nlohmann::json j;
  j["required_mw"] = per_line(g, t.required);
  nlohmann::json worst = nlohmann::json::object();
  for (int k = 0; k < g.num_lines(); ++k) {
    worst[std::to_string(g.lines()[k].id)] = {{"case", t.worst_case[k]}, {"day", t.worst_day[k] + 1}};
  }
  j["worst"] = worst;
  j["excluded"] = t.excluded;
  return j;
}

}  // namespace

Table limits_line_table(const GridModel& g, const LimitsReport& r) {
  Table t{{"line_id", "from_bus", "to_bus", "min_capacity_mw", "net_transfer_mw", "peak_flow_mw"}, {}};
  for (int k = 0; k < g.num_lines(); ++k) {
    const auto& l = g.lines()[k];
    t.rows.push_back({std::to_string(l.id), id_of(g, l.from_bus), id_of(g, l.to_bus),
                      format_fixed(r.min_line_capacity[k]), format_fixed(r.net_transfer_capacity[k]),
                      format_fixed(r.peak_flow[k])});
  }
  return t;
}

Table limits_bus_table(const GridModel& g, const LimitsReport& r) {
  Table t{{"bus_id", "name", "min_storage_mwh", "initial_soc_mwh"}, {}};
  for (int i = 0; i < g.num_buses(); ++i) {
    t.rows.push_back({id_of(g, i), g.buses()[i].name, format_fixed(r.min_storage[i]), format_fixed(r.initial_soc[i])});
  }
  return t;
}

Table soc_table(const GridModel& g, const Eigen::VectorXd& initial, const Eigen::MatrixXd& trajectory) {
  Table t{{"slot"}, {}};
  for (int i = 0; i < g.num_buses(); ++i) t.header.push_back("bus_" + id_of(g, i));
  for (Eigen::Index s = 0; s <= trajectory.cols(); ++s) {
    std::vector<std::string> row{std::to_string(s)};
    for (int i = 0; i < g.num_buses(); ++i) row.push_back(format_fixed(s == 0 ? initial[i] : trajectory(i, s - 1)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table plan_line_table(const GridModel& g, const PlanSolution& s) {
  Table t{{"line_id", "expansion_mw", "capacity_mw", "peak_flow_mw"}, {}};
  for (int k = 0; k < g.num_lines(); ++k) {
    t.rows.push_back({std::to_string(g.lines()[k].id), format_fixed(s.line_expansion[k]),
                      format_fixed(s.line_capacity[k]), format_fixed(s.flows.row(k).cwiseAbs().maxCoeff())});
  }
  return t;
}

Table plan_bus_table(const GridModel& g, const PlanSolution& s) {
  Table t{{"bus_id", "storage_mwh", "initial_soc_mwh", "curtailed_mwh", "shed_mwh"}, {}};
  for (int i = 0; i < g.num_buses(); ++i) {
    t.rows.push_back({id_of(g, i), format_fixed(s.storage_capacity[i]), format_fixed(s.initial_soc[i]),
                      format_fixed(s.curtailment_by_bus[i]), format_fixed(s.shedding_by_bus[i])});
  }
  return t;
}

Table plan_flow_table(const GridModel& g, const PlanSolution& s) {
  Table t{{"slot"}, {}};
  for (const auto& l : g.lines()) t.header.push_back("line_" + std::to_string(l.id));
  for (Eigen::Index n = 0; n < s.flows.cols(); ++n) {
    std::vector<std::string> row{std::to_string(n + 1)};
    for (int k = 0; k < g.num_lines(); ++k) row.push_back(format_fixed(s.flows(k, n)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table sweep_table(const std::vector<SweepPoint>& points) {
  Table t{{"alpha", "beta", "ratio", "total_line_expansion_mw", "total_storage_mwh", "objective", "status"}, {}};
  for (const auto& p : points) {
    t.rows.push_back({format_fixed(p.alpha), format_fixed(p.beta), format_fixed(p.ratio),
                      p.ok ? format_fixed(p.total_line_expansion) : "", p.ok ? format_fixed(p.total_storage) : "",
                      p.ok ? format_fixed(p.objective) : "", p.ok ? "optimal" : "failed"});
  }
  return t;
}

Table screening_table(const GridModel& g, const ScreeningResult& r) {
  Table t{{"line_id", "serious_day", "label", "daily_mean_abs_flow_mw"}, {}};
  for (int k = 0; k < g.num_lines(); ++k) {
    const int d = r.serious_day[k];
    t.rows.push_back({std::to_string(g.lines()[k].id), std::to_string(d + 1),
                      d < static_cast<int>(r.day_labels.size()) ? r.day_labels[d] : "", format_fixed(r.serious_value[k])});
  }
  return t;
}

Table day_frequency_table(const ScreeningResult& r) {
  Table t{{"day", "label", "lines"}, {}};
  for (auto [d, n] : r.day_frequency) {
    t.rows.push_back({std::to_string(d + 1), d < static_cast<int>(r.day_labels.size()) ? r.day_labels[d] : "",
                      std::to_string(n)});
  }
  return t;
}

Table contingency_table(const GridModel& g, const ContingencyReport& r) {
  Table t{{"line_id", "base_mw", "line_trip_mw", "line_trip_case", "element_trip_mw", "element_trip_case", "both_mw"},
          {}};
  if (r.baseline) t.header.push_back("baseline_mw");
  for (int k = 0; k < g.num_lines(); ++k) {
    std::vector<std::string> row{std::to_string(g.lines()[k].id), format_fixed(r.base[k]),
                                 format_fixed(r.line_trip.required[k]), std::to_string(r.line_trip.worst_case[k]),
                                 format_fixed(r.element_trip.required[k]), std::to_string(r.element_trip.worst_case[k]),
                                 format_fixed(r.both[k])};
    if (r.baseline) row.push_back(format_fixed((*r.baseline)[k]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

nlohmann::json to_json(const GridModel& g, const LimitsReport& r) {
  nlohmann::json j;
  j["reference_bus"] = r.reference_bus_id;
  j["min_line_capacity_mw"] = per_line(g, r.min_line_capacity);
  j["net_transfer_mw"] = per_line(g, r.net_transfer_capacity);
  j["peak_flow_mw"] = per_line(g, r.peak_flow);
  j["min_storage_mwh"] = per_bus(g, r.min_storage);
  j["initial_soc_mwh"] = per_bus(g, r.initial_soc);
  j["soc_trajectory_mwh"] = rows(r.soc_trajectory);
  j["total_min_storage_mwh"] = r.total_min_storage;
  j["energy_residual_mwh"] = r.balance.residual_mwh;
  j["balanced"] = r.balance.balanced;
  j["warnings"] = r.warnings;
  return j;
}

nlohmann::json to_json(const GridModel& g, const PlanSolution& s) {
  nlohmann::json j;
  j["formulation"] = to_string(s.formulation);
  j["status"] = lp::to_string(s.status);
  j["objective"] = s.objective;
  j["lp_objective"] = s.lp_objective;
  j["line_expansion_mw"] = per_line(g, s.line_expansion);
  j["line_capacity_mw"] = per_line(g, s.line_capacity);
  j["storage_mwh"] = per_bus(g, s.storage_capacity);
  j["initial_soc_mwh"] = per_bus(g, s.initial_soc);
  j["total_line_expansion_mw"] = s.line_expansion.sum();
  j["total_storage_mwh"] = s.storage_capacity.sum();
  j["curtailment_mwh"] = s.curtailment_mwh;
  j["curtailment_by_bus_mwh"] = per_bus(g, s.curtailment_by_bus);
  j["shedding_by_bus_mwh"] = per_bus(g, s.shedding_by_bus);
  j["shedding_mwh"] = s.shedding_mwh;
  j["soc_mwh"] = rows(s.soc);
  j["flows_mw"] = rows(s.flows);
  j["soc_balance_residual_mwh"] = s.soc_balance.max_abs;
  j["recheck_violation"] = s.recheck_violation;
  j["iterations"] = s.iterations;
  return j;
}

nlohmann::json to_json(const std::vector<SweepPoint>& points) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : points) {
    nlohmann::json j{{"alpha", p.alpha}, {"beta", p.beta}, {"ratio", p.ratio}, {"status", p.status}};
    if (p.ok) {
      j["total_line_expansion_mw"] = p.total_line_expansion;
      j["total_storage_mwh"] = p.total_storage;
      j["objective"] = p.objective;
    }
    out.push_back(std::move(j));
  }
  return out;
}

nlohmann::json to_json(const GridModel& g, const ScreeningResult& r) {
  nlohmann::json j;
  nlohmann::json lines = nlohmann::json::object();
  for (int k = 0; k < g.num_lines(); ++k) {
    lines[std::to_string(g.lines()[k].id)] = {{"serious_day", r.serious_day[k] + 1},
                                              {"daily_mean_abs_flow_mw", r.serious_value[k]}};
  }
  j["lines"] = lines;
  std::vector<int> days;
  for (int d : r.serious_days) days.push_back(d + 1);
  j["serious_days"] = days;
  nlohmann::json freq = nlohmann::json::object();
  for (auto [d, n] : r.day_frequency) freq[std::to_string(d + 1)] = n;
  j["day_frequency"] = freq;
  return j;
}

nlohmann::json to_json(const GridModel& g, const ContingencyReport& r) {
  nlohmann::json j;
  j["base_mw"] = per_line(g, r.base);
  j["line_trip"] = requirements_json(g, r.line_trip);
  j["element_trip"] = requirements_json(g, r.element_trip);
  j["both_mw"] = per_line(g, r.both);
  j["totals_mw"] = {{"base", r.total_base},
                    {"line_trip", r.total_line_trip},
                    {"element_trip", r.total_element_trip},
                    {"both", r.total_both}};
  if (r.baseline) {
    j["baseline_mw"] = per_line(g, *r.baseline);
    j["total_baseline_mw"] = r.total_baseline;
    if (r.reduction_both) {
      j["reduction"] = {{"line_trip", *r.reduction_line_trip},
                        {"element_trip", *r.reduction_element_trip},
                        {"both", *r.reduction_both}};
    }
  }
  return j;
}

}  // namespace tvs
