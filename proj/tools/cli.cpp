#include "cli.hpp"

#include "tvs/contingency.hpp"
#include "tvs/error.hpp"
#include "tvs/io.hpp"
#include "tvs/limits.hpp"
#include "tvs/plan.hpp"
#include "tvs/profiles.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace tvs::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string grid, profiles, config, out, baseline;
  std::optional<int> slots, ref_bus, cycle, jobs;
  std::optional<double> slot_hours, peak_reduction, duration, alpha, beta, gamma_plus, gamma_minus;
  std::optional<std::string> formulation;
  bool json = false, relaxed = false, transport = false;
  std::vector<double> alpha_range, beta_range;
  int samples = 5;
};

struct Inputs {
  GridModel grid;
  PtdfMatrix ptdf;
  MultiCycleProfile profiles;
  RunSettings settings;
  int jobs = 1;
};

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::InfeasibleModel:
      return Infeasible;
    case ErrorKind::UnboundedModel:
    case ErrorKind::NumericalBreakdown:
    case ErrorKind::SolutionInconsistency:
      return Numerical;
    default:
      return InputError;
  }
}

Inputs load(const Options& o) {
  RunSettings s;
  if (!o.config.empty()) s = settings_from(read_key_values(o.config));
  if (o.ref_bus) s.reference_bus = o.ref_bus;
  if (o.slots) s.slots = o.slots;
  if (o.slot_hours) s.slot_hours = o.slot_hours;
  if (o.formulation) s.plan.formulation = parse_formulation(*o.formulation);
  if (o.peak_reduction) s.plan.peak_reduction_fraction = o.peak_reduction;
  if (o.duration) s.plan.storage_power_duration = o.duration;
  if (o.alpha) s.plan.costs.alpha = o.alpha;
  if (o.beta) s.plan.costs.beta = o.beta;
  if (o.gamma_plus) s.plan.costs.gamma_plus = o.gamma_plus;
  if (o.gamma_minus) s.plan.costs.gamma_minus = o.gamma_minus;
  if (o.relaxed) s.plan.relaxed_line_limits = true;
  if (o.transport) s.plan.transport_model = true;
  if (!s.reference_bus) throw Error(ErrorKind::InvalidInput, "no reference bus: pass --ref-bus or set reference_bus");
  if (o.profiles.empty()) throw Error(ErrorKind::InvalidInput, "--profiles is required");
  CycleSpec spec;
  if (s.slots) spec.slots = *s.slots;
  if (s.slot_hours) spec.slot_hours = *s.slot_hours;
  if (spec.slots < 1) throw Error(ErrorKind::InvalidInput, "slots must be at least 1");

  Inputs in{load_grid(o.grid, *s.reference_bus), {}, {}, s, o.jobs.value_or(1)};
  in.ptdf = compute_ptdf(in.grid);
  in.profiles = ingest_profile(o.profiles, in.grid, spec);
  if (in.jobs < 1) throw Error(ErrorKind::InvalidInput, "--jobs must be at least 1");
  return in;
}

const CycleProfile& pick_cycle(const Inputs& in, const Options& o) {
  const int k = o.cycle.value_or(1);
  if (k < 1 || k > in.profiles.num_cycles()) {
    throw Error(ErrorKind::InvalidInput, "--cycle " + std::to_string(k) + " outside 1.." +
                                             std::to_string(in.profiles.num_cycles()));
  }
  return in.profiles.cycles[static_cast<std::size_t>(k - 1)];
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::InvalidInput, "cannot write " + path.string());
  f << text;
}

class Writer {
 public:
  explicit Writer(const std::string& dir) : dir_(dir) {
    if (!dir_.empty()) fs::create_directories(dir_);
  }
  void table(const std::string& name, const Table& t) const {
    if (!dir_.empty()) write_file(dir_ / name, to_csv(t));
  }
  void report(const nlohmann::json& j) const {
    if (!dir_.empty()) write_file(dir_ / "report.json", j.dump(2) + "\n");
  }

 private:
  fs::path dir_;
};

int cmd_limits(const Options& o, std::ostream& out) {
  const auto in = load(o);
  const auto r = compute_limits(in.grid, in.ptdf, pick_cycle(in, o));
  const Writer w(o.out);
  w.table("limits_lines.csv", limits_line_table(in.grid, r));
  w.table("limits_buses.csv", limits_bus_table(in.grid, r));
  w.table("limits_soc.csv", soc_table(in.grid, r.initial_soc, r.soc_trajectory));
  const auto j = to_json(in.grid, r);
  w.report(j);
  if (o.json) {
    out << j.dump(2) << '\n';
    return Ok;
  }
  out << "line_id,min_capacity_mw\n";
  for (int k = 0; k < in.grid.num_lines(); ++k) {
    out << in.grid.lines()[k].id << ',' << format_fixed(r.min_line_capacity[k]) << '\n';
  }
  out << "total_min_line_capacity_mw," << format_fixed(r.min_line_capacity.sum()) << '\n';
  out << "storage_at_min_capacity_mwh," << format_fixed(r.min_storage.sum()) << '\n';
  out << "total_min_storage_mwh," << format_fixed(r.total_min_storage) << '\n';
  for (const auto& warn : r.warnings) out << "warning: " << warn << '\n';
  return Ok;
}

int cmd_plan(const Options& o, std::ostream& out) {
  const auto in = load(o);
  const auto s = solve_plan(in.grid, in.ptdf, pick_cycle(in, o), in.settings.plan);
  const Writer w(o.out);
  w.table("plan_lines.csv", plan_line_table(in.grid, s));
  w.table("plan_buses.csv", plan_bus_table(in.grid, s));
  w.table("plan_flows.csv", plan_flow_table(in.grid, s));
  w.table("plan_soc.csv", soc_table(in.grid, s.initial_soc, s.soc));
  const auto j = to_json(in.grid, s);
  w.report(j);
  if (o.json) {
    out << j.dump(2) << '\n';
    return Ok;
  }
  out << "formulation," << to_string(s.formulation) << '\n';
  out << "status," << lp::to_string(s.status) << '\n';
  out << "objective," << format_fixed(s.objective) << '\n';
  out << "total_line_expansion_mw," << format_fixed(s.line_expansion.sum()) << '\n';
  out << "total_storage_mwh," << format_fixed(s.storage_capacity.sum()) << '\n';
  out << "curtailment_mwh," << format_fixed(s.curtailment_mwh) << '\n';
  out << "shedding_mwh," << format_fixed(s.shedding_mwh) << '\n';
  out << "line_id,capacity_mw\n";
  for (int k = 0; k < in.grid.num_lines(); ++k) {
    out << in.grid.lines()[k].id << ',' << format_fixed(s.line_capacity[k]) << '\n';
  }
  return Ok;
}

std::vector<double> range_of(const std::vector<double>& r, int n, const char* name) {
  if (r.size() != 2 || !(r[0] > 0.0) || !(r[1] >= r[0])) {
    throw Error(ErrorKind::InvalidInput, std::string(name) + " needs two positive values lo <= hi");
  }
  return sample_range(r[0], r[1], n);
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const auto in = load(o);
  if (o.samples < 1) throw Error(ErrorKind::InvalidInput, "--samples must be at least 1");
  const auto alphas = range_of(o.alpha_range, o.samples, "--alpha-range");
  const auto betas = range_of(o.beta_range, o.samples, "--beta-range");
  const auto pts = sweep_tradeoff(in.grid, in.ptdf, pick_cycle(in, o), alphas, betas, in.settings.plan, in.jobs);
  const Writer w(o.out);
  const auto t = sweep_table(pts);
  w.table("sweep.csv", t);
  const auto j = to_json(pts);
  w.report(j);
  if (o.json) out << j.dump(2) << '\n';
  else out << to_csv(t);
  return Ok;
}

int cmd_screen(const Options& o, std::ostream& out) {
  const auto in = load(o);
  const auto r = screen_serious_days(in.ptdf, in.profiles, in.jobs);
  const Writer w(o.out);
  w.table("screening.csv", screening_table(in.grid, r));
  w.table("day_frequency.csv", day_frequency_table(r));
  const auto j = to_json(in.grid, r);
  w.report(j);
  if (o.json) {
    out << j.dump(2) << '\n';
    return Ok;
  }
  out << "days," << in.profiles.num_cycles() << '\n';
  out << "serious_days";
  for (int d : r.serious_days) out << ',' << d + 1;
  out << '\n';
  return Ok;
}

int cmd_contingency(const Options& o, std::ostream& out) {
  const auto in = load(o);
  std::optional<Eigen::VectorXd> baseline;
  if (!o.baseline.empty()) baseline = read_baseline(o.baseline, in.grid);
  const auto screening = screen_serious_days(in.ptdf, in.profiles, in.jobs);
  const auto r = contingency_report(in.grid, in.ptdf, screening, in.profiles, baseline, in.jobs);
  const Writer w(o.out);
  w.table("screening.csv", screening_table(in.grid, screening));
  w.table("day_frequency.csv", day_frequency_table(screening));
  w.table("contingency.csv", contingency_table(in.grid, r));
  nlohmann::json j = to_json(in.grid, r);
  j["screening"] = to_json(in.grid, screening);
  w.report(j);
  if (o.json) {
    out << j.dump(2) << '\n';
    return Ok;
  }
  out << "case,total_mw,reduction\n";
  auto row = [&](const char* name, double total, const std::optional<double>& red) {
    out << name << ',' << format_fixed(total) << ',' << (red ? format_fixed(*red) : "") << '\n';
  };
  row("base", r.total_base, std::nullopt);
  row("line_trip", r.total_line_trip, r.reduction_line_trip);
  row("element_trip", r.total_element_trip, r.reduction_element_trip);
  row("both", r.total_both, r.reduction_both);
  if (baseline) row("baseline", r.total_baseline, std::nullopt);
  return Ok;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--grid", o.grid, "grid file")->required();
  sub->add_option("--profiles", o.profiles, "profile file (long or wide form)");
  sub->add_option("--config", o.config, "key = value settings file");
  sub->add_option("--slots", o.slots, "slots per cycle");
  sub->add_option("--slot-hours", o.slot_hours, "slot length in hours");
  sub->add_option("--ref-bus", o.ref_bus, "reference bus id");
  sub->add_option("--out", o.out, "directory for tables and report.json");
  sub->add_flag("--json", o.json, "print the structured report");
  sub->add_option("--jobs", o.jobs, "worker thread cap");
}

void add_plan_options(CLI::App* sub, Options& o) {
  sub->add_option("--cycle", o.cycle, "1-based cycle to use (default 1)");
  sub->add_option("--formulation", o.formulation, "conventional|reformulated|simplified|peakmin");
  sub->add_option("--peak-reduction", o.peak_reduction, "peak reduction fraction for peakmin");
  sub->add_option("--duration", o.duration, "storage power duration in hours");
  sub->add_option("--alpha", o.alpha, "uniform line expansion cost");
  sub->add_option("--beta", o.beta, "uniform storage cost");
  sub->add_option("--gamma-plus", o.gamma_plus, "uniform curtailment cost");
  sub->add_option("--gamma-minus", o.gamma_minus, "uniform shedding cost");
  sub->add_flag("--relaxed", o.relaxed, "drop line limits");
  sub->add_flag("--transport", o.transport, "transport model without loop physics");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transmission and storage limits, planning and contingency studies", "tvs"};
  app.require_subcommand(1);
  Options o;
  auto* limits = app.add_subcommand("limits", "minimum line capacity and storage of one cycle");
  add_common(limits, o);
  limits->add_option("--cycle", o.cycle, "1-based cycle to use (default 1)");
  auto* plan = app.add_subcommand("plan", "solve a planning LP");
  add_common(plan, o);
  add_plan_options(plan, o);
  auto* sweep = app.add_subcommand("sweep", "trade-off over line and storage costs");
  add_common(sweep, o);
  add_plan_options(sweep, o);
  sweep->add_option("--alpha-range", o.alpha_range, "lo hi")->expected(2)->required();
  sweep->add_option("--beta-range", o.beta_range, "lo hi")->expected(2)->required();
  sweep->add_option("--samples", o.samples, "samples per range");
  auto* screen = app.add_subcommand("screen", "serious-day screening over many cycles");
  add_common(screen, o);
  auto* contingency = app.add_subcommand("contingency", "N-1 capacity requirements on serious days");
  add_common(contingency, o);
  contingency->add_option("--baseline", o.baseline, "installed capacity per line");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return Ok;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return InputError;
  }

  try {
    if (limits->parsed()) return cmd_limits(o, out);
    if (plan->parsed()) return cmd_plan(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out);
    if (screen->parsed()) return cmd_screen(o, out);
    return cmd_contingency(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return InputError;
  }
}

}  // namespace tvs::cli
