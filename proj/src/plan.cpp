#include "tvs/plan.hpp"

#include "tvs/error.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tvs {

namespace {

using lp::Relation;
using lp::Term;

// A linear expression over LP variables plus a constant.
struct Expr {
  std::vector<Term> terms;
  double constant = 0.0;

  void add(int var, double coef) {
    if (coef != 0.0) terms.push_back({var, coef});
  }
  // var < 0 means the quantity is the constant `value`.
  void add_or_const(int var, double coef, double value) {
    if (var >= 0) {
      add(var, coef);
    } else {
      constant += coef * value;
    }
  }
};

// Adds `lhs rel 0` as a row, moving the constant to the right-hand side.
// Rows without variables are checked here instead of being emitted.
void add_row(lp::Model& m, std::string name, const Expr& e, Relation rel) {
  if (e.terms.empty()) {
    const double v = e.constant;
    const bool ok = rel == Relation::LessEqual ? v <= 1e-9 : rel == Relation::GreaterEqual ? v >= -1e-9
                                                                                          : std::abs(v) <= 1e-9;
    if (!ok) throw Error(ErrorKind::InfeasibleModel, "constant row " + name + " cannot hold");
    return;
  }
  m.add_constraint(std::move(name), e.terms, rel, -e.constant);
}

double alpha_of(const GridModel& g, const PlanConfig& cfg, int k) {
  return cfg.costs.alpha.value_or(g.lines()[k].expansion_cost);
}
double beta_of(const GridModel& g, const PlanConfig& cfg, int i) {
  return cfg.costs.beta.value_or(g.buses()[i].storage_cost);
}
double gamma_plus_of(const GridModel& g, const PlanConfig& cfg, int i) {
  return cfg.costs.gamma_plus.value_or(g.buses()[i].curtailment_cost);
}
double gamma_minus_of(const GridModel& g, const PlanConfig& cfg, int i) {
  return cfg.costs.gamma_minus.value_or(g.buses()[i].shedding_cost);
}

std::string bus_tag(const GridModel& g, int i) { return std::to_string(g.buses()[i].id); }
std::string line_tag(const GridModel& g, int k) { return std::to_string(g.lines()[k].id); }

void check_dimensions(const GridModel& grid, const CycleProfile& profile) {
  if (profile.num_buses() != grid.num_buses()) {
    throw Error(ErrorKind::DimensionMismatch, "profile has " + std::to_string(profile.num_buses()) +
                                                  " buses, grid has " + std::to_string(grid.num_buses()));
  }
}

// Existing line limits used in the flow rows, and whether flows are limited.
Eigen::VectorXd line_limits(const GridModel& grid, const PtdfMatrix* ptdf, const CycleProfile& profile,
                            const PlanConfig& cfg) {
  if (cfg.formulation == Formulation::PeakMin) {
    if (!ptdf) throw Error(ErrorKind::InvalidInput, "peak-reduction limits need the PTDF");
    return (1.0 - cfg.peak_reduction_fraction.value_or(0.0)) * peak_flow(original_flows(*ptdf, profile));
  }
  if (cfg.pinned_line_capacity) {
    if (cfg.pinned_line_capacity->size() != grid.num_lines()) {
      throw Error(ErrorKind::DimensionMismatch, "pinned line capacity needs one value per line");
    }
    return *cfg.pinned_line_capacity;
  }
  Eigen::VectorXd cap(grid.num_lines());
  for (int k = 0; k < grid.num_lines(); ++k) cap[k] = grid.lines()[k].capacity;
  return cap;
}

// Shared preamble: line expansion, storage and initial SoC variables.
void add_common_variables(PlanModel& m, const GridModel& grid, const PtdfMatrix* ptdf, const CycleProfile& profile,
                          const PlanConfig& cfg) {
  const bool peak = cfg.formulation == Formulation::PeakMin;
  m.config = cfg;
  m.formulation = cfg.formulation;
  m.num_slots = profile.num_slots();
  m.slot_hours = profile.slot_hours;
  m.limits_enforced = !cfg.relaxed_line_limits;
  m.line_limit = line_limits(grid, ptdf, profile, cfg);
  const bool expand = m.limits_enforced && !peak && !cfg.pinned_line_capacity;
  for (int k = 0; k < grid.num_lines(); ++k) {
    m.c.push_back(m.lp.add_variable("c[" + line_tag(grid, k) + "]", 0.0, expand ? lp::kInf : 0.0,
                                    expand ? alpha_of(grid, cfg, k) : 0.0));
  }
  for (int i = 0; i < grid.num_buses(); ++i) {
    m.S.push_back(m.lp.add_variable("S[" + bus_tag(grid, i) + "]", 0.0, lp::kInf,
                                    peak ? 1.0 : beta_of(grid, cfg, i)));
  }
  for (int i = 0; i < grid.num_buses(); ++i) {
    m.x0.push_back(m.lp.add_variable("x0[" + bus_tag(grid, i) + "]", 0.0, lp::kInf));
  }
}

// Delivered production and consumption. With `fixed` they equal the profile
// and no variables are created.
void add_delivery_variables(PlanModel& m, const GridModel& grid, const CycleProfile& profile, const PlanConfig& cfg,
                            bool fixed) {
  const int nb = grid.num_buses(), n = profile.num_slots();
  const double h = profile.slot_hours;
  m.p_plus.assign(static_cast<std::size_t>(nb * n), -1);
  m.p_minus.assign(static_cast<std::size_t>(nb * n), -1);
  if (fixed) return;
  const Eigen::MatrixXd prod = profile.production(), cons = profile.consumption();
  for (int i = 0; i < nb; ++i) {
    const double gp = gamma_plus_of(grid, cfg, i), gm = gamma_minus_of(grid, cfg, i);
    for (int t = 0; t < n; ++t) {
      const std::string at = "[" + bus_tag(grid, i) + "," + std::to_string(t + 1) + "]";
      if (prod(i, t) > 0.0) {
        m.p_plus[i * n + t] = m.lp.add_variable("pp" + at, 0.0, prod(i, t), -h * gp);
        m.objective_offset += h * gp * prod(i, t);
      }
      if (cons(i, t) > 0.0) {
        m.p_minus[i * n + t] = m.lp.add_variable("pm" + at, 0.0, cons(i, t), -h * gm);
        m.objective_offset += h * gm * cons(i, t);
      }
    }
  }
}

// Net delivered power p_plus - p_minus at (i, t) as an expression.
void add_delivered(Expr& e, const PlanModel& m, const CycleProfile& profile, int i, int t, double coef) {
  const int n = m.num_slots;
  e.add_or_const(m.p_plus[i * n + t], coef, std::max(0.0, profile.power(i, t)));
  e.add_or_const(m.p_minus[i * n + t], -coef, std::max(0.0, -profile.power(i, t)));
}

void require_balance(const CycleProfile& profile) {
  const double residual = profile.power.sum() * profile.slot_hours;
  const double scale = std::max(1.0, profile.power.cwiseAbs().maxCoeff() * profile.duration_hours());
  if (std::abs(residual) > 1e-9 * scale) {
    std::ostringstream os;
    os << "energy imbalance of " << residual << " MWh over the cycle; without curtailment or shedding "
       << "storage cannot return to its initial state";
    throw Error(ErrorKind::InfeasibleModel, os.str());
  }
}

// Flow-variable model shared by the reformulated, simplified and peak variants.
PlanModel build_flow_model(const GridModel& grid, const PtdfMatrix* ptdf, const CycleProfile& profile,
                           const PlanConfig& cfg, bool fixed_delivery) {
  check_dimensions(grid, profile);
  PlanModel m;
  add_common_variables(m, grid, ptdf, profile, cfg);
  add_delivery_variables(m, grid, profile, cfg, fixed_delivery);
  const int nb = grid.num_buses(), nl = grid.num_lines(), n = profile.num_slots();
  const double h = profile.slot_hours;
  auto& lpm = m.lp;

  m.f.resize(static_cast<std::size_t>(nl * n));
  m.F.resize(static_cast<std::size_t>(nl * n));
  for (int k = 0; k < nl; ++k) {
    for (int t = 0; t < n; ++t) {
      const std::string at = "[" + line_tag(grid, k) + "," + std::to_string(t + 1) + "]";
      m.f[k * n + t] = lpm.add_variable("f" + at, -lp::kInf, lp::kInf);
      m.F[k * n + t] = lpm.add_variable("F" + at, -lp::kInf, lp::kInf);
    }
  }
  const CumulativeSeries local = cumulative_energy(profile);
  m.E.assign(static_cast<std::size_t>(nb * n), -1);
  if (!fixed_delivery) {
    for (int i = 0; i < nb; ++i) {
      for (int t = 0; t < n; ++t) {
        m.E[i * n + t] = lpm.add_variable("E[" + bus_tag(grid, i) + "," + std::to_string(t + 1) + "]",
                                          -lp::kInf, lp::kInf);
      }
    }
  }

  // F[t] = F[t-1] + h f[t]
  for (int k = 0; k < nl; ++k) {
    for (int t = 0; t < n; ++t) {
      Expr e;
      e.add(m.F[k * n + t], 1.0);
      if (t > 0) e.add(m.F[k * n + t - 1], -1.0);
      e.add(m.f[k * n + t], -h);
      add_row(lpm, "Fdef[" + line_tag(grid, k) + "," + std::to_string(t + 1) + "]", e, Relation::Equal);
    }
  }
  // E[t] = E[t-1] + h (pp - pm)
  if (!fixed_delivery) {
    for (int i = 0; i < nb; ++i) {
      for (int t = 0; t < n; ++t) {
        Expr e;
        e.add(m.E[i * n + t], 1.0);
        if (t > 0) e.add(m.E[i * n + t - 1], -1.0);
        add_delivered(e, m, profile, i, t, -h);
        add_row(lpm, "Edef[" + bus_tag(grid, i) + "," + std::to_string(t + 1) + "]", e, Relation::Equal);
      }
    }
  }

  const Eigen::MatrixXd a = grid.incidence();
  // deviation_i[t] = E_i[t] - sum_k A_ik F_k[t]; the SoC is x0 + deviation.
  auto deviation = [&](int i, int t, double coef) {
    Expr e;
    e.add_or_const(m.E[i * n + t], coef, local.values(i, t));
    for (int k = 0; k < nl; ++k) {
      if (a(i, k) != 0.0) e.add(m.F[k * n + t], -coef * a(i, k));
    }
    return e;
  };

  for (int i = 0; i < nb; ++i) {
    const std::string bi = bus_tag(grid, i);
    for (int t = 0; t < n; ++t) {
      const std::string at = "[" + bi + "," + std::to_string(t + 1) + "]";
      Expr lo = deviation(i, t, 1.0);
      lo.add(m.x0[i], 1.0);
      add_row(lpm, "soc_lo" + at, lo, Relation::GreaterEqual);
      Expr hi = deviation(i, t, -1.0);
      hi.add(m.S[i], 1.0);
      hi.add(m.x0[i], -1.0);
      add_row(lpm, "soc_hi" + at, hi, Relation::GreaterEqual);
    }
    Expr init;
    init.add(m.S[i], 1.0);
    init.add(m.x0[i], -1.0);
    add_row(lpm, "soc_hi[" + bi + ",0]", init, Relation::GreaterEqual);
    add_row(lpm, "terminal[" + bi + "]", deviation(i, n - 1, 1.0), Relation::Equal);
  }

  if (!cfg.transport_model) {
    const auto loops = kvl_loops(grid);
    for (std::size_t r = 0; r < loops.size(); ++r) {
      for (int t = 0; t < n; ++t) {
        Expr e;
        for (auto [k, coef] : loops[r]) e.add(m.f[k * n + t], coef);
        add_row(lpm, "kvl[" + std::to_string(r + 1) + "," + std::to_string(t + 1) + "]", e, Relation::Equal);
      }
    }
  }

  if (m.limits_enforced) {
    for (int k = 0; k < nl; ++k) {
      for (int t = 0; t < n; ++t) {
        const std::string at = "[" + line_tag(grid, k) + "," + std::to_string(t + 1) + "]";
        lpm.add_constraint("fmax" + at, {{m.f[k * n + t], 1.0}, {m.c[k], -1.0}}, Relation::LessEqual,
                           m.line_limit[k]);
        lpm.add_constraint("fmin" + at, {{m.f[k * n + t], -1.0}, {m.c[k], -1.0}}, Relation::LessEqual,
                           m.line_limit[k]);
      }
    }
  }

  if (cfg.storage_power_duration) {
    const double rate = h / *cfg.storage_power_duration;
    for (int i = 0; i < nb; ++i) {
      for (int t = 0; t < n; ++t) {
        // x[t] - x[t-1] = h (delivered - A f[t])
        for (double sign : {1.0, -1.0}) {
          Expr e;
          add_delivered(e, m, profile, i, t, sign * h);
          for (int k = 0; k < nl; ++k) {
            if (a(i, k) != 0.0) e.add(m.f[k * n + t], -sign * h * a(i, k));
          }
          e.add(m.S[i], -rate);
          add_row(lpm, std::string(sign > 0 ? "charge" : "discharge") + "[" + bus_tag(grid, i) + "," +
                           std::to_string(t + 1) + "]",
                  e, Relation::LessEqual);
        }
      }
    }
  }
  return m;
}

}  // namespace

std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::Conventional: return "conventional";
    case Formulation::Reformulated: return "reformulated";
    case Formulation::Simplified: return "simplified";
    case Formulation::PeakMin: return "peakmin";
  }
  return "unknown";
}

Formulation parse_formulation(const std::string& name) {
  for (auto f : {Formulation::Conventional, Formulation::Reformulated, Formulation::Simplified,
                 Formulation::PeakMin}) {
    if (name == to_string(f)) return f;
  }
  throw Error(ErrorKind::InvalidInput, "unknown formulation '" + name + "'");
}

void validate(const PlanConfig& cfg) {
  if (cfg.peak_reduction_fraction) {
    if (cfg.formulation != Formulation::PeakMin) {
      throw Error(ErrorKind::InvalidInput, "peak reduction fraction is only valid with the peakmin formulation");
    }
    const double r = *cfg.peak_reduction_fraction;
    if (!(r >= 0.0 && r < 1.0)) throw Error(ErrorKind::InvalidInput, "peak reduction fraction must lie in [0, 1)");
  } else if (cfg.formulation == Formulation::PeakMin) {
    throw Error(ErrorKind::InvalidInput, "peakmin needs a peak reduction fraction");
  }
  if (cfg.storage_power_duration && !(*cfg.storage_power_duration > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "storage duration must be positive");
  }
  if (cfg.formulation == Formulation::PeakMin && cfg.relaxed_line_limits) {
    throw Error(ErrorKind::InvalidInput, "peakmin cannot relax line limits");
  }
  if (cfg.transport_model && cfg.formulation == Formulation::Conventional) {
    throw Error(ErrorKind::InvalidInput, "the transport model applies to flow-variable formulations only");
  }
  for (const auto& v : {cfg.costs.alpha, cfg.costs.beta, cfg.costs.gamma_plus, cfg.costs.gamma_minus}) {
    if (v && !(*v >= 0.0)) throw Error(ErrorKind::InvalidInput, "cost overrides must be nonnegative");
  }
  if (cfg.pinned_line_capacity && (cfg.pinned_line_capacity->array() < 0.0).any()) {
    throw Error(ErrorKind::InvalidInput, "pinned line capacities must be nonnegative");
  }
}

PlanModel build_conventional(const GridModel& grid, const PtdfMatrix& ptdf, const CycleProfile& profile,
                             const PlanConfig& config) {
  PlanConfig cfg = config;
  cfg.formulation = Formulation::Conventional;
  validate(cfg);
  check_dimensions(grid, profile);
  if (ptdf.num_buses() != grid.num_buses() || ptdf.num_lines() != grid.num_lines()) {
    throw Error(ErrorKind::DimensionMismatch, "PTDF does not match the grid");
  }
  PlanModel m;
  add_common_variables(m, grid, &ptdf, profile, cfg);
  add_delivery_variables(m, grid, profile, cfg, false);
  const int nb = grid.num_buses(), nl = grid.num_lines(), n = profile.num_slots();
  const double h = profile.slot_hours;
  auto& lpm = m.lp;

  m.x.resize(static_cast<std::size_t>(nb * n));
  for (int i = 0; i < nb; ++i) {
    for (int t = 0; t < n; ++t) {
      m.x[i * n + t] = lpm.add_variable("x[" + bus_tag(grid, i) + "," + std::to_string(t + 1) + "]", 0.0, lp::kInf);
    }
  }
  auto soc = [&](int i, int t) { return t < 0 ? m.x0[i] : m.x[i * n + t]; };

  // Net injection into the network: delivered power plus storage discharge.
  auto injection = [&](int i, int t, double coef) {
    Expr e;
    add_delivered(e, m, profile, i, t, coef);
    e.add(soc(i, t - 1), coef / h);
    e.add(soc(i, t), -coef / h);
    return e;
  };

  for (int t = 0; t < n; ++t) {
    Expr bal;
    for (int i = 0; i < nb; ++i) {
      Expr q = injection(i, t, 1.0);
      bal.terms.insert(bal.terms.end(), q.terms.begin(), q.terms.end());
      bal.constant += q.constant;
    }
    add_row(lpm, "balance[" + std::to_string(t + 1) + "]", bal, Relation::Equal);
  }

  if (m.limits_enforced) {
    for (int k = 0; k < nl; ++k) {
      for (int t = 0; t < n; ++t) {
        Expr flow;
        for (int i = 0; i < nb; ++i) {
          const double hk = ptdf.entries(k, i);
          if (std::abs(hk) < 1e-14) continue;
          Expr q = injection(i, t, hk);
          flow.terms.insert(flow.terms.end(), q.terms.begin(), q.terms.end());
          flow.constant += q.constant;
        }
        const std::string at = "[" + line_tag(grid, k) + "," + std::to_string(t + 1) + "]";
        Expr up = flow;
        up.add(m.c[k], -1.0);
        up.constant -= m.line_limit[k];
        add_row(lpm, "fmax" + at, up, Relation::LessEqual);
        Expr down;
        for (const auto& term : flow.terms) down.add(term.var, -term.coef);
        down.constant = -flow.constant - m.line_limit[k];
        down.add(m.c[k], -1.0);
        add_row(lpm, "fmin" + at, down, Relation::LessEqual);
      }
    }
  }

  for (int i = 0; i < nb; ++i) {
    const std::string bi = bus_tag(grid, i);
    for (int t = -1; t < n; ++t) {
      lpm.add_constraint("soc_hi[" + bi + "," + std::to_string(t + 1) + "]", {{soc(i, t), 1.0}, {m.S[i], -1.0}},
                         Relation::LessEqual, 0.0);
    }
    lpm.add_constraint("cycle[" + bi + "]", {{m.x0[i], 1.0}, {m.x[i * n + n - 1], -1.0}}, Relation::Equal, 0.0);
    if (cfg.storage_power_duration) {
      const double rate = h / *cfg.storage_power_duration;
      for (int t = 0; t < n; ++t) {
        const std::string at = "[" + bi + "," + std::to_string(t + 1) + "]";
        lpm.add_constraint("charge" + at, {{soc(i, t), 1.0}, {soc(i, t - 1), -1.0}, {m.S[i], -rate}},
                           Relation::LessEqual, 0.0);
        lpm.add_constraint("discharge" + at, {{soc(i, t), -1.0}, {soc(i, t - 1), 1.0}, {m.S[i], -rate}},
                           Relation::LessEqual, 0.0);
      }
    }
  }
  return m;
}

PlanModel build_reformulated(const GridModel& grid, const CycleProfile& profile, const PlanConfig& config) {
  PlanConfig cfg = config;
  cfg.formulation = Formulation::Reformulated;
  validate(cfg);
  return build_flow_model(grid, nullptr, profile, cfg, false);
}

PlanModel build_simplified(const GridModel& grid, const CycleProfile& profile, const PlanConfig& config) {
  PlanConfig cfg = config;
  cfg.formulation = Formulation::Simplified;
  validate(cfg);
  check_dimensions(grid, profile);
  require_balance(profile);
  return build_flow_model(grid, nullptr, profile, cfg, true);
}

PlanModel build_peak_reduction(const GridModel& grid, const PtdfMatrix& ptdf, const CycleProfile& profile,
                               const PlanConfig& config) {
  PlanConfig cfg = config;
  cfg.formulation = Formulation::PeakMin;
  cfg.pinned_line_capacity.reset();
  validate(cfg);
  check_dimensions(grid, profile);
  require_balance(profile);
  return build_flow_model(grid, &ptdf, profile, cfg, true);
}

PlanModel build_plan_model(const GridModel& grid, const PtdfMatrix& ptdf, const CycleProfile& profile,
                           const PlanConfig& config) {
  switch (config.formulation) {
    case Formulation::Conventional: return build_conventional(grid, ptdf, profile, config);
    case Formulation::Reformulated: return build_reformulated(grid, profile, config);
    case Formulation::Simplified: return build_simplified(grid, profile, config);
    case Formulation::PeakMin: return build_peak_reduction(grid, ptdf, profile, config);
  }
  throw Error(ErrorKind::InvalidInput, "unknown formulation");
}

namespace {

double value(const std::vector<double>& x, int var, double fallback) {
  return var >= 0 ? x[static_cast<std::size_t>(var)] : fallback;
}

double recheck_tolerance(const CycleProfile& profile) {
  return 1e-6 * std::max(1.0, profile.power.cwiseAbs().maxCoeff());
}

}  // namespace

PlanSolution extract_plan(const PlanModel& m, const lp::Solution& raw, const GridModel& grid,
                          const PtdfMatrix& ptdf, const CycleProfile& profile) {
  if (raw.status == lp::Status::Infeasible) throw Error(ErrorKind::InfeasibleModel, "planning LP is infeasible");
  if (raw.status == lp::Status::Unbounded) throw Error(ErrorKind::UnboundedModel, "planning LP is unbounded");
  if (raw.x.size() != m.lp.num_variables()) {
    throw Error(ErrorKind::SolutionInconsistency, "solution vector does not match the model");
  }
  const double tol = recheck_tolerance(profile);
  const double raw_violation = m.lp.max_violation(raw.x);
  if (raw_violation > tol) {
    throw Error(ErrorKind::SolutionInconsistency,
                "solution violates " + m.lp.worst_violation(raw.x) + " by " + std::to_string(raw_violation));
  }

  const int nb = grid.num_buses(), nl = grid.num_lines(), n = m.num_slots;
  const double h = m.slot_hours;
  const auto& x = raw.x;
  const auto& cfg = m.config;
  PlanSolution s;
  s.formulation = m.formulation;
  s.status = raw.status;
  s.lp_objective = raw.objective + m.objective_offset;
  s.iterations = raw.iterations;
  s.duals = raw.duals;

  const Eigen::MatrixXd prod = profile.production(), cons = profile.consumption();
  s.delivered_production.resize(nb, n);
  s.delivered_consumption.resize(nb, n);
  for (int i = 0; i < nb; ++i) {
    for (int t = 0; t < n; ++t) {
      s.delivered_production(i, t) = std::clamp(value(x, m.p_plus[i * n + t], prod(i, t)), 0.0, prod(i, t));
      s.delivered_consumption(i, t) = std::clamp(value(x, m.p_minus[i * n + t], cons(i, t)), 0.0, cons(i, t));
    }
  }
  const Eigen::MatrixXd delivered = s.delivered_production - s.delivered_consumption;

  s.line_expansion.resize(nl);
  s.line_capacity.resize(nl);
  for (int k = 0; k < nl; ++k) {
    s.line_expansion[k] = std::max(0.0, x[static_cast<std::size_t>(m.c[k])]);
    s.line_capacity[k] = m.limits_enforced ? m.line_limit[k] + s.line_expansion[k] : lp::kInf;
  }

  Eigen::MatrixXd trajectory(nb, n + 1);  // column 0 is x[0]
  if (m.formulation == Formulation::Conventional) {
    for (int i = 0; i < nb; ++i) {
      trajectory(i, 0) = x[static_cast<std::size_t>(m.x0[i])];
      for (int t = 0; t < n; ++t) trajectory(i, t + 1) = x[static_cast<std::size_t>(m.x[i * n + t])];
    }
    Eigen::MatrixXd q = delivered;
    for (int t = 0; t < n; ++t) q.col(t) += (trajectory.col(t) - trajectory.col(t + 1)) / h;
    s.flows = flows_from_injections(ptdf, q);
    for (int i = 0; i < nb; ++i) {
      const double lo = trajectory.row(i).minCoeff();
      trajectory.row(i).array() -= lo;
    }
  } else {
    s.flows.resize(nl, n);
    for (int k = 0; k < nl; ++k) {
      for (int t = 0; t < n; ++t) s.flows(k, t) = x[static_cast<std::size_t>(m.f[k * n + t])];
    }
    const CumulativeSeries net = net_cumulative_energy(profile, s.delivered_production, s.delivered_consumption);
    const auto req = min_storage_given_flows(grid, net, make_flow_series(s.flows, h, FlowTag::WithStorage));
    trajectory.col(0) = req.initial_soc;
    trajectory.rightCols(n) = req.trajectory;
  }

  s.initial_soc = trajectory.col(0);
  s.soc = trajectory.rightCols(n);
  s.storage_capacity = trajectory.rowwise().maxCoeff();
  if (cfg.storage_power_duration) {
    for (int i = 0; i < nb; ++i) {
      double step = 0.0;
      for (int t = 0; t < n; ++t) step = std::max(step, std::abs(trajectory(i, t + 1) - trajectory(i, t)));
      s.storage_capacity[i] = std::max(s.storage_capacity[i], step * *cfg.storage_power_duration / h);
    }
  }

  s.curtailment_by_bus = h * (prod - s.delivered_production).rowwise().sum();
  s.shedding_by_bus = h * (cons - s.delivered_consumption).rowwise().sum();
  s.curtailment_mwh = s.curtailment_by_bus.sum();
  s.shedding_mwh = s.shedding_by_bus.sum();
  if (m.formulation == Formulation::PeakMin) {
    s.objective = s.storage_capacity.sum();
  } else {
    double obj = 0.0;
    for (int k = 0; k < nl; ++k) obj += alpha_of(grid, cfg, k) * s.line_expansion[k];
    for (int i = 0; i < nb; ++i) {
      obj += beta_of(grid, cfg, i) * s.storage_capacity[i];
      obj += h * gamma_plus_of(grid, cfg, i) * (prod.row(i) - s.delivered_production.row(i)).sum();
      obj += h * gamma_minus_of(grid, cfg, i) * (cons.row(i) - s.delivered_consumption.row(i)).sum();
    }
    s.objective = obj;
  }

  const CumulativeSeries net = net_cumulative_energy(profile, s.delivered_production, s.delivered_consumption);
  s.soc_balance = verify_soc_balance(grid, make_flow_series(s.flows, h, FlowTag::WithStorage),
                                     original_flows(ptdf, profile), net);
  s.recheck_violation = plan_violation(s, cfg, grid, ptdf, profile);
  if (s.recheck_violation > tol) {
    throw Error(ErrorKind::SolutionInconsistency,
                "extracted plan violates a planning constraint by " + std::to_string(s.recheck_violation));
  }
  return s;
}

double plan_violation(const PlanSolution& s, const PlanConfig& cfg, const GridModel& grid, const PtdfMatrix& ptdf,
                      const CycleProfile& profile) {
  const int nb = grid.num_buses(), nl = grid.num_lines(), n = profile.num_slots();
  const double h = profile.slot_hours;
  const Eigen::MatrixXd prod = profile.production(), cons = profile.consumption();
  double worst = 0.0;
  auto over = [&worst](double v) { worst = std::max(worst, v); };

  for (int i = 0; i < nb; ++i) {
    for (int t = 0; t < n; ++t) {
      over(-s.delivered_production(i, t));
      over(s.delivered_production(i, t) - prod(i, t));
      over(-s.delivered_consumption(i, t));
      over(s.delivered_consumption(i, t) - cons(i, t));
      if (cfg.formulation == Formulation::Simplified || cfg.formulation == Formulation::PeakMin) {
        over(std::abs(s.delivered_production(i, t) - prod(i, t)));
        over(std::abs(s.delivered_consumption(i, t) - cons(i, t)));
      }
    }
  }

  over(-s.line_expansion.minCoeff());
  if (!cfg.relaxed_line_limits) {
    const Eigen::VectorXd limit = line_limits(grid, &ptdf, profile, cfg);
    for (int k = 0; k < nl; ++k) {
      over(s.flows.row(k).cwiseAbs().maxCoeff() - limit[k] - s.line_expansion[k]);
    }
  }

  const Eigen::MatrixXd a = grid.incidence();
  const Eigen::MatrixXd outflow = a * s.flows;
  if (!cfg.transport_model) {
    // Flows must be the DC power flow of the injections they deliver.
    over((s.flows - ptdf.entries * outflow).cwiseAbs().maxCoeff());
  }

  for (int i = 0; i < nb; ++i) {
    double prev = s.initial_soc[i];
    over(-prev);
    over(prev - s.storage_capacity[i]);
    for (int t = 0; t < n; ++t) {
      const double cur = s.soc(i, t);
      const double expected = prev + h * (s.delivered_production(i, t) - s.delivered_consumption(i, t) - outflow(i, t));
      over(std::abs(cur - expected));
      over(-cur);
      over(cur - s.storage_capacity[i]);
      if (cfg.storage_power_duration) over(std::abs(cur - prev) - h * s.storage_capacity[i] / *cfg.storage_power_duration);
      prev = cur;
    }
    over(std::abs(s.soc(i, n - 1) - s.initial_soc[i]));
  }
  return worst;
}

PlanSolution solve_plan(const GridModel& grid, const PtdfMatrix& ptdf, const CycleProfile& profile,
                        const PlanConfig& config, const lp::SolverOptions& options) {
  const PlanModel model = build_plan_model(grid, ptdf, profile, config);
  const lp::Solution raw = lp::solve(model.lp, options);
  if (raw.status == lp::Status::Infeasible) {
    std::ostringstream os;
    os << to_string(config.formulation) << " LP is infeasible";
    if (model.limits_enforced && (config.formulation == Formulation::Simplified ||
                                  config.formulation == Formulation::PeakMin)) {
      // Each line must carry its net cycle energy within the cycle.
      const FlowSeries orig = original_flows(ptdf, profile);
      const Eigen::VectorXd need = net_transfer_capacity(orig);
      const Eigen::VectorXd mean_abs = min_line_capacity(orig);
      bool named = false;
      for (int k = 0; k < grid.num_lines(); ++k) {
        const double cap = model.line_limit[k] + (model.lp.variables()[model.c[k]].upper);
        if (cap < need[k] - 1e-9 * (1.0 + need[k])) {
          os << (named ? "; " : ": ") << "line " << grid.lines()[k].id << " limit " << model.line_limit[k]
             << " MW is below its minimum capacity " << mean_abs[k] << " MW";
          named = true;
        }
      }
    }
    throw Error(ErrorKind::InfeasibleModel, os.str());
  }
  return extract_plan(model, raw, grid, ptdf, profile);
}

PlanSolution min_storage_for_peak_reduction(const GridModel& grid, const PtdfMatrix& ptdf,
                                            const CycleProfile& profile, double reduction, const PlanConfig& base) {
  PlanConfig cfg = base;
  cfg.formulation = Formulation::PeakMin;
  cfg.peak_reduction_fraction = reduction;
  return solve_plan(grid, ptdf, profile, cfg);
}

std::vector<double> sample_range(double lo, double hi, int n) {
  if (n <= 1 || lo == hi) return {lo};
  std::vector<double> v(static_cast<std::size_t>(n));
  const bool geometric = lo > 0.0 && hi > 0.0;
  for (int s = 0; s < n; ++s) {
    const double u = static_cast<double>(s) / (n - 1);
    v[static_cast<std::size_t>(s)] = geometric ? lo * std::pow(hi / lo, u) : lo + (hi - lo) * u;
  }
  v.back() = hi;
  return v;
}

std::vector<SweepPoint> sweep_tradeoff(const GridModel& grid, const PtdfMatrix& ptdf, const CycleProfile& profile,
                                       const std::vector<double>& alphas, const std::vector<double>& betas,
                                       const PlanConfig& base, int jobs) {
  std::vector<SweepPoint> out(alphas.size() * betas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    for (std::size_t b = 0; b < betas.size(); ++b) {
      auto& p = out[a * betas.size() + b];
      p.alpha = alphas[a];
      p.beta = betas[b];
      p.ratio = alphas[a] != 0.0 ? betas[b] / alphas[a] : lp::kInf;
    }
  }

  detail::parallel_for(out.size(), jobs, [&](std::size_t j) {
    auto& p = out[j];
    PlanConfig cfg = base;
    cfg.costs.alpha = p.alpha;
    cfg.costs.beta = p.beta;
    try {
      const auto sol = solve_plan(grid, ptdf, profile, cfg);
      p.total_line_expansion = sol.line_expansion.sum();
      p.total_storage = sol.storage_capacity.sum();
      p.objective = sol.objective;
      p.ok = true;
      p.status = "optimal";
    } catch (const Error& e) {
      p.status = e.what();
    }
  });
  return out;
}

}  // namespace tvs
