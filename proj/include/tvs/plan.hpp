#pragma once

// Planning linear programs: joint line expansion and storage sizing.

#include "tvs/grid.hpp"
#include "tvs/limits.hpp"
#include "tvs/lp.hpp"
#include "tvs/profiles.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace tvs {

enum class Formulation {
  Conventional,  // SoC variables per slot, flows through the PTDF
  Reformulated,  // flow and cumulative-energy variables, SoC eliminated
  Simplified,    // reformulated with delivered power fixed to the profile
  PeakMin,       // minimise total storage under reduced fixed line limits
};

std::string to_string(Formulation f);
/// Accepts conventional, reformulated, simplified, peakmin. Throws InvalidInput.
Formulation parse_formulation(const std::string& name);

/// Uniform replacements for the per-line / per-bus costs in the grid.
struct CostOverrides {
  std::optional<double> alpha;        // $/MW line expansion
  std::optional<double> beta;         // $/MWh storage
  std::optional<double> gamma_plus;   // $/MWh curtailment
  std::optional<double> gamma_minus;  // $/MWh shedding
};

struct PlanConfig {
  Formulation formulation = Formulation::Simplified;
  std::optional<double> storage_power_duration;   // hours; caps |dx|/h at S/duration
  std::optional<double> peak_reduction_fraction;  // PeakMin only, in [0, 1)
  bool relaxed_line_limits = false;               // drop flow limits, no expansion
  bool transport_model = false;                   // flow conservation only, no loop physics
  CostOverrides costs;
  /// Total capacity C + c fixed per line (MW); expansion is not optimised.
  std::optional<Eigen::VectorXd> pinned_line_capacity;
};

/// Throws InvalidInput for inconsistent settings.
void validate(const PlanConfig& config);

/// An LP together with the variable layout needed to read a solution back.
/// Per-slot variables are stored row-major: index [i * N + t]; -1 marks a
/// quantity that is a constant rather than a variable.
struct PlanModel {
  lp::Model lp;
  Formulation formulation = Formulation::Simplified;
  PlanConfig config;
  int num_slots = 0;
  double slot_hours = 1.0;
  double objective_offset = 0.0;  // constant part of the objective, $
  bool limits_enforced = true;
  Eigen::VectorXd line_limit;     // existing capacity used in the flow rows, MW

  std::vector<int> c, S, x0;              // per line / per bus
  std::vector<int> x;                     // B*N, conventional only
  std::vector<int> p_plus, p_minus;       // B*N delivered production / consumption
  std::vector<int> f, F, E;               // L*N, L*N, B*N; flow-based formulations
};

PlanModel build_conventional(const GridModel& grid, const PtdfMatrix& ptdf, const CycleProfile& profile,
                             const PlanConfig& config);
PlanModel build_reformulated(const GridModel& grid, const CycleProfile& profile, const PlanConfig& config);
/// Throws InfeasibleModel if the cycle is not energy balanced.
PlanModel build_simplified(const GridModel& grid, const CycleProfile& profile, const PlanConfig& config);
/// Requires config.peak_reduction_fraction. Throws InfeasibleModel on imbalance.
PlanModel build_peak_reduction(const GridModel& grid, const PtdfMatrix& ptdf, const CycleProfile& profile,
                               const PlanConfig& config);

/// Dispatches on config.formulation.
PlanModel build_plan_model(const GridModel& grid, const PtdfMatrix& ptdf, const CycleProfile& profile,
                           const PlanConfig& config);

struct PlanSolution {
  Formulation formulation = Formulation::Simplified;
  lp::Status status = lp::Status::Optimal;
  Eigen::VectorXd line_expansion;        // c, MW
  Eigen::VectorXd line_capacity;         // enforced limit + c, MW (infinite when relaxed)
  Eigen::VectorXd storage_capacity;      // S, MWh, tightened
  Eigen::VectorXd initial_soc;           // x[0], MWh
  Eigen::MatrixXd soc;                   // B x N, x after each slot
  Eigen::MatrixXd flows;                 // L x N, MW
  Eigen::MatrixXd delivered_production;  // B x N, MW
  Eigen::MatrixXd delivered_consumption; // B x N, MW
  double objective = 0.0;                // evaluated at the tightened plan, $
  double lp_objective = 0.0;             // as solved, $
  double curtailment_mwh = 0.0;
  double shedding_mwh = 0.0;
  Eigen::VectorXd curtailment_by_bus;  // MWh
  Eigen::VectorXd shedding_by_bus;     // MWh
  SocBalanceCheck soc_balance;
  double recheck_violation = 0.0;
  long iterations = 0;
  std::vector<double> duals;
};

/// Reads a solved model back into physical quantities, tightens storage to
/// the range of its SoC trajectory and rechecks every planning constraint independently.
/// Throws InfeasibleModel / UnboundedModel for non-optimal status and
/// SolutionInconsistency if the recheck fails.
PlanSolution extract_plan(const PlanModel& model, const lp::Solution& raw, const GridModel& grid,
                          const PtdfMatrix& ptdf, const CycleProfile& profile);

/// Largest violation of the planning constraints by a solution, evaluated
/// from physical quantities only (MW / MWh).
double plan_violation(const PlanSolution& plan, const PlanConfig& config, const GridModel& grid,
                      const PtdfMatrix& ptdf, const CycleProfile& profile);

/// Build, solve and extract. Infeasibility messages name the lines or the
/// energy imbalance responsible when that can be detected.
PlanSolution solve_plan(const GridModel& grid, const PtdfMatrix& ptdf, const CycleProfile& profile,
                        const PlanConfig& config, const lp::SolverOptions& options = {});

PlanSolution min_storage_for_peak_reduction(const GridModel& grid, const PtdfMatrix& ptdf,
                                            const CycleProfile& profile, double reduction,
                                            const PlanConfig& base = {});

struct SweepPoint {
  double alpha = 0.0;
  double beta = 0.0;
  double ratio = 0.0;  // beta / alpha
  double total_line_expansion = 0.0;
  double total_storage = 0.0;
  double objective = 0.0;
  bool ok = false;
  std::string status;  // "optimal" or the error message
};

/// n values from lo to hi, geometrically spaced when both are positive.
std::vector<double> sample_range(double lo, double hi, int n);

/// One uniform-cost solve per (alpha, beta) pair, alpha-major. Failed points
/// are marked and the sweep continues. `jobs` caps worker threads.
std::vector<SweepPoint> sweep_tradeoff(const GridModel& grid, const PtdfMatrix& ptdf, const CycleProfile& profile,
                                       const std::vector<double>& alphas, const std::vector<double>& betas,
                                       const PlanConfig& base = {}, int jobs = 1);

}  // namespace tvs
