#pragma once

// Sparse linear programs and a bounded-variable revised simplex solver.

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace tvs::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Term {
  int var;
  double coef;
};

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  double cost = 0.0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

/// A linear program in the form min c'x s.t. rows {<=,=,>=} rhs, lower <= x <= upper.
class Model {
 public:
  int add_variable(std::string name, double lower, double upper, double cost = 0.0);
  int add_constraint(std::string name, std::vector<Term> terms, Relation relation, double rhs);

  void set_cost(int var, double cost) { vars_.at(static_cast<std::size_t>(var)).cost = cost; }
  void set_bounds(int var, double lower, double upper);

  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }
  std::size_t num_variables() const { return vars_.size(); }
  std::size_t num_constraints() const { return rows_.size(); }

  /// Throws InvalidInput on a dangling variable reference or lower > upper.
  void validate() const;

  double objective_value(std::span<const double> x) const;

  /// Largest absolute violation of any row or bound at x (natural units).
  double max_violation(std::span<const double> x) const;

  /// Name of the row or bound with the largest violation, for diagnostics.
  std::string worst_violation(std::span<const double> x) const;

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
};

enum class Status { Optimal, Infeasible, Unbounded };

std::string to_string(Status status);

struct SolverOptions {
  double primal_tolerance = 1e-9;
  double dual_tolerance = 1e-11;  // applied to the cost vector normalised to max |c| = 1
  double pivot_tolerance = 1e-9;
  int refactor_interval = 64;
  long max_iterations = 500000;
};

struct Solution {
  Status status = Status::Infeasible;
  std::vector<double> x;
  std::vector<double> duals;  // d objective / d rhs, one per constraint
  double objective = 0.0;
  double primal_residual = 0.0;
  long iterations = 0;
};

/// Solves the model with a two-phase bounded revised simplex. Throws
/// NumericalBreakdown if the basis cannot be factorised or the final point
/// fails the residual recheck.
Solution solve(const Model& model, const SolverOptions& options = {});

}  // namespace tvs::lp
