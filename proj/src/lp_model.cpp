#include "tvs/error.hpp"
#include "tvs/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tvs::lp {

int Model::add_variable(std::string name, double lower, double upper, double cost) {
  vars_.push_back(Variable{std::move(name), lower, upper, cost});
  return static_cast<int>(vars_.size()) - 1;
}

int Model::add_constraint(std::string name, std::vector<Term> terms, Relation relation,
                          double rhs) {
  rows_.push_back(Constraint{std::move(name), std::move(terms), relation, rhs});
  return static_cast<int>(rows_.size()) - 1;
}

void Model::set_bounds(int var, double lower, double upper) {
  auto& v = vars_.at(static_cast<std::size_t>(var));
  v.lower = lower;
  v.upper = upper;
}

void Model::validate() const {
  for (const auto& v : vars_) {
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper) {
      throw Error(ErrorKind::InvalidInput, "variable '" + v.name + "' has lower > upper");
    }
    if (!std::isfinite(v.cost)) {
      throw Error(ErrorKind::InvalidInput, "variable '" + v.name + "' has a non-finite cost");
    }
  }
  const auto n = static_cast<int>(vars_.size());
  for (const auto& row : rows_) {
    for (const auto& t : row.terms) {
      if (t.var < 0 || t.var >= n) {
        throw Error(ErrorKind::InvalidInput,
                    "constraint '" + row.name + "' references undeclared variable " +
                        std::to_string(t.var));
      }
      if (!std::isfinite(t.coef)) {
        throw Error(ErrorKind::InvalidInput, "constraint '" + row.name + "' has a non-finite coefficient");
      }
    }
    if (!std::isfinite(row.rhs)) {
      throw Error(ErrorKind::InvalidInput, "constraint '" + row.name + "' has a non-finite rhs");
    }
  }
}

double Model::objective_value(std::span<const double> x) const {
  double obj = 0.0;
  for (std::size_t j = 0; j < vars_.size(); ++j) obj += vars_[j].cost * x[j];
  return obj;
}

namespace {

struct Violation {
  double amount = 0.0;
  std::string where;
};

Violation find_worst(const Model& model, std::span<const double> x) {
  Violation worst;
  const auto& vars = model.variables();
  for (std::size_t j = 0; j < vars.size(); ++j) {
    double v = std::max(vars[j].lower - x[j], x[j] - vars[j].upper);
    if (v > worst.amount) worst = {v, "bound of " + vars[j].name};
  }
  for (const auto& row : model.constraints()) {
    double act = 0.0;
    for (const auto& t : row.terms) act += t.coef * x[static_cast<std::size_t>(t.var)];
    double v = 0.0;
    switch (row.relation) {
      case Relation::LessEqual: v = act - row.rhs; break;
      case Relation::GreaterEqual: v = row.rhs - act; break;
      case Relation::Equal: v = std::abs(act - row.rhs); break;
    }
    if (v > worst.amount) worst = {v, row.name};
  }
  return worst;
}

}  // namespace

double Model::max_violation(std::span<const double> x) const { return find_worst(*this, x).amount; }

std::string Model::worst_violation(std::span<const double> x) const {
  auto w = find_worst(*this, x);
  if (w.amount <= 0.0) return {};
  std::ostringstream os;
  os << w.where << " violated by " << w.amount;
  return os.str();
}

std::string to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
  }
  return "unknown";
}

}  // namespace tvs::lp
