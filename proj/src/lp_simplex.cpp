// Two-phase bounded-variable revised simplex.
//
// Every row gets a slack with bounds encoding its relation (a'x + s = b), so
// the slack block is an identity. Rows whose slack cannot start feasible get
// an artificial column; phase 1 minimises the artificial sum. The basis is
// held as a sparse LU factorisation plus a product-form eta file that is
// rebuilt every `refactor_interval` pivots. Pricing is Dantzig with a
// Bland fallback on stalls; the ratio test is the two-pass Harris variant
// with bound flipping.

#include "tvs/error.hpp"
#include "tvs/lp.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tvs::lp {
namespace {

enum class VarState : unsigned char { Basic, AtLower, AtUpper, FreeZero };

struct Eta {
  int row;
  double pivot;
  std::vector<int> idx;
  std::vector<double> val;
};

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

class Simplex {
 public:
  Simplex(const Model& model, const SolverOptions& opt) : model_(model), opt_(opt) { setup(); }

  Solution run();

 private:
  enum class Outcome { Optimal, Unbounded };

  void setup();
  void refactor();
  void recompute_basics();
  void ftran(Eigen::VectorXd& v) const;
  void btran(Eigen::VectorXd& v) const;
  Outcome iterate(const std::vector<double>& cost);
  double phase_objective(const std::vector<double>& cost) const;
  bool is_fixed(int j) const { return lower_[j] == upper_[j]; }
  [[noreturn]] void breakdown(const std::string& what) const;

  const Model& model_;
  SolverOptions opt_;
  int n_struct_ = 0;
  int m_ = 0;
  int n_total_ = 0;
  int first_artificial_ = 0;
  SpMat a_;
  std::vector<double> b_;
  std::vector<double> lower_, upper_, x_;
  std::vector<VarState> state_;
  std::vector<int> head_;
  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  long iterations_ = 0;
  Eigen::VectorXd last_duals_;
};

void Simplex::breakdown(const std::string& what) const {
  std::ostringstream os;
  os << what << " (iteration " << iterations_ << ", " << etas_.size()
     << " eta updates since last factorisation, " << m_ << " rows)";
  throw Error(ErrorKind::NumericalBreakdown, os.str());
}

void Simplex::setup() {
  model_.validate();
  const auto& vars = model_.variables();
  const auto& rows = model_.constraints();
  n_struct_ = static_cast<int>(vars.size());
  m_ = static_cast<int>(rows.size());

  lower_.resize(static_cast<std::size_t>(n_struct_));
  upper_.resize(lower_.size());
  x_.resize(lower_.size());
  state_.resize(lower_.size());
  for (int j = 0; j < n_struct_; ++j) {
    lower_[j] = vars[j].lower;
    upper_[j] = vars[j].upper;
    if (std::isfinite(lower_[j])) {
      x_[j] = lower_[j];
      state_[j] = VarState::AtLower;
    } else if (std::isfinite(upper_[j])) {
      x_[j] = upper_[j];
      state_[j] = VarState::AtUpper;
    } else {
      x_[j] = 0.0;
      state_[j] = VarState::FreeZero;
    }
  }

  std::vector<Eigen::Triplet<double, int>> trip;
  std::vector<double> residual(static_cast<std::size_t>(m_));
  b_.resize(static_cast<std::size_t>(m_));
  for (int i = 0; i < m_; ++i) {
    double act = 0.0;
    for (const auto& t : rows[i].terms) {
      if (t.coef == 0.0) continue;
      trip.emplace_back(i, t.var, t.coef);
      act += t.coef * x_[t.var];
    }
    b_[i] = rows[i].rhs;
    residual[i] = rows[i].rhs - act;
  }

  // Slacks.
  head_.assign(static_cast<std::size_t>(m_), -1);
  for (int i = 0; i < m_; ++i) {
    const int j = n_struct_ + i;
    trip.emplace_back(i, j, 1.0);
    double lo = 0.0, hi = 0.0;
    switch (rows[i].relation) {
      case Relation::LessEqual: lo = 0.0; hi = kInf; break;
      case Relation::GreaterEqual: lo = -kInf; hi = 0.0; break;
      case Relation::Equal: lo = 0.0; hi = 0.0; break;
    }
    lower_.push_back(lo);
    upper_.push_back(hi);
    const double r = residual[i];
    if (r >= lo - opt_.primal_tolerance && r <= hi + opt_.primal_tolerance) {
      x_.push_back(r);
      state_.push_back(VarState::Basic);
      head_[i] = j;
    } else {
      x_.push_back(0.0);
      state_.push_back(rows[i].relation == Relation::GreaterEqual ? VarState::AtUpper
                                                                  : VarState::AtLower);
    }
  }

  // Artificials for rows whose slack starts infeasible.
  first_artificial_ = n_struct_ + m_;
  int j = first_artificial_;
  for (int i = 0; i < m_; ++i) {
    if (head_[i] >= 0) continue;
    const double r = residual[i];
    trip.emplace_back(i, j, r >= 0.0 ? 1.0 : -1.0);
    lower_.push_back(0.0);
    upper_.push_back(kInf);
    x_.push_back(std::abs(r));
    state_.push_back(VarState::Basic);
    head_[i] = j;
    ++j;
  }
  n_total_ = j;
  a_.resize(m_, n_total_);
  a_.setFromTriplets(trip.begin(), trip.end());
  a_.makeCompressed();
}

void Simplex::refactor() {
  etas_.clear();
  if (m_ == 0) return;
  std::vector<Eigen::Triplet<double, int>> trip;
  for (int k = 0; k < m_; ++k) {
    for (SpMat::InnerIterator it(a_, head_[k]); it; ++it) trip.emplace_back(it.row(), k, it.value());
  }
  SpMat basis(m_, m_);
  basis.setFromTriplets(trip.begin(), trip.end());
  basis.makeCompressed();
  lu_.analyzePattern(basis);
  lu_.factorize(basis);
  if (lu_.info() != Eigen::Success) breakdown("basis factorisation failed: " + lu_.lastErrorMessage());
}

void Simplex::ftran(Eigen::VectorXd& v) const {
  if (m_ == 0) return;
  v = lu_.solve(v);
  for (const auto& e : etas_) {
    const double dr = v[e.row] / e.pivot;
    v[e.row] = dr;
    if (dr == 0.0) continue;
    for (std::size_t k = 0; k < e.idx.size(); ++k) v[e.idx[k]] -= e.val[k] * dr;
  }
}

void Simplex::btran(Eigen::VectorXd& v) const {
  if (m_ == 0) return;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = v[it->row];
    for (std::size_t k = 0; k < it->idx.size(); ++k) s -= it->val[k] * v[it->idx[k]];
    v[it->row] = s / it->pivot;
  }
  v = lu_.transpose().solve(v);
}

void Simplex::recompute_basics() {
  if (m_ == 0) return;
  Eigen::VectorXd rhs(m_);
  for (int i = 0; i < m_; ++i) rhs[i] = b_[i];
  for (int j = 0; j < n_total_; ++j) {
    if (state_[j] == VarState::Basic || x_[j] == 0.0) continue;
    for (SpMat::InnerIterator it(a_, j); it; ++it) rhs[it.row()] -= it.value() * x_[j];
  }
  ftran(rhs);
  for (int i = 0; i < m_; ++i) x_[head_[i]] = rhs[i];
}

double Simplex::phase_objective(const std::vector<double>& cost) const {
  double s = 0.0;
  for (int j = 0; j < n_total_; ++j) s += cost[j] * x_[j];
  return s;
}

Simplex::Outcome Simplex::iterate(const std::vector<double>& cost) {
  const double ptol = opt_.primal_tolerance;
  const double dtol = opt_.dual_tolerance;
  const double pivtol = opt_.pivot_tolerance;
  refactor();
  recompute_basics();

  bool bland = false;
  bool fresh = false;  // factors rebuilt since the last pivot
  std::vector<char> rejected(static_cast<std::size_t>(n_total_), 0);
  int stall = 0;
  double best_obj = phase_objective(cost);
  Eigen::VectorXd y(m_);
  Eigen::VectorXd alpha(m_);

  for (;;) {
    if (iterations_ >= opt_.max_iterations) breakdown("iteration limit reached");

    for (int i = 0; i < m_; ++i) y[i] = cost[head_[i]];
    btran(y);

    // Pricing.
    int q = -1;
    double q_score = 0.0;
    double q_dir = 0.0;
    double q_d = 0.0;
    for (int j = 0; j < n_total_; ++j) {
      const VarState st = state_[j];
      if (st == VarState::Basic || is_fixed(j) || rejected[j]) continue;
      double d = cost[j];
      for (SpMat::InnerIterator it(a_, j); it; ++it) d -= y[it.row()] * it.value();
      double dir = 0.0;
      if (st == VarState::AtLower && d < -dtol) dir = 1.0;
      else if (st == VarState::AtUpper && d > dtol) dir = -1.0;
      else if (st == VarState::FreeZero && std::abs(d) > dtol) dir = d < 0.0 ? 1.0 : -1.0;
      if (dir == 0.0) continue;
      if (bland) {
        q = j;
        q_dir = dir;
        q_d = d;
        break;
      }
      if (std::abs(d) > q_score) {
        q_score = std::abs(d);
        q = j;
        q_dir = dir;
        q_d = d;
      }
    }
    if (q < 0) {
      last_duals_ = y;
      return Outcome::Optimal;
    }

    alpha.setZero();
    for (SpMat::InnerIterator it(a_, q); it; ++it) alpha[it.row()] = it.value();
    ftran(alpha);

    // Ratio test, pass 1: largest step keeping basics within relaxed bounds.
    auto exact_ratio = [&](int i, double rate) {
      const int j = head_[i];
      const double gap = rate < 0.0 ? x_[j] - lower_[j] : upper_[j] - x_[j];
      return std::max(0.0, gap) / std::abs(rate);
    };
    double theta_max = kInf;
    for (int i = 0; i < m_; ++i) {
      if (std::abs(alpha[i]) <= pivtol) continue;
      const double rate = -q_dir * alpha[i];
      const int j = head_[i];
      const double bound = rate < 0.0 ? lower_[j] : upper_[j];
      if (!std::isfinite(bound)) continue;
      const double relaxed = (rate < 0.0 ? x_[j] - bound + ptol : bound - x_[j] + ptol) / std::abs(rate);
      theta_max = std::min(theta_max, bland ? exact_ratio(i, rate) : relaxed);
    }
    // A basic that drifted past its relaxed bound would make the step negative.
    theta_max = std::max(theta_max, 0.0);
    const double span = upper_[q] - lower_[q];
    if (!std::isfinite(theta_max) && !std::isfinite(span)) {
      // Confirm a ray on fresh factors; a reduced cost at noise level is not one.
      if (!fresh) {
        refactor();
        recompute_basics();
        fresh = true;
        continue;
      }
      if (std::abs(q_d) <= 100.0 * dtol) {
        rejected[q] = 1;
        continue;
      }
      return Outcome::Unbounded;
    }

    ++iterations_;
    fresh = false;
    std::fill(rejected.begin(), rejected.end(), 0);
    if (std::isfinite(span) && span <= theta_max) {
      x_[q] += q_dir * span;
      state_[q] = q_dir > 0.0 ? VarState::AtUpper : VarState::AtLower;
      x_[q] = q_dir > 0.0 ? upper_[q] : lower_[q];
      for (int i = 0; i < m_; ++i) x_[head_[i]] -= q_dir * span * alpha[i];
    } else {
      // Pass 2: among blocking rows within theta_max pick the largest pivot.
      int r = -1;
      double r_abs = 0.0;
      double step = 0.0;
      for (int i = 0; i < m_; ++i) {
        if (std::abs(alpha[i]) <= pivtol) continue;
        const double rate = -q_dir * alpha[i];
        const int j = head_[i];
        const double bound = rate < 0.0 ? lower_[j] : upper_[j];
        if (!std::isfinite(bound)) continue;
        const double ratio = exact_ratio(i, rate);
        if (ratio > theta_max) continue;
        if (bland) {
          if (r < 0 || head_[i] < head_[r]) {
            r = i;
            step = ratio;
          }
        } else if (std::abs(alpha[i]) > r_abs) {
          r_abs = std::abs(alpha[i]);
          r = i;
          step = ratio;
        }
      }
      if (r < 0) breakdown("ratio test found no pivot row");
      const int leaving = head_[r];
      const double leaving_rate = -q_dir * alpha[r];
      for (int i = 0; i < m_; ++i) x_[head_[i]] -= q_dir * step * alpha[i];
      x_[q] += q_dir * step;
      if (leaving_rate < 0.0) {
        x_[leaving] = lower_[leaving];
        state_[leaving] = VarState::AtLower;
      } else {
        x_[leaving] = upper_[leaving];
        state_[leaving] = VarState::AtUpper;
      }
      state_[q] = VarState::Basic;
      head_[r] = q;

      Eta eta{r, alpha[r], {}, {}};
      for (int i = 0; i < m_; ++i) {
        if (i != r && std::abs(alpha[i]) > 1e-14) {
          eta.idx.push_back(i);
          eta.val.push_back(alpha[i]);
        }
      }
      etas_.push_back(std::move(eta));
      if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
        refactor();
        recompute_basics();
      }
    }

    const double obj = phase_objective(cost);
    if (obj < best_obj - 1e-12 * (1.0 + std::abs(best_obj))) {
      best_obj = obj;
      stall = 0;
      bland = false;
    } else if (++stall > 1000) {
      bland = true;
    }
  }
}

Solution Simplex::run() {
  Solution sol;
  const auto& vars = model_.variables();

  // Phase 1.
  if (first_artificial_ < n_total_) {
    std::vector<double> cost(static_cast<std::size_t>(n_total_), 0.0);
    for (int j = first_artificial_; j < n_total_; ++j) cost[j] = 1.0;
    iterate(cost);
    refactor();
    recompute_basics();
    double infeas = 0.0;
    double scale = 1.0;
    for (int i = 0; i < m_; ++i) scale = std::max(scale, std::abs(b_[i]));
    for (int j = first_artificial_; j < n_total_; ++j) infeas += std::max(0.0, x_[j]);
    if (infeas > opt_.primal_tolerance * 100.0 * scale) {
      sol.status = Status::Infeasible;
      sol.iterations = iterations_;
      return sol;
    }
    for (int j = first_artificial_; j < n_total_; ++j) {
      upper_[j] = 0.0;
      if (state_[j] != VarState::Basic) {
        x_[j] = 0.0;
        state_[j] = VarState::AtLower;
      }
    }
  }

  // Phase 2 on the normalised cost.
  double cmax = 0.0;
  for (const auto& v : vars) cmax = std::max(cmax, std::abs(v.cost));
  if (cmax == 0.0) cmax = 1.0;
  std::vector<double> cost(static_cast<std::size_t>(n_total_), 0.0);
  for (int j = 0; j < n_struct_; ++j) cost[j] = vars[j].cost / cmax;
  if (iterate(cost) == Outcome::Unbounded) {
    sol.status = Status::Unbounded;
    sol.iterations = iterations_;
    return sol;
  }
  refactor();
  recompute_basics();

  sol.status = Status::Optimal;
  sol.iterations = iterations_;
  sol.x.assign(x_.begin(), x_.begin() + n_struct_);
  for (int j = 0; j < n_struct_; ++j) sol.x[j] = std::clamp(sol.x[j], lower_[j], upper_[j]);
  sol.objective = model_.objective_value(sol.x);
  sol.duals.resize(static_cast<std::size_t>(m_));
  for (int i = 0; i < m_; ++i) sol.duals[i] = last_duals_.size() == m_ ? last_duals_[i] * cmax : 0.0;
  sol.primal_residual = model_.max_violation(sol.x);

  double scale = 1.0;
  for (int i = 0; i < m_; ++i) scale = std::max(scale, std::abs(b_[i]));
  for (int j = 0; j < n_struct_; ++j) {
    if (std::isfinite(lower_[j])) scale = std::max(scale, std::abs(lower_[j]));
    if (std::isfinite(upper_[j])) scale = std::max(scale, std::abs(upper_[j]));
  }
  if (sol.primal_residual > 1e-7 * scale) {
    breakdown("final point fails the residual recheck: " + model_.worst_violation(sol.x));
  }
  return sol;
}

}  // namespace

Solution solve(const Model& model, const SolverOptions& options) {
  Simplex simplex(model, options);
  return simplex.run();
}

}  // namespace tvs::lp
