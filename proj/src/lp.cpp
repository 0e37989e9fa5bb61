#include "gridcoord/lp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>

#include "gridcoord/error.hpp"

namespace gridcoord::lp {

VarId LinearProgram::add_variable(std::string name, double lower, double upper, double cost) {
  vars_.push_back({std::move(name), lower, upper, cost});
  return VarId{vars_.size() - 1};
}

RowId LinearProgram::add_constraint(std::string name, std::vector<Term> terms, Relation relation,
                                    double rhs) {
  rows_.push_back({std::move(name), std::move(terms), relation, rhs});
  return RowId{rows_.size() - 1};
}

void LinearProgram::set_bounds(VarId v, double lower, double upper) {
  auto& var = vars_.at(v.index);
  var.lower = lower;
  var.upper = upper;
}

std::vector<std::string> LinearProgram::structural_errors() const {
  std::vector<std::string> errs;
  for (const auto& v : vars_) {
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper) {
      errs.push_back("variable '" + v.name + "' has lower > upper");
    }
    if (v.lower == kInf || v.upper == -kInf) {
      errs.push_back("variable '" + v.name + "' has an unattainable bound");
    }
    if (!std::isfinite(v.cost)) errs.push_back("variable '" + v.name + "' has a non-finite cost");
  }
  for (const auto& c : rows_) {
    if (!std::isfinite(c.rhs)) errs.push_back("constraint '" + c.name + "' has a non-finite rhs");
    for (const auto& t : c.terms) {
      if (t.var.index >= vars_.size()) {
        errs.push_back("constraint '" + c.name + "' references an undeclared variable");
      } else if (!std::isfinite(t.coef)) {
        errs.push_back("constraint '" + c.name + "' has a non-finite coefficient");
      }
    }
  }
  return errs;
}

namespace {

std::mutex audit_mutex;
SolveAudit audit_state;

void record_solve(const LinearProgram& lp, const LpSolution& sol) {
  const double gap = sol.optimal() ? duality_gap(lp, sol) : 0.0;
  const double viol = sol.optimal() ? max_primal_violation(lp, sol.primal) : 0.0;
  const std::lock_guard lock(audit_mutex);
  ++audit_state.solves;
  if (!sol.optimal()) return;
  ++audit_state.optimal;
  audit_state.max_duality_gap = std::max(audit_state.max_duality_gap, gap);
  audit_state.max_primal_violation = std::max(audit_state.max_primal_violation, viol);
}

constexpr double kPivotTol = 1e-9;
constexpr double kOptimalityTol = 1e-9;
constexpr double kZeroTol = 1e-11;
constexpr std::size_t kBlandTrigger = 40;

enum class Mapping : std::uint8_t { Shift, Mirror, Free };

struct VarMap {
  Mapping how = Mapping::Shift;
  std::size_t column = 0;  // first standard column; Free uses column and column + 1
  double anchor = 0.0;     // lower for Shift, upper for Mirror
};

enum class ColStatus : std::uint8_t { Basic, AtLower, AtUpper };

// Standard form: A z = b, 0 <= z <= u, with every row carrying a slack or an
// artificial so that the starting basis is the identity.
struct StandardForm {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t first_artificial = 0;
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  std::vector<double> upper;
  std::vector<double> cost;
  std::vector<double> row_sign;
  std::vector<std::size_t> initial_basis;
  std::vector<VarMap> var_map;
};

StandardForm to_standard(const LinearProgram& lp) {
  StandardForm sf;
  const auto& vars = lp.variables();
  const auto& cons = lp.constraints();
  sf.rows = cons.size();

  std::vector<double> structural_upper;
  std::vector<double> structural_cost;
  sf.var_map.resize(vars.size());
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const auto& v = vars[j];
    auto& m = sf.var_map[j];
    m.column = structural_upper.size();
    if (std::isfinite(v.lower)) {
      m.how = Mapping::Shift;
      m.anchor = v.lower;
      structural_upper.push_back(std::isfinite(v.upper) ? v.upper - v.lower : kInf);
      structural_cost.push_back(v.cost);
    } else if (std::isfinite(v.upper)) {
      m.how = Mapping::Mirror;
      m.anchor = v.upper;
      structural_upper.push_back(kInf);
      structural_cost.push_back(-v.cost);
    } else {
      m.how = Mapping::Free;
      structural_upper.push_back(kInf);
      structural_upper.push_back(kInf);
      structural_cost.push_back(v.cost);
      structural_cost.push_back(-v.cost);
    }
  }
  const std::size_t n_struct = structural_upper.size();

  // Row right-hand sides after substituting the bound shifts.
  std::vector<double> rhs(sf.rows);
  std::vector<Relation> rel(sf.rows);
  sf.row_sign.assign(sf.rows, 1.0);
  std::size_t n_slack = 0;
  std::size_t n_art = 0;
  for (std::size_t i = 0; i < sf.rows; ++i) {
    double b = cons[i].rhs;
    for (const auto& t : cons[i].terms) {
      const auto& m = sf.var_map[t.var.index];
      if (m.how != Mapping::Free) b -= t.coef * m.anchor;
    }
    Relation r = cons[i].relation;
    if (b < 0.0) {
      sf.row_sign[i] = -1.0;
      b = -b;
      if (r == Relation::LessEqual) {
        r = Relation::GreaterEqual;
      } else if (r == Relation::GreaterEqual) {
        r = Relation::LessEqual;
      }
    }
    rhs[i] = b;
    rel[i] = r;
    if (r != Relation::Equal) ++n_slack;
    if (r != Relation::LessEqual) ++n_art;
  }

  sf.cols = n_struct + n_slack + n_art;
  sf.first_artificial = n_struct + n_slack;
  sf.a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sf.rows),
                               static_cast<Eigen::Index>(sf.cols));
  sf.b = Eigen::Map<Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  sf.upper = structural_upper;
  sf.cost = structural_cost;
  sf.upper.resize(sf.cols, kInf);
  sf.cost.resize(sf.cols, 0.0);
  sf.initial_basis.resize(sf.rows);

  std::size_t next_slack = n_struct;
  std::size_t next_art = sf.first_artificial;
  for (std::size_t i = 0; i < sf.rows; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double s = sf.row_sign[i];
    for (const auto& t : cons[i].terms) {
      const auto& m = sf.var_map[t.var.index];
      const auto col = static_cast<Eigen::Index>(m.column);
      switch (m.how) {
        case Mapping::Shift: sf.a(ii, col) += s * t.coef; break;
        case Mapping::Mirror: sf.a(ii, col) -= s * t.coef; break;
        case Mapping::Free:
          sf.a(ii, col) += s * t.coef;
          sf.a(ii, col + 1) -= s * t.coef;
          break;
      }
    }
    switch (rel[i]) {
      case Relation::LessEqual:
        sf.a(ii, static_cast<Eigen::Index>(next_slack)) = 1.0;
        sf.initial_basis[i] = next_slack++;
        break;
      case Relation::GreaterEqual:
        sf.a(ii, static_cast<Eigen::Index>(next_slack++)) = -1.0;
        sf.a(ii, static_cast<Eigen::Index>(next_art)) = 1.0;
        sf.initial_basis[i] = next_art++;
        break;
      case Relation::Equal:
        sf.a(ii, static_cast<Eigen::Index>(next_art)) = 1.0;
        sf.initial_basis[i] = next_art++;
        break;
    }
  }
  return sf;
}

enum class PhaseResult { Optimal, Unbounded };

class Simplex {
 public:
  explicit Simplex(const StandardForm& sf)
      : sf_(sf),
        m_(sf.rows),
        n_(sf.cols),
        tab_(sf.a),
        x_(n_, 0.0),
        upper_(sf.upper),
        status_(n_, ColStatus::AtLower),
        basis_(sf.initial_basis),
        blocked_(n_, false) {
    for (std::size_t i = 0; i < m_; ++i) {
      status_[basis_[i]] = ColStatus::Basic;
      x_[basis_[i]] = sf.b(static_cast<Eigen::Index>(i));
    }
  }

  Status run(std::size_t& iterations) {
    max_iterations_ = 50 * (m_ + n_) + 1000;

    std::vector<double> phase1(n_, 0.0);
    bool any_artificial = false;
    for (std::size_t c = sf_.first_artificial; c < n_; ++c) {
      phase1[c] = 1.0;
      any_artificial = true;
    }
    if (any_artificial) {
      price(phase1);
      iterate();
      double infeasibility = 0.0;
      for (std::size_t c = sf_.first_artificial; c < n_; ++c) infeasibility += x_[c];
      const double scale = 1.0 + sf_.b.cwiseAbs().maxCoeff();
      if (infeasibility > 1e-9 * scale) {
        iterations = iterations_;
        return Status::Infeasible;
      }
      evict_artificials();
    }

    price(sf_.cost);
    const auto result = iterate();
    iterations = iterations_;
    return result == PhaseResult::Unbounded ? Status::Unbounded : Status::Optimal;
  }

  const std::vector<std::size_t>& basis() const { return basis_; }
  const std::vector<double>& values() const { return x_; }
  const std::vector<ColStatus>& statuses() const { return status_; }

 private:
  double& t(std::size_t i, std::size_t j) {
    return tab_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  void price(const std::vector<double>& cost) {
    d_.assign(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      double z = 0.0;
      for (std::size_t i = 0; i < m_; ++i) z += cost[basis_[i]] * t(i, j);
      d_[j] = cost[j] - z;
    }
    for (std::size_t i = 0; i < m_; ++i) d_[basis_[i]] = 0.0;
  }

  void pivot(std::size_t r, std::size_t q) {
    const auto rr = static_cast<Eigen::Index>(r);
    const double p = t(r, q);
    tab_.row(rr) /= p;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = t(i, q);
      if (f != 0.0) tab_.row(static_cast<Eigen::Index>(i)) -= f * tab_.row(rr);
    }
    const double dq = d_[q];
    if (dq != 0.0) {
      for (std::size_t j = 0; j < n_; ++j) d_[j] -= dq * t(r, j);
    }
    d_[q] = 0.0;
    status_[basis_[r]] = ColStatus::AtLower;
    basis_[r] = q;
    status_[q] = ColStatus::Basic;
  }

  // Returns the entering column and the direction of change, or n_ when optimal.
  std::size_t choose_entering(bool bland, double& direction) const {
    std::size_t best = n_;
    double best_score = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      if (status_[j] == ColStatus::Basic || blocked_[j]) continue;
      double dir = 0.0;
      if (status_[j] == ColStatus::AtLower && d_[j] < -kOptimalityTol) dir = 1.0;
      if (status_[j] == ColStatus::AtUpper && d_[j] > kOptimalityTol) dir = -1.0;
      if (dir == 0.0) continue;
      if (bland) {
        direction = dir;
        return j;
      }
      const double score = std::abs(d_[j]);
      if (score > best_score) {
        best_score = score;
        best = j;
        direction = dir;
      }
    }
    return best;
  }

  PhaseResult iterate() {
    std::size_t degenerate_run = 0;
    while (true) {
      if (++iterations_ > max_iterations_) {
        throw SolverError("simplex iteration limit reached");
      }
      const bool bland = degenerate_run >= kBlandTrigger;
      double dir = 0.0;
      const std::size_t q = choose_entering(bland, dir);
      if (q == n_) return PhaseResult::Optimal;

      double step = upper_[q];
      std::size_t leave_row = m_;
      double leave_pivot = 0.0;
      bool leave_to_upper = false;
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = t(i, q);
        if (std::abs(a) <= kPivotTol) continue;
        const std::size_t k = basis_[i];
        const double rate = -dir * a;
        double limit = kInf;
        bool to_upper = false;
        if (rate < 0.0) {
          limit = std::max(x_[k], 0.0) / -rate;
        } else if (std::isfinite(upper_[k])) {
          limit = std::max(upper_[k] - x_[k], 0.0) / rate;
          to_upper = true;
        }
        if (!std::isfinite(limit)) continue;
        bool take = false;
        if (limit < step - kZeroTol) {
          take = true;
        } else if (limit <= step + kZeroTol && leave_row != m_) {
          take = bland ? basis_[i] < basis_[leave_row] : std::abs(a) > std::abs(leave_pivot);
        }
        if (take) {
          step = limit;
          leave_row = i;
          leave_pivot = a;
          leave_to_upper = to_upper;
        }
      }

      if (!std::isfinite(step)) return PhaseResult::Unbounded;

      // Move along the edge.
      x_[q] += dir * step;
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = t(i, q);
        if (a != 0.0) x_[basis_[i]] -= dir * a * step;
      }
      degenerate_run = step <= kZeroTol ? degenerate_run + 1 : 0;

      if (leave_row == m_) {
        // Bound flip: the entering column reached its own opposite bound.
        status_[q] = dir > 0 ? ColStatus::AtUpper : ColStatus::AtLower;
        x_[q] = dir > 0 ? upper_[q] : 0.0;
        continue;
      }
      const std::size_t k = basis_[leave_row];
      pivot(leave_row, q);
      status_[k] = leave_to_upper ? ColStatus::AtUpper : ColStatus::AtLower;
      x_[k] = leave_to_upper ? upper_[k] : 0.0;
    }
  }

  // Pivots zero-level artificials out of the basis where possible and pins
  // the rest (redundant rows) at zero.
  void evict_artificials() {
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < sf_.first_artificial) continue;
      std::size_t best = n_;
      double best_abs = 1e-7;
      for (std::size_t j = 0; j < sf_.first_artificial; ++j) {
        if (status_[j] == ColStatus::Basic) continue;
        if (std::abs(t(r, j)) > best_abs) {
          best_abs = std::abs(t(r, j));
          best = j;
        }
      }
      if (best == n_) continue;
      const std::size_t art = basis_[r];
      d_.assign(n_, 0.0);
      pivot(r, best);
      x_[art] = 0.0;
    }
    for (std::size_t c = sf_.first_artificial; c < n_; ++c) {
      upper_[c] = 0.0;
      blocked_[c] = true;
      if (status_[c] != ColStatus::Basic) x_[c] = 0.0;
    }
  }

  const StandardForm& sf_;
  std::size_t m_;
  std::size_t n_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> tab_;
  std::vector<double> x_;
  std::vector<double> upper_;
  std::vector<double> d_;
  std::vector<ColStatus> status_;
  std::vector<std::size_t> basis_;
  std::vector<bool> blocked_;
  std::size_t iterations_ = 0;
  std::size_t max_iterations_ = 0;
};

}  // namespace

namespace {

LpSolution solve_unaudited(const LinearProgram& lp, double tolerance) {
  if (auto errs = lp.structural_errors(); !errs.empty()) {
    throw SolverError("malformed linear program: " + errs.front());
  }
  const StandardForm sf = to_standard(lp);

  LpSolution sol;
  std::vector<double> z;
  std::vector<double> y_std(sf.rows, 0.0);

  if (sf.rows == 0) {
    // Only bounds: every column sits at its cheaper bound.
    z.assign(sf.cols, 0.0);
    for (std::size_t c = 0; c < sf.cols; ++c) {
      if (sf.cost[c] < 0.0) {
        if (!std::isfinite(sf.upper[c])) {
          sol.status = Status::Unbounded;
          return sol;
        }
        z[c] = sf.upper[c];
      }
    }
  } else {
    Simplex simplex(sf);
    sol.status = simplex.run(sol.iterations);
    if (sol.status != Status::Optimal) return sol;

    z = simplex.values();
    // Re-solve the final basis directly for accurate primal and dual values.
    const auto m = static_cast<Eigen::Index>(sf.rows);
    Eigen::MatrixXd basis_matrix(m, m);
    Eigen::VectorXd basic_cost(m);
    Eigen::VectorXd rhs = sf.b;
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto col = static_cast<Eigen::Index>(simplex.basis()[static_cast<std::size_t>(i)]);
      basis_matrix.col(i) = sf.a.col(col);
      basic_cost(i) = sf.cost[static_cast<std::size_t>(col)];
    }
    const auto& status = simplex.statuses();
    for (std::size_t c = 0; c < sf.cols; ++c) {
      if (status[c] == ColStatus::Basic) continue;
      z[c] = status[c] == ColStatus::AtUpper ? sf.upper[c] : 0.0;
      if (z[c] != 0.0) rhs -= sf.a.col(static_cast<Eigen::Index>(c)) * z[c];
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_matrix);
    const Eigen::VectorXd xb = lu.solve(rhs);
    const Eigen::VectorXd y = lu.transpose().solve(basic_cost);
    if (!xb.allFinite() || !y.allFinite()) throw SolverError("singular final basis");
    for (Eigen::Index i = 0; i < m; ++i) {
      z[simplex.basis()[static_cast<std::size_t>(i)]] = xb(i);
      y_std[static_cast<std::size_t>(i)] = y(i);
    }
  }

  const auto& vars = lp.variables();
  const auto& cons = lp.constraints();
  sol.primal.resize(vars.size());
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const auto& m = sf.var_map[j];
    double v = 0.0;
    switch (m.how) {
      case Mapping::Shift: v = m.anchor + z[m.column]; break;
      case Mapping::Mirror: v = m.anchor - z[m.column]; break;
      case Mapping::Free: v = z[m.column] - z[m.column + 1]; break;
    }
    // Snap tiny excursions outside the bounds back onto them.
    if (v < vars[j].lower && vars[j].lower - v <= tolerance) v = vars[j].lower;
    if (v > vars[j].upper && v - vars[j].upper <= tolerance) v = vars[j].upper;
    sol.primal[j] = v;
  }

  sol.dual.resize(cons.size());
  for (std::size_t i = 0; i < cons.size(); ++i) sol.dual[i] = sf.row_sign[i] * y_std[i];

  sol.reduced_cost.resize(vars.size());
  for (std::size_t j = 0; j < vars.size(); ++j) sol.reduced_cost[j] = vars[j].cost;
  for (std::size_t i = 0; i < cons.size(); ++i) {
    for (const auto& t : cons[i].terms) sol.reduced_cost[t.var.index] -= t.coef * sol.dual[i];
  }

  sol.objective = lp.objective_offset();
  for (std::size_t j = 0; j < vars.size(); ++j) sol.objective += vars[j].cost * sol.primal[j];

  if (max_primal_violation(lp, sol.primal) > std::max(tolerance, 1e-9) * 10.0) {
    throw SolverError("final basis is numerically unreliable (primal violation)");
  }
  return sol;
}

}  // namespace

LpSolution solve(const LinearProgram& lp, double tolerance) {
  auto sol = solve_unaudited(lp, tolerance);
  record_solve(lp, sol);
  return sol;
}

SolveAudit audit_snapshot() {
  const std::lock_guard lock(audit_mutex);
  return audit_state;
}

void reset_audit() {
  const std::lock_guard lock(audit_mutex);
  audit_state = SolveAudit{};
}

double dual_objective(const LinearProgram& lp, const LpSolution& sol) {
  double total = lp.objective_offset();
  const auto& cons = lp.constraints();
  const auto& vars = lp.variables();
  for (std::size_t i = 0; i < cons.size(); ++i) total += cons[i].rhs * sol.dual[i];
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const double d = sol.reduced_cost[j];
    if (d > 0.0 && std::isfinite(vars[j].lower)) {
      total += d * vars[j].lower;
    } else if (d < 0.0 && std::isfinite(vars[j].upper)) {
      total += d * vars[j].upper;
    } else if (d != 0.0) {
      // Reduced cost pushing toward an infinite bound: dual infeasible by |d|.
      total += d * sol.primal[j];
    }
  }
  return total;
}

double duality_gap(const LinearProgram& lp, const LpSolution& sol) {
  return std::abs(sol.objective - dual_objective(lp, sol));
}

double max_primal_violation(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  const auto& vars = lp.variables();
  for (std::size_t j = 0; j < vars.size(); ++j) {
    worst = std::max({worst, vars[j].lower - x[j], x[j] - vars[j].upper});
  }
  for (const auto& c : lp.constraints()) {
    double lhs = 0.0;
    for (const auto& t : c.terms) lhs += t.coef * x[t.var.index];
    const double r = lhs - c.rhs;
    switch (c.relation) {
      case Relation::LessEqual: worst = std::max(worst, r); break;
      case Relation::GreaterEqual: worst = std::max(worst, -r); break;
      case Relation::Equal: worst = std::max(worst, std::abs(r)); break;
    }
  }
  return worst;
}

double max_complementarity_violation(const LinearProgram& lp, const LpSolution& sol) {
  double worst = 0.0;
  const auto& cons = lp.constraints();
  for (std::size_t i = 0; i < cons.size(); ++i) {
    if (cons[i].relation == Relation::Equal) continue;
    double lhs = 0.0;
    for (const auto& t : cons[i].terms) lhs += t.coef * sol.primal[t.var.index];
    worst = std::max(worst, std::abs(sol.dual[i] * (lhs - cons[i].rhs)));
  }
  const auto& vars = lp.variables();
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const double d = sol.reduced_cost[j];
    const double x = sol.primal[j];
    if (d > 0.0) {
      worst = std::max(worst, std::isfinite(vars[j].lower) ? d * (x - vars[j].lower) : d);
    } else if (d < 0.0) {
      worst = std::max(worst, std::isfinite(vars[j].upper) ? -d * (vars[j].upper - x) : -d);
    }
  }
  return worst;
}

double max_dual_sign_violation(const LinearProgram& lp, const LpSolution& sol) {
  double worst = 0.0;
  const auto& cons = lp.constraints();
  for (std::size_t i = 0; i < cons.size(); ++i) {
    if (cons[i].relation == Relation::LessEqual) worst = std::max(worst, sol.dual[i]);
    if (cons[i].relation == Relation::GreaterEqual) worst = std::max(worst, -sol.dual[i]);
  }
  const auto& vars = lp.variables();
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (!std::isfinite(vars[j].lower)) worst = std::max(worst, sol.reduced_cost[j]);
    if (!std::isfinite(vars[j].upper)) worst = std::max(worst, -sol.reduced_cost[j]);
  }
  return worst;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "Optimal";
    case Status::Infeasible: return "Infeasible";
    case Status::Unbounded: return "Unbounded";
  }
  return "?";
}

}  // namespace gridcoord::lp
