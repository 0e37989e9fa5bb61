#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace gridcoord::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kDefaultTolerance = 1e-7;

struct VarId {
  std::size_t index = 0;
  friend bool operator==(VarId, VarId) = default;
};

struct RowId {
  std::size_t index = 0;
  friend bool operator==(RowId, RowId) = default;
};

struct Term {
  VarId var;
  double coef = 0.0;
};

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  double cost = 0.0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Relation relation = Relation::Equal;
  double rhs = 0.0;
};

/// Minimization LP over bounded variables. Bounds may be infinite.
class LinearProgram {
 public:
  VarId add_variable(std::string name, double lower, double upper, double cost = 0.0);
  RowId add_constraint(std::string name, std::vector<Term> terms, Relation relation, double rhs);

  void set_cost(VarId v, double cost) { vars_.at(v.index).cost = cost; }
  void add_cost(VarId v, double cost) { vars_.at(v.index).cost += cost; }
  void set_bounds(VarId v, double lower, double upper);
  void set_rhs(RowId r, double rhs) { rows_.at(r.index).rhs = rhs; }
  void set_objective_offset(double c) { offset_ = c; }
  double objective_offset() const { return offset_; }

  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }
  const Variable& variable(VarId v) const { return vars_.at(v.index); }
  const Constraint& constraint(RowId r) const { return rows_.at(r.index); }
  std::size_t num_variables() const { return vars_.size(); }
  std::size_t num_constraints() const { return rows_.size(); }

  /// Empty when every term references a declared variable, every bound
  /// pair is ordered, and every coefficient is finite.
  std::vector<std::string> structural_errors() const;

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
  double offset_ = 0.0;
};

enum class Status { Optimal, Infeasible, Unbounded };

/// Duals follow the shadow-price convention: the dual of a row is the
/// derivative of the optimal value with respect to its right-hand side.
/// For a minimization this makes duals of <= rows nonpositive and duals of
/// >= rows nonnegative. Reduced costs are c - A^T y per variable.
struct LpSolution {
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> primal;
  std::vector<double> dual;
  std::vector<double> reduced_cost;
  std::size_t iterations = 0;

  bool optimal() const { return status == Status::Optimal; }
  double value(VarId v) const { return primal.at(v.index); }
  double dual_of(RowId r) const { return dual.at(r.index); }
};

/// Bounded-variable primal simplex. Throws SolverError on malformed input
/// or numerical breakdown; infeasibility and unboundedness are statuses.
LpSolution solve(const LinearProgram& lp, double tolerance = kDefaultTolerance);

/// Lagrangian dual objective b^T y + sum of bound terms, evaluated at the
/// reported duals.
double dual_objective(const LinearProgram& lp, const LpSolution& sol);

/// |primal objective - dual objective|.
double duality_gap(const LinearProgram& lp, const LpSolution& sol);

/// Largest violation of any row or bound at the reported primal point.
double max_primal_violation(const LinearProgram& lp, const std::vector<double>& x);

/// Largest complementary-slackness product over rows and bounds.
double max_complementarity_violation(const LinearProgram& lp, const LpSolution& sol);

/// Largest wrong-signed dual or reduced cost.
double max_dual_sign_violation(const LinearProgram& lp, const LpSolution& sol);

/// Process-wide record of every optimal solve, for acceptance auditing.
struct SolveAudit {
  std::size_t solves = 0;
  std::size_t optimal = 0;
  double max_duality_gap = 0.0;
  double max_primal_violation = 0.0;
};

SolveAudit audit_snapshot();
void reset_audit();

std::string to_string(Status s);

}  // namespace gridcoord::lp
