#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gridcoord/distflow.hpp"
#include "gridcoord/lp.hpp"
#include "gridcoord/model.hpp"

namespace gridcoord::dso {

struct Breakpoint {
  double q = 0.0;           // MW, + = export to the wholesale market
  double total_cost = 0.0;  // currency/h
};

struct Segment {
  double q_lo = 0.0;
  double q_hi = 0.0;
  double price = 0.0;  // currency/MWh
};

/// One solve of the parametric sweep.
struct SweepPoint {
  double q = 0.0;
  double total_cost = 0.0;
  double dual = 0.0;  // coupling dual reported by the LP at this q
};

/// Convex piecewise-linear DSO cost as a function of net export.
class BidCurve {
 public:
  BidCurve() = default;

  /// Throws ModelError unless q is strictly increasing and the chord slopes
  /// are nondecreasing within `tolerance`.
  static BidCurve from_breakpoints(std::vector<Breakpoint> points, double tolerance = 1e-7);

  /// Builds a curve from arbitrary samples of a convex PWL function,
  /// dropping interior points that lie on a straight line.
  static BidCurve from_samples(std::vector<Breakpoint> points, double tolerance = 1e-6);

  const std::vector<Breakpoint>& breakpoints() const { return breakpoints_; }
  std::vector<Segment> segments() const;
  double q_min() const { return breakpoints_.front().q; }
  double q_max() const { return breakpoints_.back().q; }
  bool empty() const { return breakpoints_.empty(); }

  /// Linear interpolation between breakpoints; throws outside the domain.
  double cost_at(double q) const;

  /// Slope of the segment to the right of q (to the left at q_max).
  double marginal_at(double q) const;

  /// Sweep record kept for plotting; not part of the curve's identity.
  std::vector<SweepPoint> samples;

 private:
  std::vector<Breakpoint> breakpoints_;
};

struct MarginalStep {
  double q_lo = 0.0;
  double q_hi = 0.0;
  double price = 0.0;
};

/// Stepwise marginal-price form of a curve, in increasing q.
std::vector<MarginalStep> marginal_curve(const BidCurve& curve);

struct AggregatorDispatch {
  std::string id;
  AggregatorKind kind = AggregatorKind::DDGAG;
  NodeId node = 0;
  double mw = 0.0;
  std::vector<double> blocks;
};

/// Branch flows and squared voltages of a solved distribution network.
struct NetworkState {
  std::vector<double> pl;
  std::vector<double> ql;
  std::vector<double> u;
  double q_dso = 0.0;
};

struct DsoDispatch {
  std::vector<AggregatorDispatch> aggregators;
  double q_dso = 0.0;
  double cost = 0.0;
  double marginal_price = 0.0;        // coupling dual
  std::vector<double> retail_prices;  // per node, active balance duals
  NetworkState network;
  double duality_gap = 0.0;
};

/// The DSO LP of one scenario, ready to be solved at any net export.
class DsoProblem {
 public:
  explicit DsoProblem(const Scenario& scenario);

  /// Status-bearing solve at a fixed net export. Never throws on infeasibility.
  lp::LpSolution solve_raw(double q_dso) const;

  /// Dispatch at a fixed net export. Throws InfeasibleError outside the range.
  DsoDispatch dispatch(double q_dso) const;

  /// Minimum and maximum feasible net export. Throws InfeasibleError when
  /// the distribution polytope is empty.
  std::pair<double, double> feasible_range() const;

  /// Derivative of the optimal cost with respect to the net export, read
  /// from a solution of this problem.
  double coupling_dual(const lp::LpSolution& sol) const;

  const lp::LinearProgram& program() const { return lp_; }
  const distflow::DistFlowVars& vars() const { return vars_; }
  const Scenario& scenario() const { return scenario_; }

 private:
  lp::LinearProgram with_export(double q_dso) const;

  Scenario scenario_;
  lp::LinearProgram lp_;
  distflow::DistFlowVars vars_;
  std::optional<lp::VarId> export_var_;
  std::optional<lp::RowId> coupling_row_;
  double base_substation_rhs_ = 0.0;
  lp::LinearProgram range_lp_;
  lp::VarId range_var_;
};

std::pair<double, double> feasible_range(const Scenario& scenario);
DsoDispatch value_at(const Scenario& scenario, double q_dso);
BidCurve build_bid_curve(const Scenario& scenario);
BidCurve build_bid_curve(const DsoProblem& problem);

/// Assembles a DsoDispatch from a solution of any LP that contains the
/// distribution block `vars` (used by the joint dispatch too).
DsoDispatch extract_dispatch(const Scenario& scenario, const distflow::DistFlowVars& vars,
                             const lp::LinearProgram& lp, const lp::LpSolution& sol, double q_dso,
                             double marginal_price);

}  // namespace gridcoord::dso
