#include "gridcoord/dso_market.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "gridcoord/error.hpp"

namespace gridcoord::dso {

namespace {

bool same_slope(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

double slope(const Breakpoint& a, const Breakpoint& b) {
  return (b.total_cost - a.total_cost) / (b.q - a.q);
}

}  // namespace

// ---------------------------------------------------------------- BidCurve

BidCurve BidCurve::from_breakpoints(std::vector<Breakpoint> points, double tolerance) {
  if (points.empty()) throw ModelError("bid curve needs at least one breakpoint");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i].q > points[i - 1].q)) {
      throw ModelError("bid curve breakpoints must be strictly increasing in q");
    }
  }
  for (std::size_t i = 2; i < points.size(); ++i) {
    const double left = slope(points[i - 2], points[i - 1]);
    const double right = slope(points[i - 1], points[i]);
    if (right < left - tolerance * std::max(1.0, std::abs(left))) {
      throw ModelError("bid curve is not convex at q = " + std::to_string(points[i - 1].q));
    }
  }
  BidCurve c;
  c.breakpoints_ = std::move(points);
  return c;
}

BidCurve BidCurve::from_samples(std::vector<Breakpoint> points, double tolerance) {
  std::sort(points.begin(), points.end(),
            [](const Breakpoint& a, const Breakpoint& b) { return a.q < b.q; });
  std::vector<Breakpoint> unique;
  for (const auto& p : points) {
    if (!unique.empty() && p.q - unique.back().q <= 1e-9 * std::max(1.0, std::abs(p.q))) continue;
    unique.push_back(p);
  }
  std::vector<Breakpoint> kept;
  for (std::size_t i = 0; i < unique.size(); ++i) {
    if (i == 0 || i + 1 == unique.size()) {
      kept.push_back(unique[i]);
      continue;
    }
    const double left = slope(kept.back(), unique[i]);
    const double right = slope(unique[i], unique[i + 1]);
    if (!same_slope(left, right, tolerance)) kept.push_back(unique[i]);
  }
  return from_breakpoints(std::move(kept), tolerance);
}

std::vector<Segment> BidCurve::segments() const {
  std::vector<Segment> out;
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    out.push_back({breakpoints_[i - 1].q, breakpoints_[i].q,
                   slope(breakpoints_[i - 1], breakpoints_[i])});
  }
  return out;
}

double BidCurve::cost_at(double q) const {
  if (breakpoints_.empty()) throw ModelError("empty bid curve");
  const double slack = 1e-9 * std::max(1.0, std::abs(q));
  if (q < q_min() - slack || q > q_max() + slack) {
    throw InfeasibleError("q = " + std::to_string(q) + " MW is outside the bid curve domain");
  }
  if (breakpoints_.size() == 1) return breakpoints_.front().total_cost;
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (q <= breakpoints_[i].q || i + 1 == breakpoints_.size()) {
      const auto& a = breakpoints_[i - 1];
      return a.total_cost + slope(a, breakpoints_[i]) * (q - a.q);
    }
  }
  return breakpoints_.back().total_cost;
}

double BidCurve::marginal_at(double q) const {
  if (breakpoints_.size() < 2) return 0.0;
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (q < breakpoints_[i].q) return slope(breakpoints_[i - 1], breakpoints_[i]);
  }
  return slope(breakpoints_[breakpoints_.size() - 2], breakpoints_.back());
}

std::vector<MarginalStep> marginal_curve(const BidCurve& curve) {
  std::vector<MarginalStep> steps;
  for (const auto& s : curve.segments()) steps.push_back({s.q_lo, s.q_hi, s.price});
  return steps;
}

// -------------------------------------------------------------- DsoProblem

DsoProblem::DsoProblem(const Scenario& scenario) : scenario_(scenario) {
  if (auto v = validate(scenario_); !v.empty()) {
    throw ModelError("invalid scenario: " + v.front().path + ": " + v.front().message);
  }
  const distflow::Options opts{scenario_.q_dso_cap};

  if (scenario_.coupling == Coupling::Equality) {
    vars_ = distflow::build_constraints(lp_, scenario_.network, scenario_.aggregators, 0.0, opts);
    base_substation_rhs_ =
        lp_.constraint(vars_.active_balance[scenario_.network.substation]).rhs;
  } else {
    export_var_ = lp_.add_variable("Pdso", -lp::kInf, lp::kInf);
    vars_ = distflow::build_constraints(lp_, scenario_.network, scenario_.aggregators,
                                        *export_var_, opts);
    coupling_row_ =
        lp_.add_constraint("coupling", {{*export_var_, 1.0}}, lp::Relation::GreaterEqual, 0.0);
  }
  distflow::add_aggregator_costs(lp_, vars_, scenario_.aggregators);

  range_var_ = range_lp_.add_variable("Pdso", -lp::kInf, lp::kInf);
  distflow::build_constraints(range_lp_, scenario_.network, scenario_.aggregators, range_var_,
                              opts);
}

lp::LinearProgram DsoProblem::with_export(double q_dso) const {
  lp::LinearProgram copy = lp_;
  if (coupling_row_) {
    copy.set_rhs(*coupling_row_, q_dso);
  } else {
    copy.set_rhs(vars_.active_balance[scenario_.network.substation],
                 base_substation_rhs_ + q_dso);
  }
  return copy;
}

double DsoProblem::coupling_dual(const lp::LpSolution& sol) const {
  if (coupling_row_) return sol.dual_of(*coupling_row_);
  return sol.dual_of(vars_.active_balance[scenario_.network.substation]);
}

lp::LpSolution DsoProblem::solve_raw(double q_dso) const {
  return lp::solve(with_export(q_dso), scenario_.tolerance);
}

DsoDispatch DsoProblem::dispatch(double q_dso) const {
  const auto program = with_export(q_dso);
  const auto sol = lp::solve(program, scenario_.tolerance);
  if (sol.status == lp::Status::Infeasible) {
    throw InfeasibleError("DSO cannot deliver a net export of " + std::to_string(q_dso) + " MW");
  }
  if (sol.status != lp::Status::Optimal) throw SolverError("DSO problem is unbounded");
  const double exported = export_var_ ? sol.value(*export_var_) : q_dso;
  auto out = extract_dispatch(scenario_, vars_, program, sol, exported, coupling_dual(sol));
  out.cost = sol.objective;
  out.duality_gap = lp::duality_gap(program, sol);
  return out;
}

std::pair<double, double> DsoProblem::feasible_range() const {
  std::pair<double, double> range;
  for (const double sense : {1.0, -1.0}) {
    lp::LinearProgram probe = range_lp_;
    probe.set_cost(range_var_, sense);
    const auto sol = lp::solve(probe, scenario_.tolerance);
    if (sol.status == lp::Status::Infeasible) {
      throw InfeasibleError("distribution network admits no feasible operating point");
    }
    if (sol.status != lp::Status::Optimal) throw SolverError("unbounded net export range");
    (sense > 0 ? range.first : range.second) = sol.value(range_var_);
  }
  return range;
}

DsoDispatch extract_dispatch(const Scenario& scenario, const distflow::DistFlowVars& vars,
                             const lp::LinearProgram& lp, const lp::LpSolution& sol, double q_dso,
                             double marginal_price) {
  DsoDispatch out;
  out.q_dso = q_dso;
  out.marginal_price = marginal_price;
  for (std::size_t a = 0; a < scenario.aggregators.size(); ++a) {
    const auto& agg = scenario.aggregators[a];
    AggregatorDispatch d{agg.id, agg.kind, agg.node, 0.0, {}};
    if (agg.kind == AggregatorKind::REAG) {
      d.mw = agg.fixed_output;
    } else {
      const double sign = agg.side() == StackSide::Generation ? 1.0 : -1.0;
      for (std::size_t b = 0; b < vars.blocks[a].size(); ++b) {
        const double mw = sol.value(vars.blocks[a][b]);
        d.blocks.push_back(mw);
        d.mw += mw;
        out.cost += sign * agg.offers.blocks[b].price * mw;
      }
    }
    out.aggregators.push_back(std::move(d));
  }
  for (const auto row : vars.active_balance) out.retail_prices.push_back(sol.dual_of(row));
  for (const auto v : vars.pl) out.network.pl.push_back(sol.value(v));
  for (const auto v : vars.ql) out.network.ql.push_back(sol.value(v));
  for (const auto v : vars.u) out.network.u.push_back(sol.value(v));
  out.network.q_dso = sol.value(vars.q_dso);
  out.duality_gap = lp::duality_gap(lp, sol);
  return out;
}

std::pair<double, double> feasible_range(const Scenario& scenario) {
  return DsoProblem(scenario).feasible_range();
}

DsoDispatch value_at(const Scenario& scenario, double q_dso) {
  return DsoProblem(scenario).dispatch(q_dso);
}

BidCurve build_bid_curve(const Scenario& scenario) { return build_bid_curve(DsoProblem(scenario)); }

// Sweep the export range on a fixed grid, then locate every slope change
// between neighbouring grid points exactly: two supporting lines of a convex
// piecewise-linear function meet at its kink when the function touches them
// there, otherwise the meeting point splits the interval and both halves
// are searched again.
BidCurve build_bid_curve(const DsoProblem& problem) {
  const auto& sc = problem.scenario();
  const auto [lo, hi] = problem.feasible_range();

  struct Eval {
    double q;
    double f;
    double g;
  };
  auto eval = [&](double q) -> Eval {
    auto sol = problem.solve_raw(q);
    if (!sol.optimal()) {
      // Range endpoints come from another LP and can sit a hair outside.
      const double nudge = 1e-9 * std::max(1.0, std::abs(q));
      const double inward = q >= hi ? q - nudge : q + nudge;
      sol = problem.solve_raw(inward);
      if (!sol.optimal()) {
        throw SolverError("DSO LP failed inside its feasible range at q = " + std::to_string(q));
      }
    }
    return {q, sol.objective, problem.coupling_dual(sol)};
  };

  std::vector<Eval> grid;
  const double width = hi - lo;
  if (width <= 1e-9 * std::max(1.0, std::abs(hi))) {
    grid.push_back(eval(lo));
  } else {
    const double steps = std::ceil(width / sc.sweep_step - 1e-3);
    if (steps > 1e6) throw ModelError("sweep_step is too small for the export range");
    const auto count = static_cast<std::size_t>(steps);
    for (std::size_t k = 0; k < count; ++k) {
      grid.push_back(eval(lo + static_cast<double>(k) * sc.sweep_step));
    }
    grid.push_back(eval(hi));
  }

  std::vector<Breakpoint> points;
  for (const auto& e : grid) points.push_back({e.q, e.f});

  constexpr double kSlopeTol = 1e-9;
  std::function<void(const Eval&, const Eval&, int)> refine = [&](const Eval& a, const Eval& b,
                                                                   int depth) {
    if (same_slope(a.g, b.g, kSlopeTol) || b.g < a.g) return;
    if (depth > 64) throw SolverError("bid curve refinement did not converge");
    double q = (b.f - a.f + a.g * a.q - b.g * b.q) / (a.g - b.g);
    q = std::clamp(q, a.q, b.q);
    const double spacing = 1e-7 * std::max(1.0, std::abs(q));
    if (q - a.q <= spacing || b.q - q <= spacing) return;  // kink sits on a grid point
    const Eval mid = eval(q);
    const double support = a.f + a.g * (q - a.q);
    points.push_back({mid.q, mid.f});
    if (mid.f - support <= 1e-9 * std::max(1.0, std::abs(mid.f))) return;
    refine(a, mid, depth + 1);
    refine(mid, b, depth + 1);
  };
  for (std::size_t k = 1; k < grid.size(); ++k) refine(grid[k - 1], grid[k], 0);

  auto curve = BidCurve::from_samples(std::move(points), 1e-7);
  for (const auto& e : grid) curve.samples.push_back({e.q, e.f, e.g});
  return curve;
}

}  // namespace gridcoord::dso
