#include "gridcoord/coordination.hpp"

#include <algorithm>
#include <cmath>

#include "gridcoord/distflow.hpp"
#include "gridcoord/error.hpp"
#include "gridcoord/lp.hpp"

namespace gridcoord::coord {

namespace {

struct IdealProgram {
  lp::LinearProgram program;
  std::vector<std::vector<lp::VarId>> wholesale_blocks;
  distflow::DistFlowVars dist;
  lp::VarId exchange;
  lp::RowId balance;
};

IdealProgram build_ideal(const Scenario& sc) {
  IdealProgram ip;
  auto& program = ip.program;
  std::vector<lp::Term> balance;
  ip.wholesale_blocks.resize(sc.wholesale.size());
  for (std::size_t w = 0; w < sc.wholesale.size(); ++w) {
    const auto& p = sc.wholesale[w];
    const double sign = p.side() == StackSide::Generation ? 1.0 : -1.0;
    for (std::size_t b = 0; b < p.offers.blocks.size(); ++b) {
      const auto& blk = p.offers.blocks[b];
      const auto v = program.add_variable(p.id + "_b" + std::to_string(b), 0.0, blk.p_max,
                                          sign * blk.price);
      ip.wholesale_blocks[w].push_back(v);
      balance.push_back({v, sign});
    }
  }
  ip.exchange = program.add_variable("Pdso", -lp::kInf, lp::kInf);
  ip.dist = distflow::build_constraints(program, sc.network, sc.aggregators, ip.exchange,
                                        distflow::Options{sc.q_dso_cap});
  distflow::add_aggregator_costs(program, ip.dist, sc.aggregators);
  balance.push_back({ip.exchange, 1.0});
  ip.balance = program.add_constraint("balance", std::move(balance), lp::Relation::Equal,
                                      sc.firm_wholesale_load);
  return ip;
}

void require_valid(const Scenario& sc) {
  if (auto v = validate(sc); !v.empty()) {
    throw ModelError("invalid scenario: " + v.front().path + ": " + v.front().message);
  }
}

double sum_of(const lp::LpSolution& sol, const std::vector<lp::VarId>& vars) {
  double s = 0.0;
  for (const auto v : vars) s += sol.value(v);
  return s;
}

}  // namespace

CoordinationResult run_coordinated(const Scenario& sc) {
  const dso::DsoProblem problem(sc);
  CoordinationResult out;
  out.bid_curve = dso::build_bid_curve(problem);
  out.iso = iso::clear(sc.wholesale, {out.bid_curve}, sc.firm_wholesale_load, sc.tolerance);

  const double award =
      std::clamp(out.iso.dso.front().q, out.bid_curve.q_min(), out.bid_curve.q_max());
  out.dso_dispatch = problem.dispatch(award);
  const double on_curve = out.bid_curve.cost_at(award);
  if (std::abs(out.dso_dispatch.cost - on_curve) > 1e-6 * std::max(1.0, std::abs(on_curve))) {
    throw SolverError("DSO re-dispatch cost " + std::to_string(out.dso_dispatch.cost) +
                      " departs from the bid curve cost " + std::to_string(on_curve));
  }
  return out;
}

IdealOutcome run_ideal(const Scenario& sc) {
  require_valid(sc);
  const auto ip = build_ideal(sc);
  const auto sol = lp::solve(ip.program, sc.tolerance);
  if (sol.status == lp::Status::Infeasible) {
    throw InfeasibleError("joint dispatch is infeasible");
  }
  if (sol.status != lp::Status::Optimal) throw SolverError("joint dispatch is unbounded");

  IdealOutcome out;
  out.iso.objective = sol.objective;
  out.iso.clearing_price = sol.dual_of(ip.balance);
  out.iso.duality_gap = lp::duality_gap(ip.program, sol);
  for (std::size_t w = 0; w < sc.wholesale.size(); ++w) {
    iso::ParticipantResult r{sc.wholesale[w].id, sc.wholesale[w].kind, 0.0, {}};
    for (const auto v : ip.wholesale_blocks[w]) {
      r.blocks.push_back(sol.value(v));
      r.cleared += sol.value(v);
    }
    out.iso.participants.push_back(std::move(r));
  }
  const double exchange = sol.value(ip.exchange);
  out.aggregators = dso::extract_dispatch(
      sc, ip.dist, ip.program, sol, exchange,
      sol.dual_of(ip.dist.active_balance[sc.network.substation]));
  out.iso.dso.push_back({exchange, out.aggregators.cost, {}});
  return out;
}

EquivalenceReport check_equivalence(const Scenario& sc, double tolerance) {
  require_valid(sc);
  const auto coordinated = run_coordinated(sc);
  const auto ideal = run_ideal(sc);

  EquivalenceReport rep;
  rep.tolerance = tolerance;
  rep.objective_ideal = ideal.iso.objective;
  rep.objective_coordinated = coordinated.total_cost();
  rep.max_deviation = std::abs(rep.objective_ideal - rep.objective_coordinated);

  // Restrict the joint LP to its optimal face and measure how far each
  // quantity can move there.
  auto face = build_ideal(sc);
  std::vector<lp::Term> cost_terms;
  const auto& vars = face.program.variables();
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (vars[j].cost != 0.0) cost_terms.push_back({lp::VarId{j}, vars[j].cost});
  }
  const double slack = 1e-9 * std::max(1.0, std::abs(ideal.iso.objective));
  face.program.add_constraint("optimal_face", cost_terms, lp::Relation::LessEqual,
                              ideal.iso.objective + slack);
  auto range_of = [&](const std::vector<lp::VarId>& qty) {
    std::pair<double, double> r;
    for (const double sense : {1.0, -1.0}) {
      lp::LinearProgram probe = face.program;
      for (std::size_t j = 0; j < probe.num_variables(); ++j) probe.set_cost(lp::VarId{j}, 0.0);
      for (const auto v : qty) probe.add_cost(v, sense);
      const auto sol = lp::solve(probe, sc.tolerance);
      if (!sol.optimal()) throw SolverError("optimal-face probe failed");
      (sense > 0 ? r.first : r.second) = sum_of(sol, qty);
    }
    return r;
  };
  auto compare = [&](std::string id, double ideal_v, double coord_v,
                     const std::vector<lp::VarId>& qty) {
    const auto [lo, hi] = range_of(qty);
    ComparedQuantity c{std::move(id), ideal_v, coord_v, lo, hi, 0.0};
    c.deviation = std::max({0.0, lo - coord_v, coord_v - hi});
    rep.max_deviation = std::max(rep.max_deviation, c.deviation);
    rep.quantities.push_back(std::move(c));
  };

  for (std::size_t w = 0; w < sc.wholesale.size(); ++w) {
    compare(sc.wholesale[w].id, ideal.iso.participants[w].cleared,
            coordinated.iso.participants[w].cleared, face.wholesale_blocks[w]);
  }
  for (std::size_t a = 0; a < sc.aggregators.size(); ++a) {
    if (sc.aggregators[a].kind == AggregatorKind::REAG) continue;
    compare(sc.aggregators[a].id, ideal.aggregators.aggregators[a].mw,
            coordinated.dso_dispatch.aggregators[a].mw, face.dist.blocks[a]);
  }
  compare("DSO", ideal.iso.dso.front().q, coordinated.iso.dso.front().q, {face.exchange});

  rep.pass = rep.max_deviation <= tolerance;
  return rep;
}

}  // namespace gridcoord::coord
