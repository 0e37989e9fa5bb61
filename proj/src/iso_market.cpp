#include "gridcoord/iso_market.hpp"

#include "gridcoord/error.hpp"
#include "gridcoord/lp.hpp"

namespace gridcoord::iso {

double IsoOutcome::balance_residual(double firm_load) const {
  double net = -firm_load;
  for (const auto& p : participants) net += p.kind == ParticipantKind::Gen ? p.cleared : -p.cleared;
  for (const auto& d : dso) net += d.q;
  return net;
}

IsoOutcome clear(const std::vector<WholesaleParticipant>& wholesale,
                 const std::vector<dso::BidCurve>& dso_curves, double firm_load, double tolerance) {
  lp::LinearProgram program;
  std::vector<lp::Term> balance;
  std::vector<std::vector<lp::VarId>> block_vars(wholesale.size());
  for (std::size_t w = 0; w < wholesale.size(); ++w) {
    const auto& p = wholesale[w];
    const double sign = p.side() == StackSide::Generation ? 1.0 : -1.0;
    for (std::size_t b = 0; b < p.offers.blocks.size(); ++b) {
      const auto& blk = p.offers.blocks[b];
      const auto v = program.add_variable(p.id + "_b" + std::to_string(b), 0.0, blk.p_max,
                                          sign * blk.price);
      block_vars[w].push_back(v);
      balance.push_back({v, sign});
    }
  }

  // Each curve enters as its minimum export plus one bounded variable per
  // segment priced at the segment's marginal cost.
  double baseline_export = 0.0;
  double baseline_cost = 0.0;
  std::vector<std::vector<lp::VarId>> segment_vars(dso_curves.size());
  for (std::size_t c = 0; c < dso_curves.size(); ++c) {
    const auto& curve = dso_curves[c];
    if (curve.empty()) throw ModelError("DSO bid curve " + std::to_string(c) + " is empty");
    baseline_export += curve.q_min();
    baseline_cost += curve.breakpoints().front().total_cost;
    const auto segs = curve.segments();
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const auto v = program.add_variable("dso" + std::to_string(c) + "_s" + std::to_string(s),
                                          0.0, segs[s].q_hi - segs[s].q_lo, segs[s].price);
      segment_vars[c].push_back(v);
      balance.push_back({v, 1.0});
    }
  }
  program.set_objective_offset(baseline_cost);
  const auto balance_row = program.add_constraint("balance", std::move(balance), lp::Relation::Equal,
                                                  firm_load - baseline_export);

  const auto sol = lp::solve(program, tolerance);
  if (sol.status == lp::Status::Infeasible) {
    throw InfeasibleError("wholesale supply cannot meet the firm load of " +
                          std::to_string(firm_load) + " MW");
  }
  if (sol.status == lp::Status::Unbounded) {
    throw SolverError("internal error: wholesale clearing is unbounded");
  }

  IsoOutcome out;
  out.clearing_price = sol.dual_of(balance_row);
  out.objective = sol.objective;
  out.duality_gap = lp::duality_gap(program, sol);
  for (std::size_t w = 0; w < wholesale.size(); ++w) {
    ParticipantResult r{wholesale[w].id, wholesale[w].kind, 0.0, {}};
    for (const auto v : block_vars[w]) {
      r.blocks.push_back(sol.value(v));
      r.cleared += sol.value(v);
    }
    out.participants.push_back(std::move(r));
  }
  for (std::size_t c = 0; c < dso_curves.size(); ++c) {
    DsoAward award;
    award.q = dso_curves[c].q_min();
    for (const auto v : segment_vars[c]) {
      award.segments.push_back(sol.value(v));
      award.q += sol.value(v);
    }
    award.cost = dso_curves[c].cost_at(award.q);
    out.dso.push_back(std::move(award));
  }
  return out;
}

}  // namespace gridcoord::iso
