#include "gridcoord/distflow.hpp"

#include <string>

#include "gridcoord/error.hpp"

namespace gridcoord::distflow {

namespace {

std::string tag(const char* what, std::size_t i) { return std::string(what) + std::to_string(i); }

}  // namespace

std::vector<double> fixed_injection(const NetworkModel& network,
                                    const std::vector<Aggregator>& aggregators) {
  std::vector<double> inj(network.node_count(), 0.0);
  for (const auto& a : aggregators) {
    if (a.kind == AggregatorKind::REAG && a.node < inj.size()) inj[a.node] += a.fixed_output;
  }
  return inj;
}

DistFlowVars build_constraints(lp::LinearProgram& lp, const NetworkModel& net,
                               const std::vector<Aggregator>& aggregators, ExportTerm p_dso,
                               const Options& options) {
  using lp::Relation;
  using lp::Term;

  DistFlowVars v;
  v.incidence = derived_incidence(net);
  const std::size_t n = net.node_count();
  for (const auto& a : aggregators) {
    if (a.node >= n) throw ModelError("aggregator '" + a.id + "' sits on an unknown node");
  }

  v.first_variable = lp.num_variables();
  v.blocks.resize(aggregators.size());
  for (std::size_t a = 0; a < aggregators.size(); ++a) {
    const auto& agg = aggregators[a];
    if (agg.kind == AggregatorKind::REAG) continue;
    for (std::size_t b = 0; b < agg.offers.blocks.size(); ++b) {
      v.blocks[a].push_back(
          lp.add_variable(agg.id + "_b" + std::to_string(b), 0.0, agg.offers.blocks[b].p_max));
    }
  }
  for (std::size_t j = 0; j < net.branch_count(); ++j) {
    const auto& br = net.branches[j];
    v.pl.push_back(lp.add_variable(tag("Pl", j), -br.pl_max, br.pl_max));
    v.ql.push_back(lp.add_variable(tag("Ql", j), -br.ql_max, br.ql_max));
  }
  for (std::size_t k = 0; k < n; ++k) {
    v.u.push_back(lp.add_variable(tag("U", k), net.u_min, net.u_max));
  }
  const double qcap = options.q_dso_cap.value_or(lp::kInf);
  v.q_dso = lp.add_variable("Qdso", -qcap, qcap);
  v.last_variable = lp.num_variables();

  // Per-node term lists, filled from the aggregators and branches.
  std::vector<std::vector<Term>> active(n);
  std::vector<std::vector<Term>> reactive(n);
  for (std::size_t a = 0; a < aggregators.size(); ++a) {
    const auto& agg = aggregators[a];
    const double sign = agg.side() == StackSide::Generation ? 1.0 : -1.0;
    for (const auto var : v.blocks[a]) {
      active[agg.node].push_back({var, sign});
      if (agg.tan_phi != 0.0) reactive[agg.node].push_back({var, sign * agg.tan_phi});
    }
  }
  for (std::size_t j = 0; j < net.branch_count(); ++j) {
    const NodeId parent = v.incidence.branch_parent[j];
    const NodeId child = v.incidence.branch_child[j];
    active[parent].push_back({v.pl[j], -1.0});
    active[child].push_back({v.pl[j], 1.0});
    reactive[parent].push_back({v.ql[j], -1.0});
    reactive[child].push_back({v.ql[j], 1.0});
  }
  reactive[net.substation].push_back({v.q_dso, -1.0});

  double export_rhs = 0.0;
  if (const auto* var = std::get_if<lp::VarId>(&p_dso)) {
    active[net.substation].push_back({*var, -1.0});
  } else {
    export_rhs = std::get<double>(p_dso);
  }

  std::vector<double> reag_p(n, 0.0);
  std::vector<double> reag_q(n, 0.0);
  for (const auto& agg : aggregators) {
    if (agg.kind != AggregatorKind::REAG) continue;
    reag_p[agg.node] += agg.fixed_output;
    reag_q[agg.node] += agg.fixed_output * agg.tan_phi;
  }

  for (std::size_t k = 0; k < n; ++k) {
    double rhs = net.nodes[k].lp - reag_p[k];
    if (k == net.substation) rhs += export_rhs;
    v.active_balance.push_back(
        lp.add_constraint(tag("Pbal", k), std::move(active[k]), Relation::Equal, rhs));
  }
  for (std::size_t k = 0; k < n; ++k) {
    v.reactive_balance.push_back(lp.add_constraint(tag("Qbal", k), std::move(reactive[k]),
                                                   Relation::Equal,
                                                   net.nodes[k].lq - reag_q[k]));
  }
  // U_child - U_parent + 2 (r Pl + x Ql) = 0
  for (std::size_t j = 0; j < net.branch_count(); ++j) {
    const auto& br = net.branches[j];
    std::vector<Term> terms{{v.u[v.incidence.branch_child[j]], 1.0},
                            {v.u[v.incidence.branch_parent[j]], -1.0}};
    if (br.r != 0.0) terms.push_back({v.pl[j], 2.0 * br.r});
    if (br.x != 0.0) terms.push_back({v.ql[j], 2.0 * br.x});
    v.voltage_drop.push_back(lp.add_constraint(tag("Vdrop", j), std::move(terms), Relation::Equal, 0.0));
  }
  v.substation_voltage = lp.add_constraint("Usub", {{v.u[net.substation], 1.0}},
                                           Relation::Equal, net.u_sub);
  return v;
}

void add_aggregator_costs(lp::LinearProgram& lp, const DistFlowVars& vars,
                          const std::vector<Aggregator>& aggregators) {
  for (std::size_t a = 0; a < aggregators.size(); ++a) {
    const auto& agg = aggregators[a];
    const double sign = agg.side() == StackSide::Generation ? 1.0 : -1.0;
    for (std::size_t b = 0; b < vars.blocks[a].size(); ++b) {
      lp.set_cost(vars.blocks[a][b], sign * agg.offers.blocks[b].price);
    }
  }
}

}  // namespace gridcoord::distflow
