#pragma once

#include <variant>
#include <vector>

#include "gridcoord/lp.hpp"
#include "gridcoord/model.hpp"

namespace gridcoord::distflow {

/// Net active export at the substation: either a fixed parameter (folded
/// into the substation balance right-hand side) or a caller-owned variable.
using ExportTerm = std::variant<double, lp::VarId>;

/// Handles to everything the LinDistFlow builder emitted.
///
/// Active balance at node n, with branch flows oriented parent to child:
///   sum_g P_g - sum_d P_d + inflow(Pl) - outflow(Pl) - [n = sub] p_dso
///     = L^P_n - REAG_n
/// The row dual is therefore the marginal cost of one more MW of load at n,
/// and at the substation it is also the marginal cost of exporting.
struct DistFlowVars {
  std::vector<std::vector<lp::VarId>> blocks;  // per aggregator; empty for REAG
  std::vector<lp::VarId> pl;                   // per branch, MW
  std::vector<lp::VarId> ql;                   // per branch, MVAr
  std::vector<lp::VarId> u;                    // per node, p.u. squared
  lp::VarId q_dso;                             // reactive exchange, MVAr

  std::vector<lp::RowId> active_balance;    // per node
  std::vector<lp::RowId> reactive_balance;  // per node
  std::vector<lp::RowId> voltage_drop;      // per branch
  lp::RowId substation_voltage;

  Incidence incidence;
  std::size_t first_variable = 0;
  std::size_t last_variable = 0;  // one past the end

  std::size_t variable_count() const { return last_variable - first_variable; }
};

struct Options {
  std::optional<double> q_dso_cap;  // |Q^dso| bound; free when empty
};

/// Appends the distribution constraint set to `lp`. Costs are left at zero.
/// Throws ModelError for a non-radial network or an aggregator on an
/// unknown node.
DistFlowVars build_constraints(lp::LinearProgram& lp, const NetworkModel& network,
                               const std::vector<Aggregator>& aggregators, ExportTerm p_dso,
                               const Options& options = {});

/// Sets each block variable's cost: offer price for generation, minus the
/// bid price for demand.
void add_aggregator_costs(lp::LinearProgram& lp, const DistFlowVars& vars,
                          const std::vector<Aggregator>& aggregators);

/// Fixed-output injection summed over REAG aggregators at each node.
std::vector<double> fixed_injection(const NetworkModel& network,
                                    const std::vector<Aggregator>& aggregators);

}  // namespace gridcoord::distflow
