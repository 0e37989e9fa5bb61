#include "gridcoord/model.hpp"

#include <cmath>
#include <numeric>
#include <queue>
#include <set>

#include "gridcoord/error.hpp"

namespace gridcoord {

namespace {

std::string indexed(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

bool finite(double v) { return std::isfinite(v); }

void check_stack(const BlockOfferStack& stack, StackSide side, const std::string& path,
                 std::vector<Violation>& out) {
  for (std::size_t b = 0; b < stack.blocks.size(); ++b) {
    const auto& blk = stack.blocks[b];
    const auto at = indexed(path + ".blocks", b);
    if (!finite(blk.p_max) || blk.p_max <= 0.0) {
      out.push_back({at + ".p_max", "block capacity must be positive and finite"});
    }
    if (!finite(blk.price)) {
      out.push_back({at + ".price", "block price must be finite"});
    }
    if (b == 0) continue;
    const double prev = stack.blocks[b - 1].price;
    if (side == StackSide::Generation && blk.price < prev) {
      out.push_back({at + ".price",
                     "generation block prices must be nondecreasing (convexity)"});
    }
    if (side == StackSide::Demand && blk.price > prev) {
      out.push_back({at + ".price", "demand block prices must be nonincreasing (convexity)"});
    }
  }
}

// Plain union-find, used only for the radiality check.
struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t find(std::size_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

}  // namespace

double BlockOfferStack::capacity() const {
  double total = 0.0;
  for (const auto& b : blocks) total += b.p_max;
  return total;
}

std::vector<Violation> validate(const NetworkModel& net) {
  std::vector<Violation> out;
  const std::size_t n = net.node_count();
  if (n == 0) {
    out.push_back({"network.nodes", "network needs at least one node"});
    return out;
  }
  if (!finite(net.base_mva) || net.base_mva <= 0.0) {
    out.push_back({"network.base_mva", "power base must be positive"});
  }
  if (net.substation >= n) {
    out.push_back({"network.substation", "substation is not a node of the network"});
  }
  if (!(net.u_min > 0.0 && net.u_min <= net.u_sub && net.u_sub <= net.u_max) ||
      !finite(net.u_max)) {
    out.push_back({"network.u_sub", "voltage bounds must satisfy 0 < u_min <= u_sub <= u_max"});
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = net.nodes[i];
    if (!finite(node.lp) || node.lp < 0.0) {
      out.push_back({indexed("network.nodes", i) + ".lp", "active firm load must be >= 0"});
    }
    if (!finite(node.lq)) {
      out.push_back({indexed("network.nodes", i) + ".lq", "reactive firm load must be finite"});
    }
  }

  bool endpoints_ok = true;
  for (std::size_t j = 0; j < net.branch_count(); ++j) {
    const auto& br = net.branches[j];
    const auto at = indexed("network.branches", j);
    if (br.from >= n || br.to >= n) {
      out.push_back({at, "branch endpoint is not a node of the network"});
      endpoints_ok = false;
    } else if (br.from == br.to) {
      out.push_back({at, "branch is a self-loop"});
      endpoints_ok = false;
    }
    if (!finite(br.r) || br.r < 0.0) out.push_back({at + ".r", "resistance must be >= 0"});
    if (!finite(br.x) || br.x < 0.0) out.push_back({at + ".x", "reactance must be >= 0"});
    if (!(br.pl_max > 0.0)) out.push_back({at + ".pl_max", "active flow limit must be > 0"});
    if (!(br.ql_max > 0.0)) out.push_back({at + ".ql_max", "reactive flow limit must be > 0"});
  }

  if (endpoints_ok) {
    DisjointSets sets(n);
    bool acyclic = true;
    for (const auto& br : net.branches) acyclic = sets.unite(br.from, br.to) && acyclic;
    const bool tree_count = net.branch_count() + 1 == n;
    if (!acyclic || !tree_count) {
      out.push_back({"network.branches",
                     "network must be radial: a tree with |branches| = |nodes| - 1"});
    } else {
      const auto root = sets.find(0);
      for (std::size_t i = 1; i < n; ++i) {
        if (sets.find(i) != root) {
          out.push_back({"network.branches", "network must be radial: graph is disconnected"});
          break;
        }
      }
    }
  }
  return out;
}

std::vector<Violation> validate(const Scenario& sc) {
  auto out = validate(sc.network);
  const std::size_t n = sc.network.node_count();
  std::set<std::string> ids;

  for (std::size_t a = 0; a < sc.aggregators.size(); ++a) {
    const auto& agg = sc.aggregators[a];
    const auto at = indexed("aggregators", a);
    if (agg.id.empty()) out.push_back({at + ".id", "identifier must not be empty"});
    if (!ids.insert(agg.id).second) out.push_back({at + ".id", "duplicate identifier"});
    if (agg.node >= n) out.push_back({at + ".node", "aggregator sits on an unknown node"});
    if (!finite(agg.tan_phi)) out.push_back({at + ".tan_phi", "tan_phi must be finite"});
    if (agg.kind == AggregatorKind::REAG) {
      if (!agg.offers.empty()) {
        out.push_back({at + ".blocks", "REAG output is fixed; it carries no offer blocks"});
      }
      if (!finite(agg.fixed_output) || agg.fixed_output < 0.0) {
        out.push_back({at + ".fixed_output", "REAG fixed output must be >= 0"});
      }
    } else {
      if (agg.fixed_output != 0.0) {
        out.push_back({at + ".fixed_output", "only REAG aggregators have a fixed output"});
      }
      check_stack(agg.offers, agg.side(), at, out);
    }
  }

  for (std::size_t w = 0; w < sc.wholesale.size(); ++w) {
    const auto& p = sc.wholesale[w];
    const auto at = indexed("wholesale", w);
    if (p.id.empty()) out.push_back({at + ".id", "identifier must not be empty"});
    if (!ids.insert(p.id).second) out.push_back({at + ".id", "duplicate identifier"});
    check_stack(p.offers, p.side(), at, out);
  }

  if (!finite(sc.firm_wholesale_load)) {
    out.push_back({"firm_load", "firm load must be finite"});
  }
  if (!finite(sc.sweep_step) || sc.sweep_step <= 0.0) {
    out.push_back({"sweep_step", "sweep step must be > 0"});
  }
  if (!finite(sc.tolerance) || sc.tolerance <= 0.0) {
    out.push_back({"tolerance", "tolerance must be > 0"});
  }
  if (sc.q_dso_cap && !(*sc.q_dso_cap > 0.0)) {
    out.push_back({"q_dso_cap", "reactive exchange cap must be > 0"});
  }
  return out;
}

Incidence derived_incidence(const NetworkModel& net) {
  const std::size_t n = net.node_count();
  if (n == 0 || net.substation >= n || net.branch_count() + 1 != n) {
    throw ModelError("network is not radial: expected a tree rooted at the substation");
  }
  std::vector<std::vector<BranchId>> adjacent(n);
  for (BranchId j = 0; j < net.branch_count(); ++j) {
    const auto& br = net.branches[j];
    if (br.from >= n || br.to >= n || br.from == br.to) {
      throw ModelError("branch " + std::to_string(j) + " has an invalid endpoint");
    }
    adjacent[br.from].push_back(j);
    adjacent[br.to].push_back(j);
  }

  Incidence inc;
  inc.branch_parent.assign(net.branch_count(), 0);
  inc.branch_child.assign(net.branch_count(), 0);
  inc.parent.assign(n, std::nullopt);
  inc.parent_branch.assign(n, std::nullopt);
  inc.order.reserve(n);

  std::vector<bool> seen(n, false);
  std::queue<NodeId> frontier;
  frontier.push(net.substation);
  seen[net.substation] = true;
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop();
    inc.order.push_back(u);
    for (BranchId j : adjacent[u]) {
      if (inc.parent_branch[u] == j) continue;
      const auto& br = net.branches[j];
      const NodeId v = br.from == u ? br.to : br.from;
      if (seen[v]) throw ModelError("network is not radial: branch list contains a cycle");
      seen[v] = true;
      inc.parent[v] = u;
      inc.parent_branch[v] = j;
      inc.branch_parent[j] = u;
      inc.branch_child[j] = v;
      frontier.push(v);
    }
  }
  if (inc.order.size() != n) {
    throw ModelError("network is not radial: some nodes are unreachable from the substation");
  }
  return inc;
}

std::string to_string(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::DDGAG: return "DDGAG";
    case AggregatorKind::DRAG: return "DRAG";
    case AggregatorKind::REAG: return "REAG";
  }
  return "?";
}

std::string to_string(ParticipantKind kind) {
  return kind == ParticipantKind::Gen ? "Gen" : "DR";
}

}  // namespace gridcoord
