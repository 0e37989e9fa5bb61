#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace gridcoord {

using NodeId = std::size_t;
using BranchId = std::size_t;

/// One price-quantity block of an offer (generation) or bid (consumption).
struct Block {
  double p_max = 0.0;  // MW
  double price = 0.0;  // currency/MWh

  friend bool operator==(const Block&, const Block&) = default;
};

enum class StackSide { Generation, Demand };

/// Ordered blocks. Generation stacks carry nondecreasing prices, demand
/// stacks nonincreasing prices, which keeps the implied cost convex.
struct BlockOfferStack {
  std::vector<Block> blocks;

  double capacity() const;
  bool empty() const { return blocks.empty(); }

  friend bool operator==(const BlockOfferStack&, const BlockOfferStack&) = default;
};

struct Branch {
  NodeId from = 0;  // parent
  NodeId to = 0;    // child
  double r = 0.0;   // p.u.
  double x = 0.0;   // p.u.
  double pl_max = 0.0;  // MW
  double ql_max = 0.0;  // MVAr

  friend bool operator==(const Branch&, const Branch&) = default;
};

struct NodeLoad {
  double lp = 0.0;  // MW
  double lq = 0.0;  // MVAr

  friend bool operator==(const NodeLoad&, const NodeLoad&) = default;
};

/// Radial distribution network. Voltages are squared magnitudes in p.u.
struct NetworkModel {
  double base_mva = 1.0;
  std::vector<NodeLoad> nodes;
  std::vector<Branch> branches;
  NodeId substation = 0;
  double u_min = 0.81;
  double u_max = 1.21;
  double u_sub = 1.0;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t branch_count() const { return branches.size(); }

  friend bool operator==(const NetworkModel&, const NetworkModel&) = default;
};

enum class AggregatorKind { DDGAG, DRAG, REAG };

struct Aggregator {
  std::string id;
  AggregatorKind kind = AggregatorKind::DDGAG;
  NodeId node = 0;
  BlockOfferStack offers;
  double tan_phi = 0.0;
  double fixed_output = 0.0;  // MW, REAG only

  StackSide side() const {
    return kind == AggregatorKind::DRAG ? StackSide::Demand : StackSide::Generation;
  }

  friend bool operator==(const Aggregator&, const Aggregator&) = default;
};

enum class ParticipantKind { Gen, DR };

struct WholesaleParticipant {
  std::string id;
  ParticipantKind kind = ParticipantKind::Gen;
  BlockOfferStack offers;

  StackSide side() const {
    return kind == ParticipantKind::DR ? StackSide::Demand : StackSide::Generation;
  }

  friend bool operator==(const WholesaleParticipant&, const WholesaleParticipant&) = default;
};

/// How the DSO's net export couples to the aggregator dispatch.
enum class Coupling {
  Equality,  // net export fixed at the parameter
  AtLeast,   // net export may exceed the parameter
};

struct Scenario {
  NetworkModel network;
  std::vector<Aggregator> aggregators;
  std::vector<WholesaleParticipant> wholesale;
  double firm_wholesale_load = 0.0;  // MW
  double sweep_step = 0.1;           // MW
  double tolerance = 1e-7;
  Coupling coupling = Coupling::Equality;
  std::optional<double> q_dso_cap;  // optional |Q^dso| bound, MVAr

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct Violation {
  std::string path;  // e.g. "network.branches[3].r"
  std::string message;
};

/// Lists every violated structural invariant. An empty result means valid.
std::vector<Violation> validate(const Scenario& scenario);
std::vector<Violation> validate(const NetworkModel& network);

/// Parent/child orientation of every branch relative to the substation.
struct Incidence {
  std::vector<NodeId> branch_parent;            // per branch
  std::vector<NodeId> branch_child;             // per branch
  std::vector<std::optional<NodeId>> parent;    // per node; empty at the root
  std::vector<std::optional<BranchId>> parent_branch;  // per node
  std::vector<NodeId> order;                    // breadth-first from the root
};

/// Orients the tree away from the substation. Throws ModelError when the
/// branch list is not a spanning tree.
Incidence derived_incidence(const NetworkModel& network);

std::string to_string(AggregatorKind kind);
std::string to_string(ParticipantKind kind);

}  // namespace gridcoord
