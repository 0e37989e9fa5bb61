#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "gridcoord/case_io.hpp"
#include "gridcoord/model.hpp"

namespace testing {

inline gridcoord::Scenario fixture(const std::string& name) {
  return gridcoord::io::parse_case(gridcoord::io::resolve_case(name));
}

inline gridcoord::BlockOfferStack random_stack(std::mt19937& rng, gridcoord::StackSide side,
                                               int max_blocks, double max_mw) {
  std::uniform_int_distribution<int> nblocks(1, max_blocks);
  std::uniform_int_distribution<int> price(5, 40);  // integers so that ties happen
  std::uniform_real_distribution<double> mw(0.1, max_mw);
  gridcoord::BlockOfferStack s;
  const int n = nblocks(rng);
  std::vector<int> prices;
  for (int b = 0; b < n; ++b) prices.push_back(price(rng));
  std::sort(prices.begin(), prices.end());
  if (side == gridcoord::StackSide::Demand) std::reverse(prices.begin(), prices.end());
  for (int p : prices) s.blocks.push_back({std::round(mw(rng) * 10.0) / 10.0, double(p)});
  return s;
}

/// Random radial feeder with small impedances, so that voltage limits stay
/// slack, carrying DDGAG, DRAG and REAG aggregators plus a wholesale side
/// deep enough to serve the firm load.
inline gridcoord::Scenario random_scenario(std::mt19937& rng, std::size_t max_nodes = 12) {
  using namespace gridcoord;
  std::uniform_int_distribution<std::size_t> nnodes(2, max_nodes);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Scenario sc;
  const std::size_t n = nnodes(rng);
  sc.network.nodes.assign(n, NodeLoad{});
  sc.network.substation = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  std::vector<NodeId> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t k = 1; k < n; ++k) {
    const NodeId attach = perm[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)];
    const double r = 1e-4 + 1e-3 * unit(rng);
    const double x = 1e-4 + 1e-3 * unit(rng);
    if (unit(rng) < 0.5) {
      sc.network.branches.push_back({attach, perm[k], r, x, 50.0, 50.0});
    } else {
      sc.network.branches.push_back({perm[k], attach, r, x, 50.0, 50.0});
    }
  }
  for (auto& load : sc.network.nodes) {
    if (unit(rng) < 0.3) load = {std::round(unit(rng) * 5.0) / 10.0, 0.1 * unit(rng)};
  }

  std::uniform_int_distribution<std::size_t> node(0, n - 1);
  const int naggs = std::uniform_int_distribution<int>(1, 5)(rng);
  for (int a = 0; a < naggs; ++a) {
    Aggregator agg;
    agg.id = "A" + std::to_string(a + 1);
    agg.node = node(rng);
    agg.tan_phi = 0.3 * unit(rng);
    const double pick = unit(rng);
    if (pick < 0.55) {
      agg.kind = AggregatorKind::DDGAG;
      agg.offers = random_stack(rng, StackSide::Generation, 3, 2.0);
    } else if (pick < 0.85) {
      agg.kind = AggregatorKind::DRAG;
      agg.offers = random_stack(rng, StackSide::Demand, 3, 2.0);
    } else {
      agg.kind = AggregatorKind::REAG;
      agg.fixed_output = std::round(unit(rng) * 10.0) / 10.0;
    }
    sc.aggregators.push_back(std::move(agg));
  }

  const int ngen = std::uniform_int_distribution<int>(1, 3)(rng);
  for (int g = 0; g < ngen; ++g) {
    sc.wholesale.push_back({"G" + std::to_string(g + 1), ParticipantKind::Gen,
                            random_stack(rng, StackSide::Generation, 3, 10.0)});
    sc.wholesale.back().offers.blocks.push_back({20.0, 60.0});  // backstop
  }
  const int ndr = std::uniform_int_distribution<int>(0, 2)(rng);
  for (int d = 0; d < ndr; ++d) {
    sc.wholesale.push_back({"D" + std::to_string(d + 1), ParticipantKind::DR,
                            random_stack(rng, StackSide::Demand, 3, 5.0)});
  }
  sc.firm_wholesale_load = std::round(unit(rng) * 100.0) / 10.0;

  // Firm load no smaller than the export the feeder cannot avoid.
  double forced = 0.0;
  for (const auto& load : sc.network.nodes) forced -= load.lp;
  for (const auto& a : sc.aggregators) {
    if (a.kind == AggregatorKind::REAG) forced += a.fixed_output;
    if (a.kind == AggregatorKind::DRAG) forced -= a.offers.capacity();
  }
  sc.firm_wholesale_load = std::max(sc.firm_wholesale_load, std::ceil(forced * 10.0) / 10.0);
  return sc;
}

}  // namespace testing
