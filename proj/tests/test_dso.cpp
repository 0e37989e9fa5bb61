#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "gridcoord/dso_market.hpp"
#include "gridcoord/error.hpp"
#include "oracles.hpp"

using namespace gridcoord;
using doctest::Approx;

namespace {

Aggregator ddgag(std::string id, NodeId node, std::vector<Block> blocks) {
  Aggregator a;
  a.id = std::move(id);
  a.kind = AggregatorKind::DDGAG;
  a.node = node;
  a.offers.blocks = std::move(blocks);
  return a;
}

Scenario single_node(std::vector<Aggregator> aggs) {
  Scenario sc;
  sc.network.nodes.assign(2, NodeLoad{});
  sc.network.branches.push_back({0, 1, 0.001, 0.001, 10.0, 10.0});
  sc.aggregators = std::move(aggs);
  return sc;
}

void check_same_breakpoints(const std::vector<dso::Breakpoint>& got,
                            const std::vector<dso::Breakpoint>& want, double tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].q == Approx(want[i].q).epsilon(tol));
    CHECK(got[i].total_cost == Approx(want[i].total_cost).epsilon(tol));
  }
}

}  // namespace

TEST_CASE("reference feeder range and end-point costs") {
  const auto sc = testing::fixture("paper_reference");
  const auto [lo, hi] = dso::feasible_range(sc);
  CHECK(lo == Approx(-1.5));
  CHECK(hi == Approx(5.7));
  CHECK(dso::value_at(sc, -1.5).cost == Approx(-70.0));
  CHECK(dso::value_at(sc, 5.7).cost == Approx(86.0));
}

TEST_CASE("reference dispatch at 1.2 MW") {
  const auto d = dso::value_at(testing::fixture("paper_reference"), 1.2);
  const std::vector<double> want{0.5, 1.0, 1.2, 0.0, 2.5, 1.0};
  REQUIRE(d.aggregators.size() == want.size());
  for (std::size_t a = 0; a < want.size(); ++a) CHECK(d.aggregators[a].mw == Approx(want[a]));
  CHECK(d.cost == Approx(-32.0));
}

TEST_CASE("a lone renewable aggregator pins the range to its output") {
  Aggregator re;
  re.id = "RE";
  re.kind = AggregatorKind::REAG;
  re.node = 1;
  re.fixed_output = 1.0;
  const auto [lo, hi] = dso::feasible_range(single_node({re}));
  CHECK(lo == Approx(1.0));
  CHECK(hi == Approx(1.0));
}

TEST_CASE("single DDGAG 2 MW at 24 gives one segment") {
  const auto curve = dso::build_bid_curve(single_node({ddgag("G", 1, {{2.0, 24.0}})}));
  const auto segs = curve.segments();
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].q_lo == Approx(0.0));
  CHECK(segs[0].q_hi == Approx(2.0));
  CHECK(segs[0].price == Approx(24.0));
}

TEST_CASE("empty feeder rejects any nonzero export") {
  const dso::DsoProblem problem(single_node({}));
  const auto [lo, hi] = problem.feasible_range();
  CHECK(lo == Approx(0.0));
  CHECK(hi == Approx(0.0));
  CHECK_THROWS_AS(problem.dispatch(0.5), InfeasibleError);
}

TEST_CASE("reference curve matches the merit-order oracle") {
  const auto sc = testing::fixture("paper_reference");
  const auto curve = dso::build_bid_curve(sc);
  check_same_breakpoints(curve.breakpoints(), oracle::merit_order_breakpoints(sc), 1e-9);
  const std::vector<double> prices{10, 15, 20, 24, 28};
  const auto segs = curve.segments();
  REQUIRE(segs.size() == prices.size());
  for (std::size_t i = 0; i < segs.size(); ++i) CHECK(segs[i].price == Approx(prices[i]));
}

TEST_CASE("breakpoint costs agree with direct solves") {
  for (const char* name : {"paper_reference", "voltage_binding"}) {
    const auto sc = testing::fixture(name);
    const auto curve = dso::build_bid_curve(sc);
    for (const auto& bp : curve.breakpoints()) {
      CHECK(dso::value_at(sc, bp.q).cost == Approx(bp.total_cost).epsilon(1e-9));
    }
  }
}

TEST_CASE("marginal curve steps match finite differences of the value function") {
  const auto sc = testing::fixture("voltage_binding");
  const dso::DsoProblem problem(sc);
  const auto curve = dso::build_bid_curve(problem);
  for (const auto& step : dso::marginal_curve(curve)) {
    const double h = 0.25 * (step.q_hi - step.q_lo);
    const double mid = 0.5 * (step.q_lo + step.q_hi);
    const double fd = (problem.dispatch(mid + h).cost - problem.dispatch(mid - h).cost) / (2 * h);
    CHECK(fd == Approx(step.price).epsilon(1e-6));
  }
}

TEST_CASE("equality and at-least coupling give the same reference curve") {
  auto sc = testing::fixture("paper_reference");
  const auto eq = dso::build_bid_curve(sc);
  sc.coupling = Coupling::AtLeast;
  const auto ge = dso::build_bid_curve(sc);
  check_same_breakpoints(ge.breakpoints(), eq.breakpoints(), 1e-9);
}

TEST_CASE("curve construction rejects non-convex breakpoints") {
  CHECK_THROWS_AS(dso::BidCurve::from_breakpoints({{0, 0}, {1, 10}, {2, 15}}), ModelError);
  CHECK_THROWS_AS(dso::BidCurve::from_breakpoints({{0, 0}, {0, 1}}), ModelError);
  const auto c = dso::BidCurve::from_samples({{0, 0}, {1, 5}, {2, 10}, {3, 20}});
  CHECK(c.breakpoints().size() == 3);
  CHECK(c.cost_at(2.5) == Approx(15.0));
  CHECK_THROWS_AS(c.cost_at(3.5), InfeasibleError);
  CHECK(c.marginal_at(2.0) == Approx(10.0));
  CHECK(c.marginal_at(3.0) == Approx(10.0));
}

TEST_CASE("property: random unconstrained feeders reproduce the merit-order curve") {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    auto sc = testing::random_scenario(rng);
    for (auto& b : sc.network.branches) b.r = b.x = 0.0;
    check_same_breakpoints(dso::build_bid_curve(sc).breakpoints(),
                           oracle::merit_order_breakpoints(sc), 1e-7);
  }
}

TEST_CASE("property: sweep samples are convex and duals are subgradients") {
  std::mt19937 rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    const auto sc = testing::random_scenario(rng);
    const dso::DsoProblem problem(sc);
    const auto curve = dso::build_bid_curve(problem);
    CHECK(oracle::worst_convexity_violation(curve.samples) <= 1e-7);
    const double h = 1e-4;
    for (const auto& s : curve.samples) {
      if (s.q - h >= curve.q_min()) {
        const double back = (s.total_cost - problem.dispatch(s.q - h).cost) / h;
        CHECK(s.dual >= back - 1e-5);
      }
      if (s.q + h <= curve.q_max()) {
        const double fwd = (problem.dispatch(s.q + h).cost - s.total_cost) / h;
        CHECK(s.dual <= fwd + 1e-5);
      }
    }
  }
}

TEST_CASE("property: dispatch is monotone in the export") {
  const auto sc = testing::fixture("paper_reference");
  const dso::DsoProblem problem(sc);
  std::vector<double> prev;
  for (double q = -1.5; q <= 5.7 + 1e-9; q += 0.1) {
    const auto d = problem.dispatch(q);
    std::vector<double> net;
    for (const auto& a : d.aggregators) {
      net.push_back(a.kind == AggregatorKind::DRAG ? -a.mw : a.mw);
    }
    for (std::size_t a = 0; a < prev.size(); ++a) CHECK(net[a] >= prev[a] - 1e-9);
    prev = net;
  }
}
