#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "gridcoord/dso_market.hpp"
#include "gridcoord/error.hpp"
#include "gridcoord/iso_market.hpp"

using namespace gridcoord;
using doctest::Approx;

namespace {

WholesaleParticipant gen(std::string id, std::vector<Block> blocks) {
  return {std::move(id), ParticipantKind::Gen, {std::move(blocks)}};
}

WholesaleParticipant dr(std::string id, std::vector<Block> blocks) {
  return {std::move(id), ParticipantKind::DR, {std::move(blocks)}};
}

double cleared(const iso::IsoOutcome& o, const std::string& id) {
  for (const auto& p : o.participants) {
    if (p.id == id) return p.cleared;
  }
  FAIL("no participant " << id);
  return 0.0;
}

}  // namespace

TEST_CASE("one generator serving a firm load sets the price") {
  const auto o = iso::clear({gen("G", {{10, 8}})}, {}, 5.0);
  CHECK(cleared(o, "G") == Approx(5.0));
  CHECK(o.clearing_price == Approx(8.0));
  CHECK(o.objective == Approx(40.0));
  CHECK(o.balance_residual(5.0) == Approx(0.0).epsilon(1e-12));
}

TEST_CASE("firm load beyond supply is infeasible") {
  CHECK_THROWS_AS(iso::clear({gen("G", {{10, 8}})}, {}, 11.0), InfeasibleError);
}

TEST_CASE("reference market against the reference DSO curve") {
  const auto sc = testing::fixture("paper_reference");
  const auto o = iso::clear(sc.wholesale, {dso::build_bid_curve(sc)}, sc.firm_wholesale_load);
  CHECK(cleared(o, "Gen1") == Approx(10.0));
  CHECK(cleared(o, "Gen2") == Approx(20.0));
  CHECK(cleared(o, "Gen3") == Approx(13.8));
  CHECK(cleared(o, "DR1") == Approx(10.0));
  CHECK(cleared(o, "DR2") == Approx(20.0));
  CHECK(cleared(o, "DR3") == Approx(10.0));
  CHECK(o.dso.front().q == Approx(1.2));
  CHECK(o.clearing_price == Approx(22.0));
  CHECK(o.objective == Approx(-528.4));
}

TEST_CASE("as-printed DR3 capacity shifts the extra demand onto Gen3") {
  const auto sc = testing::fixture("paper_as_printed");
  const auto o = iso::clear(sc.wholesale, {dso::build_bid_curve(sc)}, sc.firm_wholesale_load);
  CHECK(cleared(o, "Gen3") == Approx(23.8));
  CHECK(cleared(o, "DR3") == Approx(20.0));
  CHECK(o.dso.front().q == Approx(1.2));
}

TEST_CASE("DSO segments fill in price order") {
  const auto curve = dso::BidCurve::from_breakpoints({{-1, -10}, {0, 0}, {1, 20}, {2, 50}});
  const auto o = iso::clear({gen("G", {{10, 25}})}, {curve}, 3.0);
  // Segments cost 10, 20, 30: the first two beat G, the third does not.
  CHECK(o.dso.front().q == Approx(1.0));
  CHECK(cleared(o, "G") == Approx(2.0));
  CHECK(o.clearing_price == Approx(25.0));
  REQUIRE(o.dso.front().segments.size() == 3);
  CHECK(o.dso.front().segments[0] == Approx(1.0));
  CHECK(o.dso.front().segments[1] == Approx(1.0));
  CHECK(o.dso.front().segments[2] == Approx(0.0));
}

TEST_CASE("property: zero-capacity participants change nothing") {
  const auto sc = testing::fixture("paper_reference");
  const auto curve = dso::build_bid_curve(sc);
  const auto base = iso::clear(sc.wholesale, {curve}, sc.firm_wholesale_load);
  auto padded = sc.wholesale;
  padded.push_back(gen("Z1", {{0, 1}}));
  padded.push_back(dr("Z2", {{0, 100}}));
  const auto o = iso::clear(padded, {curve}, sc.firm_wholesale_load);
  CHECK(o.objective == Approx(base.objective));
  CHECK(o.clearing_price == Approx(base.clearing_price));
  CHECK(o.dso.front().q == Approx(base.dso.front().q));
  CHECK(cleared(o, "Z1") == 0.0);
  CHECK(cleared(o, "Z2") == 0.0);
}

TEST_CASE("property: the award is a best response on the DSO curve") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const auto sc = testing::random_scenario(rng);
    const auto curve = dso::build_bid_curve(sc);
    const auto o = iso::clear(sc.wholesale, {curve}, sc.firm_wholesale_load);
    const double q = o.dso.front().q;
    const double price = o.clearing_price;
    CHECK(q >= curve.q_min() - 1e-9);
    CHECK(q <= curve.q_max() + 1e-9);
    CHECK(o.balance_residual(sc.firm_wholesale_load) == Approx(0.0).scale(1.0).epsilon(1e-7));
    // lambda q - C(q) is maximal at the award, checked over every breakpoint.
    const double profit = price * q - curve.cost_at(q);
    for (const auto& bp : curve.breakpoints()) {
      CHECK(price * bp.q - bp.total_cost <= profit + 1e-6);
    }
  }
}
