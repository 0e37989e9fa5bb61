#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "gridcoord/case_io.hpp"

using namespace gridcoord;
using io::CaseError;

namespace {

CaseError parse_error(const std::string& text) {
  try {
    io::parse_case_text(text);
  } catch (const CaseError& e) {
    return e;
  }
  FAIL("expected a CaseError");
  return CaseError(CaseError::Kind::Io, "", "");
}

const char* kMinimal = R"({
  "network": {"u_min": 0.81, "u_max": 1.21, "u_sub": 1.0, "substation": 0,
              "nodes": [{"id": 0}, {"id": 1}],
              "branches": [{"from": 0, "to": 1, "r": 0.01, "x": 0.01, "pl_max": 5, "ql_max": 5}]},
  "aggregators": [{"id": "A", "kind": "DDGAG", "node": 1, "blocks": [{"p_max": 1, "price": 10}]}],
  "wholesale": [{"id": "G", "kind": "Gen", "blocks": [{"p_max": 10, "price": 8}]}],
  "firm_load": 5
})";

}  // namespace

TEST_CASE("bundled fixtures parse") {
  for (const char* name : {"paper_reference", "paper_as_printed", "voltage_binding"}) {
    const auto sc = testing::fixture(name);
    CHECK(sc.wholesale.size() == 6);
    CHECK(sc.aggregators.size() == 6);
    CHECK(sc.network.node_count() == 10);
  }
  CHECK(testing::fixture("paper_reference").wholesale[5].offers.capacity() == 10.0);
  CHECK(testing::fixture("paper_as_printed").wholesale[5].offers.capacity() == 20.0);
}

TEST_CASE("minimal document parses with defaults") {
  const auto sc = io::parse_case_text(kMinimal);
  CHECK(sc.sweep_step == 0.1);
  CHECK(sc.coupling == Coupling::Equality);
  CHECK(sc.network.base_mva == 1.0);
  CHECK(sc.firm_wholesale_load == 5.0);
}

TEST_CASE("empty and malformed documents are syntax errors with a position") {
  CHECK(parse_error("").kind() == CaseError::Kind::Syntax);
  const auto e = parse_error("{\n  \"network\": [1,\n}");
  CHECK(e.kind() == CaseError::Kind::Syntax);
  CHECK(e.location().find("line 3") != std::string::npos);
}

TEST_CASE("schema errors carry a pointer to the field") {
  std::string doc = kMinimal;
  doc.replace(doc.find("\"r\": 0.01"), 9, "\"r\": \"big\"");
  auto e = parse_error(doc);
  CHECK(e.kind() == CaseError::Kind::Schema);
  CHECK(e.location() == "/network/branches/0/r");

  doc = kMinimal;
  doc.replace(doc.find("\"DDGAG\""), 7, "\"BATTERY\"");
  e = parse_error(doc);
  CHECK(e.kind() == CaseError::Kind::Schema);
  CHECK(e.location() == "/aggregators/0/kind");

  e = parse_error(R"({"aggregators": []})");
  CHECK(e.location() == "/network");
}

TEST_CASE("validation failures are reported against the offending field") {
  std::string doc = kMinimal;
  const std::string one = R"("blocks": [{"p_max": 1, "price": 10}])";
  doc.replace(doc.find(one), one.size(),
              R"("blocks": [{"p_max": 1, "price": 10}, {"p_max": 1, "price": 5}])");
  const auto e = parse_error(doc);
  CHECK(e.kind() == CaseError::Kind::Validation);
  CHECK(e.location() == "/aggregators/0/blocks/1/price");
}

TEST_CASE("missing files and unknown names are I/O errors") {
  CHECK_THROWS_AS(io::resolve_case("no_such_case"), CaseError);
  CHECK_THROWS_AS(io::parse_case("/nonexistent/case.json"), CaseError);
}

TEST_CASE("property: emit then parse reproduces the scenario") {
  CHECK(io::parse_case_text(io::emit_case(testing::fixture("voltage_binding"))) ==
        testing::fixture("voltage_binding"));
  std::mt19937 rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    auto sc = testing::random_scenario(rng);
    if (trial % 3 == 0) sc.coupling = Coupling::AtLeast;
    if (trial % 4 == 0) sc.q_dso_cap = 2.5;
    const auto text = io::emit_case(sc);
    CHECK(io::parse_case_text(text) == sc);
    CHECK(io::emit_case(io::parse_case_text(text)) == text);
  }
}
