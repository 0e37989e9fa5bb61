#pragma once

#include <string>
#include <vector>

#include "gridcoord/dso_market.hpp"
#include "gridcoord/iso_market.hpp"
#include "gridcoord/model.hpp"

namespace gridcoord::coord {

/// DSO bid curve, wholesale clearing against it, and the DSO re-dispatch at
/// the award.
struct CoordinationResult {
  dso::BidCurve bid_curve;
  iso::IsoOutcome iso;
  dso::DsoDispatch dso_dispatch;

  /// Wholesale cost plus the DSO's internal cost at the award.
  double total_cost() const { return iso.objective; }
};

/// Joint dispatch with every aggregator offered straight into the wholesale
/// market, subject to the full distribution constraints.
struct IdealOutcome {
  iso::IsoOutcome iso;  // dso[0].q is the substation exchange
  dso::DsoDispatch aggregators;
};

CoordinationResult run_coordinated(const Scenario& scenario);
IdealOutcome run_ideal(const Scenario& scenario);

struct ComparedQuantity {
  std::string id;
  double ideal = 0.0;
  double coordinated = 0.0;
  double face_lo = 0.0;  // range of this quantity over all ideal optima
  double face_hi = 0.0;
  double deviation = 0.0;  // distance from coordinated to [face_lo, face_hi]

  bool unique(double tol) const { return face_hi - face_lo <= tol; }
};

struct EquivalenceReport {
  bool pass = false;
  double tolerance = 0.0;
  double max_deviation = 0.0;
  double objective_ideal = 0.0;
  double objective_coordinated = 0.0;
  std::vector<ComparedQuantity> quantities;  // participants, aggregators, then the exchange
};

/// Runs both pipelines and compares objective, every cleared quantity, and
/// the DSO exchange. Where the ideal optimum is not unique, a coordinated
/// quantity only has to lie within the range it spans over the ideal
/// optimal face.
EquivalenceReport check_equivalence(const Scenario& scenario, double tolerance);

}  // namespace gridcoord::coord
