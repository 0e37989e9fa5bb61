#pragma once

#include <string>
#include <vector>

#include "gridcoord/dso_market.hpp"
#include "gridcoord/model.hpp"

namespace gridcoord::iso {

struct ParticipantResult {
  std::string id;
  ParticipantKind kind = ParticipantKind::Gen;
  double cleared = 0.0;  // MW
  std::vector<double> blocks;
};

struct DsoAward {
  double q = 0.0;     // MW, + = DSO exports to the grid
  double cost = 0.0;  // DSO curve cost at q
  std::vector<double> segments;  // fill of each curve segment
};

struct IsoOutcome {
  std::vector<ParticipantResult> participants;
  std::vector<DsoAward> dso;
  double clearing_price = 0.0;  // currency/MWh
  double objective = 0.0;       // currency/h
  double duality_gap = 0.0;

  /// Generation plus DSO exports minus cleared demand minus firm load.
  double balance_residual(double firm_load) const;
};

/// Single-bus economic dispatch over wholesale stacks and DSO bid curves.
/// The clearing price is the dual of the power balance. Throws
/// InfeasibleError when supply cannot meet the firm load.
IsoOutcome clear(const std::vector<WholesaleParticipant>& wholesale,
                 const std::vector<dso::BidCurve>& dso_curves, double firm_load,
                 double tolerance = 1e-7);

}  // namespace gridcoord::iso
