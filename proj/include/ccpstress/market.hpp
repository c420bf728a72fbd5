#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "ccpstress/common.hpp"

namespace ccps {

/// One clearing member's balance sheet at a date, with interbank split,
/// posted margins and the uncovered exposure recorded by the CCP.
struct ClearingMember {
  std::string id;
  double equity = 0.0;                // E = A - L
  double assets_total = 0.0;          // A
  double liabilities_total = 0.0;     // L
  double interbank_assets = 0.0;      // loans to other members
  double interbank_liabilities = 0.0; // borrowings from other members
  double margin_ordinary = 0.0;
  double margin_stressed = 0.0;
  double uncovered_exposure = 0.0;
};

struct MarketSnapshot {
  std::string date;
  std::vector<ClearingMember> members;
  double default_fund_total = 0.0;

  int size() const { return static_cast<int>(members.size()); }

  double total_assets() const {
    double s = 0.0;
    for (const auto& m : members) s += m.assets_total;
    return s;
  }
  double total_equity() const {
    double s = 0.0;
    for (const auto& m : members) s += m.equity;
    return s;
  }
  double total_interbank_assets() const {
    double s = 0.0;
    for (const auto& m : members) s += m.interbank_assets;
    return s;
  }
  double total_interbank_liabilities() const {
    double s = 0.0;
    for (const auto& m : members) s += m.interbank_liabilities;
    return s;
  }

  std::vector<double> equities() const {
    std::vector<double> e(members.size());
    for (size_t i = 0; i < members.size(); ++i) e[i] = members[i].equity;
    return e;
  }
};

/// Schema-level validation used by ingestion: unique ids, the balance sheet
/// identity E = A - L within `identity_rel_tol`, and sign constraints.
/// Throws SchemaError naming the offending member.
inline void validate_snapshot(const MarketSnapshot& snap,
                              double identity_rel_tol = 1e-6) {
  if (snap.members.empty()) throw SchemaError("market snapshot has no members");
  if (!(snap.default_fund_total > 0.0))
    throw SchemaError("default_fund_total must be positive");
  std::unordered_set<std::string> seen;
  for (const auto& m : snap.members) {
    if (m.id.empty()) throw SchemaError("member with empty id");
    if (!seen.insert(m.id).second)
      throw SchemaError("duplicate member id: " + m.id);
    for (double v : {m.equity, m.assets_total, m.liabilities_total, m.interbank_assets,
                     m.interbank_liabilities, m.margin_ordinary, m.margin_stressed,
                     m.uncovered_exposure}) {
      if (!std::isfinite(v))
        throw SchemaError("non-finite field for member " + m.id);
    }
    double scale = std::max({std::fabs(m.assets_total), std::fabs(m.liabilities_total),
                             std::fabs(m.equity), 1.0});
    if (std::fabs(m.equity - (m.assets_total - m.liabilities_total)) >
        identity_rel_tol * scale)
      throw SchemaError("balance sheet identity violated for member " + m.id);
    double part_tol = identity_rel_tol * scale;
    if (m.interbank_assets < -part_tol || m.interbank_assets > m.assets_total + part_tol)
      throw SchemaError("interbank assets outside [0, total] for member " + m.id);
    if (m.interbank_liabilities < -part_tol ||
        m.interbank_liabilities > m.liabilities_total + part_tol)
      throw SchemaError("interbank liabilities outside [0, total] for member " + m.id);
    if (m.margin_ordinary < 0.0 || m.margin_stressed < 0.0)
      throw SchemaError("negative margin for member " + m.id);
    if (m.uncovered_exposure < 0.0)
      throw SchemaError("negative uncovered exposure for member " + m.id);
  }
}

/// Default fund sized to cover the `cover_basis` largest uncovered exposures.
inline double default_fund_cover(const std::vector<double>& uncovered, int cover_basis) {
  std::vector<double> sorted = uncovered;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double fund = 0.0;
  int n = std::min<int>(cover_basis, static_cast<int>(sorted.size()));
  for (int i = 0; i < n; ++i) fund += sorted[i];
  return fund;
}

}  // namespace ccps
