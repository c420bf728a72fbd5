#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "ccpstress/common.hpp"
#include "ccpstress/market.hpp"
#include "ccpstress/rng.hpp"

namespace ccps {

enum class Scenario { Distributed, Cover2 };

struct ShockConfig {
  double x = 1e-3;   // mean external shock per unit of total assets
  double phi = 0.5;  // stochastic/deterministic mix
  Scenario scenario = Scenario::Distributed;
  std::uint64_t rng_seed = 0;
};

struct ShockVector {
  std::vector<double> losses;           // S_i, currency
  std::vector<double> initial_distress; // h_i^[1] = min(1, S_i / E_i)
};

/// Distributed round-1 shock: an exogenous component (Poisson + deterministic
/// mix, proportional to equity) plus the stressed-margin call
/// S_i = [phi xi_i + (1 - phi)] chi E_i + psi_i max(M_i^STR - M_i, 0),
/// with chi = x (sum A)/(sum E) and psi_i = E_i / sum E. Negative stresses
/// are clamped to zero and S_i is capped at E_i so distress stays in [0, 1].
inline ShockVector distributed_shock(const MarketSnapshot& snap,
                                     const ShockConfig& config, RngStream& rng) {
  const int n = snap.size();
  const double sum_assets = snap.total_assets();
  const double sum_equity = snap.total_equity();
  if (!(sum_equity > 0.0)) throw Error("distributed_shock: total equity must be positive");
  const double chi = config.x * sum_assets / sum_equity;

  ShockVector out;
  out.losses.resize(n);
  out.initial_distress.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& m = snap.members[i];
    if (!(m.equity > 0.0)) {
      // insolvent at observation time: already defaulted, nothing left to lose
      out.losses[i] = 0.0;
      out.initial_distress[i] = 1.0;
      continue;
    }
    const double xi = static_cast<double>(rng.poisson_unit());
    const double psi = m.equity / sum_equity;
    double s = (config.phi * xi + (1.0 - config.phi)) * chi * m.equity +
               psi * std::max(m.margin_stressed - m.margin_ordinary, 0.0);
    if (s < 0.0) s = 0.0;
    if (s > m.equity) s = m.equity;
    out.losses[i] = s;
    out.initial_distress[i] = std::min(1.0, s / m.equity);
  }
  return out;
}

inline ShockVector distributed_shock(const MarketSnapshot& snap,
                                     const ShockConfig& config) {
  RngStream rng = RngStream::derive(config.rng_seed, 0, kTagShock);
  return distributed_shock(snap, config, rng);
}

/// Indices of the two members with the largest uncovered exposure,
/// ties broken by lexicographic member id.
inline std::pair<int, int> cover2_selection(const MarketSnapshot& snap) {
  if (snap.size() < 2) throw Error("cover2 scenario needs at least 2 members");
  std::vector<int> order(snap.members.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (snap.members[a].uncovered_exposure != snap.members[b].uncovered_exposure)
      return snap.members[a].uncovered_exposure > snap.members[b].uncovered_exposure;
    return snap.members[a].id < snap.members[b].id;
  });
  return {order[0], order[1]};
}

/// Cover-2 round-1 condition: the two members with the largest uncovered
/// exposure default outright (equity zeroed), everyone else untouched.
inline ShockVector cover2_shock(const MarketSnapshot& snap) {
  auto [first, second] = cover2_selection(snap);
  ShockVector out;
  out.losses.assign(snap.members.size(), 0.0);
  out.initial_distress.assign(snap.members.size(), 0.0);
  for (int idx : {first, second}) {
    out.losses[idx] = std::max(snap.members[idx].equity, 0.0);
    out.initial_distress[idx] = 1.0;
  }
  return out;
}

}  // namespace ccps
