#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "ccpstress/common.hpp"
#include "ccpstress/contagion.hpp"
#include "ccpstress/market.hpp"

namespace ccps {

/// Per-run reduction of a trajectory: the vulnerability triplet per member,
/// inter-member leverage, default sets and the two systemic-loss series.
struct StressReport {
  std::vector<std::string> member_ids;  // snapshot order
  std::vector<double> h1, h2, hstar;
  std::vector<double> leverage;              // interbank assets over equity
  std::vector<std::vector<int>> defaulted;   // member indices, per round 0..rounds
  std::vector<double> r_df_raw;              // may go negative on shortfall
  std::vector<double> r_df_clamped;
  std::vector<double> r_re;
  std::vector<double> uncovered_sum;
  int rounds = 0;      // series are indexed 0..rounds
  int rounds_run = 0;  // stationary round of the underlying trajectory
  bool converged = false;
};

inline std::vector<int> defaulted_members(const ContagionTrajectory& traj, int round,
                                          double threshold_eps = 1e-9) {
  const std::vector<double>& h = traj.at_round(round);
  std::vector<int> out;
  for (size_t i = 0; i < h.size(); ++i)
    if (h[i] >= 1.0 - threshold_eps) out.push_back(static_cast<int>(i));
  return out;
}

/// Residual default fund ratio at a round: the fraction of the default fund
/// left after subtracting the uncovered exposures of defaulted members.
/// Negative values signal a shortfall and are reported as-is.
inline double residual_default_fund(const ContagionTrajectory& traj,
                                    const MarketSnapshot& snap, int round,
                                    double threshold_eps = 1e-9) {
  double used = 0.0;
  for (int i : defaulted_members(traj, round, threshold_eps))
    used += snap.members[i].uncovered_exposure;
  return (snap.default_fund_total - used) / snap.default_fund_total;
}

/// Total relative residual equity at a round:
/// 1 - sum_i (E_i^[1] - E_i^[n]) / sum_i E_i^[1], i.e. the share of
/// post-shock equity surviving n rounds of reverberation.
inline double residual_equity(const ContagionTrajectory& traj,
                              const MarketSnapshot& snap, int round) {
  const std::vector<double>& h1 = traj.at_round(1);
  const std::vector<double>& hn = traj.at_round(std::max(round, 1));
  double lost = 0.0, base = 0.0;
  for (size_t i = 0; i < h1.size(); ++i) {
    const double e0 = snap.members[i].equity;
    if (e0 <= 0.0) continue;
    base += e0 * (1.0 - h1[i]);
    lost += e0 * (hn[i] - h1[i]);
  }
  if (base <= 0.0) return 1.0;  // no equity survived the initial shock
  return 1.0 - lost / base;
}

/// Assemble the full report. Series run over rounds 0..grid_rounds (default:
/// the trajectory's own stationary round), holding h at its final value past
/// convergence.
inline StressReport vulnerability_report(const ContagionTrajectory& traj,
                                         const MarketSnapshot& snap,
                                         double threshold_eps = 1e-9,
                                         int grid_rounds = -1) {
  const int n = snap.size();
  StressReport rep;
  rep.rounds_run = traj.rounds_run;
  rep.converged = traj.converged;
  rep.rounds = grid_rounds < 0 ? traj.rounds_run : grid_rounds;

  rep.member_ids.reserve(n);
  for (const auto& m : snap.members) rep.member_ids.push_back(m.id);

  const std::vector<double>& h1 = traj.at_round(1);
  const std::vector<double>& h2 = traj.at_round(2);
  const std::vector<double>& hs = traj.at_round(traj.rounds_run);
  rep.h1.assign(h1.begin(), h1.end());
  rep.h2.assign(h2.begin(), h2.end());
  rep.hstar.assign(hs.begin(), hs.end());

  rep.leverage.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& m = snap.members[i];
    rep.leverage[i] = m.equity > 0.0 ? m.interbank_assets / m.equity : kInf;
  }

  rep.defaulted.resize(rep.rounds + 1);
  rep.r_df_raw.resize(rep.rounds + 1);
  rep.r_df_clamped.resize(rep.rounds + 1);
  rep.r_re.resize(rep.rounds + 1);
  rep.uncovered_sum.resize(rep.rounds + 1);
  for (int r = 0; r <= rep.rounds; ++r) {
    rep.defaulted[r] = defaulted_members(traj, r, threshold_eps);
    double used = 0.0;
    for (int i : rep.defaulted[r]) used += snap.members[i].uncovered_exposure;
    rep.uncovered_sum[r] = used;
    rep.r_df_raw[r] = (snap.default_fund_total - used) / snap.default_fund_total;
    rep.r_df_clamped[r] = std::max(0.0, rep.r_df_raw[r]);
    rep.r_re[r] = residual_equity(traj, snap, r);
  }
  return rep;
}

/// Presentation order: members sorted by final vulnerability, descending
/// (ties by id). Returns indices into the report's member arrays.
inline std::vector<int> report_presentation_order(const StressReport& rep) {
  std::vector<int> order(rep.member_ids.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (rep.hstar[a] != rep.hstar[b]) return rep.hstar[a] > rep.hstar[b];
    return rep.member_ids[a] < rep.member_ids[b];
  });
  return order;
}

}  // namespace ccps
