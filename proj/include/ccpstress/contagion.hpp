#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ccpstress/common.hpp"
#include "ccpstress/market.hpp"
#include "ccpstress/network.hpp"
#include "ccpstress/shocks.hpp"

namespace ccps {

struct ContagionParams {
  double lgd = 0.6;                 // lambda, loss given default
  double rho = 0.6;                 // fraction of lost funding replenished by sales
  double tau = kInf;                // damping scale; 0 = spread first distress only
  int max_rounds = 10;              // highest round index computed
  double convergence_eps = 1e-10;   // stop when the max increment falls below
  double default_threshold_eps = 1e-9;  // h >= 1 - eps counts as default
};

/// Full history of one propagation run. h[n][i] is the distress of member i
/// at round n; h[0] is all zeros and h[1] the initial shock.
struct ContagionTrajectory {
  std::vector<std::vector<double>> h;
  std::vector<int> first_distress_round;  // -1 if never distressed
  std::vector<double> gamma_series;  // gamma used for the step producing h[k+2]
  std::vector<double> q_series;      // matching liquidation volumes
  int rounds_run = 1;
  bool converged = false;

  /// h at round n, held at the final value once the dynamics stopped.
  const std::vector<double>& at_round(int n) const {
    return h[static_cast<size_t>(std::clamp(n, 0, rounds_run))];
  }
};

inline double damping_factor(int step, int first_round, double tau) {
  if (first_round < 0) return 1.0;
  if (std::isinf(tau)) return 1.0;
  if (tau == 0.0) return step == first_round ? 1.0 : 0.0;
  return std::exp(-static_cast<double>(step - first_round) / tau);
}

/// Fire-sale devaluation gamma = rho q / (C - rho q), where q is the volume
/// of interbank assets being liquidated and C the total interbank volume.
inline double fire_sale_factor(const ExposureNetwork& net, double rho, double q) {
  const double demand = rho * q;
  if (demand <= 0.0) return 0.0;
  if (demand >= net.total_volume)
    throw LiquidityExhaustionError(
        "fire-sale demand " + format_double(demand) +
        " reaches the interbank volume " + format_double(net.total_volume));
  return demand / (net.total_volume - demand);
}

/// Bilateral impact coefficients at a given gamma: entry (j, i) is the
/// impact of i on j, i.e. [lambda a_ji + rho gamma a_ij] / E_j, combining
/// j's credit exposure to i and j's funding drawn from i.
inline DenseMatrix impact_matrix(const ExposureNetwork& net,
                                 const std::vector<double>& equities,
                                 const ContagionParams& params, double gamma) {
  const int n = net.n;
  DenseMatrix m(n, n);
  for (int j = 0; j < n; ++j) {
    bool connected = false;
    for (int k = 0; k < n; ++k)
      if (net.at(j, k) > 0.0 || net.at(k, j) > 0.0) connected = true;
    if (!connected) continue;
    if (!(equities[j] > 0.0))
      throw SingularEquityError("member index " + std::to_string(j) +
                                " has no equity but carries exposures");
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      m.at(j, i) =
          (params.lgd * net.at(j, i) + params.rho * gamma * net.at(i, j)) / equities[j];
    }
  }
  return m;
}

/// Iterate the distress recurrence to its stationary configuration:
///   h_i <- min{1, h_i + sum_j [lambda a_ij + rho gamma a_ji]/E_i *
///                        (h_j increment) * damping}
/// where only members not yet defaulted spread, gamma is recomputed every
/// round from the liquidated volume, and increments are exponentially damped
/// with age since first distress.
inline ContagionTrajectory propagate(const ExposureNetwork& net,
                                     const MarketSnapshot& snap,
                                     const ShockVector& initial,
                                     const ContagionParams& params) {
  const int n = net.n;
  if (snap.size() != n || static_cast<int>(initial.initial_distress.size()) != n)
    throw Error("propagate: inconsistent sizes of network, snapshot and shock");

  const std::vector<double> equity = snap.equities();
  const double def_thresh = 1.0 - params.default_threshold_eps;

  std::vector<double> row_sums(n);
  for (int i = 0; i < n; ++i) row_sums[i] = net.row_sum(i);
  for (int i = 0; i < n; ++i) {
    bool connected = row_sums[i] > 0.0 || net.col_sum(i) > 0.0;
    if (connected && !(equity[i] > 0.0) && initial.initial_distress[i] < def_thresh)
      throw SingularEquityError("member " + snap.members[i].id +
                                " has no equity but carries exposures");
  }

  ContagionTrajectory traj;
  traj.h.reserve(params.max_rounds + 1);
  traj.h.emplace_back(n, 0.0);
  std::vector<double> h1(n);
  for (int i = 0; i < n; ++i) h1[i] = std::clamp(initial.initial_distress[i], 0.0, 1.0);
  traj.h.push_back(h1);
  traj.first_distress_round.assign(n, -1);
  for (int i = 0; i < n; ++i)
    if (h1[i] > 0.0) traj.first_distress_round[i] = 1;
  traj.rounds_run = 1;

  std::vector<double> spread(n), credit_in(n), funding_in(n), next(n);
  while (static_cast<int>(traj.h.size()) - 1 < params.max_rounds) {
    const int n_prev = static_cast<int>(traj.h.size()) - 2;  // computing h[n_prev + 2]
    const std::vector<double>& h_prev = traj.h[n_prev];
    const std::vector<double>& h_curr = traj.h[n_prev + 1];
    const int step = n_prev + 1;  // round at which the increments materialized

    // damped increments of members still able to spread (h at n_prev below 1)
    double q = 0.0;
    for (int j = 0; j < n; ++j) {
      if (h_prev[j] >= def_thresh) {
        spread[j] = 0.0;
        continue;
      }
      const double inc = h_curr[j] - h_prev[j];
      const double d =
          inc > 0.0 ? inc * damping_factor(step, traj.first_distress_round[j], params.tau)
                    : 0.0;
      spread[j] = d;
      q += row_sums[j] * d;
    }
    const double gamma = fire_sale_factor(net, params.rho, q);
    traj.gamma_series.push_back(gamma);
    traj.q_series.push_back(q);

    for (int i = 0; i < n; ++i) {
      double cr = 0.0, fu = 0.0;
      const size_t row = static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        if (spread[j] == 0.0) continue;
        cr += net.weights[row + j] * spread[j];                        // a_ij
        fu += net.weights[static_cast<size_t>(j) * n + i] * spread[j]; // a_ji
      }
      credit_in[i] = cr;
      funding_in[i] = fu;
    }

    double max_inc = 0.0;
    bool all_defaulted = true;
    for (int i = 0; i < n; ++i) {
      double h_new = h_curr[i];
      if (h_curr[i] < 1.0 && equity[i] > 0.0) {
        const double inc =
            (params.lgd * credit_in[i] + params.rho * gamma * funding_in[i]) / equity[i];
        h_new = std::min(1.0, h_curr[i] + inc);
      }
      next[i] = h_new;
      max_inc = std::max(max_inc, h_new - h_curr[i]);
      if (h_new < def_thresh) all_defaulted = false;
    }

    traj.h.push_back(next);
    traj.rounds_run = static_cast<int>(traj.h.size()) - 1;
    for (int i = 0; i < n; ++i)
      if (traj.first_distress_round[i] < 0 && next[i] > 0.0)
        traj.first_distress_round[i] = traj.rounds_run;

    if (max_inc < params.convergence_eps || all_defaulted) {
      traj.converged = true;
      break;
    }
  }
  return traj;
}

}  // namespace ccps
