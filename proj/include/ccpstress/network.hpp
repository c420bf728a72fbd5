#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ccpstress/common.hpp"
#include "ccpstress/market.hpp"
#include "ccpstress/rng.hpp"

namespace ccps {

/// Directed weighted network of inter-member loans. weights(i, j) is the
/// loan granted by i to j: an asset of i and a liability of j.
struct ExposureNetwork {
  int n = 0;
  std::vector<double> weights;  // row-major
  double z = 0.0;               // density parameter
  double total_volume = 0.0;    // C = sum of interbank-asset marginals

  ExposureNetwork() = default;
  ExposureNetwork(int size, double z_, double volume)
      : n(size), weights(static_cast<size_t>(size) * size, 0.0), z(z_),
        total_volume(volume) {}

  double at(int i, int j) const { return weights[static_cast<size_t>(i) * n + j]; }
  double& at(int i, int j) { return weights[static_cast<size_t>(i) * n + j]; }

  double row_sum(int i) const {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += at(i, j);
    return s;
  }
  double col_sum(int j) const {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += at(i, j);
    return s;
  }
  int edge_count() const {
    int c = 0;
    for (double w : weights) c += (w > 0.0);
    return c;
  }
};

/// Fitness-model link probability: p = z a l / (1 + z a l), with the
/// interbank-asset marginal of the lender and the interbank-liability
/// marginal of the borrower as fitnesses.
inline double link_probability(double z, double a_int_i, double l_int_j) {
  if (z <= 0.0 || a_int_i <= 0.0 || l_int_j <= 0.0) return 0.0;
  double f = z * a_int_i * l_int_j;
  return f / (1.0 + f);
}

/// Expected number of links at parameter z (self-links excluded).
inline double expected_link_count(const MarketSnapshot& snap, double z) {
  const int n = snap.size();
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j)
        s += link_probability(z, snap.members[i].interbank_assets,
                              snap.members[j].interbank_liabilities);
  return s;
}

/// Calibrate z so that the expected network density matches target_density.
/// The expected density is strictly increasing in z, so bisection on log z
/// converges to the unique root.
inline double calibrate_z(const MarketSnapshot& snap, double target_density,
                          double rel_tol = 1e-9) {
  const int n = snap.size();
  if (n < 2) throw Error("calibrate_z needs at least two members");
  if (!(target_density > 0.0 && target_density < 1.0))
    throw Error("target density must lie in (0, 1)");

  int feasible_pairs = 0;
  double log_product_sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && snap.members[i].interbank_assets > 0.0 &&
          snap.members[j].interbank_liabilities > 0.0) {
        ++feasible_pairs;
        log_product_sum += std::log(snap.members[i].interbank_assets *
                                    snap.members[j].interbank_liabilities);
      }
  const double target_links = target_density * n * (n - 1);
  // p < 1 strictly, so the feasible-pair count is an unreachable supremum.
  if (feasible_pairs == 0 || target_links >= static_cast<double>(feasible_pairs))
    throw UnreachableDensityError(
        "target density " + format_double(target_density) +
        " exceeds the reachable maximum " +
        format_double(static_cast<double>(feasible_pairs) / (n * (n - 1))));

  // center the search window on the marginal scale: z enters only through
  // z * a * l, so the bracket is [1e-18, 1e18] in units of the geometric
  // mean fitness product
  const double scale = std::exp(log_product_sum / feasible_pairs);
  double lo = std::log(1e-18 / scale), hi = std::log(1e18 / scale);
  for (int k = 0; k < 40 && expected_link_count(snap, std::exp(lo)) > target_links; ++k)
    lo -= std::log(1e6);
  for (int k = 0; k < 40 && expected_link_count(snap, std::exp(hi)) < target_links; ++k)
    hi += std::log(1e6);
  if (expected_link_count(snap, std::exp(hi)) < target_links)
    throw UnreachableDensityError("target density unreachable within z range");
  if (expected_link_count(snap, std::exp(lo)) > target_links)
    throw UnreachableDensityError("expected density exceeds target at any feasible z");
  double z = std::exp(0.5 * (lo + hi));
  for (int it = 0; it < 400; ++it) {
    double mid = 0.5 * (lo + hi);
    z = std::exp(mid);
    double links = expected_link_count(snap, z);
    if (std::fabs(links - target_links) <= rel_tol * target_links) return z;
    (links < target_links ? lo : hi) = mid;
  }
  return z;
}

/// Draw one network realization: independent Bernoulli links with fitness
/// probabilities, realized links weighted (1/z + a l)/C so that the expected
/// weight of every pair equals a l / C exactly.
inline ExposureNetwork sample_network(const MarketSnapshot& snap, double z,
                                      RngStream& rng) {
  const int n = snap.size();
  if (!(z > 0.0)) throw Error("sample_network requires calibrated z > 0");
  ExposureNetwork net(n, z, snap.total_interbank_assets());
  const double inv_z = 1.0 / z;
  for (int i = 0; i < n; ++i) {
    const double a_i = snap.members[i].interbank_assets;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double l_j = snap.members[j].interbank_liabilities;
      const double p = link_probability(z, a_i, l_j);
      const double u = rng.uniform();
      if (u < p) net.at(i, j) = (inv_z + a_i * l_j) / net.total_volume;
    }
  }
  return net;
}

inline ExposureNetwork sample_network(const MarketSnapshot& snap, double z,
                                      std::uint64_t rng_seed) {
  RngStream rng = RngStream::derive(rng_seed, 0, kTagNetwork);
  return sample_network(snap, z, rng);
}

}  // namespace ccps
