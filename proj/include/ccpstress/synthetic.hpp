#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "ccpstress/io.hpp"
#include "ccpstress/market.hpp"
#include "ccpstress/merton.hpp"
#include "ccpstress/rng.hpp"

namespace ccps {

/// Knobs of the synthetic market generator, a stand-in for confidential
/// member data. Sizes are lognormal; equities are rescaled so the aggregate
/// leverage (total assets over total equity) hits the target exactly; the
/// default fund is sized to cover the `cover_basis` largest uncovered
/// exposures.
struct SyntheticMarketSpec {
  int n_members = 100;
  double aggregate_leverage_target = 26.0;
  // interbank intensities are heavy-tailed (lognormal, clamped to the range
  // below): a few dealer-like members concentrate the interbank market while
  // most members keep small books
  double interbank_fraction_min = 0.003;  // clamp range, interbank assets
  double interbank_fraction_max = 0.50;   // over total assets
  double margin_uplift_min = 1.1;
  double margin_uplift_max = 1.5;
  int cover_basis = 4;
  std::uint64_t rng_seed = 1;

  std::string date = "2016-09-30";
  double risk_free_rate = 0.01;
  double maturity_years = 1.0;
  double size_scale = 1e9;
  double size_sigma = 0.5;
  // one lognormal activity factor per member drives both sides of its
  // interbank book, so heavy borrowers are heavy lenders (dealer core)
  double activity_sigma = 1.35;
  double activity_noise_sigma = 0.3;
  double interbank_fraction_median = 0.06;
  double liability_fraction_min = 0.01;   // clamp range, interbank liabilities
  double liability_fraction_max = 0.70;   // over total liabilities
  double liability_fraction_median = 0.10;
  double margin_rate = 0.10;          // ordinary margin per unit interbank liability
  double uncovered_rate_min = 0.25;   // uncovered exposure per unit ordinary margin
  double uncovered_rate_max = 0.40;
  double asset_vol_min = 0.05;
  double asset_vol_max = 0.30;
  double asset_drift_min = 0.00;
  double asset_drift_max = 0.04;
};

struct SyntheticMarket {
  MarketSnapshot snapshot;
  std::vector<ObservationRecord> observations;
  std::vector<double> true_asset_vols;  // per member, for round-trip checks
};

inline SyntheticMarket generate_synthetic_market(const SyntheticMarketSpec& spec) {
  if (spec.n_members < 3) throw Error("synthetic market needs at least 3 members");
  if (!(spec.aggregate_leverage_target > 1.0))
    throw Error("aggregate leverage target must exceed 1");

  RngStream rng = RngStream::derive(spec.rng_seed, 0, kTagSynthetic);
  const int n = spec.n_members;

  std::vector<double> assets(n), equity_draft(n);
  for (int i = 0; i < n; ++i) {
    assets[i] = spec.size_scale * rng.lognormal(0.0, spec.size_sigma);
    equity_draft[i] =
        rng.uniform(0.6, 1.4) * assets[i] / spec.aggregate_leverage_target;
  }
  double sum_a = 0.0, sum_e_draft = 0.0;
  for (int i = 0; i < n; ++i) {
    sum_a += assets[i];
    sum_e_draft += equity_draft[i];
  }
  const double rescale = (sum_a / spec.aggregate_leverage_target) / sum_e_draft;

  SyntheticMarket market;
  market.snapshot.date = spec.date;
  market.snapshot.members.resize(n);
  market.true_asset_vols.resize(n);

  std::vector<double> lint_frac(n);
  double sum_aint = 0.0, sum_lint_draft = 0.0;
  for (int i = 0; i < n; ++i) {
    auto& m = market.snapshot.members[i];
    m.id = "CM" + std::string(i < 10 ? "00" : i < 100 ? "0" : "") + std::to_string(i);
    m.equity = rescale * equity_draft[i];
    m.assets_total = assets[i];
    m.liabilities_total = assets[i] - m.equity;
    const double activity = rng.lognormal(0.0, spec.activity_sigma);
    double fa = std::clamp(spec.interbank_fraction_median * activity *
                               rng.lognormal(0.0, spec.activity_noise_sigma),
                           spec.interbank_fraction_min, spec.interbank_fraction_max);
    m.interbank_assets = fa * m.assets_total;
    lint_frac[i] = std::clamp(spec.liability_fraction_median * activity *
                                  rng.lognormal(0.0, spec.activity_noise_sigma),
                              spec.liability_fraction_min, spec.liability_fraction_max);
    sum_aint += m.interbank_assets;
    sum_lint_draft += lint_frac[i] * m.liabilities_total;
  }
  // close the interbank system: liability marginals rescaled to match the
  // asset total, capped below each member's total liabilities
  const double close = sum_aint / sum_lint_draft;
  for (int i = 0; i < n; ++i) {
    auto& m = market.snapshot.members[i];
    m.interbank_liabilities =
        std::min(0.98 * m.liabilities_total, close * lint_frac[i] * m.liabilities_total);
  }

  std::vector<double> uncovered(n);
  for (int i = 0; i < n; ++i) {
    auto& m = market.snapshot.members[i];
    m.margin_ordinary = spec.margin_rate * m.interbank_liabilities;
    m.margin_stressed =
        m.margin_ordinary * rng.uniform(spec.margin_uplift_min, spec.margin_uplift_max);
    m.uncovered_exposure =
        rng.uniform(spec.uncovered_rate_min, spec.uncovered_rate_max) * m.margin_ordinary;
    uncovered[i] = m.uncovered_exposure;
  }
  market.snapshot.default_fund_total = default_fund_cover(uncovered, spec.cover_basis);

  // forward-model observations consistent with the generated balance sheets
  market.observations.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& m = market.snapshot.members[i];
    auto& rec = market.observations[i];
    const double sigma = rng.uniform(spec.asset_vol_min, spec.asset_vol_max);
    market.true_asset_vols[i] = sigma;
    rec.obs.member_id = m.id;
    rec.obs.date = spec.date;
    rec.obs.book_liabilities = m.liabilities_total;
    rec.obs.asset_drift = rng.uniform(spec.asset_drift_min, spec.asset_drift_max);
    rec.obs.risk_free_rate = spec.risk_free_rate;
    rec.obs.maturity_years = spec.maturity_years;
    rec.obs.equity_value = price_doc_call(m.assets_total, sigma, rec.obs);
    rec.obs.equity_vol = equity_vol_from_assets(m.assets_total, sigma, rec.obs);
    rec.interbank_asset_fraction = m.interbank_assets / m.assets_total;
    rec.interbank_liability_fraction = m.interbank_liabilities / m.liabilities_total;
    rec.use_regression = false;
  }
  return market;
}

}  // namespace ccps
