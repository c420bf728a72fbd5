#include <doctest.h>

#include <cmath>

#include "ccpstress/rng.hpp"
#include "ccpstress/shocks.hpp"

using namespace ccps;

namespace {

MarketSnapshot small_market() {
  MarketSnapshot snap;
  snap.date = "2016-09-30";
  snap.default_fund_total = 10.0;
  const double equities[] = {4.0, 2.0, 1.0, 3.0};
  const double margins[] = {1.0, 0.5, 0.2, 0.8};
  const double stressed[] = {1.4, 0.5, 0.3, 1.1};
  const double ue[] = {5.0, 3.0, 1.0, 2.0};
  for (int i = 0; i < 4; ++i) {
    ClearingMember m;
    m.id = "M" + std::to_string(i);
    m.equity = equities[i];
    m.assets_total = 30.0 * equities[i];
    m.liabilities_total = m.assets_total - m.equity;
    m.interbank_assets = 0.2 * m.assets_total;
    m.interbank_liabilities = 0.2 * m.liabilities_total;
    m.margin_ordinary = margins[i];
    m.margin_stressed = stressed[i];
    m.uncovered_exposure = ue[i];
    snap.members.push_back(m);
  }
  return snap;
}

}  // namespace

TEST_SUITE("shocks") {

TEST_CASE("null configuration produces a null shock") {
  auto snap = small_market();
  for (auto& m : snap.members) m.margin_stressed = m.margin_ordinary;  // no margin gap
  ShockConfig cfg;
  cfg.x = 0.0;
  RngStream rng(1);
  auto shock = distributed_shock(snap, cfg, rng);
  for (double s : shock.losses) CHECK(s == 0.0);
  for (double h : shock.initial_distress) CHECK(h == 0.0);
}

TEST_CASE("phi = 0 gives the deterministic branch") {
  auto snap = small_market();
  ShockConfig cfg;
  cfg.x = 1e-3;
  cfg.phi = 0.0;
  const double chi = cfg.x * snap.total_assets() / snap.total_equity();
  RngStream r1(11), r2(999);
  auto s1 = distributed_shock(snap, cfg, r1);
  auto s2 = distributed_shock(snap, cfg, r2);
  CHECK(s1.losses == s2.losses);  // no stochastic term left
  for (int i = 0; i < snap.size(); ++i) {
    const auto& m = snap.members[i];
    double expected = chi * m.equity + m.equity / snap.total_equity() *
                                           std::max(m.margin_stressed - m.margin_ordinary, 0.0);
    CHECK(s1.losses[i] == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("ensemble mean of the exogenous term matches x times total assets") {
  auto snap = small_market();
  for (auto& m : snap.members) m.margin_stressed = m.margin_ordinary;
  ShockConfig cfg;
  cfg.x = 1e-3;
  const double expected = cfg.x * snap.total_assets();
  const int draws = 10000;
  double mean = 0.0, ss = 0.0;
  std::vector<double> totals(draws);
  for (int k = 0; k < draws; ++k) {
    RngStream rng = RngStream::derive(4242, k, kTagShock);
    auto s = distributed_shock(snap, cfg, rng);
    double t = 0.0;
    for (double v : s.losses) t += v;
    totals[k] = t;
    mean += t;
  }
  mean /= draws;
  for (double t : totals) ss += (t - mean) * (t - mean);
  double se = std::sqrt(ss / (draws - 1)) / std::sqrt(static_cast<double>(draws));
  CHECK(std::fabs(mean - expected) <= 3.0 * se);
  CHECK(std::fabs(mean - expected) / expected < 0.01);
}

TEST_CASE("cover2 selects the two largest uncovered exposures") {
  auto snap = small_market();  // UE = (5, 3, 1, 2)
  auto shock = cover2_shock(snap);
  CHECK(shock.initial_distress[0] == 1.0);
  CHECK(shock.initial_distress[1] == 1.0);
  CHECK(shock.initial_distress[2] == 0.0);
  CHECK(shock.initial_distress[3] == 0.0);
  CHECK(shock.losses[0] == snap.members[0].equity);
  int touched = 0;
  for (double h : shock.initial_distress) touched += h > 0.0;
  CHECK(touched == 2);
}

TEST_CASE("cover2 breaks ties lexicographically") {
  auto snap = small_market();
  for (auto& m : snap.members) m.uncovered_exposure = 7.0;
  auto [a, b] = cover2_selection(snap);
  CHECK(snap.members[a].id == "M0");
  CHECK(snap.members[b].id == "M1");
}

TEST_CASE("losses are capped at equity so distress stays below one") {
  auto snap = small_market();
  ShockConfig cfg;
  cfg.x = 10.0;  // absurdly large shock
  RngStream rng(3);
  auto shock = distributed_shock(snap, cfg, rng);
  for (int i = 0; i < snap.size(); ++i) {
    CHECK(shock.losses[i] <= snap.members[i].equity);
    CHECK(shock.initial_distress[i] <= 1.0);
    CHECK(shock.initial_distress[i] == 1.0);  // cap binds at this magnitude
  }
}

TEST_CASE("initial distress is invariant under currency rescaling") {
  auto snap = small_market();
  ShockConfig cfg;
  cfg.x = 2e-3;
  RngStream r1(77);
  auto base = distributed_shock(snap, cfg, r1);
  MarketSnapshot scaled = snap;
  for (auto& m : scaled.members) {
    m.equity *= 1000.0;
    m.assets_total *= 1000.0;
    m.liabilities_total *= 1000.0;
    m.interbank_assets *= 1000.0;
    m.interbank_liabilities *= 1000.0;
    m.margin_ordinary *= 1000.0;
    m.margin_stressed *= 1000.0;
    m.uncovered_exposure *= 1000.0;
  }
  scaled.default_fund_total *= 1000.0;
  RngStream r2(77);  // same stream, same Poisson draws
  auto shocked = distributed_shock(scaled, cfg, r2);
  for (int i = 0; i < snap.size(); ++i)
    CHECK(shocked.initial_distress[i] ==
          doctest::Approx(base.initial_distress[i]).epsilon(1e-14));
}

TEST_CASE("positive x touches every solvent member") {
  auto snap = small_market();
  ShockConfig cfg;
  cfg.x = 1e-3;
  cfg.phi = 0.5;  // deterministic part (1 - phi) chi E > 0 regardless of the draw
  RngStream rng(13);
  auto shock = distributed_shock(snap, cfg, rng);
  for (double h : shock.initial_distress) CHECK(h > 0.0);
}

TEST_CASE("insolvent members are flagged as already defaulted") {
  auto snap = small_market();
  snap.members[2].equity = 0.0;
  snap.members[2].liabilities_total = snap.members[2].assets_total;
  ShockConfig cfg;
  cfg.x = 1e-3;
  RngStream rng(5);
  auto shock = distributed_shock(snap, cfg, rng);
  CHECK(shock.initial_distress[2] == 1.0);
  CHECK(shock.losses[2] == 0.0);
}

}  // TEST_SUITE
