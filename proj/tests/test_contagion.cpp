#include <doctest.h>

#include <cmath>

#include "ccpstress/contagion.hpp"
#include "ccpstress/rng.hpp"
#include "oracles.hpp"

using namespace ccps;

namespace {

struct Instance {
  MarketSnapshot snap;
  ExposureNetwork net;
  std::vector<std::vector<double>> a;  // same weights, oracle layout
  ShockVector shock;
};

MarketSnapshot members_with_equity(const std::vector<double>& equities) {
  MarketSnapshot snap;
  snap.date = "d";
  snap.default_fund_total = 1.0;
  for (size_t i = 0; i < equities.size(); ++i) {
    ClearingMember m;
    m.id = "M" + std::to_string(i);
    m.equity = equities[i];
    m.assets_total = equities[i] * 10.0;
    m.liabilities_total = m.assets_total - m.equity;
    snap.members.push_back(m);
  }
  return snap;
}

void set_marginals_from_rows(Instance& inst) {
  double c = 0.0;
  for (int i = 0; i < inst.net.n; ++i) {
    double rs = inst.net.row_sum(i);
    inst.snap.members[i].interbank_assets = rs;
    c += rs;
  }
  inst.net.total_volume = c;
}

Instance random_instance(RngStream& rng, int max_members = 5) {
  Instance inst;
  const int n = 2 + static_cast<int>(rng.uniform() * (max_members - 1));
  std::vector<double> eq(n);
  for (double& e : eq) e = rng.uniform(0.5, 3.0);
  inst.snap = members_with_equity(eq);
  inst.net = ExposureNetwork(n, 1.0, 0.0);
  inst.a.assign(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (rng.uniform() < 0.7) {
        double w = rng.uniform(0.0, 2.0);
        inst.net.at(i, j) = w;
        inst.a[i][j] = w;
      }
    }
  set_marginals_from_rows(inst);
  inst.shock.losses.assign(n, 0.0);
  inst.shock.initial_distress.resize(n);
  for (int i = 0; i < n; ++i)
    inst.shock.initial_distress[i] =
        rng.uniform() < 0.25 ? 1.0 : rng.uniform(0.0, 0.5);
  return inst;
}

}  // namespace

TEST_SUITE("contagion") {

TEST_CASE("impact matrix reproduces the two-member hand computation") {
  ExposureNetwork net(2, 1.0, 10.0);
  net.at(0, 1) = 10.0;  // member 1 lends 10 to member 2
  ContagionParams params;
  params.lgd = 0.6;
  params.rho = 0.6;
  auto m = impact_matrix(net, {100.0, 50.0}, params, 0.5);
  CHECK(m.at(0, 1) == doctest::Approx(0.06).epsilon(1e-14));  // impact of 2 on 1
  CHECK(m.at(1, 0) == doctest::Approx(0.06).epsilon(1e-14));  // impact of 1 on 2
  CHECK(m.at(0, 0) == 0.0);
  CHECK(m.at(1, 1) == 0.0);
}

TEST_CASE("rho = 0 reduces the impact matrix to the credit channel") {
  RngStream rng(3);
  auto inst = random_instance(rng);
  ContagionParams params;
  params.lgd = 0.7;
  params.rho = 0.0;
  auto m = impact_matrix(inst.net, inst.snap.equities(), params, 0.9);
  for (int i = 0; i < inst.net.n; ++i)
    for (int j = 0; j < inst.net.n; ++j) {
      if (i == j) continue;
      CHECK(m.at(i, j) ==
            doctest::Approx(0.7 * inst.net.at(i, j) / inst.snap.members[i].equity)
                .epsilon(1e-14));
    }
}

TEST_CASE("lgd = rho = 0 freezes the dynamics at the initial shock") {
  RngStream rng(4);
  auto inst = random_instance(rng);
  ContagionParams params;
  params.lgd = 0.0;
  params.rho = 0.0;
  auto m = impact_matrix(inst.net, inst.snap.equities(), params, 0.5);
  for (double v : m.data) CHECK(v == 0.0);
  auto traj = propagate(inst.net, inst.snap, inst.shock, params);
  CHECK(traj.converged);
  for (int r = 1; r <= 8; ++r)
    for (int i = 0; i < inst.net.n; ++i)
      CHECK(traj.at_round(r)[i] == inst.shock.initial_distress[i]);
}

TEST_CASE("fire-sale factor follows rho q / (C - rho q)") {
  ExposureNetwork net(2, 1.0, 8.0);
  CHECK(fire_sale_factor(net, 0.5, 0.0) == 0.0);
  CHECK(fire_sale_factor(net, 0.0, 5.0) == 0.0);
  CHECK(fire_sale_factor(net, 0.5, 4.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(fire_sale_factor(net, 1.0, 8.0), LiquidityExhaustionError);
  CHECK_THROWS_AS(fire_sale_factor(net, 1.0, 9.0), LiquidityExhaustionError);
}

TEST_CASE("three-member credit line matches the hand iteration") {
  // A lends 4 to B, B lends 3 to C; E = (10, 8, 5); shock h1 = (0, 0.25, 0.5)
  auto snap = members_with_equity({10.0, 8.0, 5.0});
  ExposureNetwork net(3, 1.0, 7.0);
  net.at(0, 1) = 4.0;
  net.at(1, 2) = 3.0;
  snap.members[0].interbank_assets = 4.0;
  snap.members[1].interbank_assets = 3.0;
  ShockVector shock;
  shock.losses.assign(3, 0.0);
  shock.initial_distress = {0.0, 0.25, 0.5};
  ContagionParams params;
  params.lgd = 0.6;
  params.rho = 0.0;
  params.tau = kInf;
  params.max_rounds = 6;
  auto traj = propagate(net, snap, shock, params);

  // frozen expected rounds (0.06 = 0.6*(4/10)*0.25, 0.087 = 0.06 + 0.24*0.1125)
  REQUIRE(traj.rounds_run == 4);
  CHECK(traj.h[2][0] == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(traj.h[2][1] == doctest::Approx(0.3625).epsilon(1e-12));
  CHECK(traj.h[2][2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(traj.h[3][0] == doctest::Approx(0.087).epsilon(1e-12));
  CHECK(traj.h[3][1] == doctest::Approx(0.3625).epsilon(1e-12));
  CHECK(traj.h[4][0] == doctest::Approx(0.087).epsilon(1e-12));
  CHECK(traj.converged);

  std::vector<std::vector<double>> a = {{0, 4, 0}, {0, 0, 3}, {0, 0, 0}};
  auto run = oracle::direct_contagion(a, {10, 8, 5}, shock.initial_distress, 0.6, 0.0,
                                      kInf, 7.0, 6, params.convergence_eps);
  REQUIRE(run.rounds == traj.rounds_run);
  for (int r = 0; r <= traj.rounds_run; ++r)
    for (int i = 0; i < 3; ++i)
      CHECK(std::fabs(traj.h[r][i] - run.h[r][i]) < 1e-12);
}

TEST_CASE("propagation matches the direct iteration on random instances") {
  RngStream rng(2718);
  const double lam_opts[] = {0.0, 0.5, 1.0};
  const double tau_opts[] = {0.0, 1.0, kInf};
  int checked = 0;
  for (int k = 0; k < 60; ++k) {
    auto inst = random_instance(rng);
    ContagionParams params;
    params.lgd = lam_opts[static_cast<int>(rng.uniform() * 3)];
    params.rho = lam_opts[static_cast<int>(rng.uniform() * 3)];
    params.tau = tau_opts[static_cast<int>(rng.uniform() * 3)];
    params.max_rounds = 12;
    if (inst.net.total_volume <= 0.0) continue;
    try {
      auto traj = propagate(inst.net, inst.snap, inst.shock, params);
      auto run = oracle::direct_contagion(inst.a, inst.snap.equities(),
                                          inst.shock.initial_distress, params.lgd,
                                          params.rho, params.tau, inst.net.total_volume,
                                          params.max_rounds, params.convergence_eps);
      REQUIRE(traj.rounds_run == run.rounds);
      for (int r = 0; r <= traj.rounds_run; ++r)
        for (int i = 0; i < inst.net.n; ++i)
          CHECK(std::fabs(traj.h[r][i] - run.h[r][i]) < 1e-12);
      ++checked;
    } catch (const LiquidityExhaustionError&) {
      // reachable at rho = 1 with everyone defaulting at once
    }
  }
  CHECK(checked > 30);
}

TEST_CASE("distress is monotone in rounds and bounded in [0, 1]") {
  RngStream rng(999);
  for (int k = 0; k < 100; ++k) {
    auto inst = random_instance(rng);
    ContagionParams params;
    params.lgd = rng.uniform(0.0, 1.0);
    params.rho = rng.uniform(0.0, 0.9);
    params.tau = rng.uniform() < 0.5 ? kInf : rng.uniform(0.1, 3.0);
    auto traj = propagate(inst.net, inst.snap, inst.shock, params);
    for (int r = 1; r <= traj.rounds_run; ++r)
      for (int i = 0; i < inst.net.n; ++i) {
        CHECK(traj.h[r][i] >= traj.h[r - 1][i]);
        CHECK(traj.h[r][i] >= 0.0);
        CHECK(traj.h[r][i] <= 1.0);
      }
  }
}

TEST_CASE("credit-only distress is bounded by initial shock plus lgd leverage") {
  RngStream rng(1234);
  for (int k = 0; k < 100; ++k) {
    auto inst = random_instance(rng);
    ContagionParams params;
    params.lgd = rng.uniform(0.0, 1.0);
    params.rho = 0.0;
    auto traj = propagate(inst.net, inst.snap, inst.shock, params);
    const auto& hs = traj.h[traj.rounds_run];
    for (int i = 0; i < inst.net.n; ++i) {
      double leverage = inst.net.row_sum(i) / inst.snap.members[i].equity;
      double bound = std::min(1.0, inst.shock.initial_distress[i] +
                                       params.lgd * leverage);
      CHECK(hs[i] <= bound + 1e-12);
    }
  }
}

TEST_CASE("sub-unit leverage members survive mild credit propagation") {
  RngStream rng(777);
  for (int k = 0; k < 50; ++k) {
    auto inst = random_instance(rng, 5);
    ContagionParams params;
    params.lgd = 0.6;
    params.rho = 0.0;
    for (auto& h : inst.shock.initial_distress) h = rng.uniform(0.0, 0.3);
    auto traj = propagate(inst.net, inst.snap, inst.shock, params);
    for (int i = 0; i < inst.net.n; ++i) {
      double leverage = inst.net.row_sum(i) / inst.snap.members[i].equity;
      if (leverage < 1.0)
        CHECK(traj.h[traj.rounds_run][i] < 1.0 - params.default_threshold_eps);
    }
  }
}

TEST_CASE("tau = 0 spreads only the first increment of each member") {
  // diamond: E shocked; paths E->B and E->C->B give B two increments;
  // A is exposed to B only, so with tau = 0 it must miss B's second move.
  auto snap = members_with_equity({10.0, 10.0, 10.0, 10.0});  // A, B, C, E
  ExposureNetwork net(4, 1.0, 0.0);
  net.at(0, 1) = 5.0;  // A lends to B
  net.at(1, 3) = 5.0;  // B lends to E
  net.at(1, 2) = 5.0;  // B lends to C
  net.at(2, 3) = 5.0;  // C lends to E
  double c = 0.0;
  for (int i = 0; i < 4; ++i) {
    snap.members[i].interbank_assets = net.row_sum(i);
    c += net.row_sum(i);
  }
  net.total_volume = c;
  ShockVector shock;
  shock.losses.assign(4, 0.0);
  shock.initial_distress = {0.0, 0.0, 0.0, 0.5};

  ContagionParams damped;
  damped.lgd = 0.5;
  damped.rho = 0.0;
  damped.tau = 0.0;
  damped.max_rounds = 8;
  auto t0 = propagate(net, snap, shock, damped);

  ContagionParams undamped = damped;
  undamped.tau = kInf;
  auto tinf = propagate(net, snap, shock, undamped);

  // B first moves at round 2 (via E) and again at round 3 (via C)
  CHECK(t0.h[2][1] > 0.0);
  CHECK(t0.h[3][1] > t0.h[2][1]);
  // undamped A keeps receiving; damped A stops after B's first increment
  CHECK(t0.at_round(8)[0] == doctest::Approx(t0.h[3][0]).epsilon(1e-14));
  CHECK(tinf.at_round(8)[0] > t0.at_round(8)[0]);

  // both variants still agree with the direct iteration
  std::vector<std::vector<double>> a = {
      {0, 5, 0, 0}, {0, 0, 5, 5}, {0, 0, 0, 5}, {0, 0, 0, 0}};
  for (const auto* params : {&damped, &undamped}) {
    auto traj = propagate(net, snap, shock, *params);
    auto run = oracle::direct_contagion(a, snap.equities(), shock.initial_distress,
                                        params->lgd, params->rho, params->tau, c,
                                        params->max_rounds, params->convergence_eps);
    REQUIRE(traj.rounds_run == run.rounds);
    for (int r = 0; r <= traj.rounds_run; ++r)
      for (int i = 0; i < 4; ++i) CHECK(std::fabs(traj.h[r][i] - run.h[r][i]) < 1e-12);
  }
}

TEST_CASE("connected members without equity are rejected unless pre-defaulted") {
  auto snap = members_with_equity({10.0, 10.0});
  snap.members[1].equity = 0.0;
  ExposureNetwork net(2, 1.0, 3.0);
  net.at(0, 1) = 3.0;
  snap.members[0].interbank_assets = 3.0;
  ShockVector shock;
  shock.losses.assign(2, 0.0);
  shock.initial_distress = {0.2, 0.0};
  ContagionParams params;
  CHECK_THROWS_AS(propagate(net, snap, shock, params), SingularEquityError);
  CHECK_THROWS_AS(impact_matrix(net, {10.0, 0.0}, params, 0.0), SingularEquityError);

  shock.initial_distress = {0.2, 1.0};  // pre-defaulted: allowed
  auto traj = propagate(net, snap, shock, params);
  CHECK(traj.h[traj.rounds_run][1] == 1.0);
}

TEST_CASE("simultaneous full default at rho = 1 exhausts liquidity") {
  auto snap = members_with_equity({5.0, 5.0});
  ExposureNetwork net(2, 1.0, 0.0);
  net.at(0, 1) = 2.0;
  net.at(1, 0) = 3.0;
  snap.members[0].interbank_assets = 2.0;
  snap.members[1].interbank_assets = 3.0;
  net.total_volume = 5.0;
  ShockVector shock;
  shock.losses.assign(2, 0.0);
  shock.initial_distress = {1.0, 1.0};  // both spread their full row sums at once
  ContagionParams params;
  params.rho = 1.0;
  CHECK_THROWS_AS(propagate(net, snap, shock, params), LiquidityExhaustionError);
}

TEST_CASE("gamma and q series align with the executed transitions") {
  RngStream rng(55);
  auto inst = random_instance(rng);
  ContagionParams params;
  params.lgd = 0.5;
  params.rho = 0.5;
  auto traj = propagate(inst.net, inst.snap, inst.shock, params);
  CHECK(static_cast<int>(traj.gamma_series.size()) == traj.rounds_run - 1);
  CHECK(traj.q_series.size() == traj.gamma_series.size());
  for (double g : traj.gamma_series) CHECK(g >= 0.0);
  for (double q : traj.q_series) CHECK(q >= 0.0);
}

}  // TEST_SUITE
