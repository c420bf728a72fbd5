#pragma once

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "ccpstress/config.hpp"
#include "ccpstress/contagion.hpp"
#include "ccpstress/csv.hpp"
#include "ccpstress/io.hpp"
#include "ccpstress/market.hpp"
#include "ccpstress/metrics.hpp"
#include "ccpstress/network.hpp"
#include "ccpstress/shocks.hpp"

namespace ccps {

struct EnsembleSettings {
  Scenario scenario = Scenario::Distributed;
  ShockConfig shock;
  ContagionParams contagion;
  double network_density = 0.05;
  int ensemble_size = 1000;
  std::uint64_t master_seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  bool keep_networks = false;
  bool keep_shocks = false;
  bool keep_trajectories = false;
};

/// Ensemble outcome: per-realization reports plus deterministic aggregates.
/// Series are indexed by round 0..rounds, held at the stationary value once
/// a trajectory has converged.
struct EnsembleResult {
  double z = 0.0;
  int rounds = 0;
  int ensemble_size = 0;
  std::vector<std::string> member_ids;
  std::vector<double> leverage;
  std::vector<double> mean_h1, mean_h2, mean_hstar;
  std::vector<double> mean_r_df_raw, se_r_df_raw;
  std::vector<double> mean_r_df_clamped;
  std::vector<double> mean_r_re, se_r_re;
  std::vector<double> mean_uncovered_sum;
  std::vector<double> mean_defaults;
  double mean_rounds_run = 0.0;
  double converged_fraction = 0.0;

  std::vector<StressReport> reports;
  std::vector<ExposureNetwork> networks;          // kept on request
  std::vector<ShockVector> shock_draws;           // kept on request
  std::vector<ContagionTrajectory> trajectories;  // kept on request
};

namespace detail {

inline void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  threads = std::min(threads, std::max(count, 1));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      const int lo = static_cast<int>(static_cast<long long>(count) * t / threads);
      const int hi = static_cast<int>(static_cast<long long>(count) * (t + 1) / threads);
      for (int i = lo; i < hi; ++i) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_and_se(const std::vector<double>& v) {
  MeanSe out;
  const size_t n = v.size();
  if (n == 0) return out;
  double sum = 0.0;
  for (double x : v) sum += x;
  out.mean = sum / n;
  if (n > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n));
  }
  return out;
}

}  // namespace detail

/// Run one scenario ensemble: calibrate z once, then for each realization
/// draw a network and a shock from substreams keyed by (seed, realization),
/// propagate, and reduce. Aggregation is an ordered reduction over the
/// realization index, so results are identical at any thread count.
inline EnsembleResult run_ensemble(const MarketSnapshot& snap,
                                   const EnsembleSettings& settings) {
  const int n = snap.size();
  const int rounds = settings.contagion.max_rounds;
  EnsembleResult result;
  result.z = calibrate_z(snap, settings.network_density);
  result.rounds = rounds;
  result.ensemble_size = settings.ensemble_size;
  result.reports.resize(settings.ensemble_size);
  if (settings.keep_networks) result.networks.resize(settings.ensemble_size);
  if (settings.keep_shocks) result.shock_draws.resize(settings.ensemble_size);
  if (settings.keep_trajectories) result.trajectories.resize(settings.ensemble_size);

  detail::parallel_for(settings.ensemble_size, settings.threads, [&](int r) {
    try {
      RngStream net_rng = RngStream::derive(settings.master_seed, r, kTagNetwork);
      RngStream shock_rng = RngStream::derive(settings.master_seed, r, kTagShock);
      ExposureNetwork net = sample_network(snap, result.z, net_rng);
      ShockVector shock = settings.scenario == Scenario::Cover2
                              ? cover2_shock(snap)
                              : distributed_shock(snap, settings.shock, shock_rng);
      ContagionTrajectory traj = propagate(net, snap, shock, settings.contagion);
      result.reports[r] = vulnerability_report(
          traj, snap, settings.contagion.default_threshold_eps, rounds);
      if (settings.keep_networks) result.networks[r] = std::move(net);
      if (settings.keep_shocks) result.shock_draws[r] = std::move(shock);
      if (settings.keep_trajectories) result.trajectories[r] = std::move(traj);
    } catch (const Error& e) {
      throw Error("realization " + std::to_string(r) + ": " + e.what());
    }
  });

  result.member_ids.reserve(n);
  for (const auto& m : snap.members) result.member_ids.push_back(m.id);
  result.leverage.resize(n);
  for (int i = 0; i < n; ++i)
    result.leverage[i] = snap.members[i].equity > 0.0
                             ? snap.members[i].interbank_assets / snap.members[i].equity
                             : kInf;

  const int ens = settings.ensemble_size;
  result.mean_h1.assign(n, 0.0);
  result.mean_h2.assign(n, 0.0);
  result.mean_hstar.assign(n, 0.0);
  for (int r = 0; r < ens; ++r)
    for (int i = 0; i < n; ++i) {
      result.mean_h1[i] += result.reports[r].h1[i];
      result.mean_h2[i] += result.reports[r].h2[i];
      result.mean_hstar[i] += result.reports[r].hstar[i];
    }
  for (int i = 0; i < n; ++i) {
    result.mean_h1[i] /= ens;
    result.mean_h2[i] /= ens;
    result.mean_hstar[i] /= ens;
  }

  result.mean_r_df_raw.resize(rounds + 1);
  result.se_r_df_raw.resize(rounds + 1);
  result.mean_r_df_clamped.resize(rounds + 1);
  result.mean_r_re.resize(rounds + 1);
  result.se_r_re.resize(rounds + 1);
  result.mean_uncovered_sum.resize(rounds + 1);
  result.mean_defaults.resize(rounds + 1);
  std::vector<double> buf(ens);
  for (int k = 0; k <= rounds; ++k) {
    for (int r = 0; r < ens; ++r) buf[r] = result.reports[r].r_df_raw[k];
    auto df = detail::mean_and_se(buf);
    result.mean_r_df_raw[k] = df.mean;
    result.se_r_df_raw[k] = df.se;
    double acc = 0.0;
    for (int r = 0; r < ens; ++r) acc += result.reports[r].r_df_clamped[k];
    result.mean_r_df_clamped[k] = acc / ens;
    for (int r = 0; r < ens; ++r) buf[r] = result.reports[r].r_re[k];
    auto re = detail::mean_and_se(buf);
    result.mean_r_re[k] = re.mean;
    result.se_r_re[k] = re.se;
    acc = 0.0;
    for (int r = 0; r < ens; ++r) acc += result.reports[r].uncovered_sum[k];
    result.mean_uncovered_sum[k] = acc / ens;
    acc = 0.0;
    for (int r = 0; r < ens; ++r)
      acc += static_cast<double>(result.reports[r].defaulted[k].size());
    result.mean_defaults[k] = acc / ens;
  }
  double acc = 0.0;
  for (int r = 0; r < ens; ++r) acc += result.reports[r].rounds_run;
  result.mean_rounds_run = acc / ens;
  acc = 0.0;
  for (int r = 0; r < ens; ++r) acc += result.reports[r].converged ? 1.0 : 0.0;
  result.converged_fraction = acc / ens;
  return result;
}

inline EnsembleSettings settings_from_config(const RunConfig& cfg) {
  EnsembleSettings s;
  s.scenario = cfg.scenario;
  s.shock = cfg.shock;
  s.contagion = cfg.contagion;
  s.network_density = cfg.network_density;
  s.ensemble_size = cfg.ensemble_size;
  s.master_seed = cfg.master_seed;
  s.threads = cfg.threads;
  s.keep_networks = cfg.dump_networks;
  s.keep_shocks = cfg.dump_shocks;
  s.keep_trajectories = cfg.dump_trajectories;
  return s;
}

inline void write_scenario_outputs(const EnsembleResult& res, const MarketSnapshot& snap,
                                   const EnsembleSettings& settings,
                                   const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string base = out_dir + "/";

  {
    csv::Writer w(base + "summary.csv", {"key", "value"});
    w.field("scenario")
        .field(settings.scenario == Scenario::Cover2 ? "cover2" : "distributed");
    w.end_row();
    w.field("date").field(snap.date);
    w.end_row();
    w.field("members").field(static_cast<int>(res.member_ids.size()));
    w.end_row();
    w.field("ensemble_size").field(res.ensemble_size);
    w.end_row();
    w.field("master_seed").field(std::to_string(settings.master_seed));
    w.end_row();
    w.field("z").field(res.z);
    w.end_row();
    w.field("network_density").field(settings.network_density);
    w.end_row();
    w.field("mean_rounds_run").field(res.mean_rounds_run);
    w.end_row();
    w.field("converged_fraction").field(res.converged_fraction);
    w.end_row();
  }

  {
    StressReport view;  // reuse the presentation ordering on ensemble means
    view.member_ids = res.member_ids;
    view.hstar = res.mean_hstar;
    auto order = report_presentation_order(view);
    csv::Writer w(base + "triplets.csv",
                  {"rank", "member_id", "leverage", "h1_mean", "h2_mean", "hstar_mean"});
    for (size_t k = 0; k < order.size(); ++k) {
      int i = order[k];
      w.field(k + 1)
          .field(res.member_ids[i])
          .field(res.leverage[i])
          .field(res.mean_h1[i])
          .field(res.mean_h2[i])
          .field(res.mean_hstar[i]);
      w.end_row();
    }
  }

  {
    csv::Writer w(base + "metric_series.csv",
                  {"round", "r_df_raw_mean", "r_df_raw_se", "r_df_clamped_mean",
                   "r_re_mean", "r_re_se", "uncovered_sum_mean", "defaults_mean"});
    for (int k = 0; k <= res.rounds; ++k) {
      w.field(k)
          .field(res.mean_r_df_raw[k])
          .field(res.se_r_df_raw[k])
          .field(res.mean_r_df_clamped[k])
          .field(res.mean_r_re[k])
          .field(res.se_r_re[k])
          .field(res.mean_uncovered_sum[k])
          .field(res.mean_defaults[k]);
      w.end_row();
    }
  }

  if (!res.shock_draws.empty()) {
    csv::Writer w(base + "shocks.csv",
                  {"realization", "member_id", "loss", "initial_distress"});
    for (size_t r = 0; r < res.shock_draws.size(); ++r)
      for (size_t i = 0; i < res.member_ids.size(); ++i) {
        w.field(r)
            .field(res.member_ids[i])
            .field(res.shock_draws[r].losses[i])
            .field(res.shock_draws[r].initial_distress[i]);
        w.end_row();
      }
  }

  if (!res.trajectories.empty()) {
    csv::Writer w(base + "trajectories.csv", {"realization", "round", "member_id", "h"});
    csv::Writer wr(base + "rounds.csv", {"realization", "round", "gamma", "q"});
    for (size_t r = 0; r < res.trajectories.size(); ++r) {
      const auto& traj = res.trajectories[r];
      for (int k = 0; k <= traj.rounds_run; ++k)
        for (size_t i = 0; i < res.member_ids.size(); ++i) {
          w.field(r).field(k).field(res.member_ids[i]).field(traj.h[k][i]);
          w.end_row();
        }
      for (size_t k = 0; k < traj.gamma_series.size(); ++k) {
        wr.field(r).field(static_cast<int>(k)).field(traj.gamma_series[k]).field(
            traj.q_series[k]);
        wr.end_row();
      }
    }
  }

  if (!res.networks.empty()) {
    fs::create_directories(base + "networks");
    for (size_t r = 0; r < res.networks.size(); ++r) {
      char name[32];
      std::snprintf(name, sizeof(name), "realization_%05zu.csv", r);
      csv::Writer w(base + "networks/" + name, {"source", "target", "weight"});
      const auto& net = res.networks[r];
      for (int i = 0; i < net.n; ++i)
        for (int j = 0; j < net.n; ++j)
          if (net.at(i, j) > 0.0) {
            w.field(res.member_ids[i]).field(res.member_ids[j]).field(net.at(i, j));
            w.end_row();
          }
    }
    // ensemble pair statistics: link probability and realized mean weight
    csv::Writer w(base + "network_stats.csv",
                  {"source", "target", "p_link", "mean_weight"});
    const int n = static_cast<int>(res.member_ids.size());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        double p = link_probability(res.z, snap.members[i].interbank_assets,
                                    snap.members[j].interbank_liabilities);
        double mean_w = 0.0;
        for (const auto& net : res.networks) mean_w += net.at(i, j);
        mean_w /= static_cast<double>(res.networks.size());
        w.field(res.member_ids[i]).field(res.member_ids[j]).field(p).field(mean_w);
        w.end_row();
      }
  }
}

/// End-to-end scenario run from a config: ingest, simulate, write outputs.
inline EnsembleResult run_scenario(const RunConfig& cfg) {
  MarketSnapshot snap = ingest_market(cfg.members_csv, cfg.fund_csv);
  EnsembleSettings settings = settings_from_config(cfg);
  EnsembleResult res = run_ensemble(snap, settings);
  write_scenario_outputs(res, snap, settings, cfg.output_dir);
  return res;
}

struct SweepResult {
  SweepAxis axis1, axis2;
  std::vector<double> values1, values2;
  DenseMatrix r_df_raw, r_df_raw_se, r_df_clamped, r_re, r_re_se;
};

namespace detail {

inline void apply_sweep_param(EnsembleSettings& s, const std::string& param,
                              double value) {
  if (param == "x")
    s.shock.x = value;
  else if (param == "lgd")
    s.contagion.lgd = value;
  else if (param == "rho")
    s.contagion.rho = value;
  else if (param == "tau")
    s.contagion.tau = value;
  else
    throw ConfigError("parameter '" + param + "' cannot be applied to a run");
}

struct CellMetrics {
  double r_df_raw, r_df_raw_se, r_df_clamped, r_re, r_re_se;
};

inline CellMetrics cell_metrics_at_round(const EnsembleResult& res, int round) {
  const int k = std::clamp(round, 0, res.rounds);
  return {res.mean_r_df_raw[k], res.se_r_df_raw[k], res.mean_r_df_clamped[k],
          res.mean_r_re[k], res.se_r_re[k]};
}

}  // namespace detail

/// Two-axis parameter sweep. An "n" axis is a readout of the recorded
/// trajectory at each round, not a re-run; any other axis re-runs the
/// ensemble per value with an independent per-cell seed.
inline SweepResult run_sweep_grid(const MarketSnapshot& snap,
                                  const EnsembleSettings& base,
                                  const SweepAxis& axis1, const SweepAxis& axis2,
                                  int readout_round = -1) {
  SweepResult out;
  out.axis1 = axis1;
  out.axis2 = axis2;
  out.values1 = axis1.values();
  out.values2 = axis2.values();
  const int n1 = static_cast<int>(out.values1.size());
  const int n2 = static_cast<int>(out.values2.size());
  out.r_df_raw = DenseMatrix(n1, n2);
  out.r_df_raw_se = DenseMatrix(n1, n2);
  out.r_df_clamped = DenseMatrix(n1, n2);
  out.r_re = DenseMatrix(n1, n2);
  out.r_re_se = DenseMatrix(n1, n2);

  if (axis1.param == "n" && axis2.param == "n")
    throw ConfigError("both sweep axes cannot be 'n'");

  const bool n_on_1 = axis1.param == "n";
  const bool n_on_2 = axis2.param == "n";

  if (n_on_1 || n_on_2) {
    const SweepAxis& par_axis = n_on_1 ? axis2 : axis1;
    const std::vector<double>& par_values = n_on_1 ? out.values2 : out.values1;
    const std::vector<double>& n_values = n_on_1 ? out.values1 : out.values2;
    int max_n = 0;
    for (double v : n_values) max_n = std::max(max_n, static_cast<int>(std::lround(v)));
    for (size_t p = 0; p < par_values.size(); ++p) {
      EnsembleSettings s = base;
      // a single-value axis is the plain scenario run, so keep its seed
      s.master_seed = par_values.size() > 1
                          ? RngStream::derive_key(base.master_seed, p, kTagSweepCell)
                          : base.master_seed;
      s.contagion.max_rounds = std::max(base.contagion.max_rounds, max_n);
      detail::apply_sweep_param(s, par_axis.param, par_values[p]);
      EnsembleResult res = run_ensemble(snap, s);
      for (size_t q = 0; q < n_values.size(); ++q) {
        int round = static_cast<int>(std::lround(n_values[q]));
        auto m = detail::cell_metrics_at_round(res, round);
        int i = n_on_1 ? static_cast<int>(q) : static_cast<int>(p);
        int j = n_on_1 ? static_cast<int>(p) : static_cast<int>(q);
        out.r_df_raw.at(i, j) = m.r_df_raw;
        out.r_df_raw_se.at(i, j) = m.r_df_raw_se;
        out.r_df_clamped.at(i, j) = m.r_df_clamped;
        out.r_re.at(i, j) = m.r_re;
        out.r_re_se.at(i, j) = m.r_re_se;
      }
    }
    return out;
  }

  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      EnsembleSettings s = base;
      s.master_seed = n1 * n2 > 1
                          ? RngStream::derive_key(base.master_seed,
                                                  static_cast<std::uint64_t>(i) * n2 + j,
                                                  kTagSweepCell)
                          : base.master_seed;
      detail::apply_sweep_param(s, axis1.param, out.values1[i]);
      detail::apply_sweep_param(s, axis2.param, out.values2[j]);
      EnsembleResult res = run_ensemble(snap, s);
      int round = readout_round < 0 ? res.rounds : readout_round;
      auto m = detail::cell_metrics_at_round(res, round);
      out.r_df_raw.at(i, j) = m.r_df_raw;
      out.r_df_raw_se.at(i, j) = m.r_df_raw_se;
      out.r_df_clamped.at(i, j) = m.r_df_clamped;
      out.r_re.at(i, j) = m.r_re;
      out.r_re_se.at(i, j) = m.r_re_se;
    }
  return out;
}

inline void write_heatmap(const std::string& path, const SweepResult& sweep,
                          const DenseMatrix& m) {
  std::vector<std::string> header;
  header.push_back(sweep.axis1.param + "\\" + sweep.axis2.param);
  for (double v : sweep.values2) header.push_back(format_double(v));
  csv::Writer w(path, header);
  for (size_t i = 0; i < sweep.values1.size(); ++i) {
    w.field(sweep.values1[i]);
    for (size_t j = 0; j < sweep.values2.size(); ++j)
      w.field(m.at(static_cast<int>(i), static_cast<int>(j)));
    w.end_row();
  }
}

inline void write_sweep_outputs(const SweepResult& sweep, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string base = out_dir + "/";
  write_heatmap(base + "heatmap_r_df_raw.csv", sweep, sweep.r_df_raw);
  write_heatmap(base + "heatmap_r_df_raw_se.csv", sweep, sweep.r_df_raw_se);
  write_heatmap(base + "heatmap_r_df_clamped.csv", sweep, sweep.r_df_clamped);
  write_heatmap(base + "heatmap_r_re.csv", sweep, sweep.r_re);
  write_heatmap(base + "heatmap_r_re_se.csv", sweep, sweep.r_re_se);
}

/// End-to-end sweep from a config with exactly two sweep axes.
inline SweepResult run_sweep(const RunConfig& cfg) {
  if (cfg.sweep.size() != 2)
    throw ConfigError("sweep requires exactly two axes, got " +
                      std::to_string(cfg.sweep.size()));
  MarketSnapshot snap = ingest_market(cfg.members_csv, cfg.fund_csv);
  EnsembleSettings settings = settings_from_config(cfg);
  settings.keep_networks = settings.keep_shocks = settings.keep_trajectories = false;
  SweepResult sweep = run_sweep_grid(snap, settings, cfg.sweep[0], cfg.sweep[1],
                                     cfg.readout_round);
  write_sweep_outputs(sweep, cfg.output_dir);
  return sweep;
}

}  // namespace ccps
