// Command-line front end for the CCP network stress-test engine.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "ccpstress/engine.hpp"
#include "ccpstress/synthetic.hpp"

namespace {

int cmd_merton(const std::string& input, const std::string& output,
               const ccps::RegressionCoefficients& coeffs) {
  auto records = ccps::read_observations(input);
  auto solutions = ccps::solve_observations(records, coeffs);
  ccps::write_solutions(solutions, output);
  int pre_default = 0;
  for (const auto& s : solutions) pre_default += s.status == "pre_default";
  std::printf("solved %zu observations (%d pre-default) -> %s\n", solutions.size(),
              pre_default, output.c_str());
  return 0;
}

int cmd_synth(const ccps::SyntheticMarketSpec& spec, const std::string& out_dir) {
  auto market = ccps::generate_synthetic_market(spec);
  std::filesystem::create_directories(out_dir);
  ccps::write_market(market.snapshot, out_dir + "/members.csv", out_dir + "/fund.csv");
  ccps::write_observations(market.observations, out_dir + "/observations.csv");
  std::printf("generated %d members, default fund %s -> %s\n", market.snapshot.size(),
              ccps::format_double(market.snapshot.default_fund_total).c_str(),
              out_dir.c_str());
  return 0;
}

int cmd_run(const std::string& config_path) {
  ccps::RunConfig cfg = ccps::load_run_config(config_path);
  auto res = ccps::run_scenario(cfg);
  std::printf("ran %d realizations over %zu members (z = %s)\n", res.ensemble_size,
              res.member_ids.size(), ccps::format_double(res.z).c_str());
  std::printf("round %d: R_DF = %s, R_RE = %s -> %s\n", res.rounds,
              ccps::format_double(res.mean_r_df_raw[res.rounds]).c_str(),
              ccps::format_double(res.mean_r_re[res.rounds]).c_str(),
              cfg.output_dir.c_str());
  return 0;
}

int cmd_sweep(const std::string& config_path) {
  ccps::RunConfig cfg = ccps::load_run_config(config_path);
  auto sweep = ccps::run_sweep(cfg);
  std::printf("swept %zu x %zu cells over (%s, %s) -> %s\n", sweep.values1.size(),
              sweep.values2.size(), sweep.axis1.param.c_str(),
              sweep.axis2.param.c_str(), cfg.output_dir.c_str());
  return 0;
}

int cmd_validate(const std::string& members, const std::string& fund,
                 const std::string& observations) {
  if (!members.empty()) {
    auto snap = ccps::ingest_market(members, fund);
    std::printf("ok: %d members, default fund %s (date %s)\n", snap.size(),
                ccps::format_double(snap.default_fund_total).c_str(),
                snap.date.c_str());
  }
  if (!observations.empty()) {
    auto recs = ccps::read_observations(observations);
    std::printf("ok: %zu observation rows\n", recs.size());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network-based stress testing for central counterparty default funds"};
  app.require_subcommand(1);

  std::string obs_in, solutions_out;
  ccps::RegressionCoefficients coeffs;
  auto* merton = app.add_subcommand(
      "merton", "Estimate daily balance sheets from equity observations");
  merton->add_option("--observations", obs_in, "Observations CSV")->required();
  merton->add_option("--output", solutions_out, "Solutions CSV")->required();
  merton->add_option("--alpha-assets", coeffs.alpha_assets,
                     "Regression intercept, assets side");
  merton->add_option("--beta-assets", coeffs.beta_assets,
                     "Regression slope, assets side");
  merton->add_option("--alpha-liabilities", coeffs.alpha_liabilities,
                     "Regression intercept, liabilities side");
  merton->add_option("--beta-liabilities", coeffs.beta_liabilities,
                     "Regression slope, liabilities side");

  ccps::SyntheticMarketSpec spec;
  std::string synth_dir = "market";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic clearing market");
  synth->add_option("--members", spec.n_members, "Number of clearing members");
  synth->add_option("--seed", spec.rng_seed, "Generator seed");
  synth->add_option("--leverage", spec.aggregate_leverage_target,
                    "Aggregate assets-to-equity target");
  synth->add_option("--interbank-min", spec.interbank_fraction_min,
                    "Lower interbank fraction");
  synth->add_option("--interbank-max", spec.interbank_fraction_max,
                    "Upper interbank fraction");
  synth->add_option("--uplift-min", spec.margin_uplift_min, "Lower margin stress uplift");
  synth->add_option("--uplift-max", spec.margin_uplift_max, "Upper margin stress uplift");
  synth->add_option("--cover-basis", spec.cover_basis,
                    "Members covered by the default fund");
  synth->add_option("--date", spec.date, "Snapshot date");
  synth->add_option("--risk-free", spec.risk_free_rate, "Risk-free rate");
  synth->add_option("--output-dir", synth_dir, "Output directory");

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run one scenario ensemble from a config");
  run->add_option("--config", run_config, "JSON config")->required();

  std::string sweep_config;
  auto* sweep = app.add_subcommand("sweep", "Run a two-axis parameter sweep");
  sweep->add_option("--config", sweep_config, "JSON config")->required();

  std::string v_members, v_fund, v_obs;
  auto* validate = app.add_subcommand("validate", "Schema-check input files");
  validate->add_option("--members", v_members, "Members CSV");
  validate->add_option("--fund", v_fund, "Fund CSV");
  validate->add_option("--observations", v_obs, "Observations CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (merton->parsed()) return cmd_merton(obs_in, solutions_out, coeffs);
    if (synth->parsed()) return cmd_synth(spec, synth_dir);
    if (run->parsed()) return cmd_run(run_config);
    if (sweep->parsed()) return cmd_sweep(sweep_config);
    if (validate->parsed()) {
      if (v_members.empty() && v_obs.empty()) {
        std::fprintf(stderr, "validate: nothing to check (pass --members/--fund "
                             "and/or --observations)\n");
        return 2;
      }
      if (!v_members.empty() && v_fund.empty()) {
        std::fprintf(stderr, "validate: --members requires --fund\n");
        return 2;
      }
      return cmd_validate(v_members, v_fund, v_obs);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
