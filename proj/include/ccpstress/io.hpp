#pragma once

#include <string>
#include <vector>

#include "ccpstress/csv.hpp"
#include "ccpstress/market.hpp"
#include "ccpstress/merton.hpp"

namespace ccps {

inline const std::vector<std::string> kMembersHeader = {
    "id",
    "equity",
    "assets_total",
    "liabilities_total",
    "interbank_assets",
    "interbank_liabilities",
    "margin_ordinary",
    "margin_stressed",
    "uncovered_exposure"};

inline const std::vector<std::string> kFundHeader = {"date", "default_fund_total"};

inline const std::vector<std::string> kObservationsHeader = {
    "member_id",
    "date",
    "equity_value",
    "equity_vol",
    "book_liabilities",
    "asset_drift",
    "risk_free_rate",
    "maturity_years",
    "interbank_asset_fraction",
    "interbank_liability_fraction",
    "use_regression"};

inline const std::vector<std::string> kSolutionsHeader = {
    "member_id",
    "date",
    "status",
    "assets",
    "asset_vol",
    "liabilities",
    "default_probability",
    "residual_norm",
    "interbank_assets",
    "interbank_liabilities",
    "split_method"};

/// Load and validate a market snapshot from the members and fund files.
inline MarketSnapshot ingest_market(const std::string& members_path,
                                    const std::string& fund_path) {
  csv::Table members = csv::read_file(members_path);
  MarketSnapshot snap;
  const int c_id = members.column("id");
  const int c_e = members.column("equity");
  const int c_a = members.column("assets_total");
  const int c_l = members.column("liabilities_total");
  const int c_ia = members.column("interbank_assets");
  const int c_il = members.column("interbank_liabilities");
  const int c_mo = members.column("margin_ordinary");
  const int c_ms = members.column("margin_stressed");
  const int c_ue = members.column("uncovered_exposure");
  for (size_t r = 0; r < members.rows.size(); ++r) {
    ClearingMember m;
    m.id = members.cell(r, c_id);
    m.equity = members.number(r, c_e);
    m.assets_total = members.number(r, c_a);
    m.liabilities_total = members.number(r, c_l);
    m.interbank_assets = members.number(r, c_ia);
    m.interbank_liabilities = members.number(r, c_il);
    m.margin_ordinary = members.number(r, c_mo);
    m.margin_stressed = members.number(r, c_ms);
    m.uncovered_exposure = members.number(r, c_ue);
    snap.members.push_back(std::move(m));
  }

  csv::Table fund = csv::read_file(fund_path);
  if (fund.rows.empty()) throw SchemaError(fund_path + ": no fund rows");
  snap.date = fund.cell(0, fund.column("date"));
  snap.default_fund_total = fund.number(0, fund.column("default_fund_total"));

  validate_snapshot(snap);
  return snap;
}

inline void write_market(const MarketSnapshot& snap, const std::string& members_path,
                         const std::string& fund_path) {
  csv::Writer members(members_path, kMembersHeader);
  for (const auto& m : snap.members) {
    members.field(m.id)
        .field(m.equity)
        .field(m.assets_total)
        .field(m.liabilities_total)
        .field(m.interbank_assets)
        .field(m.interbank_liabilities)
        .field(m.margin_ordinary)
        .field(m.margin_stressed)
        .field(m.uncovered_exposure);
    members.end_row();
  }
  csv::Writer fund(fund_path, kFundHeader);
  fund.field(snap.date).field(snap.default_fund_total);
  fund.end_row();
}

/// One observation row plus the interbank-split inputs that accompany it.
struct ObservationRecord {
  EquityObservation obs;
  double interbank_asset_fraction = 0.0;
  double interbank_liability_fraction = 0.0;
  bool use_regression = false;
};

inline std::vector<ObservationRecord> read_observations(const std::string& path) {
  csv::Table t = csv::read_file(path);
  const int c_id = t.column("member_id");
  const int c_date = t.column("date");
  const int c_e = t.column("equity_value");
  const int c_sv = t.column("equity_vol");
  const int c_l = t.column("book_liabilities");
  const int c_mu = t.column("asset_drift");
  const int c_r = t.column("risk_free_rate");
  const int c_t = t.column("maturity_years");
  const int c_fa = t.column("interbank_asset_fraction");
  const int c_fl = t.column("interbank_liability_fraction");
  const int c_reg = t.column("use_regression");
  std::vector<ObservationRecord> out;
  for (size_t r = 0; r < t.rows.size(); ++r) {
    ObservationRecord rec;
    rec.obs.member_id = t.cell(r, c_id);
    rec.obs.date = t.cell(r, c_date);
    rec.obs.equity_value = t.number(r, c_e);
    rec.obs.equity_vol = t.number(r, c_sv);
    rec.obs.book_liabilities = t.number(r, c_l);
    rec.obs.asset_drift = t.number(r, c_mu);
    rec.obs.risk_free_rate = t.number(r, c_r);
    rec.obs.maturity_years = t.number(r, c_t);
    rec.interbank_asset_fraction = t.number(r, c_fa);
    rec.interbank_liability_fraction = t.number(r, c_fl);
    rec.use_regression = t.number(r, c_reg) != 0.0;
    out.push_back(std::move(rec));
  }
  return out;
}

inline void write_observations(const std::vector<ObservationRecord>& records,
                               const std::string& path) {
  csv::Writer w(path, kObservationsHeader);
  for (const auto& rec : records) {
    w.field(rec.obs.member_id)
        .field(rec.obs.date)
        .field(rec.obs.equity_value)
        .field(rec.obs.equity_vol)
        .field(rec.obs.book_liabilities)
        .field(rec.obs.asset_drift)
        .field(rec.obs.risk_free_rate)
        .field(rec.obs.maturity_years)
        .field(rec.interbank_asset_fraction)
        .field(rec.interbank_liability_fraction)
        .field(rec.use_regression ? 1 : 0);
    w.end_row();
  }
}

struct SolutionRecord {
  std::string member_id;
  std::string date;
  std::string status;  // "ok" | "pre_default"
  MertonSolution solution;
  InterbankSplit split;
};

inline void write_solutions(const std::vector<SolutionRecord>& records,
                            const std::string& path) {
  csv::Writer w(path, kSolutionsHeader);
  for (const auto& rec : records) {
    w.field(rec.member_id).field(rec.date).field(rec.status);
    w.field(rec.solution.assets)
        .field(rec.solution.asset_vol)
        .field(rec.solution.liabilities)
        .field(rec.solution.default_probability)
        .field(rec.solution.residual_norm)
        .field(rec.split.interbank_assets)
        .field(rec.split.interbank_liabilities)
        .field(rec.split.method == SplitMethod::LogRegression ? "log-regression"
                                                              : "constant-proportion");
    w.end_row();
  }
}

/// Run the full balance-sheet estimation over a batch of observations.
/// Rows with non-positive equity are flagged pre_default and skipped.
inline std::vector<SolutionRecord> solve_observations(
    const std::vector<ObservationRecord>& records,
    const RegressionCoefficients& coeffs = {}) {
  std::vector<SolutionRecord> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    SolutionRecord sr;
    sr.member_id = rec.obs.member_id;
    sr.date = rec.obs.date;
    if (!(rec.obs.equity_value > 0.0)) {
      sr.status = "pre_default";
      out.push_back(std::move(sr));
      continue;
    }
    sr.status = "ok";
    sr.solution = invert_merton(rec.obs);
    if (rec.use_regression) {
      sr.split = split_interbank_regression(sr.solution, coeffs);
    } else {
      InterbankSplit ref{rec.interbank_asset_fraction, rec.interbank_liability_fraction,
                         SplitMethod::ConstantProportion};
      sr.split = split_interbank(sr.solution, ref, 1.0, 1.0);
    }
    out.push_back(std::move(sr));
  }
  return out;
}

}  // namespace ccps
