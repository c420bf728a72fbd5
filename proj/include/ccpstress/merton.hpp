#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ccpstress/common.hpp"
#include "ccpstress/gaussian.hpp"

namespace ccps {

/// Market observables for one member at one date. Equity is the traded (or
/// book) value of the firm's shares; book liabilities act as both strike and
/// knock-out barrier of the option representation.
struct EquityObservation {
  std::string member_id;
  std::string date;
  double equity_value = 0.0;     // E
  double equity_vol = 0.0;       // sigma_E, annualized
  double book_liabilities = 0.0; // L, barrier and strike
  double asset_drift = 0.0;      // mu_A, annual
  double risk_free_rate = 0.0;   // r, annual
  double maturity_years = 1.0;   // T
};

struct MertonSolution {
  double assets = 0.0;
  double asset_vol = 0.0;
  double liabilities = 0.0;
  double default_probability = 0.0;
  double residual_norm = 0.0;
};

enum class SplitMethod { ConstantProportion, LogRegression };

struct InterbankSplit {
  double interbank_assets = 0.0;
  double interbank_liabilities = 0.0;
  SplitMethod method = SplitMethod::ConstantProportion;
};

/// Coefficients of log(total) = alpha + beta * log(interbank), fitted on
/// firms that disclose both figures. Defaults are the fitted values used
/// when a member reports no interbank breakdown.
struct RegressionCoefficients {
  double alpha_assets = 1.70;
  double beta_assets = 0.81;
  double alpha_liabilities = 1.06;
  double beta_liabilities = 0.93;
};

namespace detail {

inline void require_live_barrier(double assets, double asset_vol, double barrier) {
  if (!(assets > barrier))
    throw std::domain_error("down-and-out call knocked out: assets <= barrier");
  if (!(asset_vol > 0.0))
    throw std::domain_error("asset volatility must be positive");
}

struct DocTerms {
  double dp, dm, y, yt;      // d+, d-, y, y tilde
  double lam;                // r/sigma^2 + 1/2
  double pow_2l, pow_2lm1, pow_2lm2;  // (L/A)^{2l}, ^{2l-1}, ^{2l-2}
  double disc;               // L e^{-rT}
};

inline DocTerms doc_terms(double A, double sigma, double L, double r, double T) {
  DocTerms t;
  const double st = sigma * std::sqrt(T);
  const double log_al = std::log(A / L);
  t.dp = (log_al + (r + 0.5 * sigma * sigma) * T) / st;
  t.dm = t.dp - st;
  t.lam = r / (sigma * sigma) + 0.5;
  t.y = -log_al / st + t.lam * st;
  t.yt = t.y - st;
  const double ratio = L / A;
  t.pow_2l = std::pow(ratio, 2.0 * t.lam);
  t.pow_2lm1 = std::pow(ratio, 2.0 * t.lam - 1.0);
  t.pow_2lm2 = std::pow(ratio, 2.0 * t.lam - 2.0);
  t.disc = L * std::exp(-r * T);
  return t;
}

inline double doc_price(double A, double sigma, double L, double r, double T) {
  const DocTerms t = doc_terms(A, sigma, L, r, T);
  double price = norm_cdf(t.dp) * A - norm_cdf(t.dm) * t.disc -
                 norm_cdf(t.y) * A * t.pow_2l + norm_cdf(t.yt) * t.disc * t.pow_2lm2;
  return price;
}

// dE/dA of the down-and-out call; the normal-density terms cancel exactly.
inline double doc_delta(double A, double sigma, double L, double r, double T) {
  const DocTerms t = doc_terms(A, sigma, L, r, T);
  return norm_cdf(t.dp) + (2.0 * t.lam - 1.0) * t.pow_2l * norm_cdf(t.y) +
         (2.0 - 2.0 * t.lam) * std::exp(-r * T) * t.pow_2lm1 * norm_cdf(t.yt);
}

}  // namespace detail

/// Price of the down-and-out call written on the member's assets, with both
/// strike and barrier at the book liabilities. This is the model value of
/// the member's equity.
inline double price_doc_call(double assets, double asset_vol,
                             const EquityObservation& obs) {
  detail::require_live_barrier(assets, asset_vol, obs.book_liabilities);
  return detail::doc_price(assets, asset_vol, obs.book_liabilities,
                           obs.risk_free_rate, obs.maturity_years);
}

/// Equity volatility implied by asset level and volatility:
/// sigma_E = A sigma_A (dE/dA) / E.
inline double equity_vol_from_assets(double assets, double asset_vol,
                                     const EquityObservation& obs) {
  detail::require_live_barrier(assets, asset_vol, obs.book_liabilities);
  const double e = detail::doc_price(assets, asset_vol, obs.book_liabilities,
                                     obs.risk_free_rate, obs.maturity_years);
  const double delta = detail::doc_delta(assets, asset_vol, obs.book_liabilities,
                                         obs.risk_free_rate, obs.maturity_years);
  return assets * asset_vol * delta / e;
}

/// Probability that assets following a GBM with physical drift mu_A hit the
/// barrier L at any time within T (first passage below a constant barrier).
inline double first_passage_probability(const MertonSolution& sol,
                                        const EquityObservation& obs) {
  const double A = sol.assets;
  const double sigma = sol.asset_vol;
  const double L = obs.book_liabilities;
  const double T = obs.maturity_years;
  if (!(A > L)) return 1.0;
  const double nu = obs.asset_drift - 0.5 * sigma * sigma;
  const double st = sigma * std::sqrt(T);
  const double m = std::log(L / A);  // < 0
  double p = norm_cdf((m - nu * T) / st) +
             std::exp((2.0 * nu / (sigma * sigma)) * m + log_norm_cdf((m + nu * T) / st));
  if (p < 0.0) p = 0.0;
  if (p > 1.0) p = 1.0;
  return p;
}

namespace detail {

struct Residuals {
  double r_price, r_vol;
  double norm() const { return std::max(std::fabs(r_price), std::fabs(r_vol)); }
};

inline Residuals merton_residuals(double A, double sigma, const EquityObservation& obs) {
  const double e = doc_price(A, sigma, obs.book_liabilities, obs.risk_free_rate,
                             obs.maturity_years);
  const double delta = doc_delta(A, sigma, obs.book_liabilities, obs.risk_free_rate,
                                 obs.maturity_years);
  const double se = A * sigma * delta / e;
  return {(e - obs.equity_value) / obs.equity_value,
          (se - obs.equity_vol) / obs.equity_vol};
}

// Bisection for assets at fixed volatility: the price is strictly increasing
// in assets, from 0 at the barrier to A - L e^{-rT} as A grows.
inline double solve_assets_for_price(double sigma, const EquityObservation& obs) {
  const double L = obs.book_liabilities;
  double lo = L * (1.0 + 1e-14);
  double hi = std::max(obs.equity_value + L, 2.0 * L);
  for (int i = 0; i < 200 && doc_price(hi, sigma, L, obs.risk_free_rate,
                                       obs.maturity_years) < obs.equity_value;
       ++i)
    hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    double p = doc_price(mid, sigma, L, obs.risk_free_rate, obs.maturity_years);
    (p < obs.equity_value ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

enum class BisectionOutcome { Solved, NoRoot };

// Fallback for a stalled Newton: reduce to a 1-D root find in sigma of the
// equity-volatility residual, with assets eliminated by the inner bisection.
// NoRoot means the residual kept one sign over the whole sigma range: the
// observation lies outside the reachable set of the model.
inline BisectionOutcome invert_by_bisection(const EquityObservation& obs,
                                            double sigma_guess, double& A_out,
                                            double& sigma_out) {
  auto g = [&](double sigma) {
    double a = solve_assets_for_price(sigma, obs);
    double delta = doc_delta(a, sigma, obs.book_liabilities, obs.risk_free_rate,
                             obs.maturity_years);
    return a * sigma * delta / obs.equity_value - obs.equity_vol;
  };
  const int n_grid = 240;
  const double s_lo = 1e-6, s_hi = 20.0;
  double best_lo = -1.0, best_hi = -1.0, best_dist = kInf;
  double prev_s = s_lo, prev_g = g(s_lo);
  for (int k = 1; k <= n_grid; ++k) {
    double s = s_lo * std::pow(s_hi / s_lo, static_cast<double>(k) / n_grid);
    double gv = g(s);
    if ((prev_g <= 0.0 && gv >= 0.0) || (prev_g >= 0.0 && gv <= 0.0)) {
      double mid = 0.5 * (prev_s + s);
      double dist = std::fabs(std::log(mid / std::max(sigma_guess, 1e-8)));
      if (dist < best_dist) {
        best_dist = dist;
        best_lo = prev_s;
        best_hi = s;
      }
    }
    prev_s = s;
    prev_g = gv;
  }
  if (best_lo < 0.0) return BisectionOutcome::NoRoot;
  double lo = best_lo, hi = best_hi;
  double g_lo = g(lo);
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    double gm = g(mid);
    if ((g_lo <= 0.0) == (gm <= 0.0)) {
      lo = mid;
      g_lo = gm;
    } else {
      hi = mid;
    }
  }
  sigma_out = 0.5 * (lo + hi);
  A_out = solve_assets_for_price(sigma_out, obs);
  return BisectionOutcome::Solved;
}

}  // namespace detail

struct MertonInversionSettings {
  int max_iterations = 100;
  double tolerance = 1e-10;      // target relative residual
  double accept_tolerance = 1e-8;  // contract bound
  double fd_rel_step = 1e-6;
};

/// Solve the pair (price, equity vol) = (E, sigma_E) for (assets, asset vol)
/// by damped 2-D Newton with a finite-difference Jacobian, falling back to
/// nested bisection if Newton stalls. Fills the first-passage default
/// probability on the way out.
inline MertonSolution invert_merton(const EquityObservation& obs,
                                    const MertonInversionSettings& settings = {}) {
  if (!(obs.equity_value > 0.0) || !(obs.equity_vol > 0.0))
    throw NoSolutionError("no solution with assets above barrier for member " +
                          obs.member_id + " (non-positive equity observation)");
  if (!(obs.book_liabilities > 0.0) || !(obs.maturity_years > 0.0))
    throw std::invalid_argument("invalid observation for member " + obs.member_id);

  const double L = obs.book_liabilities;
  double A = obs.equity_value + L * std::exp(-obs.risk_free_rate * obs.maturity_years);
  double sigma = obs.equity_vol * obs.equity_value / (obs.equity_value + L);
  sigma = std::max(sigma, 1e-8);

  auto res = detail::merton_residuals(A, sigma, obs);
  bool stalled = false;
  for (int it = 0; it < settings.max_iterations && res.norm() > settings.tolerance;
       ++it) {
    const double ha = settings.fd_rel_step * A;
    const double hs = settings.fd_rel_step * std::max(sigma, 1e-6);
    double a_lo = std::max(A - ha, L * (1.0 + 1e-14));
    auto ra_p = detail::merton_residuals(A + ha, sigma, obs);
    auto ra_m = detail::merton_residuals(a_lo, sigma, obs);
    auto rs_p = detail::merton_residuals(A, sigma + hs, obs);
    auto rs_m = detail::merton_residuals(A, std::max(sigma - hs, 1e-10), obs);
    const double daa = (A + ha) - a_lo;
    const double dss = (sigma + hs) - std::max(sigma - hs, 1e-10);
    double j11 = (ra_p.r_price - ra_m.r_price) / daa;
    double j12 = (rs_p.r_price - rs_m.r_price) / dss;
    double j21 = (ra_p.r_vol - ra_m.r_vol) / daa;
    double j22 = (rs_p.r_vol - rs_m.r_vol) / dss;
    double det = j11 * j22 - j12 * j21;
    if (!std::isfinite(det) || std::fabs(det) < 1e-300) {
      stalled = true;
      break;
    }
    double step_a = -(j22 * res.r_price - j12 * res.r_vol) / det;
    double step_s = -(-j21 * res.r_price + j11 * res.r_vol) / det;

    double scale = 1.0;
    bool improved = false;
    for (int half = 0; half < 60; ++half) {
      double a_try = A + scale * step_a;
      double s_try = sigma + scale * step_s;
      if (a_try > L * (1.0 + 1e-14) && s_try > 1e-10) {
        auto r_try = detail::merton_residuals(a_try, s_try, obs);
        if (r_try.norm() < res.norm()) {
          A = a_try;
          sigma = s_try;
          res = r_try;
          improved = true;
          break;
        }
      }
      scale *= 0.5;
    }
    if (!improved) {
      stalled = true;
      break;
    }
  }

  if (res.norm() > settings.tolerance || stalled) {
    double a_fb, s_fb;
    auto outcome = detail::invert_by_bisection(obs, sigma, a_fb, s_fb);
    if (outcome == detail::BisectionOutcome::Solved) {
      auto r_fb = detail::merton_residuals(a_fb, s_fb, obs);
      if (r_fb.norm() < res.norm()) {
        A = a_fb;
        sigma = s_fb;
        res = r_fb;
      }
    } else if (res.norm() > settings.accept_tolerance) {
      throw NoSolutionError("no (assets, asset_vol) with assets above barrier "
                            "matches the observation for member " +
                            obs.member_id);
    }
  }

  if (res.norm() > settings.accept_tolerance)
    throw NoConvergenceError("merton inversion did not converge for member " +
                             obs.member_id + " (residual " +
                             format_double(res.norm()) + ")");

  MertonSolution sol;
  sol.assets = A;
  sol.asset_vol = sigma;
  sol.liabilities = L;
  sol.residual_norm = res.norm();
  sol.default_probability = first_passage_probability(sol, obs);
  return sol;
}

/// Constant-proportion interbank split: scale the reference proportions of
/// interbank over total to the current totals.
inline InterbankSplit split_interbank(const MertonSolution& sol,
                                      const InterbankSplit& reference,
                                      double reference_assets,
                                      double reference_liabilities) {
  InterbankSplit out;
  double frac_a =
      reference_assets > 0.0 ? reference.interbank_assets / reference_assets : 0.0;
  double frac_l = reference_liabilities > 0.0
                      ? reference.interbank_liabilities / reference_liabilities
                      : 0.0;
  out.interbank_assets = frac_a * sol.assets;
  out.interbank_liabilities = frac_l * sol.liabilities;
  out.method = SplitMethod::ConstantProportion;
  return out;
}

/// Inverse of log(total) = alpha + beta * log(interbank), before clamping.
inline double invert_log_regression(double total, double alpha, double beta) {
  if (beta == 0.0) throw std::invalid_argument("regression beta must be nonzero");
  return std::exp((std::log(total) - alpha) / beta);
}

/// Annualized volatility from a daily price series: log returns over the
/// trailing `window` trading days, scaled by sqrt(250).
inline double annualized_volatility(const std::vector<double>& prices,
                                    int window = 250) {
  if (prices.size() < 3)
    throw std::invalid_argument("volatility estimation needs at least 3 prices");
  const int n_returns = std::min<int>(window, static_cast<int>(prices.size()) - 1);
  const size_t start = prices.size() - 1 - n_returns;
  double mean = 0.0;
  std::vector<double> returns(n_returns);
  for (int k = 0; k < n_returns; ++k) {
    if (!(prices[start + k] > 0.0) || !(prices[start + k + 1] > 0.0))
      throw std::invalid_argument("prices must be positive");
    returns[k] = std::log(prices[start + k + 1] / prices[start + k]);
    mean += returns[k];
  }
  mean /= n_returns;
  double ss = 0.0;
  for (double r : returns) ss += (r - mean) * (r - mean);
  return std::sqrt(ss / (n_returns - 1)) * std::sqrt(250.0);
}

/// Regression-based interbank split for members that do not disclose
/// interbank figures; results clamped into [0, total].
inline InterbankSplit split_interbank_regression(const MertonSolution& sol,
                                                 const RegressionCoefficients& coeffs) {
  InterbankSplit out;
  double a = invert_log_regression(sol.assets, coeffs.alpha_assets, coeffs.beta_assets);
  double l = invert_log_regression(sol.liabilities, coeffs.alpha_liabilities,
                                   coeffs.beta_liabilities);
  out.interbank_assets = std::clamp(a, 0.0, sol.assets);
  out.interbank_liabilities = std::clamp(l, 0.0, sol.liabilities);
  out.method = SplitMethod::LogRegression;
  return out;
}

}  // namespace ccps
