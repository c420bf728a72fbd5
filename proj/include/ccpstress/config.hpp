#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccpstress/common.hpp"
#include "ccpstress/contagion.hpp"
#include "ccpstress/shocks.hpp"

namespace ccps {

struct SweepAxis {
  std::string param;  // one of: x, n, lgd, rho, tau
  double min = 0.0;
  double max = 0.0;
  int steps = 1;
  bool log_scale = false;

  std::vector<double> values() const {
    std::vector<double> v;
    if (steps <= 1) {
      v.push_back(min);
      return v;
    }
    for (int k = 0; k < steps; ++k) {
      double t = static_cast<double>(k) / (steps - 1);
      if (log_scale)
        v.push_back(std::exp(std::log(min) + t * (std::log(max) - std::log(min))));
      else
        v.push_back(min + t * (max - min));
    }
    return v;
  }
};

struct RunConfig {
  std::string members_csv;
  std::string fund_csv;
  std::string output_dir = "out";
  Scenario scenario = Scenario::Distributed;
  int ensemble_size = 1000;
  std::uint64_t master_seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  double network_density = 0.05;
  ShockConfig shock;
  ContagionParams contagion;
  std::vector<SweepAxis> sweep;
  int readout_round = -1;  // -1 = stationary round; used by sweeps without an n axis
  bool dump_networks = false;
  bool dump_shocks = false;
  bool dump_trajectories = false;
};

namespace detail {

inline double parse_tau(const nlohmann::json& j) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return kInf;
    throw ConfigError("contagion.tau must be a number or \"inf\", got '" + s + "'");
  }
  if (!j.is_number()) throw ConfigError("contagion.tau must be a number or \"inf\"");
  double v = j.get<double>();
  if (v < 0.0) throw ConfigError("contagion.tau must be nonnegative");
  return v;
}

inline bool is_known_sweep_param(const std::string& p) {
  return p == "x" || p == "n" || p == "lgd" || p == "rho" || p == "tau";
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    if (j.contains("members_csv")) cfg.members_csv = j.at("members_csv").get<std::string>();
    if (j.contains("fund_csv")) cfg.fund_csv = j.at("fund_csv").get<std::string>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("scenario")) {
      std::string s = j.at("scenario").get<std::string>();
      if (s == "distributed")
        cfg.scenario = Scenario::Distributed;
      else if (s == "cover2")
        cfg.scenario = Scenario::Cover2;
      else
        throw ConfigError("unknown scenario '" + s + "'");
    }
    if (j.contains("ensemble_size")) cfg.ensemble_size = j.at("ensemble_size").get<int>();
    if (cfg.ensemble_size < 1) throw ConfigError("ensemble_size must be >= 1");
    if (j.contains("master_seed"))
      cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("density")) cfg.network_density = j.at("density").get<double>();
    if (j.contains("readout_round")) {
      const auto& rr = j.at("readout_round");
      if (rr.is_string() && rr.get<std::string>() == "final")
        cfg.readout_round = -1;
      else
        cfg.readout_round = rr.get<int>();
    }

    if (j.contains("shock")) {
      const auto& s = j.at("shock");
      if (s.contains("x")) cfg.shock.x = s.at("x").get<double>();
      if (s.contains("phi")) cfg.shock.phi = s.at("phi").get<double>();
      if (cfg.shock.x < 0.0) throw ConfigError("shock.x must be nonnegative");
      if (cfg.shock.phi < 0.0 || cfg.shock.phi > 1.0)
        throw ConfigError("shock.phi must lie in [0, 1]");
    }

    if (j.contains("contagion")) {
      const auto& c = j.at("contagion");
      if (c.contains("lgd")) cfg.contagion.lgd = c.at("lgd").get<double>();
      if (c.contains("rho")) cfg.contagion.rho = c.at("rho").get<double>();
      if (c.contains("tau")) cfg.contagion.tau = detail::parse_tau(c.at("tau"));
      if (c.contains("max_rounds")) cfg.contagion.max_rounds = c.at("max_rounds").get<int>();
      if (c.contains("convergence_eps"))
        cfg.contagion.convergence_eps = c.at("convergence_eps").get<double>();
      if (cfg.contagion.lgd < 0.0 || cfg.contagion.lgd > 1.0)
        throw ConfigError("contagion.lgd must lie in [0, 1]");
      if (cfg.contagion.rho < 0.0 || cfg.contagion.rho > 1.0)
        throw ConfigError("contagion.rho must lie in [0, 1]");
      if (cfg.contagion.max_rounds < 1)
        throw ConfigError("contagion.max_rounds must be >= 1");
    }

    if (j.contains("sweep")) {
      for (const auto& a : j.at("sweep")) {
        SweepAxis axis;
        axis.param = a.at("param").get<std::string>();
        if (!detail::is_known_sweep_param(axis.param))
          throw ConfigError("unknown sweep parameter '" + axis.param +
                            "' (expected x, n, lgd, rho or tau)");
        axis.min = a.at("min").get<double>();
        axis.max = a.at("max").get<double>();
        axis.steps = a.at("steps").get<int>();
        if (axis.steps < 1) throw ConfigError("sweep steps must be >= 1");
        if (a.contains("scale")) {
          std::string sc = a.at("scale").get<std::string>();
          if (sc == "log")
            axis.log_scale = true;
          else if (sc != "linear")
            throw ConfigError("sweep scale must be 'linear' or 'log'");
        }
        if (axis.log_scale && !(axis.min > 0.0))
          throw ConfigError("log-scale sweep axis needs positive min");
        cfg.sweep.push_back(axis);
      }
    }

    if (j.contains("dump")) {
      const auto& d = j.at("dump");
      if (d.contains("networks")) cfg.dump_networks = d.at("networks").get<bool>();
      if (d.contains("shocks")) cfg.dump_shocks = d.at("shocks").get<bool>();
      if (d.contains("trajectories"))
        cfg.dump_trajectories = d.at("trajectories").get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  return parse_run_config(j);
}

}  // namespace ccps
