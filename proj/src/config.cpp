#include "windgrid/config.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>

#include <yaml-cpp/yaml.h>

#include "windgrid/errors.hpp"

#ifndef WINDGRID_DEFAULT_CONFIG_DIR
#define WINDGRID_DEFAULT_CONFIG_DIR "config"
#endif

namespace windgrid {

namespace {

template <typename T>
T get(const YAML::Node& node, const std::string& key, const std::string& where) {
  const YAML::Node v = node[key];
  if (!v) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return v.as<T>();
  } catch (const YAML::Exception& e) {
    throw ConfigError(where + ": key '" + key + "' has the wrong type");
  }
}

template <typename T>
T get_or(const YAML::Node& node, const std::string& key, T fallback, const std::string& where) {
  if (!node || !node[key]) return fallback;
  return get<T>(node, key, where);
}

int bus_index(int bus, int n_buses, const std::string& where) {
  if (bus < 1 || bus > n_buses) {
    throw ConfigError(where + ": bus " + std::to_string(bus) + " is out of range");
  }
  return bus - 1;
}

NetworkDescription parse_network(const YAML::Node& node) {
  if (!node) throw ConfigError("system config: missing 'network' block");
  NetworkDescription d;
  d.n_buses = get<int>(node, "buses", "network");
  if (d.n_buses < 2) throw ConfigError("network: need at least two buses");
  d.load_admittances = CVec::Zero(d.n_buses);

  std::set<std::string> ids;
  for (const YAML::Node& ln : node["lines"]) {
    Branch br;
    br.id = get<std::string>(ln, "id", "network.lines");
    if (!ids.insert(br.id).second) throw ConfigError("network.lines: duplicate id " + br.id);
    br.from = bus_index(get<int>(ln, "from", "network.lines"), d.n_buses, "line " + br.id);
    br.to = bus_index(get<int>(ln, "to", "network.lines"), d.n_buses, "line " + br.id);
    br.z = Complex(get<double>(ln, "r", "line " + br.id), get<double>(ln, "x", "line " + br.id));
    br.b_total = get_or<double>(ln, "b", 0.0, "line " + br.id);
    if (std::abs(br.z) == 0.0) throw ConfigError("line " + br.id + " has zero impedance");
    d.branches.push_back(br);
  }
  if (d.branches.empty()) throw ConfigError("network: no lines");

  for (const YAML::Node& ld : node["loads"]) {
    const int bus = bus_index(get<int>(ld, "bus", "network.loads"), d.n_buses, "load");
    const double p = get<double>(ld, "p", "network.loads");
    const double q = get<double>(ld, "q", "network.loads");
    // Constant-impedance load drawing p + jq at 1 pu.
    d.load_admittances(bus) += Complex(p, -q);
  }

  const YAML::Node units = node["units"];
  if (!units || !units.IsSequence()) throw ConfigError("network: missing 'units' list");
  for (const YAML::Node& u : units) {
    d.unit_buses.push_back(bus_index(u.as<int>(), d.n_buses, "network.units"));
  }

  if (const YAML::Node f = node["fault"]) {
    d.fault.branch = get<std::string>(f, "branch", "network.fault");
    if (!ids.count(d.fault.branch)) {
      throw ConfigError("network.fault: unknown branch '" + d.fault.branch + "'");
    }
    d.fault.scale = get_or<double>(f, "scale", 0.0, "network.fault");
    d.fault.t_fault = get_or<double>(f, "t_fault", 2.0, "network.fault");
    d.fault.t_clear = get_or<double>(f, "t_clear", 0.1, "network.fault");
  }
  return d;
}

WindVec parse_kick(const YAML::Node& node) {
  WindVec k = WindVec::Zero();
  if (!node) return k;
  static const char* names[kWindStates] = {"omega_r", "omega_g", "theta", "i_dr", "i_qr",
                                           "i_ds",    "i_qs",    "xi_d",  "xi_q"};
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    bool found = false;
    for (int i = 0; i < kWindStates; ++i) {
      if (key == names[i]) {
        k(i) = kv.second.as<double>();
        found = true;
      }
    }
    if (!found) throw ConfigError("wind disturbance: unknown state '" + key + "'");
  }
  return k;
}

void parse_scenario_fields(const YAML::Node& node, Scenario& sc, const std::string& where) {
  if (!node) return;
  sc.name = get_or<std::string>(node, "name", sc.name, where);
  sc.t_end = get_or<double>(node, "t_end", sc.t_end, where);
  sc.dt = get_or<double>(node, "dt", sc.dt, where);
  sc.fault_enabled = get_or<bool>(node, "fault", sc.fault_enabled, where);
  sc.t_fault = get_or<double>(node, "t_fault", sc.t_fault, where);
  sc.t_clear = get_or<double>(node, "t_clear", sc.t_clear, where);
  sc.record_every = get_or<int>(node, "record_every", sc.record_every, where);
  if (node["gamma"]) sc.gamma_override = get<double>(node, "gamma", where);
  if (node["kappa_i"]) sc.kappa_i_override = get<double>(node, "kappa_i", where);
  sc.retrofit_enabled = get_or<bool>(node, "retrofit", sc.retrofit_enabled, where);
  sc.lqr_preset = get_or<std::string>(node, "lqr_preset", sc.lqr_preset, where);
  if (node["wind_disturbance"]) sc.wind_kick = parse_kick(node["wind_disturbance"]);
}

}  // namespace

std::vector<double> SweepConfig::grid() const {
  if (!(step > 0.0) || stop < start) throw ConfigError("sweep: need step > 0 and stop >= start");
  std::vector<double> g;
  const long n = std::lround(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= n; ++i) g.push_back(start + static_cast<double>(i) * step);
  return g;
}

std::string default_config_dir() {
  if (const char* env = std::getenv(kConfigDirEnv); env != nullptr && *env != '\0') return env;
  return WINDGRID_DEFAULT_CONFIG_DIR;
}

std::string default_system_config() {
  return (std::filesystem::path(default_config_dir()) / "system.yaml").string();
}

SystemConfig load_system_config(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }

  SystemConfig cfg;
  try {
    cfg.network = parse_network(root["network"]);
    const int n_units = static_cast<int>(cfg.network.unit_buses.size());

    const YAML::Node wind = root["wind"];
    if (!wind) throw ConfigError("system config: missing 'wind' block");
    WindPlantModel& w = cfg.model.wind;
    w.gamma = get<double>(wind, "gamma", "wind");
    if (const YAML::Node t = wind["turbine"]) {
      w.turbine.m_r = get_or(t, "m_r", w.turbine.m_r, "wind.turbine");
      w.turbine.m_g = get_or(t, "m_g", w.turbine.m_g, "wind.turbine");
      w.turbine.d_r = get_or(t, "d_r", w.turbine.d_r, "wind.turbine");
      w.turbine.d_g = get_or(t, "d_g", w.turbine.d_g, "wind.turbine");
      w.turbine.k_c = get_or(t, "k_c", w.turbine.k_c, "wind.turbine");
      w.turbine.d_c = get_or(t, "d_c", w.turbine.d_c, "wind.turbine");
      w.turbine.n_g = get_or(t, "n_g", w.turbine.n_g, "wind.turbine");
      w.turbine.p_a = get_or(t, "p_a", w.turbine.p_a, "wind.turbine");
    }
    if (const YAML::Node g = wind["dfig"]) {
      w.dfig.l_s = get_or(g, "l_s", w.dfig.l_s, "wind.dfig");
      w.dfig.l_r = get_or(g, "l_r", w.dfig.l_r, "wind.dfig");
      w.dfig.l_m = get_or(g, "l_m", w.dfig.l_m, "wind.dfig");
      w.dfig.r_s = get_or(g, "r_s", w.dfig.r_s, "wind.dfig");
      w.dfig.r_r = get_or(g, "r_r", w.dfig.r_r, "wind.dfig");
      w.dfig.n_p = get_or(g, "n_p", w.dfig.n_p, "wind.dfig");
    }
    if (const YAML::Node pi = wind["pi"]) {
      w.pi.kappa_p = get_or(pi, "kappa_p", w.pi.kappa_p, "wind.pi");
      w.pi.kappa_i = get_or(pi, "kappa_i", w.pi.kappa_i, "wind.pi");
    }
    const YAML::Node order = wind["order"];
    cfg.dispatch.wind_order =
        Complex(get_or(order, "p", 0.0, "wind.order"), get_or(order, "q", 0.0, "wind.order"));

    const YAML::Node machines = root["machines"];
    if (!machines || !machines.IsSequence()) throw ConfigError("system config: missing 'machines'");
    for (const YAML::Node& mn : machines) {
      SyncUnit u;
      u.name = get<std::string>(mn, "name", "machines");
      const std::string where = "machine " + u.name;
      SyncParams& p = u.params;
      p.m = get<double>(mn, "m", where);
      p.d = get_or(mn, "d", 0.0, where);
      p.tau = get<double>(mn, "tau", where);
      p.tau_p = get<double>(mn, "tau_p", where);
      p.kappa = get<double>(mn, "kappa", where);
      const double xd = get<double>(mn, "x_d", where);
      p.chi = get<double>(mn, "x_d_prime", where);
      p.alpha = get_or(mn, "alpha", xd / p.chi, where);
      p.beta = get_or(mn, "beta", (xd - p.chi) / p.chi, where);
      if (const YAML::Node pss = mn["pss"]) {
        u.pss.enabled = get_or(pss, "enabled", true, where + ".pss");
        u.pss.k_pss = get_or(pss, "k", u.pss.k_pss, where + ".pss");
        u.pss.t_w = get_or(pss, "t_w", u.pss.t_w, where + ".pss");
        u.pss.t1 = get_or(pss, "t1", u.pss.t1, where + ".pss");
        u.pss.t2 = get_or(pss, "t2", u.pss.t2, where + ".pss");
        u.pss.t3 = get_or(pss, "t3", u.pss.t3, where + ".pss");
        u.pss.t4 = get_or(pss, "t4", u.pss.t4, where + ".pss");
      } else {
        u.pss.enabled = false;
      }
      cfg.dispatch.p.push_back(get_or(mn, "p", 0.0, where));
      cfg.dispatch.v_mag.push_back(get<double>(mn, "v", where));
      cfg.model.syncs.push_back(u);
    }
    if (static_cast<int>(cfg.model.syncs.size()) != n_units - 1) {
      throw ConfigError("network.units lists " + std::to_string(n_units) +
                        " units; expected the wind plant plus one per machine");
    }

    const std::string form = get_or<std::string>(root, "power_form", "difference_angle", "root");
    if (form == "difference_angle") {
      cfg.model.power_form = PowerForm::DifferenceAngle;
    } else if (form == "printed_literal") {
      cfg.model.power_form = PowerForm::PrintedLiteral;
    } else {
      throw ConfigError("power_form must be difference_angle or printed_literal");
    }

    if (const YAML::Node s = root["solver"]) {
      cfg.model.net_opts.tol = get_or(s, "tol", cfg.model.net_opts.tol, "solver");
      cfg.model.net_opts.max_iter = get_or(s, "max_iter", cfg.model.net_opts.max_iter, "solver");
    }

    cfg.model.net = reduce_network(cfg.network);

    cfg.scenario.t_fault = cfg.network.fault.t_fault;
    cfg.scenario.t_clear = cfg.network.fault.t_clear;
    cfg.scenario.fault_enabled = !cfg.network.fault.branch.empty();
    if (const YAML::Node f = root["network"]["fault"]) {
      if (f["wind_disturbance"]) cfg.scenario.wind_kick = parse_kick(f["wind_disturbance"]);
    }
    parse_scenario_fields(root["scenario"], cfg.scenario, "scenario");

    cfg.lqr_presets = {{"low", lqr_preset("low")}, {"mid", lqr_preset("mid")},
                       {"high", lqr_preset("high")}};
    if (const YAML::Node lq = root["lqr_presets"]) {
      for (const auto& kv : lq) {
        const std::string name = kv.first.as<std::string>();
        LqrWeights w = cfg.lqr_presets.count(name) ? cfg.lqr_presets[name] : LqrWeights{};
        w.q = get_or(kv.second, "q", w.q, "lqr_presets." + name);
        w.r = get_or(kv.second, "r", w.r, "lqr_presets." + name);
        w.obs_w = get_or(kv.second, "obs_w", w.obs_w, "lqr_presets." + name);
        w.obs_v = get_or(kv.second, "obs_v", w.obs_v, "lqr_presets." + name);
        cfg.lqr_presets[name] = w;
      }
    }

    if (const YAML::Node sw = root["sweep"]) {
      cfg.sweep.start = get_or(sw, "start", cfg.sweep.start, "sweep");
      cfg.sweep.stop = get_or(sw, "stop", cfg.sweep.stop, "sweep");
      cfg.sweep.step = get_or(sw, "step", cfg.sweep.step, "sweep");
      if (const YAML::Node seed = sw["seed"]) {
        cfg.sweep.seed = Complex(seed[0].as<double>(), seed[1].as<double>());
      }
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const DimensionMismatch& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const SingularBlock& e) {
    throw ConfigError(path + ": " + e.what());
  }
  cfg.model.validate();
  cfg.scenario.validate();
  return cfg;
}

Scenario load_scenario(const std::string& path, const Scenario& base) {
  if (!std::filesystem::exists(path)) throw ConfigError("scenario file not found: " + path);
  Scenario sc = base;
  try {
    parse_scenario_fields(YAML::LoadFile(path), sc, path);
  } catch (const YAML::Exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
  sc.validate();
  return sc;
}

}  // namespace windgrid
