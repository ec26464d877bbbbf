#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "windgrid/config.hpp"
#include "windgrid/errors.hpp"
#include "windgrid/io.hpp"

namespace fs = std::filesystem;
using namespace windgrid;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string config;
  std::string scenario;
  std::optional<double> gamma;
  std::optional<double> kappa_i;
  std::optional<double> wind_order;
  std::string lqr_preset;
  std::string retrofit;
  std::string out = "windgrid_out";
  std::string preset;
  bool flip_gain = false;
};

void add_common(CLI::App* app, Options& o) {
  app->add_option("--config", o.config, "system YAML (default: $WINDGRID_CONFIG_DIR/system.yaml)");
  app->add_option("--scenario", o.scenario, "scenario YAML applied on top of the system defaults");
  app->add_option("--gamma", o.gamma, "wind penetration level")->check(CLI::PositiveNumber);
  app->add_option("--kappa-i", o.kappa_i, "wind PI integral gain")->check(CLI::NonNegativeNumber);
  app->add_option("--lqr-preset", o.lqr_preset, "retrofit weight preset")
      ->check(CLI::IsMember({"low", "mid", "high"}));
  app->add_option("--retrofit", o.retrofit, "enable the retrofit controller")
      ->check(CLI::IsMember({"on", "off"}));
  app->add_option("--wind-order", o.wind_order, "active-current order of the wind plant (pu)");
  app->add_option("--out", o.out, "output directory");
}

struct Setup {
  SystemConfig cfg;
  Scenario sc;
};

Setup load(const Options& o) {
  const std::string path = o.config.empty() ? default_system_config() : o.config;
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
  Setup s{load_system_config(path), {}};
  s.sc = o.scenario.empty() ? s.cfg.scenario : load_scenario(o.scenario, s.cfg.scenario);
  if (o.gamma) s.sc.gamma_override = *o.gamma;
  if (o.kappa_i) s.sc.kappa_i_override = *o.kappa_i;
  if (!o.lqr_preset.empty()) s.sc.lqr_preset = o.lqr_preset;
  if (!o.retrofit.empty()) s.sc.retrofit_enabled = (o.retrofit == "on");
  if (o.wind_order) s.cfg.dispatch.wind_order.real(*o.wind_order);
  s.sc.validate();
  fs::create_directories(o.out);
  return s;
}

LqrWeights weights_for(const SystemConfig& cfg, const std::string& name) {
  const auto it = cfg.lqr_presets.find(name);
  return it != cfg.lqr_presets.end() ? it->second : lqr_preset(name);
}

struct CaseResult {
  std::string name;
  Scenario sc;
  SystemModel model;
  Trajectory tr;
  DampingMetrics dm;
};

CaseResult run_case(const SystemConfig& cfg, const std::string& name, const Scenario& sc) {
  CaseResult r{name, sc, apply_overrides(cfg.model, sc), {}, {}};
  const EquilibriumPoint eq = find_equilibrium(r.model, cfg.dispatch);
  std::optional<RetrofitController> rc;
  if (sc.retrofit_enabled) rc = design_retrofit(r.model, eq, weights_for(cfg, sc.lqr_preset));
  r.tr = simulate_guarded(r.model, eq, sc, rc ? &*rc : nullptr);
  r.dm = damping_metrics(r.tr, eq, sc);
  return r;
}

// Runs independent scenarios across OpenMP workers; each writes its own files afterwards.
std::vector<CaseResult> run_batch(const SystemConfig& cfg,
                                  const std::vector<std::pair<std::string, Scenario>>& cases) {
  std::vector<CaseResult> results(cases.size());
  std::vector<std::exception_ptr> errors(cases.size());
  const int n = static_cast<int>(cases.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      results[i] = run_case(cfg, cases[i].first, cases[i].second);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::string fmt_gamma(double g) {
  std::string s = std::to_string(g);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

Json write_case(const fs::path& out, const CaseResult& r, std::vector<std::string>& csvs) {
  const fs::path csv = out / (r.name + ".csv");
  write_trajectory_csv(csv.string(), r.tr, r.model);
  csvs.push_back(csv.filename().string());
  Json m = metrics_json(r.dm, r.sc);
  m["case"] = r.name;
  m["gamma"] = r.model.wind.gamma;
  m["kappa_i"] = r.model.wind.pi.kappa_i;
  m["retrofit"] = r.sc.retrofit_enabled;
  if (r.sc.retrofit_enabled) m["lqr_preset"] = r.sc.lqr_preset;
  if (r.tr.aborted) {
    m["abort_time"] = r.tr.abort_time;
    m["abort_reason"] = r.tr.abort_reason;
    std::cerr << r.name << ": simulation stopped at t = " << r.tr.abort_time << " s: "
              << r.tr.abort_reason << "\n";
  }
  write_json((out / (r.name + "_metrics.json")).string(), m);
  std::cout << r.name << ": " << (r.dm.unstable() ? "UNSTABLE" : "STABLE")
            << "  wind_l2=" << r.dm.wind_l2 << "  max_pp=" << r.dm.max_rel_angle_pp << "\n";
  return m;
}

int cmd_equilibrium(const Options& o) {
  const Setup s = load(o);
  const SystemModel m = apply_overrides(s.cfg.model, s.sc);
  const EquilibriumPoint eq = find_equilibrium(m, s.cfg.dispatch);
  write_json((fs::path(o.out) / "equilibrium.json").string(), equilibrium_json(eq, m));
  std::cout << "gamma=" << m.wind.gamma << "  derivative_residual=" << eq.derivative_residual
            << "  balance_residual=" << eq.balance_residual << "\n";
  return 0;
}

int cmd_simulate(const Options& o) {
  Setup s = load(o);
  const double gamma_high = o.gamma.value_or(20.0);
  std::vector<std::pair<std::string, Scenario>> cases;
  auto add = [&](std::string name, Scenario sc) {
    sc.name = name;
    cases.emplace_back(std::move(name), std::move(sc));
  };

  if (o.preset.empty()) {
    add(s.sc.name.empty() ? "run" : s.sc.name, s.sc);
  } else if (o.preset == "penetration") {
    for (double g : {3.0, 10.0, 20.0}) {
      Scenario sc = s.sc;
      sc.gamma_override = g;
      sc.retrofit_enabled = false;
      add("penetration_gamma" + fmt_gamma(g), sc);
    }
  } else if (o.preset == "pi-gain") {
    for (double k : {5.2, 15.0}) {
      Scenario sc = s.sc;
      sc.gamma_override = gamma_high;
      sc.kappa_i_override = k;
      sc.retrofit_enabled = false;
      add("pi_gain_kappa" + fmt_gamma(k), sc);
    }
  } else if (o.preset == "retrofit") {
    for (bool on : {false, true}) {
      Scenario sc = s.sc;
      sc.gamma_override = gamma_high;
      sc.retrofit_enabled = on;
      add(on ? "retrofit_on" : "retrofit_off", sc);
    }
  } else if (o.preset == "weights") {
    for (const char* p : {"low", "mid", "high"}) {
      Scenario sc = s.sc;
      sc.gamma_override = gamma_high;
      sc.retrofit_enabled = true;
      sc.lqr_preset = p;
      add(std::string("weights_") + p, sc);
    }
  }

  const std::vector<CaseResult> results = run_batch(s.cfg, cases);
  const fs::path out(o.out);
  std::vector<std::string> csvs;
  Json summary = Json::array();
  for (const CaseResult& r : results) summary.push_back(write_case(out, r, csvs));
  write_json((out / "summary.json").string(), summary);
  const std::string tag = o.preset.empty() ? "run" : o.preset;
  write_trajectory_plot_script((out / ("plot_" + tag + ".py")).string(), csvs, tag);
  return 0;
}

int cmd_eigsweep(const Options& o, std::optional<double> from, std::optional<double> to,
                 std::optional<double> step) {
  Setup s = load(o);
  SweepConfig sw = s.cfg.sweep;
  if (from) sw.start = *from;
  if (to) sw.stop = *to;
  if (step) sw.step = *step;
  std::vector<double> grid = sw.grid();
  if (o.gamma && !from && !to) grid = {*o.gamma};

  const SystemModel base = apply_overrides(s.cfg.model, s.sc);
  const SweepResult res = eigen_sweep(base, s.cfg.dispatch, grid, sw.seed);
  const fs::path out(o.out);
  write_spectrum_csv((out / "spectrum.csv").string(), res.spectra);
  write_tracked_csv((out / "tracked.csv").string(), res.tracked);
  write_spectrum_plot_script((out / "plot_spectrum.py").string(), "spectrum.csv", "tracked.csv");

  Json j;
  j["gammas"] = grid;
  j["max_step"] = res.tracked.max_step;
  if (res.tracked.critical_gamma) {
    j["critical_gamma"] = *res.tracked.critical_gamma;
  } else {
    j["critical_gamma"] = nullptr;
  }
  Json abscissa = Json::array();
  for (const Spectrum& sp : res.spectra) abscissa.push_back(sp.abscissa());
  j["abscissa"] = abscissa;
  write_json((out / "sweep.json").string(), j);

  std::cout << "points=" << grid.size() << "  max_step=" << res.tracked.max_step << "  critical_gamma=";
  if (res.tracked.critical_gamma) {
    std::cout << *res.tracked.critical_gamma << "\n";
  } else {
    std::cout << "none\n";
  }
  return 0;
}

int cmd_design(const Options& o) {
  Setup s = load(o);
  const SystemModel model = apply_overrides(s.cfg.model, s.sc);
  const EquilibriumPoint eq = find_equilibrium(model, s.cfg.dispatch);
  const SystemModel tuned = apply_setpoints(model, eq.setpoints);
  const LinearizedPlant lp = linearize_wind(tuned, eq);
  const LqrWeights w = weights_for(s.cfg, s.sc.lqr_preset);

  const auto n = lp.a.rows();
  const RiccatiSolution lqr = solve_riccati(lp.a, lp.b, w.q * Mat::Identity(n, n),
                                            w.r * Mat::Identity(lp.b.cols(), lp.b.cols()));
  const Mat l = design_observer(lp.a, lp.c, w.obs_w * Mat::Identity(n, n),
                                w.obs_v * Mat::Identity(lp.c.rows(), lp.c.rows()));
  const Mat k = o.flip_gain ? Mat(-lqr.k) : lqr.k;
  const ZetaReport rep = verify_zeta_stability(lp, k, l);

  const fs::path out(o.out);
  Json report;
  report["gamma"] = tuned.wind.gamma;
  report["lqr_preset"] = s.sc.lqr_preset;
  report["riccati_residual"] = lqr.residual;
  report["abscissa"] = rep.abscissa;
  report["verdict"] = rep.pass ? "PASS" : "FAIL";
  write_json((out / "design_report.json").string(), report);
  std::cout << "zeta-system abscissa=" << rep.abscissa << "  " << (rep.pass ? "PASS" : "FAIL") << "\n";
  if (!rep.pass) {
    std::cerr << "controller rejected; no controller file written\n";
    return kExitNumerical;
  }
  const RetrofitController rc = make_retrofit(lp, tuned.wind, k, l);
  write_json((out / "controller.json").string(), controller_json(rc));
  return 0;
}

int cmd_compare(const Options& o) {
  Setup s = load(o);
  const double g = o.gamma.value_or(20.0);
  std::vector<std::pair<std::string, Scenario>> cases;
  Scenario base = s.sc;
  base.gamma_override = g;
  base.retrofit_enabled = false;
  base.name = "compare_off";
  cases.emplace_back(base.name, base);
  for (const char* p : {"low", "mid", "high"}) {
    Scenario sc = base;
    sc.retrofit_enabled = true;
    sc.lqr_preset = p;
    sc.name = std::string("compare_") + p;
    cases.emplace_back(sc.name, sc);
  }

  const std::vector<CaseResult> results = run_batch(s.cfg, cases);
  const fs::path out(o.out);
  std::vector<std::string> csvs;
  Json j;
  j["gamma"] = g;
  for (const CaseResult& r : results) j["cases"].push_back(write_case(out, r, csvs));
  const DampingMetrics& off = results.front().dm;
  Json rows = Json::array();
  bool monotone = true;
  for (std::size_t i = 1; i < results.size(); ++i) {
    const DampingMetrics& on = results[i].dm;
    rows.push_back({{"preset", results[i].sc.lqr_preset},
                    {"wind_l2_ratio", on.wind_l2 / off.wind_l2},
                    {"max_pp_ratio", on.max_rel_angle_pp / off.max_rel_angle_pp}});
    if (i > 1 && on.wind_l2 > results[i - 1].dm.wind_l2) monotone = false;
  }
  j["retrofit_vs_off"] = rows;
  j["l2_non_increasing_with_gain"] = monotone;
  write_json((out / "compare.json").string(), j);
  write_trajectory_plot_script((out / "plot_compare.py").string(), csvs, "compare");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wind-integrated power system simulator with retrofit control"};
  app.require_subcommand(1);
  Options o;
  std::optional<double> from, to, step;

  CLI::App* eq = app.add_subcommand("equilibrium", "solve and report the operating point");
  add_common(eq, o);
  CLI::App* sim = app.add_subcommand("simulate", "run a fault scenario or a figure preset");
  add_common(sim, o);
  sim->add_option("--preset", o.preset, "experiment batch")
      ->check(CLI::IsMember({"penetration", "pi-gain", "retrofit", "weights"}));
  CLI::App* sweep = app.add_subcommand("eigsweep", "eigenvalues over a gamma grid");
  add_common(sweep, o);
  sweep->add_option("--from", from, "first gamma");
  sweep->add_option("--to", to, "last gamma");
  sweep->add_option("--step", step, "gamma step")->check(CLI::PositiveNumber);
  CLI::App* design = app.add_subcommand("design", "synthesize and verify the retrofit controller");
  add_common(design, o);
  design->add_flag("--debug-flip-gain", o.flip_gain, "negate the state-feedback gain");
  CLI::App* cmp = app.add_subcommand("compare", "retrofit off versus the three weight presets");
  add_common(cmp, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (eq->parsed()) return cmd_equilibrium(o);
    if (sim->parsed()) return cmd_simulate(o);
    if (sweep->parsed()) return cmd_eigsweep(o, from, to, step);
    if (design->parsed()) return cmd_design(o);
    if (cmp->parsed()) return cmd_compare(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SimulationError& e) {
    std::cerr << "simulation error at t = " << e.time() << " s: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
