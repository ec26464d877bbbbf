#include "windgrid/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "windgrid/errors.hpp"

namespace windgrid {

namespace {

std::ofstream open_out(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  os << std::setprecision(12);
  return os;
}

Json mat_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Mat json_mat(const Json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw ConfigError("controller file: '" + what + "' has the wrong number of rows");
  }
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw ConfigError("controller file: '" + what + "' has the wrong number of columns");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vec json_vec(const Json& j, Eigen::Index n, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw ConfigError("controller file: '" + what + "' has the wrong length");
  }
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = j[i].get<double>();
  return v;
}

Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

double finite_or_null(double x) { return std::isfinite(x) ? x : 0.0; }

const char* kWindNames[kWindStates] = {"omega_r", "omega_g", "theta", "i_dr", "i_qr",
                                       "i_ds",    "i_qs",    "xi_d",  "xi_q"};

}  // namespace

std::vector<std::string> trajectory_columns(const SystemModel& m, const StateLayout& layout) {
  std::vector<std::string> cols{"t"};
  for (const char* n : kWindNames) cols.push_back(std::string("wind_") + n);
  for (int k = 0; k < layout.n_sync; ++k) {
    const std::string& g = m.syncs[k].name;
    for (const char* s : {"delta", "omega", "rho", "nu", "pss0", "pss1", "pss2"}) {
      cols.push_back(g + "_" + s);
    }
  }
  if (layout.retrofit) {
    for (const char* n : kWindNames) cols.push_back(std::string("xhat_") + n);
    for (const char* n : kWindNames) cols.push_back(std::string("xobs_") + n);
  }
  const int n_units = layout.n_sync + 1;
  for (int k = 0; k < n_units; ++k) {
    const std::string u = k == 0 ? "wind" : m.syncs[k - 1].name;
    cols.push_back("vmag_" + u);
    cols.push_back("vang_" + u);
    cols.push_back("p_" + u);
    cols.push_back("q_" + u);
  }
  for (int k = 1; k < layout.n_sync; ++k) {
    cols.push_back("rel_" + m.syncs[k].name + "_" + m.syncs[0].name);
  }
  cols.push_back("u_d");
  cols.push_back("u_q");
  return cols;
}

void write_trajectory_csv(const std::string& path, const Trajectory& tr, const SystemModel& m) {
  std::ofstream os = open_out(path);
  const std::vector<std::string> cols = trajectory_columns(m, tr.layout);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (std::size_t s = 0; s < tr.times.size(); ++s) {
    os << tr.times[s];
    const Vec& x = tr.states[s];
    for (Eigen::Index i = 0; i < x.size(); ++i) os << ',' << x(i);
    for (Eigen::Index k = 0; k < tr.voltages[s].size(); ++k) {
      const Complex v = tr.voltages[s](k);
      const Complex e = tr.injections[s](k);
      os << ',' << std::abs(v) << ',' << std::arg(v) << ',' << e.real() << ',' << e.imag();
    }
    const int ref = tr.layout.sync(0);
    for (int k = 1; k < tr.layout.n_sync; ++k) os << ',' << x(tr.layout.sync(k)) - x(ref);
    os << ',' << tr.controls[s](0) << ',' << tr.controls[s](1) << '\n';
  }
}

Json metrics_json(const DampingMetrics& dm, const Scenario& sc) {
  Json j;
  j["scenario"] = sc.name;
  j["verdict"] = dm.unstable() ? "UNSTABLE" : "STABLE";
  j["wind_state_l2"] = dm.wind_l2;
  j["relative_angle_l2"] = dm.angle_l2;
  j["relative_angle_peak_to_peak"] = dm.rel_angle_pp;
  j["max_relative_angle_peak_to_peak"] = dm.max_rel_angle_pp;
  j["max_speed_deviation"] = dm.max_speed_dev;
  j["control_inf_norm"] = dm.u_inf;
  j["settling_time_after_fault"] = dm.settling_time;
  j["damping_ratio_log_decrement"] = finite_or_null(dm.damping_ratio);
  j["flags"] = {{"speed_violation", dm.speed_violation},
                {"growth_detected", dm.growth_detected},
                {"solver_failure", dm.solver_failure}};
  j["settings"] = {{"gamma", sc.gamma_override ? Json(*sc.gamma_override) : Json(nullptr)},
                   {"kappa_i", sc.kappa_i_override ? Json(*sc.kappa_i_override) : Json(nullptr)},
                   {"retrofit", sc.retrofit_enabled},
                   {"lqr_preset", sc.lqr_preset},
                   {"t_end", sc.t_end},
                   {"dt", sc.dt},
                   {"t_fault", sc.t_fault},
                   {"t_clear", sc.t_clear}};
  return j;
}

Json equilibrium_json(const EquilibriumPoint& eq, const SystemModel& m) {
  Json j;
  j["gamma"] = m.wind.gamma;
  j["kappa_i"] = m.wind.pi.kappa_i;
  j["derivative_residual"] = eq.derivative_residual;
  j["balance_residual"] = eq.balance_residual;
  Json wind;
  for (int i = 0; i < kWindStates; ++i) wind[kWindNames[i]] = eq.x_star(i);
  j["wind_state"] = wind;
  j["wind_setpoints"] = {{"omega_g_star", eq.setpoints.wind_pi.omega_g_star},
                         {"i_dr_star", eq.setpoints.wind_pi.i_dr_star},
                         {"i_qr_star", eq.setpoints.wind_pi.i_qr_star}};
  Json machines = Json::array();
  for (std::size_t k = 0; k < eq.sync_stars.size(); ++k) {
    const SyncState& s = eq.sync_stars[k];
    machines.push_back({{"name", m.syncs[k].name},
                        {"delta", s.delta},
                        {"omega", s.omega},
                        {"rho", s.rho},
                        {"nu", s.nu},
                        {"p_m", eq.setpoints.p_m[k]},
                        {"v_setpoint", eq.setpoints.v_setpoint[k]}});
  }
  j["machines"] = machines;
  Json buses = Json::array();
  for (Eigen::Index k = 0; k < eq.v_star.size(); ++k) {
    buses.push_back({{"unit", k == 0 ? std::string("wind") : m.syncs[k - 1].name},
                     {"v", complex_json(eq.v_star(k))},
                     {"e", complex_json(eq.e_star(k))}});
  }
  j["buses"] = buses;
  return j;
}

Json spectrum_json(const Spectrum& s) {
  Json ev = Json::array();
  for (const Complex& z : s.eigenvalues) ev.push_back(complex_json(z));
  return {{"gamma", s.gamma}, {"abscissa", s.abscissa()}, {"eigenvalues", ev}};
}

void write_spectrum_csv(const std::string& path, const std::vector<Spectrum>& spectra) {
  std::ofstream os = open_out(path);
  os << "gamma,re,im\n";
  for (const Spectrum& s : spectra) {
    for (const Complex& z : s.eigenvalues) os << s.gamma << ',' << z.real() << ',' << z.imag() << '\n';
  }
}

void write_tracked_csv(const std::string& path, const TrackedPair& tp) {
  std::ofstream os = open_out(path);
  os << "gamma,re,im\n";
  for (std::size_t i = 0; i < tp.gammas.size(); ++i) {
    os << tp.gammas[i] << ',' << tp.values[i].real() << ',' << tp.values[i].imag() << '\n';
  }
}

Json controller_json(const RetrofitController& rc) {
  const LinearizedPlant& lp = rc.plant;
  Json j;
  j["format"] = "windgrid-retrofit-1";
  j["map"] = rc.map == FeedbackMap::ObserverLqr ? "observer_lqr" : "static_gain";
  j["v1_star"] = lp.v1_star;
  j["x_star"] = vec_json(lp.x_star);
  j["y_star"] = vec_json(lp.y_star);
  j["a"] = mat_json(lp.a);
  j["b"] = mat_json(lp.b);
  j["c"] = mat_json(lp.c);
  j["r"] = vec_json(lp.r);
  j["k_gain"] = mat_json(rc.k_gain);
  j["l_gain"] = mat_json(rc.l_gain);
  const WindPlantModel& w = rc.wind;
  j["wind"] = {
      {"gamma", w.gamma},
      {"turbine",
       {{"m_r", w.turbine.m_r}, {"m_g", w.turbine.m_g}, {"d_r", w.turbine.d_r},
        {"d_g", w.turbine.d_g}, {"k_c", w.turbine.k_c}, {"d_c", w.turbine.d_c},
        {"n_g", w.turbine.n_g}, {"p_a", w.turbine.p_a}}},
      {"dfig",
       {{"l_s", w.dfig.l_s}, {"l_r", w.dfig.l_r}, {"l_m", w.dfig.l_m}, {"r_s", w.dfig.r_s},
        {"r_r", w.dfig.r_r}, {"n_p", w.dfig.n_p}}},
      {"pi",
       {{"kappa_p", w.pi.kappa_p}, {"kappa_i", w.pi.kappa_i},
        {"omega_g_star", w.pi.omega_g_star}, {"i_dr_star", w.pi.i_dr_star},
        {"i_qr_star", w.pi.i_qr_star}}}};
  return j;
}

RetrofitController controller_from_json(const Json& j) {
  try {
    if (j.at("format") != "windgrid-retrofit-1") throw ConfigError("unknown controller format");
    LinearizedPlant lp;
    lp.a = json_mat(j.at("a"), kWindStates, kWindStates, "a");
    lp.b = json_mat(j.at("b"), kWindStates, 2, "b");
    lp.c = json_mat(j.at("c"), kWindOutputs, kWindStates, "c");
    lp.r = json_vec(j.at("r"), kWindStates, "r");
    lp.x_star = json_vec(j.at("x_star"), kWindStates, "x_star");
    lp.y_star = json_vec(j.at("y_star"), kWindOutputs, "y_star");
    lp.v1_star = j.at("v1_star").get<double>();

    WindPlantModel w;
    const Json& jw = j.at("wind");
    w.gamma = jw.at("gamma").get<double>();
    const Json& t = jw.at("turbine");
    w.turbine.m_r = t.at("m_r");
    w.turbine.m_g = t.at("m_g");
    w.turbine.d_r = t.at("d_r");
    w.turbine.d_g = t.at("d_g");
    w.turbine.k_c = t.at("k_c");
    w.turbine.d_c = t.at("d_c");
    w.turbine.n_g = t.at("n_g");
    w.turbine.p_a = t.at("p_a");
    const Json& g = jw.at("dfig");
    w.dfig.l_s = g.at("l_s");
    w.dfig.l_r = g.at("l_r");
    w.dfig.l_m = g.at("l_m");
    w.dfig.r_s = g.at("r_s");
    w.dfig.r_r = g.at("r_r");
    w.dfig.n_p = g.at("n_p");
    const Json& pi = jw.at("pi");
    w.pi.kappa_p = pi.at("kappa_p");
    w.pi.kappa_i = pi.at("kappa_i");
    w.pi.omega_g_star = pi.at("omega_g_star");
    w.pi.i_dr_star = pi.at("i_dr_star");
    w.pi.i_qr_star = pi.at("i_qr_star");

    const FeedbackMap map =
        j.at("map") == "static_gain" ? FeedbackMap::StaticGain : FeedbackMap::ObserverLqr;
    return make_retrofit(lp, w, json_mat(j.at("k_gain"), 2, kWindStates, "k_gain"),
                         json_mat(j.at("l_gain"), kWindStates, kWindOutputs, "l_gain"), map);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("controller file: ") + e.what());
  }
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream os = open_out(path);
  os << j.dump(2) << '\n';
}

Json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path);
  try {
    return Json::parse(is);
  } catch (const Json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
}

void write_trajectory_plot_script(const std::string& path, const std::vector<std::string>& csvs,
                                  const std::string& title) {
  std::ofstream os = open_out(path);
  os << "#!/usr/bin/env python3\n"
        "import os\n"
        "import sys\n\n"
        "import matplotlib\n"
        "matplotlib.use('Agg')\n"
        "import matplotlib.pyplot as plt\n"
        "import pandas as pd\n\n"
        "HERE = os.path.dirname(os.path.abspath(__file__))\n"
        "FILES = [";
  for (std::size_t i = 0; i < csvs.size(); ++i) {
    os << (i ? ", " : "") << "'" << std::filesystem::path(csvs[i]).filename().string() << "'";
  }
  os << "]\n\n"
        "fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)\n"
        "for name in FILES:\n"
        "    df = pd.read_csv(os.path.join(HERE, name))\n"
        "    label = os.path.splitext(name)[0]\n"
        "    for col in [c for c in df.columns if c.startswith('rel_')]:\n"
        "        axes[0].plot(df['t'], df[col], label=f'{label} {col[4:]}')\n"
        "    axes[1].plot(df['t'], df['wind_i_ds'], label=f'{label} i_ds')\n"
        "    axes[1].plot(df['t'], df['wind_i_qs'], label=f'{label} i_qs')\n"
        "    axes[2].plot(df['t'], df['u_d'], label=f'{label} u_d')\n"
        "    axes[2].plot(df['t'], df['u_q'], label=f'{label} u_q')\n"
        "axes[0].set_ylabel('relative angle [rad]')\n"
        "axes[1].set_ylabel('stator current [pu]')\n"
        "axes[2].set_ylabel('retrofit input [pu]')\n"
        "axes[2].set_xlabel('time [s]')\n"
        "for ax in axes:\n"
        "    ax.grid(True)\n"
        "    ax.legend(fontsize=6, ncol=2)\n"
        "fig.suptitle('"
     << title
     << "')\n"
        "fig.tight_layout()\n"
        "out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(HERE, '"
     << title << ".png')\n"
        "fig.savefig(out, dpi=150)\n";
}

void write_spectrum_plot_script(const std::string& path, const std::string& spectrum_csv,
                                const std::string& tracked_csv) {
  std::ofstream os = open_out(path);
  os << "#!/usr/bin/env python3\n"
        "import os\n"
        "import sys\n\n"
        "import matplotlib\n"
        "matplotlib.use('Agg')\n"
        "import matplotlib.pyplot as plt\n"
        "import pandas as pd\n\n"
        "HERE = os.path.dirname(os.path.abspath(__file__))\n"
        "spec = pd.read_csv(os.path.join(HERE, '"
     << std::filesystem::path(spectrum_csv).filename().string()
     << "'))\n"
        "track = pd.read_csv(os.path.join(HERE, '"
     << std::filesystem::path(tracked_csv).filename().string()
     << "'))\n"
        "fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(11, 4.5))\n"
        "near = spec[(spec['re'] > -1.0) & (spec['im'].abs() < 3.0)]\n"
        "sc = ax0.scatter(near['re'], near['im'], c=near['gamma'], s=6, cmap='viridis')\n"
        "ax0.plot(track['re'], track['im'], 'r.-', lw=1, label='tracked pair')\n"
        "ax0.axvline(0.0, color='k', lw=0.5)\n"
        "ax0.set_xlabel('Re')\n"
        "ax0.set_ylabel('Im')\n"
        "ax0.legend()\n"
        "fig.colorbar(sc, ax=ax0, label='gamma')\n"
        "ax1.plot(track['gamma'], track['re'], 'o-')\n"
        "ax1.axhline(0.0, color='k', lw=0.5)\n"
        "ax1.set_xlabel('gamma')\n"
        "ax1.set_ylabel('Re of tracked pair')\n"
        "ax1.grid(True)\n"
        "fig.tight_layout()\n"
        "out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(HERE, 'eigsweep.png')\n"
        "fig.savefig(out, dpi=150)\n";
}

}  // namespace windgrid
