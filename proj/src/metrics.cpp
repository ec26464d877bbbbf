#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "windgrid/simulator.hpp"

namespace windgrid {

namespace {

double trapezoid_l2(const std::vector<double>& t, const std::vector<double>& sq) {
  double acc = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) acc += 0.5 * (sq[i] + sq[i - 1]) * (t[i] - t[i - 1]);
  return std::sqrt(acc);
}

double peak_to_peak(const std::vector<double>& t, const std::vector<double>& s, double from,
                    double to) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < from || t[i] > to) continue;
    lo = std::min(lo, s[i]);
    hi = std::max(hi, s[i]);
  }
  return hi >= lo ? hi - lo : 0.0;
}

}  // namespace

double settling_time(const std::vector<double>& t, const std::vector<double>& s, double t0,
                     double frac) {
  if (t.empty()) return 0.0;
  const double final_value = s.back();
  const double band = frac * std::max(std::abs(final_value), 1e-12);
  double last_out = t0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= t0 && std::abs(s[i] - final_value) > band) {
      last_out = (i + 1 < t.size()) ? t[i + 1] : t[i];
    }
  }
  return last_out - t0;
}

double log_decrement_damping(const std::vector<double>& t, const std::vector<double>& s,
                             double t0) {
  if (t.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  const double final_value = s.back();
  std::vector<double> peaks;
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    if (t[i] < t0) continue;
    const double d = s[i] - final_value;
    if (d > 0.0 && d >= s[i - 1] - final_value && d > s[i + 1] - final_value) peaks.push_back(d);
  }
  if (peaks.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t used = std::min<std::size_t>(peaks.size() - 1, 4);
  double dec = 0.0;
  for (std::size_t i = 0; i < used; ++i) dec += std::log(peaks[i] / peaks[i + 1]);
  dec /= static_cast<double>(used);
  const double two_pi = 2.0 * std::numbers::pi;
  return dec / std::sqrt(two_pi * two_pi + dec * dec);
}

DampingMetrics damping_metrics(const Trajectory& tr, const EquilibriumPoint& eq,
                               const Scenario& sc, const InstabilityRule& rule) {
  DampingMetrics dm;
  dm.solver_failure = tr.aborted;
  const std::size_t ns = tr.times.size();
  const int n_sync = tr.layout.n_sync;
  if (ns == 0) return dm;

  std::vector<double> sq(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    sq[i] = (tr.states[i].head<kWindStates>() - eq.x_star).squaredNorm();
  }
  dm.wind_l2 = trapezoid_l2(tr.times, sq);

  for (std::size_t i = 0; i < ns; ++i) {
    for (int k = 0; k < n_sync; ++k) {
      dm.max_speed_dev = std::max(dm.max_speed_dev, std::abs(tr.states[i](tr.layout.sync(k) + 1)));
    }
    dm.u_inf = std::max(dm.u_inf, tr.controls[i].cwiseAbs().maxCoeff());
  }
  dm.speed_violation = dm.max_speed_dev > rule.speed_limit;

  const double t_end = tr.times.back();
  const double t_post = sc.fault_enabled ? sc.t_fault : 0.0;
  const double t_clear = sc.fault_enabled ? sc.t_fault + sc.t_clear : 0.0;
  const double ref_star = n_sync > 0 ? eq.sync_stars[0].delta : 0.0;
  const int ref = n_sync > 0 ? tr.layout.sync(0) : 0;

  std::vector<std::vector<double>> rel(n_sync > 1 ? n_sync - 1 : 0, std::vector<double>(ns));
  for (int k = 1; k < n_sync; ++k) {
    const int o = tr.layout.sync(k);
    const double rel_star = eq.sync_stars[k].delta - ref_star;
    std::vector<double>& r = rel[k - 1];
    for (std::size_t i = 0; i < ns; ++i) {
      r[i] = tr.states[i](o) - tr.states[i](ref);
      sq[i] = (r[i] - rel_star) * (r[i] - rel_star);
    }
    dm.angle_l2.push_back(trapezoid_l2(tr.times, sq));
    const double pp = peak_to_peak(tr.times, r, t_post, t_end);
    dm.rel_angle_pp.push_back(pp);
    dm.max_rel_angle_pp = std::max(dm.max_rel_angle_pp, pp);
    dm.settling_time = std::max(dm.settling_time, settling_time(tr.times, r, t_post));
    if (k == 1) dm.damping_ratio = log_decrement_damping(tr.times, r, t_clear + rule.damping_delay);
  }

  if (t_end - 2.0 * rule.window >= t_clear) {
    const double floor = std::max(1e-9, rule.growth_floor * dm.max_rel_angle_pp);
    for (const std::vector<double>& r : rel) {
      const double last = peak_to_peak(tr.times, r, t_end - rule.window, t_end);
      const double prev = peak_to_peak(tr.times, r, t_end - 2.0 * rule.window, t_end - rule.window);
      if (last > floor && last > prev * (1.0 + rule.growth_tolerance)) dm.growth_detected = true;
    }
  }
  return dm;
}

}  // namespace windgrid
