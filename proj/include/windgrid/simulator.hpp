#pragma once

#include <optional>
#include <string>
#include <vector>

#include "windgrid/machines.hpp"
#include "windgrid/network.hpp"
#include "windgrid/windplant.hpp"

namespace windgrid {

struct RetrofitController;

struct SyncUnit {
  std::string name;
  SyncParams params;
  PssBlock pss;
};

struct SystemModel {
  WindPlantModel wind;
  std::vector<SyncUnit> syncs;
  NetworkModel net;
  PowerForm power_form = PowerForm::DifferenceAngle;
  NetworkSolveOptions net_opts;

  void validate() const;
};

// Power flow orders. Machine 0 is the slack (angle 0, p ignored); the others
// are PV buses. The wind order is per unit of gamma |v1|.
struct Dispatch {
  Complex wind_order{0.0, 0.0};
  std::vector<double> p;
  std::vector<double> v_mag;
};

struct Setpoints {
  PiController wind_pi;
  std::vector<double> p_m;
  std::vector<double> v_setpoint;
};

struct EquilibriumPoint {
  WindVec x_star = WindVec::Zero();
  std::vector<SyncState> sync_stars;
  BusVoltages v_star;
  PowerInjections e_star;
  Vec y_star;
  double v1_star = 0.0;
  Setpoints setpoints;
  double derivative_residual = 0.0;
  double balance_residual = 0.0;
};

EquilibriumPoint find_equilibrium(const SystemModel& m, const Dispatch& dispatch);

// Copies the derived setpoints into the model.
SystemModel apply_setpoints(SystemModel m, const Setpoints& sp);

struct Scenario {
  std::string name = "scenario";
  double t_end = 20.0;
  double dt = 1e-3;
  bool fault_enabled = true;
  double t_fault = 2.0;
  double t_clear = 0.1;
  std::optional<double> gamma_override;
  std::optional<double> kappa_i_override;
  bool retrofit_enabled = false;
  std::string lqr_preset = "mid";
  // Local wind-state disturbance added to the plant state when the fault starts.
  WindVec wind_kick = WindVec::Zero();
  int record_every = 10;

  void validate() const;
};

SystemModel apply_overrides(SystemModel m, const Scenario& sc);

// Offsets of the stacked state [wind | per machine (delta, omega, rho, nu, pss0..2) | x_hat | x_obs].
struct StateLayout {
  static constexpr int kSyncStride = 7;
  int n_sync = 0;
  bool retrofit = false;

  int sync(int k) const { return kWindStates + kSyncStride * k; }
  int x_hat() const { return kWindStates + kSyncStride * n_sync; }
  int x_obs() const { return x_hat() + kWindStates; }
  int size() const { return x_hat() + (retrofit ? 2 * kWindStates : 0); }
};

// Right-hand side of the reduced DAE with the algebraic voltages eliminated.
class SystemDynamics {
public:
  SystemDynamics(const SystemModel& m, const EquilibriumPoint& eq,
                 const RetrofitController* rc = nullptr);

  struct Eval {
    Vec dx;
    BusVoltages v;
    PowerInjections e;
    Eigen::Vector2d u = Eigen::Vector2d::Zero();
  };

  Eval evaluate(const Vec& x, bool faulted, const BusVoltages& v_guess) const;
  BusVoltages solve_voltages(const Vec& x, bool faulted, const BusVoltages& v_guess) const;
  PowerInjections injections(const Vec& x, const BusVoltages& v) const;

  Vec initial_state() const;
  const StateLayout& layout() const { return layout_; }
  const SystemModel& model() const { return model_; }
  const EquilibriumPoint& equilibrium() const { return eq_; }

private:
  SystemModel model_;
  EquilibriumPoint eq_;
  const RetrofitController* rc_;
  StateLayout layout_;
};

struct Trajectory {
  StateLayout layout;
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<BusVoltages> voltages;
  std::vector<PowerInjections> injections;
  std::vector<Eigen::Vector2d> controls;
  double max_balance_residual = 0.0;
  // Set when integration stopped early on a numerical failure.
  bool aborted = false;
  double abort_time = 0.0;
  std::string abort_reason;
};

Trajectory simulate(const SystemModel& m, const EquilibriumPoint& eq, const Scenario& sc,
                    const RetrofitController* rc = nullptr);

// As simulate, but numerical failures end the run and are recorded in the
// returned trajectory instead of being thrown.
Trajectory simulate_guarded(const SystemModel& m, const EquilibriumPoint& eq, const Scenario& sc,
                            const RetrofitController* rc = nullptr);

struct DampingMetrics {
  double wind_l2 = 0.0;
  std::vector<double> angle_l2;        // (delta_k - delta_1) deviation, k >= 2
  std::vector<double> rel_angle_pp;    // post-fault peak-to-peak of delta_k - delta_1
  double max_rel_angle_pp = 0.0;
  double max_speed_dev = 0.0;
  double u_inf = 0.0;
  double settling_time = 0.0;          // after the fault, 2 % band
  double damping_ratio = 0.0;          // log-decrement on delta_2 - delta_1 (NaN if < 2 peaks)
  bool speed_violation = false;
  bool growth_detected = false;
  bool solver_failure = false;
  bool unstable() const { return speed_violation || growth_detected || solver_failure; }
};

struct InstabilityRule {
  double speed_limit = 0.05;
  double window = 5.0;
  double growth_tolerance = 0.01;
  // Windows whose peak-to-peak is below this fraction of the post-fault swing are treated as settled.
  double growth_floor = 1e-3;
  // Damping-ratio peaks are taken from this long after clearing, once fast modes have died out.
  double damping_delay = 0.0;
};

DampingMetrics damping_metrics(const Trajectory& tr, const EquilibriumPoint& eq,
                               const Scenario& sc, const InstabilityRule& rule = {});

// Time after t0 at which the signal last leaves a band of +-frac around its final value.
double settling_time(const std::vector<double>& t, const std::vector<double>& s, double t0,
                     double frac = 0.02);

// Damping ratio from the mean logarithmic decrement of successive extrema
// of s - s_final after t0. Returns NaN when fewer than three extrema exist.
double log_decrement_damping(const std::vector<double>& t, const std::vector<double>& s,
                             double t0);

}  // namespace windgrid
