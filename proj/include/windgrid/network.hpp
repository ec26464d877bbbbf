#pragma once

#include <functional>
#include <string>
#include <vector>

#include "windgrid/types.hpp"

namespace windgrid {

// Kron-reduced admittance of the generating buses, in nominal and faulted
// configurations. Unit 0 is the wind plant terminal.
class NetworkModel {
public:
  NetworkModel() = default;
  NetworkModel(CMat y_nominal, CMat y_faulted);

  const CMat& y_nominal() const { return y_nominal_; }
  const CMat& y_faulted() const { return y_faulted_; }
  const CMat& admittance(bool faulted) const { return faulted ? y_faulted_ : y_nominal_; }
  int n_units() const { return static_cast<int>(y_nominal_.rows()); }

private:
  CMat y_nominal_;
  CMat y_faulted_;
};

using BusVoltages = CVec;
using PowerInjections = CVec;

// Maps candidate bus voltages to unit injections with machine states frozen.
using InjectionMap = std::function<PowerInjections(const BusVoltages&)>;

// Injection of unit k as a function of its own terminal voltage only.
using UnitInjection = std::function<Complex(int k, Complex v_k)>;

// Stacked [Re; Im] of e - conj(Y v) .* v.
Vec balance_residual(const BusVoltages& v, const PowerInjections& e, const CMat& y);
Vec balance_residual(const BusVoltages& v, const InjectionMap& injections_of_v,
                     const NetworkModel& net, bool faulted);

struct NetworkSolveOptions {
  double tol = 1e-10;
  int max_iter = 50;
  double min_voltage = 1e-3;
  // Take one more Newton step after the tolerance is met.
  bool polish = false;
};

struct NetworkSolution {
  BusVoltages v;
  // Residual evaluations performed, including the final converged one.
  int iterations = 0;
  double residual = 0.0;
};

// Newton iteration on (Re v, Im v). The network part of the Jacobian is
// analytic; each unit's 2x2 self-derivative is a central difference.
NetworkSolution solve_network(const UnitInjection& injection, const NetworkModel& net,
                              const BusVoltages& guess, bool faulted,
                              const NetworkSolveOptions& opts = {});

// Schur-complement elimination of all buses not listed in keep. The shunt
// load admittances (one per bus, zero where absent) are added to the diagonal
// first. The result is ordered as keep.
CMat kron_reduce(const CMat& full_y, const CVec& load_admittances, const std::vector<int>& keep);

struct Branch {
  std::string id;
  int from = 0;  // zero-based bus index
  int to = 0;
  Complex z{0.0, 0.0};
  double b_total = 0.0;  // total line charging susceptance
};

struct FaultSpec {
  std::string branch;
  double scale = 0.0;
  double t_fault = 2.0;
  double t_clear = 0.1;
};

struct NetworkDescription {
  int n_buses = 0;
  std::vector<Branch> branches;
  CVec load_admittances;     // per bus
  std::vector<int> unit_buses;  // wind terminal first, then the synchronous machines
  FaultSpec fault;
};

// Full bus admittance matrix; the branch named scaled_branch has its series and
// charging admittance multiplied by scale.
CMat bus_admittance(const NetworkDescription& desc, const std::string& scaled_branch = {},
                    double scale = 1.0);

// Builds nominal and faulted Kron-reduced matrices from the description.
NetworkModel reduce_network(const NetworkDescription& desc);

}  // namespace windgrid
