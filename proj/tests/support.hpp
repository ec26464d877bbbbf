#pragma once

#include <optional>

#include "windgrid/config.hpp"
#include "windgrid/io.hpp"

namespace support {

inline const windgrid::SystemConfig& config() {
  static const windgrid::SystemConfig cfg =
      windgrid::load_system_config(windgrid::default_system_config());
  return cfg;
}

struct Operating {
  windgrid::SystemModel model;
  windgrid::EquilibriumPoint eq;
};

inline Operating operating_point(double gamma, std::optional<double> kappa_i = {}) {
  windgrid::Scenario sc = config().scenario;
  sc.gamma_override = gamma;
  sc.kappa_i_override = kappa_i;
  Operating op{windgrid::apply_overrides(config().model, sc), {}};
  op.eq = windgrid::find_equilibrium(op.model, config().dispatch);
  return op;
}

inline windgrid::Scenario scenario(double gamma, double t_end, bool fault) {
  windgrid::Scenario sc = config().scenario;
  sc.gamma_override = gamma;
  sc.t_end = t_end;
  sc.fault_enabled = fault;
  return sc;
}

}  // namespace support
