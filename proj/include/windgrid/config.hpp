#pragma once

#include <map>
#include <string>
#include <vector>

#include "windgrid/retrofit.hpp"

namespace windgrid {

struct SweepConfig {
  double start = 3.0;
  double stop = 30.0;
  double step = 0.5;
  Complex seed{-0.055, 1.0};
  std::vector<double> grid() const;
};

struct SystemConfig {
  SystemModel model;
  Dispatch dispatch;
  NetworkDescription network;
  Scenario scenario;  // defaults for every run, fault timing from the network block
  std::map<std::string, LqrWeights> lqr_presets;
  SweepConfig sweep;
};

// Environment variable naming the directory that holds system.yaml and scenarios/.
inline constexpr const char* kConfigDirEnv = "WINDGRID_CONFIG_DIR";

std::string default_config_dir();
std::string default_system_config();

SystemConfig load_system_config(const std::string& path);

// Reads a scenario file on top of base; unspecified keys keep their base value.
Scenario load_scenario(const std::string& path, const Scenario& base);

}  // namespace windgrid
