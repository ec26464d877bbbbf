#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "windgrid/analysis.hpp"
#include "windgrid/retrofit.hpp"

namespace windgrid {

using Json = nlohmann::ordered_json;

std::vector<std::string> trajectory_columns(const SystemModel& m, const StateLayout& layout);
void write_trajectory_csv(const std::string& path, const Trajectory& tr, const SystemModel& m);

Json metrics_json(const DampingMetrics& dm, const Scenario& sc);
Json equilibrium_json(const EquilibriumPoint& eq, const SystemModel& m);
Json spectrum_json(const Spectrum& s);

void write_spectrum_csv(const std::string& path, const std::vector<Spectrum>& spectra);
void write_tracked_csv(const std::string& path, const TrackedPair& tp);

Json controller_json(const RetrofitController& rc);
RetrofitController controller_from_json(const Json& j);

void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

// Generates a matplotlib script that plots relative angles and wind states
// from the listed trajectory CSVs.
void write_trajectory_plot_script(const std::string& path, const std::vector<std::string>& csvs,
                                  const std::string& title);
void write_spectrum_plot_script(const std::string& path, const std::string& spectrum_csv,
                                const std::string& tracked_csv);

}  // namespace windgrid
