#pragma once

// JSON and CSV renderings of results. JSON numbers are written with the
// shortest text that round-trips to the same double; non-finite values
// become null. Key order is fixed, so equal results give equal bytes.

#include <string>
#include <vector>

#include "json.hpp"
#include "scalelaw/design.hpp"
#include "scalelaw/extrapolation.hpp"
#include "scalelaw/fit.hpp"
#include "scalelaw/presets.hpp"
#include "scalelaw/synthetic.hpp"

namespace scalelaw {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchema = 1;

Json to_json(const ParamSet& params);
Json to_json(const FitReport& report);
Json to_json(const ExtrapolationReport& report);
Json to_json(const SweepEntry& entry);
Json to_json(const DesignAnswer& answer);
Json to_json(const ContourResult& contour);
Json to_json(const StabilityPoint& point);
Json to_json(const Preset& preset);

// {"schema": 1, "command": ..., "inputs": ..., "result": ...}
Json make_report(const std::string& command, Json inputs, Json result);

// Serialized report with a trailing newline.
std::string dump_report(const Json& report);

// landscape.csv for dense fits: log10_m,log10_n,actual,estimated
std::string dense_landscape_csv(const std::vector<DenseMeasurement>& data,
                                const FitReport& report);
// landscape.csv for pruning fits: log10_density,depth,width_scale,n,actual,estimated
std::string prune_landscape_csv(const std::vector<PruneMeasurement>& data,
                                const FitReport& report);
// contour.csv: m,n,error,iterations,power_region_valid
std::string contour_csv(const ContourResult& contour);
// extrapolation_grid.csv: one row per corner
std::string extrapolation_grid_csv(const std::vector<SweepEntry>& sweep);
// Per-point table of a fit: index,actual,estimated,delta
std::string per_point_csv(const FitReport& report);
std::string presets_csv();

}  // namespace scalelaw
