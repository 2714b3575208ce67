#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fforms/copula.hpp"
#include "fforms/core.hpp"
#include "fforms/metrics.hpp"
#include "fforms/oracle.hpp"
#include "fforms/tasks.hpp"

namespace fforms::io {

using Json = nlohmann::ordered_json;

// ---- forecast documents -------------------------------------------------------------
//
// {"type": "point"|"quantile"|"parametric"|"trajectory", "origin": int, "horizon": int,
//  "step_labels": optional [h strings], ...type-specific keys}

Json to_json(const FamilyParams& params);
FamilyParams params_from_json(const Json& j, Family family);

Json to_json(const ForecastDocument& doc);
/// Structural parse only: malformed JSON shapes throw InvalidInput, invariant
/// violations are left for validate().
ForecastDocument forecast_from_json(const Json& j);

Json to_json(const CalibrationSet& cal);
/// {"records": [{"forecast": {...}, "realization": [h floats]}, ...]}
CalibrationSet calibration_from_json(const Json& j);

/// {"copula": "independence"|"comonotonic"|"countermonotonic"|"gaussian_ar1"|
///  "gaussian_full"|"student_t"|"ecc", "rho", "correlation", "nu", "reference", "variant"}
Json to_json(const CopulaSpec& spec);
CopulaSpec copula_from_json(const Json& j);

/// {"version": 1, "support": [[...] x h], "prob": [row-major]}
Json to_json(const DiscreteJoint& joint);
DiscreteJoint joint_from_json(const Json& j);

// ---- results ------------------------------------------------------------------------------

Json to_json(const Provenance& p);
Json to_json(const IntervalSet& s);
Json to_json(const PathwiseBand& b);
Json to_json(const IntervalResult& r);
Json to_json(const BandResult& r);
Json to_json(const EventResult& r);
Json to_json(const VarResult& r);
Json to_json(const SurvivalResult& r);
Json to_json(const AggregateResult& r);
Json to_json(const ScenarioFunctionals& r);
Json to_json(const ScenarioRanking& r);
Json to_json(const ReliabilityTable& t);

// ---- files ----------------------------------------------------------------------------------

std::string read_text(const std::filesystem::path& path);
/// Writes atomically enough for tests: truncate then write; throws on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

Json read_json(const std::filesystem::path& path);
/// Two-space indented dump with a trailing newline; doubles round-trip exactly.
std::string dump(const Json& j);

ForecastDocument load_forecast(const std::filesystem::path& path);  // parsed and validated
CalibrationSet load_calibration(const std::filesystem::path& path);
DiscreteJoint load_joint(const std::filesystem::path& path);

/// CSV with header `t,value`.
HistorySeries history_from_csv(const std::string& text);
std::string history_to_csv(const HistorySeries& h);

/// Long-form actuals `window_id,t,value`; windows in order of first appearance,
/// steps sorted by t.
struct ActualsWindow {
    std::string id;
    std::vector<double> values;
};
std::vector<ActualsWindow> actuals_from_csv(const std::string& text);
std::string actuals_to_csv(const std::vector<ActualsWindow>& windows);

/// `key,value` rows of every leaf, keys as dotted paths (arrays by index).
std::string flatten_csv(const Json& j);

/// Shortest round-trip decimal for a double (as nlohmann prints it).
std::string format_number(double x);

}  // namespace fforms::io
