#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcf/flow_engine.hpp"
#include "mcf/scenarios.hpp"

namespace mcf {

inline constexpr int kFormatVersion = 1;

// Where a density is evaluated. nullopt x0 means the area-weighted centroid of
// the final snapshot; nullopt t0 means the extinction time (fitted t0 when a
// singularity was classified, else the scenario's closed form).
struct DensityPointConfig {
    std::optional<std::vector<double>> x0;
    std::optional<double> t0;
    double epsilon = 0.05;
};

struct RunConfig {
    ScenarioSpec scenario = CircleSpec{};
    StepPolicy policy;
    MonitorSet monitors;
    std::vector<DensityPointConfig> density;
    double c_mono = 10.0;
    std::string output_dir;  // empty: $MCF_OUTPUT_DIR/<stem> or ./out/<stem>
    std::uint64_t seed = 0;
    int format_version = kFormatVersion;
    bool strict = false;
};

// Throws ParseError (with 1-based line) on malformed JSON and ValidationError
// (with dotted key path) on unknown keys, wrong types or out-of-range values.
RunConfig parse_config(std::string_view text);
nlohmann::json to_json(const RunConfig& cfg);

std::string_view scenario_kind(const ScenarioSpec& spec);

// analyze <dir> <analysis.json>
struct AnalysisSpec {
    DensityPointConfig point;
    double lambda = 2.0;
    double c_mono = 10.0;
    double max_gap_fraction = 0.1;
    int format_version = kFormatVersion;
};

AnalysisSpec parse_analysis(std::string_view text);
nlohmann::json to_json(const AnalysisSpec& spec);

// Shared by both parsers: JSON text to a document, ParseError on failure.
nlohmann::json parse_json_text(std::string_view text);

}  // namespace mcf
