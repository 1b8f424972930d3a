#pragma once

#include <exception>
#include <filesystem>
#include <ostream>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcf/config.hpp"
#include "mcf/density_analyzer.hpp"
#include "mcf/trajectory.hpp"

namespace mcf {

enum ExitCode : int { kExitOk = 0, kExitModuleError = 1, kExitUsage = 2, kExitStrictAudit = 3 };

// Explicit output_dir, else $MCF_OUTPUT_DIR/<stem>, else ./out/<stem>.
std::filesystem::path resolve_output_dir(const RunConfig& cfg, std::string_view stem);

// Output directory layout written by cmd_run:
//   config.echo.json  effective configuration
//   series.csv        monitor series
//   snapshots/*.mcfs  recorded states
//   trajectory.json   manifest: periods, snapshot list, expectations, fitted singularity
//   report.json       termination, singularity fit, audit flags, warnings
int cmd_run(RunConfig cfg, std::string_view stem, std::ostream& out, std::ostream& err);

// Reads a run directory and writes density.csv, rescaled/*.mcfs and
// regularity_report.json.
int cmd_analyze(const std::filesystem::path& dir, const AnalysisSpec& spec, std::ostream& out,
                std::ostream& err);

// Human-readable summary of report.json (and regularity_report.json if present).
int cmd_report(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

// One-line JSON diagnostic {"error": kind, "message": ...}.
void write_error(std::ostream& err, const std::exception& e);

struct LoadedTrajectory {
    FlowTrajectory traj;
    nlohmann::json manifest;
};
// Throws VersionMismatch and InsufficientData (missing manifest or snapshots).
LoadedTrajectory load_trajectory(const std::filesystem::path& dir);

// sqrt(det g)-weighted mean of the node positions.
std::vector<double> centroid(const Immersion& imm, const GeometrySnapshot& geo);

// Fills defaults: x0 = centroid of the final snapshot, t0 = fitted blow-up
// time when available, else the manifest's closed-form extinction time.
SpacetimePoint resolve_point(const DensityPointConfig& cfg, const FlowTrajectory& traj,
                             const nlohmann::json& expectations);

}  // namespace mcf
