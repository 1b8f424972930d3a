#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mcf/grid_geometry.hpp"
#include "mcf/scenarios.hpp"
#include "mcf/trajectory.hpp"

namespace mcf {

// Explicit-scheme step control. The accepted step is
//   dt = min(dt_base, dt_metric [, safety / sup|A|^2])
// with dt_base = safety h^2 / (2n) and dt_metric = safety / (2 max_node sum_i g^ii / h_i^2),
// the curvature cap applying once sup|A|^2 > 1/h^2.
struct StepPolicy {
    double safety = 0.2;
    double t_max = 10.0;
    double convergence_tol = 1e-6;  // on sup|H|
    double blowup_cap = 1e8;        // on sup|A|^2
    int exhaustion_nodes = 8;       // nodes per curvature radius
    std::size_t snapshot_cadence = 0;  // 0: automatic, 200-400 frames
    std::size_t max_snapshots = 400;
    std::size_t max_series_rows = 2048;

    void validate() const;  // throws std::invalid_argument
};

struct MonitorSet {
    bool eta = false;
    bool lagrangian = false;
    bool area_decay = false;
    std::optional<double> ratio_k;
};

double stable_dt(const Immersion& imm, const GeometrySnapshot& geo, const StepPolicy& policy);

// F' = F + dt H, t' = t + dt. Throws NonFinite.
Immersion step_euler(const Immersion& state, const GeometrySnapshot& geo, double dt);
Immersion step_euler(const Immersion& state, double dt);

// Series columns written by run_flow, in order. Monitor-specific columns are
// present only when the monitor is requested.
namespace columns {
inline constexpr const char* kTime = "t";
inline constexpr const char* kArea = "area";
inline constexpr const char* kSupA2 = "sup_A2";
inline constexpr const char* kSupH = "sup_H";
inline constexpr const char* kMinEta1 = "min_eta1";
inline constexpr const char* kMinEta2 = "min_eta2";
inline constexpr const char* kMinMu = "min_mu";
inline constexpr const char* kMinCosTheta = "min_costheta";
inline constexpr const char* kIntH2 = "int_H2";
inline constexpr const char* kDt = "dt";
inline constexpr const char* kStep = "step";
inline constexpr const char* kAreaResidual = "area_decay_residual";
inline constexpr const char* kAreaResidualRel = "area_decay_relative";
inline constexpr const char* kLagR1 = "lagrangian_r1";
inline constexpr const char* kLagR2 = "lagrangian_r2";
inline constexpr const char* kLagR3 = "lagrangian_r3";
inline constexpr const char* kSymDefect = "symmetry_defect";
inline constexpr const char* kRatioG = "ratio_g";
}  // namespace columns

FlowTrajectory run_flow(const Scenario& scenario, const StepPolicy& policy,
                        const MonitorSet& monitors = {});

// Linear fit of 1/sup|A|^2 against t over the last `window_fraction` of the
// samples that stay below the blow-up cap. Throws InsufficientData with fewer
// than 20 samples in the window.
SingularityReport detect_singularity(std::span<const double> times,
                                     std::span<const double> sup_A2, const StepPolicy& policy,
                                     double window_fraction = 0.25);
SingularityReport detect_singularity(const MonitorSeries& series, const StepPolicy& policy);

struct AreaDecayResidual {
    std::vector<double> times;     // left end of each interval
    std::vector<double> absolute;  // |dA/dt + int |H|^2 dmu|
    std::vector<double> relative;  // absolute / int |H|^2 dmu
};

// First-variation check over consecutive series rows.
AreaDecayResidual area_decay_residual(const FlowTrajectory& traj);

}  // namespace mcf
