#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "mcf/calibration_monitor.hpp"
#include "mcf/grid_geometry.hpp"
#include "mcf/trajectory.hpp"

namespace mcf {

struct SpacetimePoint {
    std::vector<double> x0;  // ambient point, length N
    double t0 = 0.0;
};

// (4 pi tau)^{-n/2} exp(-|x - x0|^2 / (4 tau)), tau = t0 - t. Throws TimeOrder
// unless t < t0.
double backward_heat_kernel(std::span<const double> x, double t, const SpacetimePoint& pt, int n);

// Kernel mass share sitting in the outer half of the fundamental domain
// around x0 (any periodic axis with |x - x0| > P/4). Zero for Euclidean ambients.
inline constexpr double kBoundaryMassTolerance = 1e-6;

struct DensitySample {
    double value = 0.0;
    double boundary_fraction = 0.0;
};

// Node quadrature of rho dmu. Periodic ambients are lifted to the cover by
// minimal images about x0.
DensitySample density_sample(const Immersion& imm, const GeometrySnapshot& geo,
                             const SpacetimePoint& pt);
double gaussian_density(const Immersion& imm, const GeometrySnapshot& geo,
                        const SpacetimePoint& pt);

struct DensitySeries {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> slack;  // per interval, slack[k] applies to (k, k+1)
    std::vector<MonotonicityFlag> violations;
};

// Densities at every snapshot before t0, flagging increases beyond
// abs_slack + c_mono (h^2 + dt). Throws TimeOrder when no snapshot precedes
// t0 and AmbientUnsupported when a periodic lift is not concentrated.
DensitySeries monotonicity_audit(const FlowTrajectory& traj, const SpacetimePoint& pt,
                                 double c_mono = 10.0, double abs_slack = 1e-6);

// area(B(x0, r) cap Sigma) / (omega_n r^n). Throws RadiusTooSmall unless
// r > 2 x the largest physical node spacing.
double density_ratio(const Immersion& imm, const GeometrySnapshot& geo,
                     std::span<const double> x0, double r);
// Several sheets counted together, e.g. transverse planes through x0.
double density_ratio(std::span<const std::pair<const Immersion*, const GeometrySnapshot*>> sheets,
                     std::span<const double> x0, double r);

// (F, t) -> (lambda (F - x0), lambda^2 (t - t0)) for each snapshot with t < t0.
// Ambient periods scale with lambda.
std::vector<Snapshot> parabolic_rescale(const FlowTrajectory& traj, const SpacetimePoint& pt,
                                        double lambda);
Snapshot parabolic_rescale(const Snapshot& snap, const SpacetimePoint& pt, double lambda);

// max_node ||H + F^perp / (2|s|)|| on a slice at rescaled time s < 0.
double shrinker_residual(const Immersion& rescaled, const GeometrySnapshot& geo, double s);

enum class Verdict { Regular, Uncertain };
std::string_view to_string(Verdict v);

struct RegularityReport {
    Verdict verdict = Verdict::Uncertain;
    double epsilon = 0.05;
    double terminal_density = 0.0;  // last sample
    double terminal_tau = 0.0;      // t0 - t of the last sample
    double extrapolated = 0.0;      // linear extrapolation to tau = 0 from the last two samples
    double gap_fraction = 0.0;      // terminal_tau / (t0 - first sample time)
};

// Regular iff the terminal density is below 1 + epsilon. Throws
// InsufficientData with fewer than two samples or when the last sample is
// further than max_gap_fraction of the series span from t0.
RegularityReport regularity_report(const DensitySeries& series, double t0, double epsilon = 0.05,
                                   double max_gap_fraction = 0.1);

}  // namespace mcf
