#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcf/grid_geometry.hpp"
#include "mcf/trajectory.hpp"

namespace mcf {

// Graph immersions are laid out as F = (x, f(x), 0...): the first
// `domain_dim` ambient axes are the domain factor, the next `target_dim` the
// target factor, and any remaining axes are zero padding.
struct GraphLayout {
    int domain_dim = 2;
    int target_dim = 2;
};

// Node-indexed Jacobian Df = (dy/du)(dx/du)^-1, row-major target_dim x domain_dim.
struct GraphStructure {
    int n = 0;
    int m = 0;
    std::vector<double> jacobians;
    std::vector<double> domain_det;  // det(dx/du) per node; <= 0 means not a graph there
    bool lagrangian_candidate = false;

    std::span<const double> Df(std::size_t node) const {
        return {jacobians.data() + node * n * m, static_cast<std::size_t>(n * m)};
    }
    std::size_t nodes() const { return domain_det.size(); }
    bool graphical() const;
};

GraphStructure graph_structure(const Immersion& imm, const GeometrySnapshot& geo,
                               const GraphLayout& layout);

// Descending singular values of a row-major rows x cols matrix. 2x2 uses the
// closed form through the two rotation invariants; larger shapes use the
// eigenvalues of M^T M.
std::vector<double> singular_values(std::span<const double> M, int rows, int cols);

// *omega1 = 1 / prod sqrt(1 + lambda_i^2).
double star_omega1(std::span<const double> sv);
// lambda1 lambda2 / sqrt((1 + lambda1^2)(1 + lambda2^2)); sign-less.
double star_omega2_unsigned(std::span<const double> sv);
struct OmegaValues {
    double star_omega1 = 0.0;
    double star_omega2 = 0.0;  // unsigned; NaN unless n = m = 2
};
OmegaValues omega_values(std::span<const double> sv, int n, int m);

// Jacobian of the projection onto the domain factor computed from Gram
// determinants, sqrt(det(X^T X) / det g). Independent of the singular values.
double projection_jacobian(const GeometrySnapshot& geo, const GraphLayout& layout,
                           std::size_t node);

struct CalibrationState {
    int n = 0;
    int m = 0;
    std::vector<double> sv;           // [node][min(n,m)], descending
    std::vector<double> star_omega1;  // mu
    std::vector<double> star_omega2;  // signed; empty unless n = m = 2
    std::vector<double> eta1;
    std::vector<double> eta2;
    double min_eta1 = 0.0;
    double min_eta2 = 0.0;
    double min_mu = 0.0;
};

// *omega2 carries the sign of det Df (the pullback of the target area form
// over the induced area density).
CalibrationState calibration_state(const GraphStructure& graph);

// A decrease of a monitored minimum larger than the slack.
struct MonotonicityFlag {
    std::string quantity;
    double t_prev = 0.0;
    double t = 0.0;
    double drop = 0.0;
    double slack = 0.0;
};

// Flags every consecutive pair where values[k] < values[k-1] - slack_k with
// slack_k = c_mono * (h2 + dts[k]).
std::vector<MonotonicityFlag> audit_nondecreasing(const std::string& quantity,
                                                  std::span<const double> times,
                                                  std::span<const double> values,
                                                  std::span<const double> dts, double h2,
                                                  double c_mono);

struct EtaSeries {
    std::vector<double> times;
    std::vector<double> min_eta1;
    std::vector<double> min_eta2;
    std::vector<double> min_mu;
    std::vector<MonotonicityFlag> flags;
};

// Evaluates the calibration minima on every snapshot and audits them for
// monotonicity. Throws GraphLost at the first non-graphical snapshot.
EtaSeries eta_monitor(const FlowTrajectory& traj, const GraphLayout& layout,
                      double c_mono = 10.0);

// Constant-coefficient n-form sum_k coeff_k dx^{I_k}, each index tuple
// strictly increasing. Comass normalization is the caller's responsibility.
struct ConstantForm {
    struct Term {
        std::vector<int> indices;
        double coeff = 0.0;
    };
    int degree = 0;
    std::vector<Term> terms;
};

enum class Orientation { FrameOrder, Reversed };

// *alpha = alpha(e_1 ^ ... ^ e_n) with e_i the Gram-Schmidt orthonormalized
// coordinate frame.
std::vector<double> star_alpha(const GeometrySnapshot& geo, const ConstantForm& form,
                               Orientation orientation = Orientation::FrameOrder);

// det(I + i Df) for a square n x n Df, n <= 2.
std::complex<double> holomorphic_volume_phase(std::span<const double> Df, int n);

struct LagrangianState {
    std::vector<double> theta;  // unwrapped
    std::vector<double> cos_theta;
    double symmetry_defect = 0.0;  // max_node ||Df - Df^T||_max
    double min_cos_theta = 0.0;
};

// Phase of det(I + i Df). With `previous` the per-node branch follows the
// previous field in time; otherwise a breadth-first sweep from node 0 picks
// the branch in space. Throws UnwrapAmbiguity on any neighbor jump >= pi.
LagrangianState lagrangian_angle(const GraphStructure& graph, const ParameterGrid& grid,
                                 const std::vector<double>* previous = nullptr);

// J on R^{2n} = C^n with coordinates (x, y): J(x, y) = (-y, x).
void apply_complex_structure(std::span<const double> v, std::span<double> out, int n);

// r2 = max ||H - J grad theta|| at a single state.
double mean_curvature_phase_residual(const Immersion& imm, const GeometrySnapshot& geo,
                                     const LagrangianState& lag);

struct LagrangianStepResidual {
    double r1 = 0.0;  // max |d_t theta - Delta theta|
    double r2 = 0.0;  // max ||H - J grad theta|| at the earlier state
    double r3 = 0.0;  // max |d_t cos - Delta cos - |H|^2 cos|
};

// Residuals between two states separated by dt; `before` geometry and phase
// are the reference for spatial operators.
LagrangianStepResidual lagrangian_step_residual(const Immersion& before,
                                                const GeometrySnapshot& geo_before,
                                                const LagrangianState& lag_before,
                                                const LagrangianState& lag_after, double dt);

struct LagrangianSeries {
    std::vector<double> times;  // time of the earlier state of each interval
    std::vector<double> r1;
    std::vector<double> r2;
    std::vector<double> r3;
    std::vector<double> symmetry_defect;  // per snapshot
    std::vector<double> min_cos_theta;    // per snapshot
    std::vector<MonotonicityFlag> flags;  // min cos theta audit, while positive
};

// Residuals over consecutive snapshot pairs of a recorded trajectory.
LagrangianSeries lagrangian_residuals(const FlowTrajectory& traj, const GraphLayout& layout,
                                      double c_mono = 10.0);

struct RatioSeries {
    double k = 0.0;
    std::vector<double> times;
    std::vector<double> max_g;
};

// max_node |A|^2 / (mu - k) per snapshot; throws KBelowMu at the first
// snapshot with min mu <= k.
RatioSeries ratio_monitor(const FlowTrajectory& traj, const GraphLayout& layout, double k);

// Single-state version; nullopt when min mu <= k.
std::optional<double> max_curvature_ratio(const GeometrySnapshot& geo,
                                          const CalibrationState& cal, double k);

struct TailBound {
    double window_start_value = 0.0;
    double tail_sup = 0.0;
    bool bounded = false;
};

// Boundedness audit: sup of the last `tail_fraction` of the series against
// `factor` times its value at the window start.
TailBound ratio_tail_bound(const RatioSeries& series, double tail_fraction = 0.5,
                           double factor = 1.1);

}  // namespace mcf
