#include "mcf/density_analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mcf/errors.hpp"

namespace mcf {

namespace {

void check_point(const Immersion& imm, std::span<const double> x0) {
    if (x0.size() != static_cast<std::size_t>(imm.ambient_dim())) {
        throw std::invalid_argument("x0 dimension does not match the ambient dimension");
    }
}

// Squared distance from x0 with periodic axes reduced to minimal images;
// `outer` reports whether any periodic component lies beyond a quarter period.
double lifted_dist2(const Immersion& imm, std::size_t node, std::span<const double> x0,
                    bool* outer = nullptr) {
    const auto p = imm.point(node);
    const auto& periods = imm.periods();
    double r2 = 0.0;
    bool far = false;
    for (std::size_t A = 0; A < p.size(); ++A) {
        double d = p[A] - x0[A];
        if (!periods.empty() && periods[A] > 0.0) {
            d = imm.minimal_image(static_cast<int>(A), d);
            if (std::abs(d) > 0.25 * periods[A]) far = true;
        }
        r2 += d * d;
    }
    if (outer) *outer = far;
    return r2;
}

double max_physical_spacing(const Immersion& imm, const GeometrySnapshot& geo) {
    double s = 0.0;
    for (std::size_t node = 0; node < geo.nodes; ++node) {
        for (int i = 0; i < geo.n; ++i) {
            s = std::max(s, imm.grid().spacing[i] * std::sqrt(geo.g(node, i, i)));
        }
    }
    return s;
}

double unit_ball_volume(int n) { return n == 1 ? 2.0 : std::numbers::pi; }

}  // namespace

double backward_heat_kernel(std::span<const double> x, double t, const SpacetimePoint& pt, int n) {
    if (!(t < pt.t0)) throw TimeOrder(t, pt.t0);
    if (x.size() != pt.x0.size()) throw std::invalid_argument("x and x0 differ in dimension");
    const double tau = pt.t0 - t;
    double r2 = 0.0;
    for (std::size_t A = 0; A < x.size(); ++A) r2 += (x[A] - pt.x0[A]) * (x[A] - pt.x0[A]);
    return std::pow(4.0 * std::numbers::pi * tau, -0.5 * n) * std::exp(-r2 / (4.0 * tau));
}

DensitySample density_sample(const Immersion& imm, const GeometrySnapshot& geo,
                             const SpacetimePoint& pt) {
    const double t = imm.time();
    if (!(t < pt.t0)) throw TimeOrder(t, pt.t0);
    check_point(imm, pt.x0);
    const int n = imm.dim();
    const double tau = pt.t0 - t;
    const double norm = std::pow(4.0 * std::numbers::pi * tau, -0.5 * n);
    const double cell = imm.grid().cell_volume();
    const bool lifted = imm.has_periodic_ambient();

    double total = 0.0;
    double outer_mass = 0.0;
    for (std::size_t node = 0; node < imm.node_count(); ++node) {
        bool outer = false;
        const double r2 = lifted_dist2(imm, node, pt.x0, &outer);
        const double w = norm * std::exp(-r2 / (4.0 * tau)) * geo.sqrt_det_g[node] * cell;
        total += w;
        if (outer) outer_mass += w;
    }
    DensitySample s;
    s.value = total;
    s.boundary_fraction = lifted && total > 0.0 ? outer_mass / total : 0.0;
    return s;
}

double gaussian_density(const Immersion& imm, const GeometrySnapshot& geo,
                        const SpacetimePoint& pt) {
    return density_sample(imm, geo, pt).value;
}

DensitySeries monotonicity_audit(const FlowTrajectory& traj, const SpacetimePoint& pt,
                                 double c_mono, double abs_slack) {
    DensitySeries out;
    if (traj.snapshots.empty()) throw InsufficientData("trajectory has no snapshots");
    if (!(traj.snapshots.front().t < pt.t0)) throw TimeOrder(traj.snapshots.front().t, pt.t0);

    GeometrySnapshot geo;
    double prev_dt = 0.0;
    for (const auto& snap : traj.snapshots) {
        if (!(snap.t < pt.t0)) break;
        compute_geometry(snap.state, geo);
        const auto s = density_sample(snap.state, geo, pt);
        if (s.boundary_fraction > kBoundaryMassTolerance) {
            throw AmbientUnsupported("kernel mass near the fundamental-domain boundary is " +
                                     std::to_string(s.boundary_fraction) + " at t = " +
                                     std::to_string(snap.t));
        }
        if (!out.values.empty()) {
            const double h = snap.state.grid().max_spacing();
            const double slack = abs_slack + c_mono * (h * h + std::max(snap.dt, prev_dt));
            out.slack.push_back(slack);
            const double rise = s.value - out.values.back();
            if (rise > slack) {
                out.violations.push_back({"gaussian_density", out.times.back(), snap.t, rise, slack});
            }
        }
        out.times.push_back(snap.t);
        out.values.push_back(s.value);
        prev_dt = snap.dt;
    }
    return out;
}

double density_ratio(std::span<const std::pair<const Immersion*, const GeometrySnapshot*>> sheets,
                     std::span<const double> x0, double r) {
    if (sheets.empty()) throw std::invalid_argument("density_ratio needs at least one sheet");
    const int n = sheets.front().first->dim();
    double min_r = 0.0;
    for (const auto& [imm, geo] : sheets) {
        if (imm->dim() != n) throw std::invalid_argument("sheets differ in dimension");
        check_point(*imm, x0);
        min_r = std::max(min_r, 2.0 * max_physical_spacing(*imm, *geo));
    }
    if (!(r > min_r)) throw RadiusTooSmall(r, min_r);

    const double r2 = r * r;
    double mass = 0.0;
    for (const auto& [imm, geo] : sheets) {
        const double cell = imm->grid().cell_volume();
        for (std::size_t node = 0; node < imm->node_count(); ++node) {
            if (lifted_dist2(*imm, node, x0) < r2) mass += geo->sqrt_det_g[node] * cell;
        }
    }
    return mass / (unit_ball_volume(n) * std::pow(r, n));
}

double density_ratio(const Immersion& imm, const GeometrySnapshot& geo,
                     std::span<const double> x0, double r) {
    const std::pair<const Immersion*, const GeometrySnapshot*> sheet{&imm, &geo};
    return density_ratio(std::span(&sheet, 1), x0, r);
}

Snapshot parabolic_rescale(const Snapshot& snap, const SpacetimePoint& pt, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    const Immersion& src = snap.state;
    check_point(src, pt.x0);
    const std::size_t N = static_cast<std::size_t>(src.ambient_dim());
    std::vector<double> coords(src.coords().begin(), src.coords().end());
    for (std::size_t k = 0; k < coords.size(); ++k) coords[k] = lambda * (coords[k] - pt.x0[k % N]);
    std::vector<double> periods = src.periods();
    for (double& p : periods) p *= lambda;
    const double l2 = lambda * lambda;
    Snapshot out{snap.step, l2 * (snap.t - pt.t0), l2 * snap.dt, Immersion()};
    out.state = Immersion(src.grid(), src.ambient_dim(), std::move(coords), std::move(periods),
                          out.t);
    return out;
}

std::vector<Snapshot> parabolic_rescale(const FlowTrajectory& traj, const SpacetimePoint& pt,
                                        double lambda) {
    std::vector<Snapshot> out;
    for (const auto& snap : traj.snapshots) {
        if (snap.t < pt.t0) out.push_back(parabolic_rescale(snap, pt, lambda));
    }
    return out;
}

double shrinker_residual(const Immersion& rescaled, const GeometrySnapshot& geo, double s) {
    if (!(s < 0.0)) throw std::invalid_argument("rescaled time must be negative");
    const std::size_t N = static_cast<std::size_t>(rescaled.ambient_dim());
    const double c = 1.0 / (2.0 * std::abs(s));
    double worst = 0.0;
    for (std::size_t node = 0; node < rescaled.node_count(); ++node) {
        const auto F = rescaled.point(node);
        const auto P = geo.P(node);
        const auto H = geo.H(node);
        double norm2 = 0.0;
        for (std::size_t A = 0; A < N; ++A) {
            double perp = 0.0;
            for (std::size_t B = 0; B < N; ++B) perp += P[A * N + B] * F[B];
            const double v = H[A] + c * perp;
            norm2 += v * v;
        }
        worst = std::max(worst, std::sqrt(norm2));
    }
    return worst;
}

std::string_view to_string(Verdict v) {
    return v == Verdict::Regular ? "Regular" : "Uncertain";
}

RegularityReport regularity_report(const DensitySeries& series, double t0, double epsilon,
                                   double max_gap_fraction) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    const std::size_t m = series.values.size();
    if (m < 2) throw InsufficientData("density series needs at least two samples");
    const double span = t0 - series.times.front();
    const double tau1 = t0 - series.times[m - 2];
    const double tau2 = t0 - series.times[m - 1];
    if (!(span > 0.0) || !(tau2 > 0.0)) throw TimeOrder(series.times.back(), t0);

    RegularityReport rep;
    rep.epsilon = epsilon;
    rep.terminal_density = series.values[m - 1];
    rep.terminal_tau = tau2;
    rep.gap_fraction = tau2 / span;
    if (rep.gap_fraction > max_gap_fraction) {
        throw InsufficientData("last density sample is " + std::to_string(rep.gap_fraction) +
                               " of the series span away from t0");
    }
    const double th1 = series.values[m - 2];
    const double th2 = series.values[m - 1];
    rep.extrapolated = (tau1 * th2 - tau2 * th1) / (tau1 - tau2);
    rep.verdict = rep.terminal_density < 1.0 + epsilon ? Verdict::Regular : Verdict::Uncertain;
    return rep;
}

}  // namespace mcf
