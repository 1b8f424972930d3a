#include "mcf/flow_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mcf/calibration_monitor.hpp"
#include "mcf/errors.hpp"

namespace mcf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void fold_max(double& acc, double v) { acc = std::fmax(acc, v); }

// Only meaningful while curvature concentrates: sup|A|^2 must have grown by
// 4x over its initial value, so coarse but smooth data is not cut short.
// Local test: at some node the curvature radius 1/|A| is spanned by fewer than
// exhaustion_nodes node spacings h_i sqrt(g_ii) of that node.
bool resolution_exhausted(const Immersion& imm, const GeometrySnapshot& geo, double sup_A2,
                          double initial_sup_A2, const StepPolicy& policy) {
    if (!(sup_A2 > 0.0) || !(sup_A2 > 4.0 * initial_sup_A2)) return false;
    const double n2 = static_cast<double>(policy.exhaustion_nodes) * policy.exhaustion_nodes;
    for (std::size_t node = 0; node < geo.nodes; ++node) {
        double s2 = 0.0;
        for (int i = 0; i < geo.n; ++i) {
            const double h = imm.grid().spacing[i];
            s2 = std::max(s2, h * h * geo.g(node, i, i));
        }
        // 1/|A| < k s  <=>  |A|^2 k^2 s^2 > 1
        if (geo.norm_A2[node] * n2 * s2 > 1.0) return true;
    }
    return false;
}

}  // namespace

void StepPolicy::validate() const {
    if (!(safety > 0.0 && safety <= 1.0)) throw std::invalid_argument("safety must lie in (0, 1]");
    if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
    if (!(convergence_tol >= 0.0)) throw std::invalid_argument("convergence_tol must be >= 0");
    if (!(blowup_cap > 0.0)) throw std::invalid_argument("blowup_cap must be positive");
    if (exhaustion_nodes < 1) throw std::invalid_argument("exhaustion_nodes must be >= 1");
    if (max_snapshots < 2) throw std::invalid_argument("max_snapshots must be >= 2");
    if (max_series_rows < 64) throw std::invalid_argument("max_series_rows must be >= 64");
}

double stable_dt(const Immersion& imm, const GeometrySnapshot& geo, const StepPolicy& policy) {
    const auto& grid = imm.grid();
    const int n = grid.dim;
    const double h = grid.min_spacing();
    double dt = policy.safety * h * h / (2.0 * n);

    double stiff = 0.0;
    for (std::size_t node = 0; node < geo.nodes; ++node) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += geo.g_inv(node, i, i) / (grid.spacing[i] * grid.spacing[i]);
        stiff = std::max(stiff, s);
    }
    if (stiff > 0.0) dt = std::min(dt, policy.safety / (2.0 * stiff));

    const double sup_A2 = geo.sup_norm_A2();
    if (sup_A2 > 1.0 / (h * h)) dt = std::min(dt, policy.safety / sup_A2);
    return dt;
}

Immersion step_euler(const Immersion& state, const GeometrySnapshot& geo, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    Immersion next = state;
    auto F = next.coords();
    const std::size_t N = static_cast<std::size_t>(state.ambient_dim());
    for (std::size_t k = 0; k < F.size(); ++k) {
        F[k] += dt * geo.mean_curv[k];
        if (!std::isfinite(F[k])) throw NonFinite(k / N);
    }
    next.set_time(state.time() + dt);
    return next;
}

Immersion step_euler(const Immersion& state, double dt) {
    return step_euler(state, compute_geometry(state), dt);
}

FlowTrajectory run_flow(const Scenario& scenario, const StepPolicy& policy,
                        const MonitorSet& monitors) {
    policy.validate();
    if ((monitors.eta || monitors.ratio_k) && !scenario.graph) {
        throw std::invalid_argument("eta and ratio monitors need a graph scenario");
    }
    if (monitors.lagrangian && !(scenario.graph && scenario.lagrangian_candidate)) {
        throw std::invalid_argument("Lagrangian monitor needs a gradient-graph scenario");
    }

    FlowTrajectory traj;
    auto& series = traj.series;
    using namespace columns;
    for (const char* name : {kTime, kArea, kSupA2, kSupH, kMinEta1, kMinEta2, kMinMu,
                             kMinCosTheta, kIntH2, kDt, kStep}) {
        series.add_column(name);
    }
    if (monitors.area_decay) {
        series.add_column(kAreaResidual, true);
        series.add_column(kAreaResidualRel, true);
    }
    if (monitors.lagrangian) {
        for (const char* name : {kLagR1, kLagR2, kLagR3, kSymDefect}) series.add_column(name, true);
    }
    if (monitors.ratio_k) series.add_column(kRatioG);

    const std::size_t ncols = series.cols();
    std::vector<double> acc(ncols, kNaN);
    auto col = [&](const char* name) { return series.column_index(name); };

    Immersion state = scenario.initial;
    Immersion next = state;
    GeometrySnapshot geo, geo_next;
    try {
        compute_geometry(state, geo);
    } catch (const DegenerateMetric& e) {
        traj.termination = Termination::DegenerateGrid;
        traj.termination_detail = e.what();
        return traj;
    }

    const double initial_sup_A2 = geo.sup_norm_A2();
    std::optional<LagrangianState> lag;
    if (monitors.lagrangian) {
        const auto graph = graph_structure(state, geo, *scenario.graph);
        if (!graph.graphical()) throw GraphLost(state.time());
        lag = lagrangian_angle(graph, state.grid());
    }

    const bool auto_cadence = policy.snapshot_cadence == 0;
    std::size_t snap_stride = auto_cadence ? 1 : policy.snapshot_cadence;
    std::size_t row_stride = 1;
    std::size_t step = 0;
    double dt_last = 0.0;
    bool graph_warned = false;

    auto emit_row = [&]() {
        std::vector<double> row(ncols, kNaN);
        row[col(kTime)] = state.time();
        row[col(kArea)] = area(state, geo);
        row[col(kSupA2)] = geo.sup_norm_A2();
        row[col(kSupH)] = geo.sup_norm_H();
        row[col(kIntH2)] = integral_H2(state, geo);
        row[col(kDt)] = dt_last;
        row[col(kStep)] = static_cast<double>(step);
        if (monitors.eta || monitors.ratio_k) {
            const auto graph = graph_structure(state, geo, *scenario.graph);
            if (graph.graphical()) {
                const auto cal = calibration_state(graph);
                if (monitors.eta) {
                    row[col(kMinEta1)] = cal.min_eta1;
                    row[col(kMinEta2)] = cal.min_eta2;
                    row[col(kMinMu)] = cal.min_mu;
                }
                if (monitors.ratio_k) {
                    const auto g = max_curvature_ratio(geo, cal, *monitors.ratio_k);
                    if (g) row[col(kRatioG)] = *g;
                }
            } else if (!graph_warned) {
                graph_warned = true;
                traj.warnings.push_back("graph condition lost at t = " + std::to_string(state.time()));
            }
        }
        if (lag) row[col(kMinCosTheta)] = lag->min_cos_theta;
        for (std::size_t c = 0; c < ncols; ++c) {
            if (series.is_interval_max(c)) {
                row[c] = acc[c];
                acc[c] = kNaN;
            }
        }
        series.append(row);
        if (series.rows() > policy.max_series_rows) {
            const auto carry = series.halve();
            for (std::size_t c = 0; c < ncols; ++c) {
                if (series.is_interval_max(c)) fold_max(acc[c], carry[c]);
            }
            row_stride *= 2;
        }
    };

    auto emit_snapshot = [&]() {
        traj.snapshots.push_back({step, state.time(), dt_last, state});
        if (auto_cadence && traj.snapshots.size() > policy.max_snapshots) {
            std::vector<Snapshot> kept;
            kept.reserve(traj.snapshots.size() / 2 + 1);
            for (std::size_t k = 0; k < traj.snapshots.size(); k += 2) {
                kept.push_back(std::move(traj.snapshots[k]));
            }
            traj.snapshots = std::move(kept);
            snap_stride *= 2;
        }
    };

    while (true) {
        if (lag) {
            fold_max(acc[col(kSymDefect)], lag->symmetry_defect);
            fold_max(acc[col(kLagR2)], mean_curvature_phase_residual(state, geo, *lag));
        }

        const double sup_A2 = geo.sup_norm_A2();
        std::optional<Termination> term;
        if (geo.sup_norm_H() < policy.convergence_tol) {
            term = Termination::Converged;
        } else if (sup_A2 > policy.blowup_cap) {
            term = Termination::SingularityDetected;
            traj.termination_detail = "sup|A|^2 exceeded blow-up cap";
        } else if (resolution_exhausted(state, geo, sup_A2, initial_sup_A2, policy)) {
            term = Termination::SingularityDetected;
            traj.termination_detail = "resolution exhausted";
        } else if (state.time() >= policy.t_max) {
            term = Termination::ReachedTmax;
        }

        if (step % row_stride == 0 || term) emit_row();
        if (step % snap_stride == 0 || term) emit_snapshot();
        if (term) {
            traj.termination = *term;
            break;
        }

        double dt = stable_dt(state, geo, policy);
        bool clamp = false;
        if (state.time() + dt >= policy.t_max) {
            dt = policy.t_max - state.time();
            clamp = true;
        }

        {
            const auto F = state.coords();
            auto Fn = next.coords();
            const std::size_t N = static_cast<std::size_t>(state.ambient_dim());
            for (std::size_t k = 0; k < F.size(); ++k) {
                Fn[k] = F[k] + dt * geo.mean_curv[k];
                if (!std::isfinite(Fn[k])) throw NonFinite(k / N);
            }
            next.set_time(clamp ? policy.t_max : state.time() + dt);
        }
        try {
            compute_geometry(next, geo_next);
        } catch (const DegenerateMetric& e) {
            traj.termination = Termination::DegenerateGrid;
            traj.termination_detail = e.what();
            emit_row();
            if (traj.snapshots.empty() || traj.snapshots.back().step != step) emit_snapshot();
            break;
        }

        if (monitors.area_decay) {
            const double a0 = area(state, geo);
            const double i0 = integral_H2(state, geo);
            const double a1 = area(next, geo_next);
            const double r = std::abs((a1 - a0) / dt + i0);
            fold_max(acc[col(kAreaResidual)], r);
            fold_max(acc[col(kAreaResidualRel)], i0 > 0.0 ? r / i0 : (r == 0.0 ? 0.0 : kNaN));
        }
        if (lag) {
            const auto graph = graph_structure(next, geo_next, *scenario.graph);
            if (!graph.graphical()) throw GraphLost(next.time());
            auto lag_next = lagrangian_angle(graph, next.grid(), &lag->theta);
            const auto r = lagrangian_step_residual(state, geo, *lag, lag_next, dt);
            fold_max(acc[col(kLagR1)], r.r1);
            fold_max(acc[col(kLagR3)], r.r3);
            lag = std::move(lag_next);
        }

        std::swap(state, next);
        std::swap(geo, geo_next);
        dt_last = dt;
        ++step;
    }
    traj.steps = step;

    try {
        traj.singularity = detect_singularity(series, policy);
    } catch (const InsufficientData& e) {
        if (traj.termination == Termination::SingularityDetected) {
            traj.warnings.push_back(std::string("singularity fit skipped: ") + e.what());
        }
    }
    return traj;
}

SingularityReport detect_singularity(std::span<const double> times,
                                     std::span<const double> sup_A2, const StepPolicy& policy,
                                     double window_fraction) {
    if (times.size() != sup_A2.size()) throw std::invalid_argument("series length mismatch");
    std::vector<std::size_t> valid;
    for (std::size_t k = 0; k < sup_A2.size(); ++k) {
        if (std::isfinite(sup_A2[k]) && sup_A2[k] <= policy.blowup_cap) valid.push_back(k);
    }
    const std::size_t count = valid.size();
    const auto start = static_cast<std::size_t>(
        std::floor(static_cast<double>(count) * (1.0 - window_fraction)));
    if (count == 0 || count - std::min(start, count) < 20) {
        throw InsufficientData("singularity fit needs at least 20 samples in the final window");
    }

    SingularityReport rep;
    const double initial = sup_A2[valid.front()];
    double peak = 0.0;
    for (std::size_t k : valid) peak = std::max(peak, sup_A2[k]);
    if (peak <= 10.0 * initial) {
        rep.type = SingularityType::None;
        return rep;
    }

    // y = 1/sup|A|^2 = a + b t; type I means sup|A|^2 (t0 - t) -> C with b = -1/C.
    double mt = 0.0, my = 0.0;
    const std::size_t m = count - start;
    for (std::size_t w = start; w < count; ++w) {
        mt += times[valid[w]];
        my += 1.0 / sup_A2[valid[w]];
    }
    mt /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t w = start; w < count; ++w) {
        const double dt = times[valid[w]] - mt;
        const double dy = 1.0 / sup_A2[valid[w]] - my;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if (!(stt > 0.0)) throw InsufficientData("singularity fit window has zero time extent");
    const double b = sty / stt;
    const double a = my - b * mt;
    double ssr = 0.0;
    for (std::size_t w = start; w < count; ++w) {
        const double r = 1.0 / sup_A2[valid[w]] - (a + b * times[valid[w]]);
        ssr += r * r;
    }
    rep.fit_window = {times[valid[start]], times[valid[count - 1]]};
    rep.fit_residual = syy > 0.0 ? std::sqrt(ssr / syy) : 0.0;
    if (b < 0.0) {
        rep.t0_est = -a / b;
        rep.C_est = -1.0 / b;
    } else {
        rep.t0_est = kNaN;
        rep.C_est = kNaN;
    }
    const bool type_one = b < 0.0 && std::isfinite(rep.C_est) && rep.fit_residual < 0.1;
    rep.type = type_one ? SingularityType::TypeI : SingularityType::TypeII;
    return rep;
}

SingularityReport detect_singularity(const MonitorSeries& series, const StepPolicy& policy) {
    return detect_singularity(series.column(columns::kTime), series.column(columns::kSupA2), policy);
}

AreaDecayResidual area_decay_residual(const FlowTrajectory& traj) {
    AreaDecayResidual out;
    const auto t = traj.series.column(columns::kTime);
    const auto A = traj.series.column(columns::kArea);
    const auto I = traj.series.column(columns::kIntH2);
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        const double dt = t[k + 1] - t[k];
        if (!(dt > 0.0)) continue;
        const double r = std::abs((A[k + 1] - A[k]) / dt + I[k]);
        out.times.push_back(t[k]);
        out.absolute.push_back(r);
        out.relative.push_back(I[k] > 0.0 ? r / I[k] : (r == 0.0 ? 0.0 : kNaN));
    }
    return out;
}

}  // namespace mcf
