#include "mcf/calibration_monitor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mcf/errors.hpp"

namespace mcf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double det2(std::span<const double> M) { return M[0] * M[3] - M[1] * M[2]; }

}  // namespace

bool GraphStructure::graphical() const {
    return std::all_of(domain_det.begin(), domain_det.end(), [](double d) { return d > 0.0; });
}

GraphStructure graph_structure(const Immersion& imm, const GeometrySnapshot& geo,
                               const GraphLayout& layout) {
    const int n = layout.domain_dim;
    const int m = layout.target_dim;
    if (n != geo.n) throw std::invalid_argument("graph domain dimension must equal intrinsic dimension");
    if (n + m > geo.N) throw std::invalid_argument("graph layout exceeds ambient dimension");

    GraphStructure gs;
    gs.n = n;
    gs.m = m;
    gs.lagrangian_candidate = (n == m && geo.N == 2 * n);
    gs.jacobians.assign(geo.nodes * n * m, kNaN);
    gs.domain_det.assign(geo.nodes, 0.0);
    (void)imm;

    for (std::size_t node = 0; node < geo.nodes; ++node) {
        // X[a][i] = dx^a/du^i, Y[b][i] = dy^b/du^i
        double X[2][2] = {{0, 0}, {0, 0}};
        for (int i = 0; i < n; ++i) {
            const auto f = geo.frame(node, i);
            for (int a = 0; a < n; ++a) X[a][i] = f[a];
        }
        double Xinv[2][2];
        double det;
        if (n == 1) {
            det = X[0][0];
            if (det == 0.0) continue;
            Xinv[0][0] = 1.0 / det;
        } else {
            det = X[0][0] * X[1][1] - X[0][1] * X[1][0];
            if (det == 0.0) continue;
            Xinv[0][0] = X[1][1] / det;
            Xinv[1][1] = X[0][0] / det;
            Xinv[0][1] = -X[0][1] / det;
            Xinv[1][0] = -X[1][0] / det;
        }
        gs.domain_det[node] = det;
        double* out = gs.jacobians.data() + node * n * m;
        for (int b = 0; b < m; ++b) {
            for (int a = 0; a < n; ++a) {
                double s = 0.0;
                for (int i = 0; i < n; ++i) s += geo.frame(node, i)[n + b] * Xinv[i][a];
                out[b * n + a] = s;
            }
        }
    }
    return gs;
}

std::vector<double> singular_values(std::span<const double> M, int rows, int cols) {
    if (M.size() != static_cast<std::size_t>(rows * cols)) {
        throw std::invalid_argument("matrix size mismatch");
    }
    if (rows == 2 && cols == 2) {
        const double E = 0.5 * (M[0] + M[3]);
        const double F = 0.5 * (M[0] - M[3]);
        const double G = 0.5 * (M[2] + M[1]);
        const double H = 0.5 * (M[2] - M[1]);
        const double Q = std::hypot(E, H);
        const double R = std::hypot(F, G);
        return {Q + R, std::abs(Q - R)};
    }
    if (rows == 1 || cols == 1) {
        double s = 0.0;
        for (double v : M) s += v * v;
        return {std::sqrt(s)};
    }
    Eigen::MatrixXd A(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) A(r, c) = M[r * cols + c];
    const Eigen::MatrixXd gram = cols <= rows ? Eigen::MatrixXd(A.transpose() * A)
                                              : Eigen::MatrixXd(A * A.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    std::vector<double> out(static_cast<std::size_t>(ev.size()));
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        out[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, ev(ev.size() - 1 - k)));
    }
    return out;
}

double star_omega1(std::span<const double> sv) {
    double p = 1.0;
    for (double l : sv) p *= 1.0 + l * l;
    return 1.0 / std::sqrt(p);
}

double star_omega2_unsigned(std::span<const double> sv) {
    if (sv.size() != 2) throw std::invalid_argument("*omega2 needs exactly two singular values");
    return sv[0] * sv[1] * star_omega1(sv);
}

OmegaValues omega_values(std::span<const double> sv, int n, int m) {
    OmegaValues v;
    v.star_omega1 = star_omega1(sv);
    v.star_omega2 = (n == 2 && m == 2) ? star_omega2_unsigned(sv) : kNaN;
    return v;
}

double projection_jacobian(const GeometrySnapshot& geo, const GraphLayout& layout,
                           std::size_t node) {
    const int n = geo.n;
    Eigen::MatrixXd frames(geo.N, n);
    for (int i = 0; i < n; ++i) {
        const auto f = geo.frame(node, i);
        for (int A = 0; A < geo.N; ++A) frames(A, i) = f[A];
    }
    const Eigen::MatrixXd X = frames.topRows(layout.domain_dim);
    const double gram_domain = (X.transpose() * X).determinant();
    const double gram_full = (frames.transpose() * frames).determinant();
    return std::sqrt(gram_domain / gram_full);
}

CalibrationState calibration_state(const GraphStructure& graph) {
    if (!graph.graphical()) throw std::domain_error("calibration state needs a graphical state");
    const int n = graph.n;
    const int m = graph.m;
    const std::size_t nodes = graph.nodes();
    const bool two_by_two = (n == 2 && m == 2);
    const int k = std::min(n, m);

    CalibrationState cs;
    cs.n = n;
    cs.m = m;
    cs.sv.resize(nodes * k);
    cs.star_omega1.resize(nodes);
    if (two_by_two) {
        cs.star_omega2.resize(nodes);
        cs.eta1.resize(nodes);
        cs.eta2.resize(nodes);
    }
    cs.min_mu = std::numeric_limits<double>::infinity();
    cs.min_eta1 = two_by_two ? std::numeric_limits<double>::infinity() : kNaN;
    cs.min_eta2 = cs.min_eta1;

    for (std::size_t node = 0; node < nodes; ++node) {
        const auto Df = graph.Df(node);
        const auto sv = singular_values(Df, m, n);
        std::copy(sv.begin(), sv.end(), cs.sv.begin() + static_cast<std::ptrdiff_t>(node * k));
        const double mu = star_omega1(sv);
        cs.star_omega1[node] = mu;
        cs.min_mu = std::min(cs.min_mu, mu);
        if (two_by_two) {
            const double w2 = det2(Df) * mu;
            cs.star_omega2[node] = w2;
            cs.eta1[node] = mu + w2;
            cs.eta2[node] = mu - w2;
            cs.min_eta1 = std::min(cs.min_eta1, cs.eta1[node]);
            cs.min_eta2 = std::min(cs.min_eta2, cs.eta2[node]);
        }
    }
    return cs;
}

std::vector<MonotonicityFlag> audit_nondecreasing(const std::string& quantity,
                                                  std::span<const double> times,
                                                  std::span<const double> values,
                                                  std::span<const double> dts, double h2,
                                                  double c_mono) {
    std::vector<MonotonicityFlag> flags;
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (std::isnan(values[k]) || std::isnan(values[k - 1])) continue;
        const double slack = c_mono * (h2 + dts[k]);
        const double drop = values[k - 1] - values[k];
        if (drop > slack) flags.push_back({quantity, times[k - 1], times[k], drop, slack});
    }
    return flags;
}

EtaSeries eta_monitor(const FlowTrajectory& traj, const GraphLayout& layout, double c_mono) {
    EtaSeries out;
    if (traj.snapshots.empty()) return out;
    std::vector<double> dts;
    GeometrySnapshot geo;
    for (const auto& snap : traj.snapshots) {
        compute_geometry(snap.state, geo);
        const auto graph = graph_structure(snap.state, geo, layout);
        if (!graph.graphical()) throw GraphLost(snap.t);
        const auto cs = calibration_state(graph);
        out.times.push_back(snap.t);
        out.min_eta1.push_back(cs.min_eta1);
        out.min_eta2.push_back(cs.min_eta2);
        out.min_mu.push_back(cs.min_mu);
        dts.push_back(snap.dt);
    }
    const double h = traj.snapshots.front().state.grid().max_spacing();
    const double h2 = h * h;
    for (auto [name, values] : {std::pair{"min_eta1", &out.min_eta1},
                                std::pair{"min_eta2", &out.min_eta2},
                                std::pair{"min_mu", &out.min_mu}}) {
        auto f = audit_nondecreasing(name, out.times, *values, dts, h2, c_mono);
        out.flags.insert(out.flags.end(), f.begin(), f.end());
    }
    return out;
}

std::vector<double> star_alpha(const GeometrySnapshot& geo, const ConstantForm& form,
                               Orientation orientation) {
    const int n = geo.n;
    const int N = geo.N;
    if (form.degree != n) throw std::invalid_argument("form degree must equal intrinsic dimension");
    for (const auto& term : form.terms) {
        if (term.indices.size() != static_cast<std::size_t>(n)) {
            throw std::invalid_argument("form term has wrong number of indices");
        }
        for (std::size_t a = 0; a < term.indices.size(); ++a) {
            if (term.indices[a] < 0 || term.indices[a] >= N) {
                throw std::invalid_argument("form index out of ambient range");
            }
            if (a > 0 && term.indices[a] <= term.indices[a - 1]) {
                throw std::invalid_argument("form indices must be strictly increasing");
            }
        }
    }

    std::vector<double> out(geo.nodes);
    std::vector<double> e(static_cast<std::size_t>(n) * N);
    for (std::size_t node = 0; node < geo.nodes; ++node) {
        for (int i = 0; i < n; ++i) {
            int src = i;
            if (orientation == Orientation::Reversed && n == 2) src = 1 - i;
            const auto f = geo.frame(node, src);
            std::copy(f.begin(), f.end(), e.begin() + i * N);
        }
        // Gram-Schmidt in the flat ambient inner product.
        for (int i = 0; i < n; ++i) {
            double* ei = e.data() + i * N;
            for (int j = 0; j < i; ++j) {
                const double* ej = e.data() + j * N;
                double d = 0.0;
                for (int A = 0; A < N; ++A) d += ei[A] * ej[A];
                for (int A = 0; A < N; ++A) ei[A] -= d * ej[A];
            }
            double norm = 0.0;
            for (int A = 0; A < N; ++A) norm += ei[A] * ei[A];
            norm = std::sqrt(norm);
            if (!(norm > 0.0)) throw DegenerateMetric(node, 0.0);
            for (int A = 0; A < N; ++A) ei[A] /= norm;
        }
        if (orientation == Orientation::Reversed && n == 1) {
            for (int A = 0; A < N; ++A) e[A] = -e[A];
        }
        double value = 0.0;
        for (const auto& term : form.terms) {
            double minor;
            if (n == 1) {
                minor = e[term.indices[0]];
            } else {
                const int a = term.indices[0];
                const int b = term.indices[1];
                minor = e[a] * e[N + b] - e[b] * e[N + a];
            }
            value += term.coeff * minor;
        }
        out[node] = value;
    }
    return out;
}

std::complex<double> holomorphic_volume_phase(std::span<const double> Df, int n) {
    if (n == 1) return {1.0, Df[0]};
    if (n == 2) {
        return {1.0 - Df[0] * Df[3] + Df[1] * Df[2], Df[0] + Df[3]};
    }
    throw std::invalid_argument("Lagrangian phase supports n <= 2");
}

LagrangianState lagrangian_angle(const GraphStructure& graph, const ParameterGrid& grid,
                                 const std::vector<double>* previous) {
    if (graph.n != graph.m) throw std::invalid_argument("Lagrangian angle needs n = m");
    const int n = graph.n;
    const std::size_t nodes = graph.nodes();
    constexpr double two_pi = 2.0 * std::numbers::pi;

    LagrangianState st;
    st.theta.resize(nodes);
    st.cos_theta.resize(nodes);
    std::vector<double> principal(nodes);
    st.min_cos_theta = std::numeric_limits<double>::infinity();
    for (std::size_t node = 0; node < nodes; ++node) {
        const auto Df = graph.Df(node);
        const auto z = holomorphic_volume_phase(Df, n);
        principal[node] = std::atan2(z.imag(), z.real());
        st.cos_theta[node] = z.real() / std::abs(z);
        st.min_cos_theta = std::min(st.min_cos_theta, st.cos_theta[node]);
        if (n == 2) {
            st.symmetry_defect = std::max(st.symmetry_defect, std::abs(Df[1] - Df[2]));
        }
    }

    auto branch_near = [&](double p, double ref) {
        return p + two_pi * std::nearbyint((ref - p) / two_pi);
    };

    if (previous != nullptr) {
        if (previous->size() != nodes) throw std::invalid_argument("previous phase size mismatch");
        for (std::size_t node = 0; node < nodes; ++node) {
            const double ref = (*previous)[node];
            st.theta[node] = branch_near(principal[node], ref);
            const double jump = std::abs(st.theta[node] - ref);
            if (jump >= std::numbers::pi) throw UnwrapAmbiguity(node, node, jump);
        }
    } else {
        std::vector<bool> seen(nodes, false);
        std::deque<std::size_t> queue{0};
        seen[0] = true;
        st.theta[0] = principal[0];
        while (!queue.empty()) {
            const std::size_t node = queue.front();
            queue.pop_front();
            for (int axis = 0; axis < grid.dim; ++axis) {
                for (int off : {+1, -1}) {
                    const std::size_t nb = grid.shift(node, axis, off);
                    if (seen[nb]) continue;
                    seen[nb] = true;
                    st.theta[nb] = branch_near(principal[nb], st.theta[node]);
                    queue.push_back(nb);
                }
            }
        }
    }

    for (std::size_t node = 0; node < nodes; ++node) {
        for (int axis = 0; axis < grid.dim; ++axis) {
            const std::size_t nb = grid.shift(node, axis, +1);
            const double jump = std::abs(st.theta[nb] - st.theta[node]);
            if (jump >= std::numbers::pi) throw UnwrapAmbiguity(node, nb, jump);
        }
    }
    return st;
}

void apply_complex_structure(std::span<const double> v, std::span<double> out, int n) {
    for (int k = 0; k < n; ++k) {
        out[k] = -v[n + k];
        out[n + k] = v[k];
    }
}

double mean_curvature_phase_residual(const Immersion& imm, const GeometrySnapshot& geo,
                                     const LagrangianState& lag) {
    const int n = geo.n;
    const int N = geo.N;
    if (N != 2 * n) throw std::invalid_argument("H = J grad theta needs ambient R^{2n}");
    const auto grad = tangential_gradient(imm.grid(), geo, lag.theta);
    std::vector<double> jg(N);
    double r = 0.0;
    for (std::size_t node = 0; node < geo.nodes; ++node) {
        apply_complex_structure({grad.data() + node * N, static_cast<std::size_t>(N)}, jg, n);
        const auto H = geo.H(node);
        double s = 0.0;
        for (int A = 0; A < N; ++A) s += (H[A] - jg[A]) * (H[A] - jg[A]);
        r = std::max(r, std::sqrt(s));
    }
    return r;
}

LagrangianStepResidual lagrangian_step_residual(const Immersion& before,
                                                const GeometrySnapshot& geo_before,
                                                const LagrangianState& lag_before,
                                                const LagrangianState& lag_after, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const auto& grid = before.grid();
    const auto lap_theta = laplace_beltrami(grid, geo_before, lag_before.theta);
    const auto lap_cos = laplace_beltrami(grid, geo_before, lag_before.cos_theta);
    LagrangianStepResidual r;
    for (std::size_t node = 0; node < geo_before.nodes; ++node) {
        const double dtheta = (lag_after.theta[node] - lag_before.theta[node]) / dt;
        r.r1 = std::max(r.r1, std::abs(dtheta - lap_theta[node]));
        const double c = lag_before.cos_theta[node];
        const double dcos = (lag_after.cos_theta[node] - c) / dt;
        r.r3 = std::max(r.r3, std::abs(dcos - lap_cos[node] - geo_before.norm_H2[node] * c));
    }
    r.r2 = mean_curvature_phase_residual(before, geo_before, lag_before);
    return r;
}

LagrangianSeries lagrangian_residuals(const FlowTrajectory& traj, const GraphLayout& layout,
                                      double c_mono) {
    LagrangianSeries out;
    if (traj.snapshots.empty()) return out;
    std::vector<GeometrySnapshot> geos;
    std::vector<LagrangianState> lags;
    std::vector<double> dts;
    for (const auto& snap : traj.snapshots) {
        auto geo = compute_geometry(snap.state);
        const auto graph = graph_structure(snap.state, geo, layout);
        if (!graph.graphical()) throw GraphLost(snap.t);
        auto lag = lagrangian_angle(graph, snap.state.grid(), lags.empty() ? nullptr : &lags.back().theta);
        out.symmetry_defect.push_back(lag.symmetry_defect);
        out.min_cos_theta.push_back(lag.min_cos_theta);
        dts.push_back(snap.dt);
        geos.push_back(std::move(geo));
        lags.push_back(std::move(lag));
    }
    for (std::size_t k = 0; k + 1 < traj.snapshots.size(); ++k) {
        const double dt = traj.snapshots[k + 1].t - traj.snapshots[k].t;
        const auto r = lagrangian_step_residual(traj.snapshots[k].state, geos[k], lags[k],
                                                lags[k + 1], dt);
        out.times.push_back(traj.snapshots[k].t);
        out.r1.push_back(r.r1);
        out.r2.push_back(r.r2);
        out.r3.push_back(r.r3);
    }

    // Audit only while min cos theta stays positive.
    std::vector<double> times, values, used_dts;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        if (!(out.min_cos_theta[k] > 0.0)) break;
        times.push_back(traj.snapshots[k].t);
        values.push_back(out.min_cos_theta[k]);
        used_dts.push_back(dts[k]);
    }
    const double h = traj.snapshots.front().state.grid().max_spacing();
    out.flags = audit_nondecreasing("min_costheta", times, values, used_dts, h * h, c_mono);
    return out;
}

std::optional<double> max_curvature_ratio(const GeometrySnapshot& geo,
                                          const CalibrationState& cal, double k) {
    if (!(cal.min_mu > k)) return std::nullopt;
    double g = 0.0;
    for (std::size_t node = 0; node < geo.nodes; ++node) {
        g = std::max(g, geo.norm_A2[node] / (cal.star_omega1[node] - k));
    }
    return g;
}

RatioSeries ratio_monitor(const FlowTrajectory& traj, const GraphLayout& layout, double k) {
    RatioSeries out;
    out.k = k;
    GeometrySnapshot geo;
    for (const auto& snap : traj.snapshots) {
        compute_geometry(snap.state, geo);
        const auto graph = graph_structure(snap.state, geo, layout);
        if (!graph.graphical()) throw GraphLost(snap.t);
        const auto cal = calibration_state(graph);
        const auto g = max_curvature_ratio(geo, cal, k);
        if (!g) throw KBelowMu(snap.t, cal.min_mu, k);
        out.times.push_back(snap.t);
        out.max_g.push_back(*g);
    }
    return out;
}

TailBound ratio_tail_bound(const RatioSeries& series, double tail_fraction, double factor) {
    TailBound tb;
    const std::size_t n = series.max_g.size();
    if (n == 0) throw InsufficientData("empty ratio series");
    const auto start = static_cast<std::size_t>(std::floor((1.0 - tail_fraction) * static_cast<double>(n)));
    const std::size_t s = std::min(start, n - 1);
    tb.window_start_value = series.max_g[s];
    tb.tail_sup = *std::max_element(series.max_g.begin() + static_cast<std::ptrdiff_t>(s), series.max_g.end());
    tb.bounded = tb.tail_sup <= factor * tb.window_start_value;
    return tb;
}

}  // namespace mcf
