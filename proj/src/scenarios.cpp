#include "mcf/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "mcf/errors.hpp"

namespace mcf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Portable uniform in [0, 1): std distributions are implementation-defined.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void require_graph_margin(const Immersion& imm, const GraphLayout& layout, double margin) {
    const auto geo = compute_geometry(imm);
    const auto graph = graph_structure(imm, geo, layout);
    for (std::size_t node = 0; node < graph.nodes(); ++node) {
        if (!(graph.domain_det[node] > 0.0)) throw MarginViolated(node, 0.0, margin);
    }
    const auto cal = calibration_state(graph);
    for (std::size_t node = 0; node < graph.nodes(); ++node) {
        if (cal.star_omega1[node] < margin) throw MarginViolated(node, cal.star_omega1[node], margin);
    }
}

std::vector<double> graph_periods(int N, double period, int pad) {
    std::vector<double> p(static_cast<std::size_t>(N), period);
    for (int k = N - pad; k < N; ++k) p[static_cast<std::size_t>(k)] = 0.0;
    return p;
}

}  // namespace

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::ByConstruction: return "by_construction";
        case Provenance::IndependentOracle: return "independent_oracle";
        case Provenance::Literature: return "literature";
    }
    return "unknown";
}

std::optional<double> ScenarioExpectation::find(std::string_view name) const {
    for (const auto& e : values) {
        if (e.name == name) return e.value;
    }
    return std::nullopt;
}

Scenario make_circle(double r0, int ambient_dim, std::size_t res) {
    if (!(r0 > 0.0)) throw std::invalid_argument("circle radius must be positive");
    if (ambient_dim < 2) throw std::invalid_argument("circle needs ambient dimension >= 2");
    if (res < 64) throw std::invalid_argument("circle needs at least 64 nodes");
    const double h = kTwoPi / static_cast<double>(res);
    std::vector<double> F(res * static_cast<std::size_t>(ambient_dim), 0.0);
    for (std::size_t i = 0; i < res; ++i) {
        const double phi = h * static_cast<double>(i);
        F[i * ambient_dim + 0] = r0 * std::cos(phi);
        F[i * ambient_dim + 1] = r0 * std::sin(phi);
    }
    Scenario sc;
    sc.spec = CircleSpec{r0, ambient_dim, res};
    sc.initial = Immersion(ParameterGrid::curve(res, h), ambient_dim, std::move(F));
    sc.expect.values = {
        {"initial_radius", r0, Provenance::ByConstruction},
        // dr/dt = -1/r gives r(t) = sqrt(r0^2 - 2t)
        {"extinction_time", 0.5 * r0 * r0, Provenance::IndependentOracle},
        {"type_I_constant", 0.5, Provenance::IndependentOracle},
    };
    sc.analogue_of = "type I singularity model: round circle shrinking self-similarly";
    return sc;
}

Scenario make_ellipse(double a, double b, int ambient_dim, std::size_t res) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("ellipse axes must be positive");
    if (ambient_dim < 2) throw std::invalid_argument("ellipse needs ambient dimension >= 2");
    if (res < 64) throw std::invalid_argument("ellipse needs at least 64 nodes");
    const double h = kTwoPi / static_cast<double>(res);
    std::vector<double> F(res * static_cast<std::size_t>(ambient_dim), 0.0);
    for (std::size_t i = 0; i < res; ++i) {
        const double phi = h * static_cast<double>(i);
        F[i * ambient_dim + 0] = a * std::cos(phi);
        F[i * ambient_dim + 1] = b * std::sin(phi);
    }
    Scenario sc;
    sc.spec = EllipseSpec{a, b, ambient_dim, res};
    sc.initial = Immersion(ParameterGrid::curve(res, h), ambient_dim, std::move(F));
    // Enclosed area decreases at rate 2 pi for any embedded closed curve.
    sc.expect.values = {{"extinction_time", 0.5 * a * b, Provenance::IndependentOracle}};
    sc.analogue_of = "embedded plane curves contract to a round point (Gage-Hamilton, Grayson)";
    return sc;
}

Scenario make_torus_graph(const TorusGraphSpec& spec, std::uint64_t seed) {
    if (!(spec.period > 0.0)) throw std::invalid_argument("period must be positive");
    if (spec.pad < 0) throw std::invalid_argument("pad must be >= 0");
    const std::size_t res = spec.res;
    const double P = spec.period;
    const double h = P / static_cast<double>(res);

    std::vector<FourierTerm> terms = spec.perturbation;
    if (spec.random_modes > 0) {
        std::mt19937_64 rng(seed);
        for (int k = 0; k < spec.random_modes; ++k) {
            FourierTerm t;
            t.component = static_cast<int>(rng() % 2);
            t.kx = static_cast<int>(rng() % 5) - 2;
            t.ky = static_cast<int>(rng() % 5) - 2;
            t.amplitude = spec.random_amplitude * (2.0 * uniform01(rng) - 1.0);
            t.phase = kTwoPi * uniform01(rng);
            terms.push_back(t);
        }
    }
    for (const auto& t : terms) {
        if (t.component < 0 || t.component > 1) throw std::invalid_argument("component must be 0 or 1");
    }

    const int N = 4 + spec.pad;
    std::vector<double> F(res * res * static_cast<std::size_t>(N), 0.0);
    for (std::size_t j = 0; j < res; ++j) {
        for (std::size_t i = 0; i < res; ++i) {
            const double x = h * static_cast<double>(i);
            const double y = h * static_cast<double>(j);
            double f[2] = {spec.linear[0][0] * x + spec.linear[0][1] * y,
                           spec.linear[1][0] * x + spec.linear[1][1] * y};
            for (const auto& t : terms) {
                f[t.component] += t.amplitude * std::sin(kTwoPi * (t.kx * x + t.ky * y) / P + t.phase);
            }
            double* p = F.data() + (i + res * j) * N;
            p[0] = x;
            p[1] = y;
            p[2] = f[0];
            p[3] = f[1];
        }
    }
    Scenario sc;
    sc.spec = spec;
    sc.initial = Immersion(ParameterGrid::surface(res, res, h, h), N, std::move(F),
                           graph_periods(N, P, spec.pad));
    sc.graph = GraphLayout{2, 2};
    require_graph_margin(sc.initial, *sc.graph, spec.margin);

    const bool linear_only = terms.empty() || std::all_of(terms.begin(), terms.end(), [](const auto& t) {
                                 return t.amplitude == 0.0;
                             });
    sc.expect.stationary = linear_only;
    if (linear_only) {
        sc.expect.values.push_back({"sup_A2", 0.0, Provenance::ByConstruction});
    }
    sc.analogue_of = "graphs with *omega1 > 0 converge to totally geodesic graphs (flat-torus analogue of the "
                     "constant-map convergence for maps between spheres)";
    return sc;
}

std::array<double, 4> potential_hessian(const GradientGraphSpec& spec, double x, double y) {
    std::array<double, 4> Hs = {static_cast<double>(spec.linear[0][0]), static_cast<double>(spec.linear[0][1]),
                                static_cast<double>(spec.linear[1][0]), static_cast<double>(spec.linear[1][1])};
    const double w = kTwoPi / spec.period;
    for (const auto& t : spec.potential) {
        const double c = t.amplitude * w * w * std::cos(w * (t.kx * x + t.ky * y) + t.phase);
        Hs[0] -= c * t.kx * t.kx;
        Hs[1] -= c * t.kx * t.ky;
        Hs[2] -= c * t.ky * t.kx;
        Hs[3] -= c * t.ky * t.ky;
    }
    return Hs;
}

Scenario make_gradient_graph(const GradientGraphSpec& spec) {
    if (!(spec.period > 0.0)) throw std::invalid_argument("period must be positive");
    if (spec.linear[0][1] != spec.linear[1][0]) {
        throw std::invalid_argument("Hessian part of a gradient graph must be symmetric");
    }
    const std::size_t res = spec.res;
    const double P = spec.period;
    const double h = P / static_cast<double>(res);
    const double w = kTwoPi / P;
    constexpr int N = 4;
    std::vector<double> F(res * res * N, 0.0);
    for (std::size_t j = 0; j < res; ++j) {
        for (std::size_t i = 0; i < res; ++i) {
            const double x = h * static_cast<double>(i);
            const double y = h * static_cast<double>(j);
            double g[2] = {spec.linear[0][0] * x + spec.linear[0][1] * y,
                           spec.linear[1][0] * x + spec.linear[1][1] * y};
            for (const auto& t : spec.potential) {
                const double s = t.amplitude * w * std::sin(w * (t.kx * x + t.ky * y) + t.phase);
                g[0] -= s * t.kx;
                g[1] -= s * t.ky;
            }
            double* p = F.data() + (i + res * j) * N;
            p[0] = x;
            p[1] = y;
            p[2] = g[0];
            p[3] = g[1];
        }
    }
    Scenario sc;
    sc.spec = spec;
    sc.initial = Immersion(ParameterGrid::surface(res, res, h, h), N, std::move(F),
                           graph_periods(N, P, 0));
    sc.graph = GraphLayout{2, 2};
    sc.lagrangian_candidate = true;

    const auto geo = compute_geometry(sc.initial);
    const auto graph = graph_structure(sc.initial, geo, *sc.graph);
    if (!graph.graphical()) throw MarginViolated(0, 0.0, 0.0);
    const auto lag = lagrangian_angle(graph, sc.initial.grid());
    for (std::size_t node = 0; node < lag.cos_theta.size(); ++node) {
        if (!(lag.cos_theta[node] > 0.0)) throw PhaseMarginViolated(node, lag.cos_theta[node]);
    }
    sc.expect.stationary = spec.potential.empty();
    sc.expect.values.push_back({"initial_min_costheta", lag.min_cos_theta, Provenance::ByConstruction});
    sc.analogue_of = "Lagrangian graphs with cos(theta) > 0 stay Lagrangian with cos(theta) > 0";
    return sc;
}

std::array<double, 4> shear_jacobian(const ShearCompositionSpec& spec, double x, double y) {
    // D(S_x o S_y)(p) = DS_x(S_y(p)) DS_y(p)
    const double c = kTwoPi * spec.k2 * spec.eps2 * std::cos(kTwoPi * spec.k2 * x);
    const double y1 = y + spec.eps2 * std::sin(kTwoPi * spec.k2 * x);
    const double a = kTwoPi * spec.k1 * spec.eps1 * std::cos(kTwoPi * spec.k1 * y1);
    return {1.0 + a * c, a, c, 1.0};
}

Scenario make_shear_composition(const ShearCompositionSpec& spec) {
    if (spec.pad < 0) throw std::invalid_argument("pad must be >= 0");
    const std::size_t res = spec.res;
    const double h = 1.0 / static_cast<double>(res);
    const int N = 4 + spec.pad;
    std::vector<double> F(res * res * static_cast<std::size_t>(N), 0.0);
    for (std::size_t j = 0; j < res; ++j) {
        for (std::size_t i = 0; i < res; ++i) {
            const double x = h * static_cast<double>(i);
            const double y = h * static_cast<double>(j);
            const double y1 = y + spec.eps2 * std::sin(kTwoPi * spec.k2 * x);
            const double x1 = x + spec.eps1 * std::sin(kTwoPi * spec.k1 * y1);
            double* p = F.data() + (i + res * j) * N;
            p[0] = x;
            p[1] = y;
            p[2] = x1;
            p[3] = y1;
        }
    }
    Scenario sc;
    sc.spec = spec;
    sc.initial = Immersion(ParameterGrid::surface(res, res, h, h), N, std::move(F),
                           graph_periods(N, 1.0, spec.pad));
    sc.graph = GraphLayout{2, 2};
    require_graph_margin(sc.initial, *sc.graph, spec.margin);
    sc.expect.stationary = (spec.eps1 == 0.0 && spec.eps2 == 0.0);
    sc.expect.values = {
        {"det_Df", 1.0, Provenance::ByConstruction},
        {"terminal_min_eta1", 1.0, Provenance::IndependentOracle},
    };
    sc.analogue_of = "graphs of area-preserving maps stay area-preserving and deform to isometries";
    return sc;
}

Scenario make_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
    return std::visit(
        [seed](const auto& s) -> Scenario {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CircleSpec>) {
                return make_circle(s.r0, s.ambient_dim, s.res);
            } else if constexpr (std::is_same_v<T, EllipseSpec>) {
                return make_ellipse(s.a, s.b, s.ambient_dim, s.res);
            } else if constexpr (std::is_same_v<T, TorusGraphSpec>) {
                return make_torus_graph(s, seed);
            } else if constexpr (std::is_same_v<T, GradientGraphSpec>) {
                return make_gradient_graph(s);
            } else {
                return make_shear_composition(s);
            }
        },
        spec);
}

CurveShape curve_shape(const Immersion& imm, const GeometrySnapshot& geo) {
    const int N = imm.ambient_dim();
    CurveShape out;
    out.centroid.assign(static_cast<std::size_t>(N), 0.0);
    double wsum = 0.0;
    for (std::size_t node = 0; node < imm.node_count(); ++node) {
        const auto p = imm.point(node);
        const double w = geo.sqrt_det_g[node];
        for (int A = 0; A < N; ++A) out.centroid[A] += w * p[A];
        wsum += w;
    }
    for (auto& c : out.centroid) c /= wsum;
    double rmin = std::numeric_limits<double>::infinity();
    double rmax = 0.0;
    double rsum = 0.0;
    for (std::size_t node = 0; node < imm.node_count(); ++node) {
        const auto p = imm.point(node);
        double d2 = 0.0;
        for (int A = 0; A < N; ++A) d2 += (p[A] - out.centroid[A]) * (p[A] - out.centroid[A]);
        const double d = std::sqrt(d2);
        rmin = std::min(rmin, d);
        rmax = std::max(rmax, d);
        rsum += geo.sqrt_det_g[node] * d;
    }
    out.mean_radius = rsum / wsum;
    out.roundness = rmax / rmin;
    return out;
}

}  // namespace mcf
