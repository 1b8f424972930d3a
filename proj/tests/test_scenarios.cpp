#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "doctest.h"
#include "mcf/calibration_monitor.hpp"
#include "mcf/errors.hpp"
#include "mcf/flow_engine.hpp"
#include "mcf/scenarios.hpp"
#include "support.hpp"

using namespace mcf;

namespace {

void check_geometry_sane(const Scenario& sc) {
    sc.initial.grid().validate();
    const auto geo = compute_geometry(sc.initial);
    const int N = geo.N;
    for (std::size_t node = 0; node < geo.nodes; node += 7) {
        auto P = geo.P(node);
        double trace = 0.0;
        for (int A = 0; A < N; ++A) {
            trace += P[A * N + A];
            for (int B = 0; B < N; ++B) {
                CHECK(std::abs(P[A * N + B] - P[B * N + A]) < 1e-14);
                double pp = 0.0;
                for (int C = 0; C < N; ++C) pp += P[A * N + C] * P[C * N + B];
                CHECK(std::abs(pp - P[A * N + B]) < 1e-12);
            }
        }
        CHECK(trace == doctest::Approx(N - geo.n).epsilon(1e-12));
    }
}

GraphStructure initial_graph(const Scenario& sc) {
    const auto geo = compute_geometry(sc.initial);
    return graph_structure(sc.initial, geo, *sc.graph);
}

GradientGraphSpec cosine_potential(double eps, std::size_t res) {
    GradientGraphSpec spec;
    spec.potential = {FourierTerm{0, eps, 1, 0, 0.0}};
    spec.res = res;
    return spec;
}

double max_theta_error(double eps, std::size_t res) {
    auto sc = make_gradient_graph(cosine_potential(eps, res));
    auto lag = lagrangian_angle(initial_graph(sc), sc.initial.grid());
    double err = 0.0;
    for (std::size_t node = 0; node < lag.theta.size(); ++node) {
        const double x = sc.initial.point(node)[0];
        const double exact = std::atan(-4.0 * mcft::kPi * mcft::kPi * eps * std::cos(mcft::kTwoPi * x));
        err = std::max(err, std::abs(lag.theta[node] - exact));
    }
    return err;
}

TorusGraphSpec mixed_identity(std::size_t res) {
    TorusGraphSpec spec;
    spec.linear = {{{1, 0}, {0, 1}}};
    spec.perturbation = {FourierTerm{0, 0.05, 1, 1, 0.0}, FourierTerm{1, 0.05, 1, -1, 0.3}};
    spec.res = res;
    return spec;
}

}  // namespace

TEST_SUITE("scenarios") {

TEST_CASE("circle expectations") {
    auto sc = make_circle(1.0, 2, 64);
    CHECK(*sc.expect.find("extinction_time") == 0.5);
    CHECK(*sc.expect.find("type_I_constant") == 0.5);
    CHECK(*sc.expect.find("initial_radius") == 1.0);
    CHECK_FALSE(sc.expect.find("no_such_value").has_value());
    CHECK(*make_circle(2.0, 2, 64).expect.find("extinction_time") == 2.0);
    for (const auto& e : sc.expect.values) {
        if (e.name == "initial_radius") CHECK(e.provenance == Provenance::ByConstruction);
        else CHECK(e.provenance == Provenance::IndependentOracle);
    }
    CHECK_FALSE(sc.graph.has_value());
    CHECK_FALSE(sc.analogue_of.empty());
    check_geometry_sane(sc);
}

TEST_CASE("circle in R^5 lies in the first plane") {
    auto sc = make_circle(1.5, 5, 64);
    CHECK(sc.initial.ambient_dim() == 5);
    for (std::size_t node = 0; node < sc.initial.node_count(); ++node) {
        auto p = sc.initial.point(node);
        CHECK(std::hypot(p[0], p[1]) == doctest::Approx(1.5).epsilon(1e-15));
        CHECK(p[2] == 0.0);
        CHECK(p[3] == 0.0);
        CHECK(p[4] == 0.0);
    }
    check_geometry_sane(sc);
    CHECK(*sc.expect.find("extinction_time") == *make_circle(1.5, 2, 64).expect.find("extinction_time"));
}

TEST_CASE("circle and ellipse reject bad parameters") {
    CHECK_THROWS_AS(make_circle(0.0, 2, 64), std::invalid_argument);
    CHECK_THROWS_AS(make_circle(-1.0, 2, 64), std::invalid_argument);
    CHECK_THROWS_AS(make_circle(1.0, 1, 64), std::invalid_argument);
    CHECK_THROWS_AS(make_circle(1.0, 2, 32), std::invalid_argument);
    CHECK_THROWS_AS(make_ellipse(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_ellipse(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("ellipse with equal axes is the circle") {
    auto e = make_ellipse(1.0, 1.0, 3, 128);
    auto c = make_circle(1.0, 3, 128);
    REQUIRE(e.initial.coords().size() == c.initial.coords().size());
    for (std::size_t k = 0; k < c.initial.coords().size(); ++k) {
        CHECK(e.initial.coords()[k] == doctest::Approx(c.initial.coords()[k]).epsilon(1e-15));
    }
    CHECK(*e.expect.find("extinction_time") == *c.expect.find("extinction_time"));
    CHECK(*make_ellipse(2.0, 1.0).expect.find("extinction_time") == 1.0);
    check_geometry_sane(make_ellipse(5.0, 1.0, 2, 128));
}

TEST_CASE("shear composition is exactly area preserving") {
    ShearCompositionSpec spec;
    spec.eps1 = 0.05;
    spec.eps2 = 0.05;
    auto sc = make_shear_composition(spec);
    double worst = 0.0;
    for (std::size_t node = 0; node < sc.initial.node_count(); ++node) {
        auto p = sc.initial.point(node);
        auto J = shear_jacobian(spec, p[0], p[1]);
        worst = std::max(worst, std::abs(J[0] * J[3] - J[1] * J[2] - 1.0));
    }
    CHECK(worst < 1e-14);
    CHECK(*sc.expect.find("det_Df") == 1.0);
    CHECK_FALSE(sc.expect.stationary);
    check_geometry_sane(sc);

    // discrete Jacobian: det within O(h^2) of 1
    auto det_defect = [&](std::size_t res) {
        spec.res = res;
        auto graph = initial_graph(make_shear_composition(spec));
        double defect = 0.0;
        for (std::size_t node = 0; node < graph.nodes(); ++node) {
            auto D = graph.Df(node);
            defect = std::max(defect, std::abs(D[0] * D[3] - D[1] * D[2] - 1.0));
        }
        return defect;
    };
    const double d32 = det_defect(32), d64 = det_defect(64);
    CAPTURE(d32);
    CAPTURE(d64);
    CHECK(d64 < 1e-3);
    CHECK(d32 / d64 > 3.8);
}

TEST_CASE("shear Jacobian closed form on random parameters") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-0.2, 0.2), X(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        ShearCompositionSpec spec;
        spec.eps1 = U(rng);
        spec.eps2 = U(rng);
        spec.k1 = 1 + trial % 3;
        spec.k2 = 1 + (trial / 3) % 3;
        auto J = shear_jacobian(spec, X(rng), X(rng));
        CHECK(std::abs(J[0] * J[3] - J[1] * J[2] - 1.0) < 1e-14);
    }
}

TEST_CASE("shear with zero amplitude is the stationary identity graph") {
    ShearCompositionSpec spec;
    spec.eps1 = 0.0;
    spec.eps2 = 0.0;
    auto sc = make_shear_composition(spec);
    CHECK(sc.expect.stationary);
    const auto geo = compute_geometry(sc.initial);
    CHECK(geo.sup_norm_A2() == 0.0);
    CHECK(geo.sup_norm_H() == 0.0);
}

TEST_CASE("shear margin") {
    ShearCompositionSpec spec;
    spec.eps1 = 1.0;
    spec.eps2 = 1.0;
    spec.k1 = 3;
    spec.k2 = 3;
    CHECK_THROWS_AS(make_shear_composition(spec), MarginViolated);
    spec.eps1 = 0.4;
    spec.eps2 = 0.4;
    spec.k1 = 2;
    spec.k2 = 2;
    CHECK_NOTHROW(make_shear_composition(spec));
    spec.margin = 0.1;
    CHECK_THROWS_AS(make_shear_composition(spec), MarginViolated);
    spec.pad = -1;
    CHECK_THROWS_AS(make_shear_composition(spec), std::invalid_argument);
}

TEST_CASE("construction margins agree with the monitors") {
    ShearCompositionSpec shear;
    shear.eps1 = 0.08;
    shear.eps2 = 0.06;
    shear.res = 32;
    auto sc = make_shear_composition(shear);
    const double mu = calibration_state(initial_graph(sc)).min_mu;
    // the margin check and calibration_state share one code path, so the
    // boundary is exact
    shear.margin = mu;
    CHECK_NOTHROW(make_shear_composition(shear));
    shear.margin = std::nextafter(mu, 1.0);
    CHECK_THROWS_AS(make_shear_composition(shear), MarginViolated);

    TorusGraphSpec torus;
    torus.perturbation = {FourierTerm{0, 0.1, 1, 0, 0.0}, FourierTerm{1, 0.07, 0, 2, 1.0}};
    torus.res = 32;
    auto tg = make_torus_graph(torus);
    const double tmu = calibration_state(initial_graph(tg)).min_mu;
    torus.margin = tmu;
    CHECK_NOTHROW(make_torus_graph(torus));
    torus.margin = std::nextafter(tmu, 1.0);
    CHECK_THROWS_AS(make_torus_graph(torus), MarginViolated);

    auto gg = make_gradient_graph(cosine_potential(0.01, 32));
    auto lag = lagrangian_angle(initial_graph(gg), gg.initial.grid());
    CHECK(*gg.expect.find("initial_min_costheta") == lag.min_cos_theta);
    auto series = run_flow(gg, [] { StepPolicy p; p.t_max = 1e-4; return p; }(),
                           MonitorSet{false, true, false, {}}).series;
    CHECK(series.column(columns::kMinCosTheta)[0] == lag.min_cos_theta);
}

TEST_CASE("gradient graph of zero potential has zero phase") {
    GradientGraphSpec spec;
    spec.res = 32;
    auto sc = make_gradient_graph(spec);
    CHECK(sc.lagrangian_candidate);
    CHECK(sc.expect.stationary);
    auto lag = lagrangian_angle(initial_graph(sc), sc.initial.grid());
    for (double th : lag.theta) CHECK(th == 0.0);
    CHECK(lag.min_cos_theta == 1.0);
    CHECK(lag.symmetry_defect == 0.0);
}

TEST_CASE("rank one potential matches the one-variable phase") {
    const double e32 = max_theta_error(0.01, 32);
    const double e64 = max_theta_error(0.01, 64);
    CHECK(e64 < 1e-3);
    CHECK(e32 / e64 > 3.9);
    check_geometry_sane(make_gradient_graph(cosine_potential(0.01, 32)));
}

TEST_CASE("diagonal Hessian phase") {
    for (double c : {-0.7, -0.2, 0.0, 0.1, 0.45, 3.0}) {
        const double Df[4] = {2.0 * c, 0.0, 0.0, 2.0 * c};
        const double exact = 2.0 * std::atan(2.0 * c);
        auto z = holomorphic_volume_phase(Df, 2);
        CHECK(std::abs(std::remainder(std::arg(z) - exact, 2.0 * mcft::kPi)) < 1e-14);
    }
    // integer Hessian parts: eigenvalues +-1 cancel
    for (IntMatrix2 L : {IntMatrix2{{{1, 0}, {0, -1}}}, IntMatrix2{{{0, 1}, {1, 0}}}}) {
        GradientGraphSpec spec;
        spec.linear = L;
        spec.res = 32;
        auto sc = make_gradient_graph(spec);
        auto lag = lagrangian_angle(initial_graph(sc), sc.initial.grid());
        CHECK(mcft::max_abs(lag.theta) < 1e-15);
    }
}

TEST_CASE("gradient graph preconditions") {
    GradientGraphSpec spec;
    spec.res = 32;
    spec.linear = {{{1, 0}, {0, 1}}};  // theta = pi/2
    CHECK_THROWS_AS(make_gradient_graph(spec), PhaseMarginViolated);
    spec.linear = {{{0, 1}, {0, 0}}};
    CHECK_THROWS_AS(make_gradient_graph(spec), std::invalid_argument);
    spec.linear = {{{0, 0}, {0, 0}}};
    spec.period = 0.0;
    CHECK_THROWS_AS(make_gradient_graph(spec), std::invalid_argument);
}

TEST_CASE("gradient graph symmetry defect is second order") {
    auto defect = [](std::size_t res) {
        GradientGraphSpec spec;
        spec.potential = {FourierTerm{0, 0.01, 1, 1, 0.2}, FourierTerm{0, 0.005, 2, -1, 0.0}};
        spec.res = res;
        auto sc = make_gradient_graph(spec);
        return lagrangian_angle(initial_graph(sc), sc.initial.grid()).symmetry_defect;
    };
    // The cross derivatives of a sampled gradient differ only through the
    // stencil; the exact Hessian is symmetric.
    const double d32 = defect(32), d64 = defect(64);
    CAPTURE(d32);
    CAPTURE(d64);
    CHECK(d64 < 5e-3);
    CHECK(d32 / d64 > 3.8);
}

TEST_CASE("linear torus graph is stationary") {
    TorusGraphSpec spec;
    spec.linear = {{{1, 0}, {0, 1}}};
    spec.res = 16;
    auto sc = make_torus_graph(spec);
    CHECK(sc.expect.stationary);
    CHECK(*sc.expect.find("sup_A2") == 0.0);
    check_geometry_sane(sc);
    auto traj = run_flow(sc, StepPolicy{});
    CHECK(traj.termination == Termination::Converged);
    CHECK(traj.steps == 0);
}

TEST_CASE("torus graph preconditions") {
    TorusGraphSpec spec;
    spec.linear = {{{1, 0}, {0, 1}}};
    spec.margin = 0.6;  // *omega1 = 1/2
    CHECK_THROWS_AS(make_torus_graph(spec), MarginViolated);
    spec.margin = 0.01;
    spec.linear = {{{3, 0}, {0, 3}}};
    spec.margin = 0.2;  // *omega1 = 1/10
    CHECK_THROWS_AS(make_torus_graph(spec), MarginViolated);
    spec = TorusGraphSpec{};
    spec.perturbation = {FourierTerm{2, 0.1, 1, 0, 0.0}};
    CHECK_THROWS_AS(make_torus_graph(spec), std::invalid_argument);
    spec = TorusGraphSpec{};
    spec.period = -1.0;
    CHECK_THROWS_AS(make_torus_graph(spec), std::invalid_argument);
}

TEST_CASE("seeded random torus modes are reproducible") {
    TorusGraphSpec spec;
    spec.random_modes = 4;
    spec.random_amplitude = 0.05;
    spec.res = 16;
    auto a = make_torus_graph(spec, 5);
    auto b = make_torus_graph(spec, 5);
    auto c = make_torus_graph(spec, 6);
    CHECK(std::equal(a.initial.coords().begin(), a.initial.coords().end(), b.initial.coords().begin()));
    CHECK_FALSE(std::equal(a.initial.coords().begin(), a.initial.coords().end(), c.initial.coords().begin()));
    CHECK_FALSE(a.expect.stationary);
}

TEST_CASE("padded graphs carry zero codimension padding") {
    TorusGraphSpec spec;
    spec.perturbation = {FourierTerm{1, 0.1, 0, 1, 0.0}};
    spec.res = 16;
    spec.pad = 2;
    auto sc = make_torus_graph(spec);
    CHECK(sc.initial.ambient_dim() == 6);
    CHECK(sc.initial.periods() == std::vector<double>{1.0, 1.0, 1.0, 1.0, 0.0, 0.0});
    for (std::size_t node = 0; node < sc.initial.node_count(); ++node) {
        CHECK(sc.initial.point(node)[4] == 0.0);
        CHECK(sc.initial.point(node)[5] == 0.0);
    }
    check_geometry_sane(sc);
}

TEST_CASE("constant-map analogue converges") {
    for (std::size_t res : {24u, 32u}) {
        TorusGraphSpec spec;
        spec.perturbation = {FourierTerm{0, 0.1, 1, 0, 0.0}, FourierTerm{1, 0.1, 1, 1, 0.5}};
        spec.res = res;
        auto sc = make_torus_graph(spec);
        auto traj = run_flow(sc, StepPolicy{});
        CAPTURE(res);
        CHECK(traj.termination == Termination::Converged);
        auto cal = calibration_state(graph_structure(traj.final_snapshot().state,
                                                     compute_geometry(traj.final_snapshot().state),
                                                     *sc.graph));
        CHECK(cal.min_mu >= 0.99);
        auto supA = traj.series.column(columns::kSupA2);
        CHECK(supA.back() < 1e-8 * supA.front());
    }
}

TEST_CASE("perturbed identity graph relaxes to the linear graph") {
    for (std::size_t res : {24u, 32u}) {
        auto sc = make_torus_graph(mixed_identity(res));
        auto traj = run_flow(sc, StepPolicy{});
        CAPTURE(res);
        CHECK(traj.termination == Termination::Converged);
        CHECK(compute_geometry(traj.final_snapshot().state).sup_norm_H() < 1e-6);
        // the target factor tends to (x, y) up to a translation
        const auto& F = traj.final_snapshot().state;
        const auto p0 = F.point(0);
        const double c0 = p0[2] - p0[0], c1 = p0[3] - p0[1];
        for (std::size_t node = 0; node < F.node_count(); ++node) {
            auto p = F.point(node);
            CHECK(std::abs(F.minimal_image(2, p[2] - p[0] - c0)) < 1e-5);
            CHECK(std::abs(F.minimal_image(3, p[3] - p[1] - c1)) < 1e-5);
        }
    }
}

}  // TEST_SUITE
