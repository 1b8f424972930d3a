#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mcf/calibration_monitor.hpp"
#include "mcf/grid_geometry.hpp"

namespace mcf {

// How an expected value is known: it holds by construction, it was computed
// with an independent oracle (closed form, quadrature, ODE), or it is a
// published value.
enum class Provenance { ByConstruction, IndependentOracle, Literature };
std::string_view to_string(Provenance p);

struct Expectation {
    std::string name;
    double value = 0.0;
    Provenance provenance = Provenance::ByConstruction;
};

struct ScenarioExpectation {
    std::vector<Expectation> values;
    bool stationary = false;
    std::optional<double> find(std::string_view name) const;
};

// a * sin(2 pi (kx x + ky y) / period + phase) added to target component
// `component` (torus graphs) or a * cos(...) added to the potential
// (gradient graphs, where `component` is ignored).
struct FourierTerm {
    int component = 0;
    double amplitude = 0.0;
    int kx = 0;
    int ky = 0;
    double phase = 0.0;
};

using IntMatrix2 = std::array<std::array<int, 2>, 2>;

struct CircleSpec {
    double r0 = 1.0;
    int ambient_dim = 2;
    std::size_t res = 256;
};

struct EllipseSpec {
    double a = 2.0;
    double b = 1.0;
    int ambient_dim = 2;
    std::size_t res = 256;
};

struct TorusGraphSpec {
    IntMatrix2 linear{{{0, 0}, {0, 0}}};
    std::vector<FourierTerm> perturbation;
    int random_modes = 0;            // extra seeded modes with |k| <= 2
    double random_amplitude = 0.0;
    double period = 1.0;
    std::size_t res = 64;
    int pad = 0;
    double margin = 0.01;            // required min *omega1
};

struct GradientGraphSpec {
    IntMatrix2 linear{{{0, 0}, {0, 0}}};  // symmetric Hessian part
    std::vector<FourierTerm> potential;
    double period = 1.0;
    std::size_t res = 64;
};

struct ShearCompositionSpec {
    double eps1 = 0.05;
    double eps2 = 0.05;
    int k1 = 1;
    int k2 = 1;
    std::size_t res = 64;
    int pad = 0;
    double margin = 0.01;            // required min *omega1
};

using ScenarioSpec =
    std::variant<CircleSpec, EllipseSpec, TorusGraphSpec, GradientGraphSpec, ShearCompositionSpec>;

struct Scenario {
    ScenarioSpec spec;
    Immersion initial;
    std::optional<GraphLayout> graph;
    bool lagrangian_candidate = false;
    ScenarioExpectation expect;
    std::string analogue_of;
};

Scenario make_circle(double r0, int ambient_dim, std::size_t res);
Scenario make_ellipse(double a, double b, int ambient_dim = 2, std::size_t res = 256);
// Throws MarginViolated when min *omega1 < margin.
Scenario make_torus_graph(const TorusGraphSpec& spec, std::uint64_t seed = 0);
// Throws PhaseMarginViolated when cos(theta) <= 0 somewhere.
Scenario make_gradient_graph(const GradientGraphSpec& spec);
// f = S_x o S_y with S_x(x,y) = (x + eps1 sin(2 pi k1 y), y) and
// S_y(x,y) = (x, y + eps2 sin(2 pi k2 x)). Throws MarginViolated.
Scenario make_shear_composition(const ShearCompositionSpec& spec);

Scenario make_scenario(const ScenarioSpec& spec, std::uint64_t seed = 0);

// Closed-form Jacobian of the shear composition at (x, y), row-major.
std::array<double, 4> shear_jacobian(const ShearCompositionSpec& spec, double x, double y);
// Closed-form Hessian of the gradient-graph potential at (x, y), row-major.
std::array<double, 4> potential_hessian(const GradientGraphSpec& spec, double x, double y);

// Mean distance to the area-weighted centroid and max/min distance ratio of a
// curve; used for the radius law and the roundness audit.
struct CurveShape {
    std::vector<double> centroid;
    double mean_radius = 0.0;
    double roundness = 0.0;
};
CurveShape curve_shape(const Immersion& imm, const GeometrySnapshot& geo);

}  // namespace mcf
