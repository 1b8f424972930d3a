#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace mcf {

inline constexpr double kDegeneracyThreshold = 1e-12;

// Uniform parameter grid with intrinsic dimension 1 or 2. Node index is
// i + sizes[0] * j (axis 0 fastest).
struct ParameterGrid {
    int dim = 1;
    std::array<std::size_t, 2> sizes{0, 1};
    std::array<double, 2> spacing{1.0, 1.0};
    std::array<bool, 2> periodic{true, true};

    static ParameterGrid curve(std::size_t nodes, double h);
    static ParameterGrid surface(std::size_t nx, std::size_t ny, double hx, double hy);

    std::size_t node_count() const { return sizes[0] * (dim == 2 ? sizes[1] : 1); }
    std::size_t index(std::size_t i, std::size_t j = 0) const { return i + sizes[0] * j; }
    std::array<std::size_t, 2> coords(std::size_t node) const {
        return {node % sizes[0], node / sizes[0]};
    }
    // Periodic neighbor of `node` displaced by `offset` along `axis`.
    std::size_t shift(std::size_t node, int axis, int offset) const;
    double cell_volume() const;
    double max_spacing() const;
    double min_spacing() const;

    // Throws std::invalid_argument unless dim in {1,2}, sizes >= 8, h > 0 and
    // every axis is periodic.
    void validate() const;
};

// Discretized map F from a periodic parameter grid into R^N (or a flat torus
// when ambient periods are set). Coordinates are node-major.
class Immersion {
public:
    Immersion() = default;
    Immersion(ParameterGrid grid, int ambient_dim, std::vector<double> coords,
              std::vector<double> periods = {}, double t = 0.0);

    const ParameterGrid& grid() const { return grid_; }
    int ambient_dim() const { return ambient_dim_; }
    int dim() const { return grid_.dim; }
    std::size_t node_count() const { return grid_.node_count(); }
    double time() const { return t_; }
    void set_time(double t) { t_ = t; }

    std::span<const double> coords() const { return coords_; }
    std::span<double> coords() { return coords_; }
    std::span<const double> point(std::size_t node) const {
        return {coords_.data() + node * static_cast<std::size_t>(ambient_dim_),
                static_cast<std::size_t>(ambient_dim_)};
    }
    std::span<double> point(std::size_t node) {
        return {coords_.data() + node * static_cast<std::size_t>(ambient_dim_),
                static_cast<std::size_t>(ambient_dim_)};
    }

    // Per-axis ambient period; 0 marks a non-periodic (Euclidean) axis. Empty
    // when the ambient space is plain R^N.
    const std::vector<double>& periods() const { return periods_; }
    bool has_periodic_ambient() const;

    // Minimal representative of a coordinate difference along `axis`.
    double minimal_image(int axis, double d) const;
    // out = F[to] - F[from] with minimal-image reduction on periodic axes.
    void displacement(std::size_t from, std::size_t to, std::span<double> out) const;

private:
    ParameterGrid grid_;
    int ambient_dim_ = 0;
    std::vector<double> coords_;
    std::vector<double> periods_;
    double t_ = 0.0;
};

// Number of independent second-derivative pairs (i <= j).
inline int pair_count(int n) { return n * (n + 1) / 2; }
// Pair slot for (i, j); valid for n <= 2.
inline int pair_index(int i, int j) { return i + j; }

// Differential-geometric data of an immersion at every node. Layouts:
//   frames       [node][i][A]
//   metric       [node][i][j]     (also inv_metric)
//   projector    [node][A][B]
//   second_form  [node][pair][A]
//   mean_curv    [node][A]
struct GeometrySnapshot {
    int n = 0;
    int N = 0;
    std::size_t nodes = 0;
    std::vector<double> frames;
    std::vector<double> metric;
    std::vector<double> inv_metric;
    std::vector<double> sqrt_det_g;
    std::vector<double> projector;
    std::vector<double> second_form;
    std::vector<double> mean_curv;
    std::vector<double> norm_A2;
    std::vector<double> norm_H2;

    std::span<const double> frame(std::size_t node, int i) const {
        return {frames.data() + (node * n + i) * N, static_cast<std::size_t>(N)};
    }
    double g(std::size_t node, int i, int j) const { return metric[(node * n + i) * n + j]; }
    double g_inv(std::size_t node, int i, int j) const {
        return inv_metric[(node * n + i) * n + j];
    }
    std::span<const double> P(std::size_t node) const {
        return {projector.data() + node * N * N, static_cast<std::size_t>(N * N)};
    }
    std::span<const double> A(std::size_t node, int i, int j) const {
        return {second_form.data() + (node * pair_count(n) + pair_index(i, j)) * N,
                static_cast<std::size_t>(N)};
    }
    std::span<const double> H(std::size_t node) const {
        return {mean_curv.data() + node * N, static_cast<std::size_t>(N)};
    }

    double sup_norm_A2() const;
    double sup_norm_H() const;
};

// Second-order central differences with periodic wraparound.
void tangent_frames(const Immersion& imm, GeometrySnapshot& geo);
// g_ij, g^ij and sqrt(det g); throws DegenerateMetric when det g <= eps_deg.
void induced_metric(GeometrySnapshot& geo, double eps_deg = kDegeneracyThreshold);
// P = I - g^kl dF_k dF_l^T.
void normal_projector(GeometrySnapshot& geo);
// A_ij = P d2F/dx^i dx^j (4-point cross stencil for mixed terms), H = g^ij A_ij,
// |A|^2 = g^ik g^jl <A_ij, A_kl>, |H|^2.
void second_fundamental_form(const Immersion& imm, GeometrySnapshot& geo);

// All of the above, reusing the storage of `geo`.
void compute_geometry(const Immersion& imm, GeometrySnapshot& geo,
                      double eps_deg = kDegeneracyThreshold);
GeometrySnapshot compute_geometry(const Immersion& imm, double eps_deg = kDegeneracyThreshold);

// Node-sum quadrature of sqrt(det g) times the cell volume.
double area(const Immersion& imm, const GeometrySnapshot& geo);
// Node-sum quadrature of |H|^2 dmu.
double integral_H2(const Immersion& imm, const GeometrySnapshot& geo);

// Divergence-form Laplace-Beltrami of a scalar field,
// (1/sqrt g) d_i (sqrt g g^ij d_j u), central differences on both stages.
std::vector<double> laplace_beltrami(const ParameterGrid& grid, const GeometrySnapshot& geo,
                                     std::span<const double> field);
// Ambient representation of grad_g u = g^ij d_j u dF/dx^i, [node][A].
std::vector<double> tangential_gradient(const ParameterGrid& grid, const GeometrySnapshot& geo,
                                        std::span<const double> field);

}  // namespace mcf
