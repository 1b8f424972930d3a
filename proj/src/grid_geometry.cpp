#include "mcf/grid_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "mcf/errors.hpp"

namespace mcf {

ParameterGrid ParameterGrid::curve(std::size_t nodes, double h) {
    ParameterGrid grid;
    grid.dim = 1;
    grid.sizes = {nodes, 1};
    grid.spacing = {h, 1.0};
    grid.validate();
    return grid;
}

ParameterGrid ParameterGrid::surface(std::size_t nx, std::size_t ny, double hx, double hy) {
    ParameterGrid grid;
    grid.dim = 2;
    grid.sizes = {nx, ny};
    grid.spacing = {hx, hy};
    grid.validate();
    return grid;
}

std::size_t ParameterGrid::shift(std::size_t node, int axis, int offset) const {
    const auto n0 = static_cast<long>(sizes[0]);
    const auto i = static_cast<long>(node % sizes[0]);
    if (axis == 0) {
        long k = i + offset;
        while (k < 0) k += n0;
        while (k >= n0) k -= n0;
        return node - static_cast<std::size_t>(i) + static_cast<std::size_t>(k);
    }
    const auto n1 = static_cast<long>(sizes[1]);
    long k = static_cast<long>(node / sizes[0]) + offset;
    while (k < 0) k += n1;
    while (k >= n1) k -= n1;
    return static_cast<std::size_t>(i + n0 * k);
}

double ParameterGrid::cell_volume() const {
    return dim == 2 ? spacing[0] * spacing[1] : spacing[0];
}

double ParameterGrid::max_spacing() const {
    return dim == 2 ? std::max(spacing[0], spacing[1]) : spacing[0];
}

double ParameterGrid::min_spacing() const {
    return dim == 2 ? std::min(spacing[0], spacing[1]) : spacing[0];
}

void ParameterGrid::validate() const {
    if (dim != 1 && dim != 2) {
        throw std::invalid_argument("intrinsic dimension must be 1 or 2");
    }
    for (int a = 0; a < dim; ++a) {
        if (sizes[a] < 8) throw std::invalid_argument("grid needs at least 8 nodes per axis");
        if (!(spacing[a] > 0.0)) throw std::invalid_argument("grid spacing must be positive");
        if (!periodic[a]) throw std::invalid_argument("only fully periodic grids are supported");
    }
}

Immersion::Immersion(ParameterGrid grid, int ambient_dim, std::vector<double> coords,
                     std::vector<double> periods, double t)
    : grid_(grid), ambient_dim_(ambient_dim), coords_(std::move(coords)),
      periods_(std::move(periods)), t_(t) {
    grid_.validate();
    if (ambient_dim_ < grid_.dim + 1) {
        throw std::invalid_argument("ambient dimension must exceed intrinsic dimension");
    }
    if (coords_.size() != grid_.node_count() * static_cast<std::size_t>(ambient_dim_)) {
        throw std::invalid_argument("coordinate array does not match grid and ambient dimension");
    }
    if (!periods_.empty()) {
        if (periods_.size() != static_cast<std::size_t>(ambient_dim_)) {
            throw std::invalid_argument("ambient periods must have one entry per ambient axis");
        }
        for (double p : periods_) {
            if (!(p >= 0.0) || !std::isfinite(p)) {
                throw std::invalid_argument("ambient periods must be finite and >= 0");
            }
        }
    }
    for (std::size_t k = 0; k < coords_.size(); ++k) {
        if (!std::isfinite(coords_[k])) {
            throw NonFinite(k / static_cast<std::size_t>(ambient_dim_));
        }
    }
}

bool Immersion::has_periodic_ambient() const {
    return std::any_of(periods_.begin(), periods_.end(), [](double p) { return p > 0.0; });
}

double Immersion::minimal_image(int axis, double d) const {
    if (periods_.empty()) return d;
    const double p = periods_[static_cast<std::size_t>(axis)];
    if (p <= 0.0 || std::abs(d) < 0.5 * p) return d;
    return d - p * std::nearbyint(d / p);
}

void Immersion::displacement(std::size_t from, std::size_t to, std::span<double> out) const {
    const auto a = point(from);
    const auto b = point(to);
    if (periods_.empty()) {
        for (int A = 0; A < ambient_dim_; ++A) out[A] = b[A] - a[A];
        return;
    }
    for (int A = 0; A < ambient_dim_; ++A) out[A] = minimal_image(A, b[A] - a[A]);
}

double GeometrySnapshot::sup_norm_A2() const {
    double s = 0.0;
    for (double v : norm_A2) s = std::max(s, v);
    return s;
}

double GeometrySnapshot::sup_norm_H() const {
    double s = 0.0;
    for (double v : norm_H2) s = std::max(s, v);
    return std::sqrt(s);
}

namespace {

void resize_snapshot(const Immersion& imm, GeometrySnapshot& geo) {
    const int n = imm.dim();
    const int N = imm.ambient_dim();
    const std::size_t nodes = imm.node_count();
    geo.n = n;
    geo.N = N;
    geo.nodes = nodes;
    geo.frames.resize(nodes * n * N);
    geo.metric.resize(nodes * n * n);
    geo.inv_metric.resize(nodes * n * n);
    geo.sqrt_det_g.resize(nodes);
    geo.projector.resize(nodes * N * N);
    geo.second_form.resize(nodes * pair_count(n) * N);
    geo.mean_curv.resize(nodes * N);
    geo.norm_A2.resize(nodes);
    geo.norm_H2.resize(nodes);
}

}  // namespace

void tangent_frames(const Immersion& imm, GeometrySnapshot& geo) {
    resize_snapshot(imm, geo);
    const auto& grid = imm.grid();
    const int n = geo.n;
    const int N = geo.N;
    std::vector<double> fwd(N), bwd(N);
    for (std::size_t node = 0; node < geo.nodes; ++node) {
        for (int i = 0; i < n; ++i) {
            imm.displacement(node, grid.shift(node, i, +1), fwd);
            imm.displacement(node, grid.shift(node, i, -1), bwd);
            const double inv2h = 1.0 / (2.0 * grid.spacing[i]);
            double* f = geo.frames.data() + (node * n + i) * N;
            for (int A = 0; A < N; ++A) f[A] = (fwd[A] - bwd[A]) * inv2h;
        }
    }
}

void induced_metric(GeometrySnapshot& geo, double eps_deg) {
    const int n = geo.n;
    const int N = geo.N;
    for (std::size_t node = 0; node < geo.nodes; ++node) {
        double* g = geo.metric.data() + node * n * n;
        double* gi = geo.inv_metric.data() + node * n * n;
        for (int i = 0; i < n; ++i) {
            const double* fi = geo.frames.data() + (node * n + i) * N;
            for (int j = i; j < n; ++j) {
                const double* fj = geo.frames.data() + (node * n + j) * N;
                double s = 0.0;
                for (int A = 0; A < N; ++A) s += fi[A] * fj[A];
                g[i * n + j] = s;
                g[j * n + i] = s;
            }
        }
        double det;
        if (n == 1) {
            det = g[0];
            if (!(det > eps_deg)) throw DegenerateMetric(node, det);
            gi[0] = 1.0 / det;
        } else {
            det = g[0] * g[3] - g[1] * g[2];
            if (!(det > eps_deg)) throw DegenerateMetric(node, det);
            gi[0] = g[3] / det;
            gi[3] = g[0] / det;
            gi[1] = -g[1] / det;
            gi[2] = gi[1];
        }
        geo.sqrt_det_g[node] = std::sqrt(det);
    }
}

void normal_projector(GeometrySnapshot& geo) {
    const int n = geo.n;
    const int N = geo.N;
    for (std::size_t node = 0; node < geo.nodes; ++node) {
        double* P = geo.projector.data() + node * N * N;
        const double* gi = geo.inv_metric.data() + node * n * n;
        const double* F = geo.frames.data() + node * n * N;
        for (int A = 0; A < N; ++A) {
            for (int B = A; B < N; ++B) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) {
                    for (int l = 0; l < n; ++l) s += gi[k * n + l] * F[k * N + A] * F[l * N + B];
                }
                const double v = (A == B ? 1.0 : 0.0) - s;
                P[A * N + B] = v;
                P[B * N + A] = v;
            }
        }
    }
}

void second_fundamental_form(const Immersion& imm, GeometrySnapshot& geo) {
    const auto& grid = imm.grid();
    const int n = geo.n;
    const int N = geo.N;
    const int pairs = pair_count(n);
    std::vector<double> d1(N), d2(N), d3(N), d4(N), dd(static_cast<std::size_t>(pairs) * N);
    for (std::size_t node = 0; node < geo.nodes; ++node) {
        for (int i = 0; i < n; ++i) {
            imm.displacement(node, grid.shift(node, i, +1), d1);
            imm.displacement(node, grid.shift(node, i, -1), d2);
            const double inv_h2 = 1.0 / (grid.spacing[i] * grid.spacing[i]);
            double* out = dd.data() + pair_index(i, i) * N;
            for (int A = 0; A < N; ++A) out[A] = (d1[A] + d2[A]) * inv_h2;
        }
        if (n == 2) {
            const std::size_t xp = grid.shift(node, 0, +1);
            const std::size_t xm = grid.shift(node, 0, -1);
            imm.displacement(node, grid.shift(xp, 1, +1), d1);
            imm.displacement(node, grid.shift(xp, 1, -1), d2);
            imm.displacement(node, grid.shift(xm, 1, +1), d3);
            imm.displacement(node, grid.shift(xm, 1, -1), d4);
            const double inv = 1.0 / (4.0 * grid.spacing[0] * grid.spacing[1]);
            double* out = dd.data() + pair_index(0, 1) * N;
            for (int A = 0; A < N; ++A) out[A] = (d1[A] - d2[A] - d3[A] + d4[A]) * inv;
        }

        const double* P = geo.projector.data() + node * N * N;
        double* Aout = geo.second_form.data() + node * pairs * N;
        for (int p = 0; p < pairs; ++p) {
            const double* v = dd.data() + p * N;
            double* a = Aout + p * N;
            for (int A = 0; A < N; ++A) {
                double s = 0.0;
                for (int B = 0; B < N; ++B) s += P[A * N + B] * v[B];
                a[A] = s;
            }
        }

        const double* gi = geo.inv_metric.data() + node * n * n;
        double* H = geo.mean_curv.data() + node * N;
        for (int A = 0; A < N; ++A) H[A] = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double w = gi[i * n + j];
                const double* a = Aout + pair_index(i, j) * N;
                for (int A = 0; A < N; ++A) H[A] += w * a[A];
            }
        }
        double h2 = 0.0;
        for (int A = 0; A < N; ++A) h2 += H[A] * H[A];
        geo.norm_H2[node] = h2;

        double a2 = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double* aij = Aout + pair_index(i, j) * N;
                for (int k = 0; k < n; ++k) {
                    for (int l = 0; l < n; ++l) {
                        const double w = gi[i * n + k] * gi[j * n + l];
                        if (w == 0.0) continue;
                        const double* akl = Aout + pair_index(k, l) * N;
                        double s = 0.0;
                        for (int A = 0; A < N; ++A) s += aij[A] * akl[A];
                        a2 += w * s;
                    }
                }
            }
        }
        geo.norm_A2[node] = a2;
    }
}

namespace {

// Single pass over the nodes with compile-time n and N. Performs the same
// floating-point operations in the same order as the four staged functions.
template <int n, int N>
void fused_geometry(const Immersion& imm, GeometrySnapshot& geo, double eps_deg) {
    constexpr int pairs = n * (n + 1) / 2;
    const auto& grid = imm.grid();
    const double* X = imm.coords().data();
    double period[N];
    for (int A = 0; A < N; ++A) {
        period[A] = imm.periods().empty() ? 0.0 : imm.periods()[static_cast<std::size_t>(A)];
    }
    auto disp = [&](std::size_t from, std::size_t to, double* out) {
        const double* a = X + from * N;
        const double* b = X + to * N;
        for (int A = 0; A < N; ++A) {
            const double d = b[A] - a[A];
            const double p = period[A];
            out[A] = (p <= 0.0 || std::abs(d) < 0.5 * p) ? d : d - p * std::nearbyint(d / p);
        }
    };

    const std::size_t nx = grid.sizes[0];
    const std::size_t ny = n == 2 ? grid.sizes[1] : 1;
    for (std::size_t node = 0; node < geo.nodes; ++node) {
        // Neighbor indices without the division in ParameterGrid::shift.
        const std::size_t i0 = node % nx;
        const std::size_t row = node - i0;
        const std::size_t j0 = row / nx;
        const std::size_t ip = i0 + 1 == nx ? 0 : i0 + 1;
        const std::size_t im = i0 == 0 ? nx - 1 : i0 - 1;
        const std::size_t rp = (j0 + 1 == ny ? 0 : j0 + 1) * nx;
        const std::size_t rm = (j0 == 0 ? ny - 1 : j0 - 1) * nx;

        double fwd[n][N], bwd[n][N];
        disp(node, row + ip, fwd[0]);
        disp(node, row + im, bwd[0]);
        if constexpr (n == 2) {
            disp(node, rp + i0, fwd[1]);
            disp(node, rm + i0, bwd[1]);
        }

        // Work in locals so the compiler can keep everything in registers.
        double F[n * N];
        for (int i = 0; i < n; ++i) {
            const double inv2h = 1.0 / (2.0 * grid.spacing[i]);
            for (int A = 0; A < N; ++A) F[i * N + A] = (fwd[i][A] - bwd[i][A]) * inv2h;
        }

        double g[n * n], gi[n * n];
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                double s = 0.0;
                for (int A = 0; A < N; ++A) s += F[i * N + A] * F[j * N + A];
                g[i * n + j] = s;
                g[j * n + i] = s;
            }
        }
        double det;
        if constexpr (n == 1) {
            det = g[0];
            if (!(det > eps_deg)) throw DegenerateMetric(node, det);
            gi[0] = 1.0 / det;
        } else {
            det = g[0] * g[3] - g[1] * g[2];
            if (!(det > eps_deg)) throw DegenerateMetric(node, det);
            gi[0] = g[3] / det;
            gi[3] = g[0] / det;
            gi[1] = -g[1] / det;
            gi[2] = gi[1];
        }

        double P[N * N];
        for (int A = 0; A < N; ++A) {
            for (int B = A; B < N; ++B) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) {
                    for (int l = 0; l < n; ++l) s += gi[k * n + l] * F[k * N + A] * F[l * N + B];
                }
                const double v = (A == B ? 1.0 : 0.0) - s;
                P[A * N + B] = v;
                P[B * N + A] = v;
            }
        }

        double dd[pairs][N];
        for (int i = 0; i < n; ++i) {
            const double inv_h2 = 1.0 / (grid.spacing[i] * grid.spacing[i]);
            for (int A = 0; A < N; ++A) dd[pair_index(i, i)][A] = (fwd[i][A] + bwd[i][A]) * inv_h2;
        }
        if constexpr (n == 2) {
            double d1[N], d2[N], d3[N], d4[N];
            disp(node, rp + ip, d1);
            disp(node, rm + ip, d2);
            disp(node, rp + im, d3);
            disp(node, rm + im, d4);
            const double inv = 1.0 / (4.0 * grid.spacing[0] * grid.spacing[1]);
            for (int A = 0; A < N; ++A) dd[1][A] = (d1[A] - d2[A] - d3[A] + d4[A]) * inv;
        }

        double Al[pairs * N];
        for (int q = 0; q < pairs; ++q) {
            for (int A = 0; A < N; ++A) {
                double s = 0.0;
                for (int B = 0; B < N; ++B) s += P[A * N + B] * dd[q][B];
                Al[q * N + A] = s;
            }
        }

        double H[N];
        for (int A = 0; A < N; ++A) H[A] = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double w = gi[i * n + j];
                const double* a = Al + pair_index(i, j) * N;
                for (int A = 0; A < N; ++A) H[A] += w * a[A];
            }
        }
        double h2 = 0.0;
        for (int A = 0; A < N; ++A) h2 += H[A] * H[A];

        double a2 = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double* aij = Al + pair_index(i, j) * N;
                for (int k = 0; k < n; ++k) {
                    for (int l = 0; l < n; ++l) {
                        const double w = gi[i * n + k] * gi[j * n + l];
                        if (w == 0.0) continue;
                        const double* akl = Al + pair_index(k, l) * N;
                        double s = 0.0;
                        for (int A = 0; A < N; ++A) s += aij[A] * akl[A];
                        a2 += w * s;
                    }
                }
            }
        }

        std::copy_n(F, n * N, geo.frames.data() + node * n * N);
        std::copy_n(g, n * n, geo.metric.data() + node * n * n);
        std::copy_n(gi, n * n, geo.inv_metric.data() + node * n * n);
        geo.sqrt_det_g[node] = std::sqrt(det);
        std::copy_n(P, N * N, geo.projector.data() + node * N * N);
        std::copy_n(Al, pairs * N, geo.second_form.data() + node * pairs * N);
        std::copy_n(H, N, geo.mean_curv.data() + node * N);
        geo.norm_H2[node] = h2;
        geo.norm_A2[node] = a2;
    }
}

template <int n, int... Ns>
bool dispatch_fused(const Immersion& imm, GeometrySnapshot& geo, double eps_deg,
                    std::integer_sequence<int, Ns...>) {
    return ((imm.ambient_dim() == Ns + n + 1 ? (fused_geometry<n, Ns + n + 1>(imm, geo, eps_deg), true)
                                              : false) ||
            ...);
}

}  // namespace

void compute_geometry(const Immersion& imm, GeometrySnapshot& geo, double eps_deg) {
    resize_snapshot(imm, geo);
    const bool fused = imm.dim() == 1
                           ? dispatch_fused<1>(imm, geo, eps_deg, std::make_integer_sequence<int, 6>{})
                           : dispatch_fused<2>(imm, geo, eps_deg, std::make_integer_sequence<int, 6>{});
    if (fused) return;
    tangent_frames(imm, geo);
    induced_metric(geo, eps_deg);
    normal_projector(geo);
    second_fundamental_form(imm, geo);
}

GeometrySnapshot compute_geometry(const Immersion& imm, double eps_deg) {
    GeometrySnapshot geo;
    compute_geometry(imm, geo, eps_deg);
    return geo;
}

double area(const Immersion& imm, const GeometrySnapshot& geo) {
    double s = 0.0;
    for (double v : geo.sqrt_det_g) s += v;
    return s * imm.grid().cell_volume();
}

double integral_H2(const Immersion& imm, const GeometrySnapshot& geo) {
    double s = 0.0;
    for (std::size_t node = 0; node < geo.nodes; ++node) s += geo.norm_H2[node] * geo.sqrt_det_g[node];
    return s * imm.grid().cell_volume();
}

std::vector<double> laplace_beltrami(const ParameterGrid& grid, const GeometrySnapshot& geo,
                                     std::span<const double> field) {
    const int n = geo.n;
    const std::size_t nodes = geo.nodes;
    if (field.size() != nodes) throw std::invalid_argument("field size does not match grid");

    // flux^i = sqrt(g) g^ij d_j u
    std::vector<double> flux(nodes * n);
    for (std::size_t node = 0; node < nodes; ++node) {
        double du[2] = {0.0, 0.0};
        for (int j = 0; j < n; ++j) {
            du[j] = (field[grid.shift(node, j, +1)] - field[grid.shift(node, j, -1)]) /
                    (2.0 * grid.spacing[j]);
        }
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += geo.g_inv(node, i, j) * du[j];
            flux[node * n + i] = geo.sqrt_det_g[node] * s;
        }
    }
    std::vector<double> out(nodes);
    for (std::size_t node = 0; node < nodes; ++node) {
        double div = 0.0;
        for (int i = 0; i < n; ++i) {
            div += (flux[grid.shift(node, i, +1) * n + i] - flux[grid.shift(node, i, -1) * n + i]) /
                   (2.0 * grid.spacing[i]);
        }
        out[node] = div / geo.sqrt_det_g[node];
    }
    return out;
}

std::vector<double> tangential_gradient(const ParameterGrid& grid, const GeometrySnapshot& geo,
                                        std::span<const double> field) {
    const int n = geo.n;
    const int N = geo.N;
    const std::size_t nodes = geo.nodes;
    if (field.size() != nodes) throw std::invalid_argument("field size does not match grid");
    std::vector<double> out(nodes * N, 0.0);
    for (std::size_t node = 0; node < nodes; ++node) {
        double du[2] = {0.0, 0.0};
        for (int j = 0; j < n; ++j) {
            du[j] = (field[grid.shift(node, j, +1)] - field[grid.shift(node, j, -1)]) /
                    (2.0 * grid.spacing[j]);
        }
        for (int i = 0; i < n; ++i) {
            double c = 0.0;
            for (int j = 0; j < n; ++j) c += geo.g_inv(node, i, j) * du[j];
            const auto f = geo.frame(node, i);
            for (int A = 0; A < N; ++A) out[node * N + A] += c * f[A];
        }
    }
    return out;
}

}  // namespace mcf
