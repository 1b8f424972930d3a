#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mcf/grid_geometry.hpp"

namespace mcft {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Closed curve sampled at phi_k = k h, h = 2 pi / res; `f` writes N coordinates.
inline mcf::Immersion sample_curve(std::size_t res, int N,
                                   const std::function<void(double, double*)>& f,
                                   double t = 0.0) {
    const double h = kTwoPi / static_cast<double>(res);
    std::vector<double> F(res * static_cast<std::size_t>(N), 0.0);
    for (std::size_t k = 0; k < res; ++k) f(h * static_cast<double>(k), F.data() + k * N);
    return mcf::Immersion(mcf::ParameterGrid::curve(res, h), N, std::move(F), {}, t);
}

inline mcf::Immersion circle(double r, std::size_t res, int N = 2, double cx = 0.0,
                             double cy = 0.0, double t = 0.0) {
    return sample_curve(
        res, N,
        [&](double phi, double* p) {
            p[0] = cx + r * std::cos(phi);
            p[1] = cy + r * std::sin(phi);
        },
        t);
}

// Surface over the unit-period torus [0,P)^2 with ambient periods P on the
// first `periodic_axes` axes; `f` writes N coordinates at (x, y).
inline mcf::Immersion sample_surface(std::size_t res, int N, double P, int periodic_axes,
                                     const std::function<void(double, double, double*)>& f) {
    const double h = P / static_cast<double>(res);
    std::vector<double> F(res * res * static_cast<std::size_t>(N), 0.0);
    for (std::size_t j = 0; j < res; ++j) {
        for (std::size_t i = 0; i < res; ++i) {
            f(h * static_cast<double>(i), h * static_cast<double>(j), F.data() + (i + res * j) * N);
        }
    }
    std::vector<double> periods(static_cast<std::size_t>(N), 0.0);
    for (int A = 0; A < periodic_axes; ++A) periods[static_cast<std::size_t>(A)] = P;
    return mcf::Immersion(mcf::ParameterGrid::surface(res, res, h, h), N, std::move(F),
                          std::move(periods));
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("mcf_tests_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace mcft
