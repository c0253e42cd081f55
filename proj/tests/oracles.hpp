#pragma once

// Reference computations kept independent of the library's algorithms.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <stharm/core.hpp>
#include <stharm/test_functions.hpp>

namespace oracle {

using stharm::cplx;
using stharm::pi;

/// Central-difference gradient of a scalar function of z.
inline stharm::Vec2 gradient(const std::function<double(cplx)>& f, cplx z, double h = 1e-6) {
    return {(f(z + h) - f(z - h)) / (2 * h), (f(z + cplx(0, h)) - f(z - cplx(0, h))) / (2 * h)};
}

/// Composite Simpson rule on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Polar Simpson integral of f over the disk B(c, rho); fine for smooth compactly supported f.
inline double disk_integral(const std::function<double(cplx)>& f, cplx c, double rho, int nr = 400, int nt = 512) {
    return simpson(
        [&](double r) {
            double acc = 0.0;
            for (int k = 0; k < nt; ++k) acc += f(c + std::polar(r, 2 * pi * k / nt));
            return acc * (2 * pi / nt) * r;
        },
        0.0, rho, nr);
}

/// Straight-line integral of f over the segment from a to b against arclength.
inline double segment_integral(const std::function<double(cplx)>& f, cplx a, cplx b, int n = 4000) {
    return simpson([&](double t) { return f(a + t * (b - a)); }, 0.0, 1.0, n) * std::abs(b - a);
}

/// Sum_k a_k (z - c)^k by explicit powers.
inline cplx power_sum(const std::vector<cplx>& a, cplx c, cplx z) {
    cplx s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * std::pow(z - c, static_cast<double>(k));
    return s;
}

inline std::vector<cplx> random_coeffs(std::mt19937_64& rng, std::size_t n, double decay = 0.5) {
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<cplx> a(n);
    double s = 1.0;
    for (auto& c : a) {
        c = cplx(N(rng), N(rng)) * s;
        s *= decay;
    }
    return a;
}

} // namespace oracle
