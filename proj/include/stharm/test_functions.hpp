#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <span>
#include <utility>

#include "core.hpp"
#include "quadrature.hpp"

namespace stharm {

/// Row-major 2x2 matrix; for Jacobians, m[i][j] = d_j f_i.
struct Mat2 {
    std::array<std::array<double, 2>, 2> m{};
    double trace() const { return m[0][0] + m[1][1]; }
};

/// Frobenius pairing <A, B> = tr(A^T B).
inline double frobenius(const Mat2& a, const Mat2& b) {
    return a.m[0][0] * b.m[0][0] + a.m[0][1] * b.m[0][1] + a.m[1][0] * b.m[1][0] + a.m[1][1] * b.m[1][1];
}

/// phi(z) = exp(1 - 1/(1 - |z - c|^2 / rho^2)) inside B(c, rho), 0 outside.
class TestBump {
public:
    TestBump(cplx center, double rho) : c_(center), rho_(rho) {
        if (!(rho > 0.0)) throw Error(ErrorCode::InvalidField, "bump radius must be positive");
    }

    cplx center() const { return c_; }
    double radius() const { return rho_; }

    bool in_support(cplx z) const { return std::norm(z - c_) < rho_ * rho_; }

    double value(cplx z) const {
        const double s = std::norm(z - c_) / (rho_ * rho_);
        if (s >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - s));
    }

    Vec2 gradient(cplx z) const {
        const cplx w = z - c_;
        const double s = std::norm(w) / (rho_ * rho_);
        if (s >= 1.0) return {};
        const double q = 1.0 / (1.0 - s);
        const double f = std::exp(1.0 - q);
        // d phi / ds = -phi q^2, ds/dz = 2 w / rho^2
        const double k = -f * q * q * 2.0 / (rho_ * rho_);
        return {k * w.real(), k * w.imag()};
    }

    Rect bounding_box() const { return {c_.real() - rho_, c_.real() + rho_, c_.imag() - rho_, c_.imag() + rho_}; }

private:
    cplx c_;
    double rho_;
};

/// (a + bx (x - cx) + by (y - cy)) * phi(z): a bump, or a coordinate multiple of one.
struct TestComponent {
    TestBump bump;
    double a = 1.0;
    double bx = 0.0;
    double by = 0.0;

    double value(cplx z) const { return affine(z) * bump.value(z); }
    Vec2 gradient(cplx z) const { return affine(z) * bump.gradient(z) + bump.value(z) * Vec2{bx, by}; }

    double affine(cplx z) const {
        const cplx w = z - bump.center();
        return a + bx * w.real() + by * w.imag();
    }
};

/// Compactly supported vector field eta = (eta_1, eta_2) with closed-form Jacobian.
class TestVectorField {
public:
    TestVectorField(TestComponent first, TestComponent second) : c_{first, second} {}

    /// eta = dir * phi.
    static TestVectorField directional(const TestBump& b, Vec2 dir) {
        return {TestComponent{b, dir.x, 0.0, 0.0}, TestComponent{b, dir.y, 0.0, 0.0}};
    }

    /// eta = (z - c) * phi.
    static TestVectorField radial(const TestBump& b) {
        return {TestComponent{b, 0.0, 1.0, 0.0}, TestComponent{b, 0.0, 0.0, 1.0}};
    }

    const TestComponent& component(int i) const { return c_[static_cast<std::size_t>(i)]; }

    Vec2 value(cplx z) const { return {c_[0].value(z), c_[1].value(z)}; }

    Mat2 jacobian(cplx z) const {
        const Vec2 g0 = c_[0].gradient(z), g1 = c_[1].gradient(z);
        Mat2 j;
        j.m[0] = {g0.x, g0.y};
        j.m[1] = {g1.x, g1.y};
        return j;
    }

    double divergence(cplx z) const { return jacobian(z).trace(); }

    bool in_support(cplx z) const { return c_[0].bump.in_support(z) || c_[1].bump.in_support(z); }

    Rect bounding_box() const {
        const Rect a = c_[0].bump.bounding_box(), b = c_[1].bump.bounding_box();
        return {std::min(a.x0, b.x0), std::max(a.x1, b.x1), std::min(a.y0, b.y0), std::max(a.y1, b.y1)};
    }

    /// Smallest disk containing the support of both components.
    std::pair<cplx, double> support_disk() const {
        const TestBump& a = c_[0].bump;
        const TestBump& b = c_[1].bump;
        const double d = std::abs(a.center() - b.center());
        if (d + b.radius() <= a.radius()) return {a.center(), a.radius()};
        if (d + a.radius() <= b.radius()) return {b.center(), b.radius()};
        const double r = 0.5 * (d + a.radius() + b.radius());
        const cplx u = (b.center() - a.center()) / d;
        return {a.center() + (r - a.radius()) * u, r};
    }

private:
    std::array<TestComponent, 2> c_;
};

/// Random bump whose support fits inside B(center, radius) and stays at least
/// `keep_out` away from every point in `avoid`.
template <class Rng>
TestBump random_bump(Rng& rng, const Domain& dom, double min_rho, double max_rho,
                     std::span<const cplx> avoid = {}, double keep_out = 0.0) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const double rho = min_rho + (max_rho - min_rho) * U(rng);
        const double r = std::sqrt(U(rng)) * dom.outer;
        const cplx c = dom.center + std::polar(r, 2 * pi * U(rng));
        if (!dom.contains_disk(c, rho)) continue;
        bool ok = true;
        for (cplx p : avoid)
            if (std::abs(p - c) < rho + keep_out) ok = false;
        if (ok) return TestBump(c, rho);
    }
    throw Error(ErrorCode::InvalidField, "could not place a random bump in the domain");
}

/// Random vector field with affine multipliers on one bump.
template <class Rng>
TestVectorField random_vector_field(Rng& rng, const TestBump& b) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double s = 1.0 / b.radius();
    return {TestComponent{b, U(rng), s * U(rng), s * U(rng)}, TestComponent{b, U(rng), s * U(rng), s * U(rng)}};
}

} // namespace stharm
