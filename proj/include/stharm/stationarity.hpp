#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "core.hpp"
#include "fields.hpp"
#include "quadrature.hpp"
#include "test_functions.hpp"

namespace stharm {

/// T_h = 1/2 |grad h|^2 I - grad h (x) grad h (trace free, even in h).
inline Mat2 stress_tensor(const Vec2& g) {
    Mat2 t;
    const double xy = -g.x * g.y;
    t.m[0] = {0.5 * (g.y * g.y - g.x * g.x), xy};
    t.m[1] = {xy, 0.5 * (g.x * g.x - g.y * g.y)};
    return t;
}

/// z -> (d_x h - i d_y h)^2, evaluable on interfaces of sheet fields.
template <ScalarField F>
auto omega_of_field(F h) {
    return [h = std::move(h)](cplx z) { return h.omega(z); };
}

struct Circle {
    cplx center;
    double radius;
};

/// Axis-aligned rectangle with corners lo (bottom-left) and hi (top-right).
struct Rectangle {
    cplx lo;
    cplx hi;
};

using Contour = std::variant<Circle, Rectangle>;

namespace detail {

inline bool is_domain_error(ErrorCode c) {
    return c == ErrorCode::OutOfDomain || c == ErrorCode::OutOfDisk || c == ErrorCode::AtVortex;
}

} // namespace detail

/// |closed integral of omega dz| by Gauss-Legendre panels of 16 nodes.
template <class Omega>
double morera_residual(Omega&& omega, const Contour& contour, int n_points) {
    const int panels = std::max(1, n_points / 16);
    try {
        if (const auto* c = std::get_if<Circle>(&contour)) {
            auto f = [&](double t) {
                const cplx e = std::polar(1.0, t);
                return omega(c->center + c->radius * e) * (cplx(0.0, c->radius) * e);
            };
            return std::abs(integrate_interval(f, 0.0, 2 * pi, 16, panels));
        }
        const auto& r = std::get<Rectangle>(contour);
        const std::array<cplx, 5> v = {r.lo, cplx(r.hi.real(), r.lo.imag()), r.hi, cplx(r.lo.real(), r.hi.imag()), r.lo};
        cplx total = 0.0;
        const int per_edge = std::max(1, panels / 4);
        for (std::size_t k = 0; k < 4; ++k) {
            const cplx a = v[k], d = v[k + 1] - v[k];
            total += integrate_interval([&](double s) { return omega(a + s * d) * d; }, 0.0, 1.0, 16, per_edge);
        }
        return std::abs(total);
    } catch (const Error& e) {
        if (detail::is_domain_error(e.code())) throw Error(ErrorCode::ContourOutOfDomain, e.what());
        throw;
    }
}

struct Grid {
    cplx lo;
    cplx hi;
    int nx = 21;
    int ny = 21;
};

/// max over the grid of |d_x omega + i d_y omega| by centered differences.
template <class Omega>
double cauchy_riemann_residual(Omega&& omega, const Grid& g, double step) {
    double worst = 0.0;
    try {
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j) {
                const double x = g.lo.real() + (g.hi.real() - g.lo.real()) * i / std::max(1, g.nx - 1);
                const double y = g.lo.imag() + (g.hi.imag() - g.lo.imag()) * j / std::max(1, g.ny - 1);
                const cplx z(x, y);
                const cplx dx = (omega(z + step) - omega(z - step)) / (2 * step);
                const cplx dy = (omega(z + cplx(0.0, step)) - omega(z - cplx(0.0, step))) / (2 * step);
                worst = std::max(worst, std::abs(dx + cplx(0.0, 1.0) * dy));
            }
    } catch (const Error& e) {
        if (detail::is_domain_error(e.code())) throw Error(ErrorCode::GridOutOfDomain, e.what());
        throw;
    }
    return worst;
}

namespace detail {

template <ScalarField F>
void require_support_inside(const F& h, const TestVectorField& eta, ErrorCode code) {
    const auto [c, r] = eta.support_disk();
    if (!h.domain().contains_disk(c, r)) throw Error(code, "test function support leaves the field's domain");
}

template <ScalarField F>
auto interface_label(const F& h) {
    const Domain dom = h.domain();
    return [&h, dom](cplx z) { return dom.contains(z) ? h.label(z) : -1; };
}

} // namespace detail

/// Row-wise pairing (int <T_h, D eta_i>)_{i=1,2}: zero for stationary h.
template <ScalarField F>
Vec2 weakform_divT(const F& h, const TestVectorField& eta, double quad_tol = 1e-8) {
    detail::require_support_inside(h, eta, ErrorCode::OutOfDomain);
    auto f = [&](cplx z) -> std::array<double, 2> {
        if (!eta.in_support(z)) return {0.0, 0.0};
        const Mat2 t = stress_tensor(h.eval_unchecked(z).grad);
        const Mat2 j = eta.jacobian(z);
        return {t.m[0][0] * j.m[0][0] + t.m[0][1] * j.m[0][1], t.m[1][0] * j.m[1][0] + t.m[1][1] * j.m[1][1]};
    };
    QuadOptions opt;
    opt.abs_tol = quad_tol;
    const auto r = integrate_2d<2>(f, detail::interface_label(h), eta.bounding_box(), opt);
    return {r[0], r[1]};
}

/// Row-wise line integral of T_h . nu over the circle |z - center| = delta (trapezoid rule).
template <ScalarField F>
Vec2 flux_T(const F& h, cplx center, double delta, int n_points = 256) {
    if (!h.domain().contains_disk(center, delta)) throw Error(ErrorCode::CircleOutOfDomain, "flux circle leaves the domain");
    try {
        return integrate_circle(
            [&](cplx z, cplx nu) {
                const Mat2 t = stress_tensor(h.eval_unchecked(z).grad);
                return Vec2{t.m[0][0] * nu.real() + t.m[0][1] * nu.imag(), t.m[1][0] * nu.real() + t.m[1][1] * nu.imag()};
            },
            center, delta, n_points);
    } catch (const Error& e) {
        if (detail::is_domain_error(e.code())) throw Error(ErrorCode::CircleOutOfDomain, e.what());
        throw;
    }
}

/// d/dt E(h o phi_t) at t = 0 for phi_t = id + t eta and E = 1/2 int |grad|^2, by a centered
/// difference in t. The energy is integrated in displaced coordinates y = phi_t(x), where
/// the interfaces of h do not move.
template <ScalarField F>
double inner_variation_derivative(const F& h, const TestVectorField& eta, double t_step = 1e-4, double quad_tol = 1e-8) {
    detail::require_support_inside(h, eta, ErrorCode::DisplacedOutOfDomain);
    auto energy_density = [&](cplx y, const Vec2& g, double t) {
        cplx x = y;
        for (int it = 0; it < 50; ++it) {
            const cplx nx = y - t * to_cplx(eta.value(x));
            const bool done = std::abs(nx - x) <= 1e-17 * (1.0 + std::abs(y));
            x = nx;
            if (done) break;
        }
        const Mat2 j = eta.jacobian(x);
        const double a11 = 1.0 + t * j.m[0][0], a12 = t * j.m[0][1];
        const double a21 = t * j.m[1][0], a22 = 1.0 + t * j.m[1][1];
        const double det = a11 * a22 - a12 * a21;
        // (D phi_t)^T grad h(y)
        const double v1 = a11 * g.x + a21 * g.y;
        const double v2 = a12 * g.x + a22 * g.y;
        return 0.5 * (v1 * v1 + v2 * v2) / det;
    };
    auto f = [&](cplx y) -> std::array<double, 1> {
        if (!eta.in_support(y)) return {0.0};
        const Vec2 g = h.eval_unchecked(y).grad;
        return {(energy_density(y, g, t_step) - energy_density(y, g, -t_step)) / (2.0 * t_step)};
    };
    QuadOptions opt;
    opt.abs_tol = quad_tol;
    return integrate_2d<1>(f, detail::interface_label(h), eta.bounding_box(), opt)[0];
}

enum class PressureModel {
    Bernoulli,   // p = -1/2 |grad h|^2, the pressure of v = rot grad h for stationary h
    Rotational,  // p = +1/2 |grad h|^2, the pressure of the rigid rotation v = (-y, x)
};

/// int <v (x) v, D phi> + int p div phi for v = (-d_y h, d_x h).
template <ScalarField F>
double euler_weakform(const F& h, const TestVectorField& phi, double quad_tol = 1e-8,
                      PressureModel pressure = PressureModel::Bernoulli) {
    detail::require_support_inside(h, phi, ErrorCode::OutOfDomain);
    const double ps = pressure == PressureModel::Bernoulli ? -0.5 : 0.5;
    auto f = [&](cplx z) -> std::array<double, 1> {
        if (!phi.in_support(z)) return {0.0};
        const Vec2 g = h.eval_unchecked(z).grad;
        const Vec2 v{-g.y, g.x};
        const Mat2 j = phi.jacobian(z);
        const double vv = v.x * v.x * j.m[0][0] + v.x * v.y * (j.m[0][1] + j.m[1][0]) + v.y * v.y * j.m[1][1];
        return {vv + ps * dot(g, g) * j.trace()};
    };
    QuadOptions opt;
    opt.abs_tol = quad_tol;
    return integrate_2d<1>(f, detail::interface_label(h), phi.bounding_box(), opt)[0];
}

/// Axis-aligned rectangles inside the domain that keep `keep_out` away from the given points.
template <class Rng>
std::vector<Rectangle> random_rectangles(Rng& rng, const Domain& dom, int count, std::span<const cplx> avoid = {},
                                         double keep_out = 0.0) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<Rectangle> out;
    const double R = dom.outer;
    for (int attempt = 0; attempt < 100000 && static_cast<int>(out.size()) < count; ++attempt) {
        const cplx c = dom.center + std::polar(R * std::sqrt(U(rng)), 2 * pi * U(rng));
        const double w = R * (0.05 + 0.4 * U(rng)), hgt = R * (0.05 + 0.4 * U(rng));
        const Rectangle r{c - cplx(0.5 * w, 0.5 * hgt), c + cplx(0.5 * w, 0.5 * hgt)};
        const std::array<cplx, 4> corners = {r.lo, r.hi, cplx(r.lo.real(), r.hi.imag()), cplx(r.hi.real(), r.lo.imag())};
        bool ok = true;
        for (cplx q : corners) ok = ok && dom.contains(q) && std::abs(q - dom.center) < 0.99 * R;
        // the annulus hole must not intersect
        if (dom.is_annulus()) {
            const double cx = std::clamp(dom.center.real(), r.lo.real(), r.hi.real());
            const double cy = std::clamp(dom.center.imag(), r.lo.imag(), r.hi.imag());
            ok = ok && std::abs(cplx(cx, cy) - dom.center) > 1.01 * dom.inner;
        }
        for (cplx p : avoid) {
            const double cx = std::clamp(p.real(), r.lo.real() - keep_out, r.hi.real() + keep_out);
            const double cy = std::clamp(p.imag(), r.lo.imag() - keep_out, r.hi.imag() + keep_out);
            if (cx == p.real() && cy == p.imag()) ok = false;
        }
        if (ok) out.push_back(r);
    }
    return out;
}

/// Combined holomorphy evidence: Morera on several rectangles plus the Cauchy-Riemann grid.
struct HolomorphyEvidence {
    std::vector<double> morera;
    double cauchy_riemann = 0.0;
    double max_morera() const { return morera.empty() ? 0.0 : *std::max_element(morera.begin(), morera.end()); }
};

template <class Omega>
HolomorphyEvidence holomorphy_evidence(Omega&& omega, const std::vector<Rectangle>& rects, const Grid& grid,
                                       double step, int n_points = 512) {
    HolomorphyEvidence ev;
    for (const auto& r : rects) ev.morera.push_back(morera_residual(omega, Contour{r}, n_points));
    ev.cauchy_riemann = cauchy_riemann_residual(omega, grid, step);
    return ev;
}

} // namespace stharm
