#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <vector>

#include "core.hpp"

namespace stharm {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule by Newton iteration on P_n.
inline GaussRule compute_gauss_legendre(int n) {
    GaussRule g;
    g.nodes.resize(static_cast<std::size_t>(n));
    g.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) { p1 = x; p0 = 1.0; }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        g.nodes[lo] = -x;
        g.nodes[hi] = x;
        g.weights[lo] = w;
        g.weights[hi] = w;
    }
    return g;
}

/// Cached rule; thread safe.
inline const GaussRule& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

/// Composite Gauss-Legendre on [a, b] with `panels` equal panels of `n` nodes.
template <class F>
auto integrate_interval(F&& f, double a, double b, int n = 16, int panels = 1) {
    const GaussRule& g = gauss_legendre(n);
    using R = decltype(f(a));
    R acc{};
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        const double mid = lo + 0.5 * h;
        for (std::size_t i = 0; i < g.nodes.size(); ++i) acc = acc + (0.5 * h * g.weights[i]) * f(mid + 0.5 * h * g.nodes[i]);
    }
    return acc;
}

struct Rect {
    double x0, x1, y0, y1;
    double area() const { return (x1 - x0) * (y1 - y0); }
};

struct QuadOptions {
    double abs_tol = 1e-10;
    int max_depth = 16;
    std::size_t max_panels = 2'000'000;
    int initial_grid = 4;
};

struct QuadStats {
    std::size_t panels = 0;
    double unresolved = 0.0;  // error estimate left on panels stopped at max depth
};

namespace detail {

template <std::size_t N>
using Vals = std::array<double, N>;

template <std::size_t N>
Vals<N>& accumulate(Vals<N>& acc, const Vals<N>& v, double w) {
    for (std::size_t i = 0; i < N; ++i) acc[i] += w * v[i];
    return acc;
}

template <std::size_t N>
double max_abs_diff(const Vals<N>& a, const Vals<N>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < N; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline constexpr int kPanelOrder = 7;

template <std::size_t N, class F>
Vals<N> rect_rule(F& f, const Rect& r) {
    const GaussRule& g = gauss_legendre(kPanelOrder);
    const double hx = 0.5 * (r.x1 - r.x0), hy = 0.5 * (r.y1 - r.y0);
    const double cx = r.x0 + hx, cy = r.y0 + hy;
    Vals<N> acc{};
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        for (std::size_t j = 0; j < g.nodes.size(); ++j)
            accumulate(acc, f(cplx(cx + hx * g.nodes[i], cy + hy * g.nodes[j])), hx * hy * g.weights[i] * g.weights[j]);
    return acc;
}

// Collapsed (Duffy) tensor rule on the triangle abc.
template <std::size_t N, class F>
Vals<N> triangle_rule(F& f, cplx a, cplx b, cplx c) {
    const GaussRule& g = gauss_legendre(kPanelOrder);
    const cplx e1 = b - a, e2 = c - b;
    const double det = std::abs(e1.real() * e2.imag() - e1.imag() * e2.real());
    Vals<N> acc{};
    if (det == 0.0) return acc;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double u = 0.5 * (g.nodes[i] + 1.0);
        for (std::size_t j = 0; j < g.nodes.size(); ++j) {
            const double v = 0.5 * (g.nodes[j] + 1.0);
            const cplx z = a + u * e1 + u * v * e2;
            accumulate(acc, f(z), 0.25 * g.weights[i] * g.weights[j] * u * det);
        }
    }
    return acc;
}

template <std::size_t N, class F>
Vals<N> polygon_rule(F& f, const std::vector<cplx>& poly) {
    Vals<N> acc{};
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        const Vals<N> t = triangle_rule<N>(f, poly[0], poly[k], poly[k + 1]);
        accumulate(acc, t, 1.0);
    }
    return acc;
}

// Panel rule that splits along the chord of a single interface crossing the panel.
template <std::size_t N, class F, class L>
Vals<N> panel_rule(F& f, L& label, const Rect& r) {
    const double xm = 0.5 * (r.x0 + r.x1), ym = 0.5 * (r.y0 + r.y1);
    const std::array<cplx, 8> loop = {cplx(r.x0, r.y0), cplx(xm, r.y0), cplx(r.x1, r.y0), cplx(r.x1, ym),
                                      cplx(r.x1, r.y1), cplx(xm, r.y1), cplx(r.x0, r.y1), cplx(r.x0, ym)};
    std::array<int, 8> lab{};
    bool uniform = true;
    for (std::size_t k = 0; k < 8; ++k) {
        lab[k] = label(loop[k]);
        if (lab[k] != lab[0]) uniform = false;
    }
    if (uniform) return rect_rule<N>(f, r);

    std::vector<std::size_t> where;
    std::vector<cplx> cross;
    for (std::size_t k = 0; k < 8; ++k) {
        const std::size_t k1 = (k + 1) % 8;
        if (lab[k] == lab[k1]) continue;
        cplx lo = loop[k], hi = loop[k1];
        for (int it = 0; it < 60; ++it) {
            const cplx mid = 0.5 * (lo + hi);
            if (label(mid) == lab[k]) lo = mid; else hi = mid;
        }
        where.push_back(k);
        cross.push_back(0.5 * (lo + hi));
    }
    if (cross.size() != 2) return rect_rule<N>(f, r);

    std::vector<cplx> p1, p2;
    p1.push_back(cross[0]);
    for (std::size_t k = where[0] + 1; k <= where[1]; ++k) p1.push_back(loop[k]);
    p1.push_back(cross[1]);
    p2.push_back(cross[1]);
    for (std::size_t k = where[1] + 1; k <= where[0] + 8; ++k) p2.push_back(loop[k % 8]);
    p2.push_back(cross[0]);

    auto centroid = [](const std::vector<cplx>& p) {
        cplx c = 0.0;
        for (cplx z : p) c += z;
        return c / static_cast<double>(p.size());
    };
    if (label(centroid(p1)) != lab[where[0] + 1 < 8 ? where[0] + 1 : 0] ||
        label(centroid(p2)) != lab[(where[1] + 1) % 8])
        return rect_rule<N>(f, r);

    Vals<N> acc = polygon_rule<N>(f, p1);
    accumulate(acc, polygon_rule<N>(f, p2), 1.0);
    return acc;
}

template <std::size_t N, class F, class L>
Vals<N> adapt(F& f, L& label, const Rect& r, const Vals<N>& parent, double tol, int depth, const QuadOptions& opt,
              QuadStats& stats) {
    const double xm = 0.5 * (r.x0 + r.x1), ym = 0.5 * (r.y0 + r.y1);
    const std::array<Rect, 4> kids = {Rect{r.x0, xm, r.y0, ym}, Rect{xm, r.x1, r.y0, ym}, Rect{r.x0, xm, ym, r.y1},
                                      Rect{xm, r.x1, ym, r.y1}};
    std::array<Vals<N>, 4> q;
    Vals<N> sum{};
    for (std::size_t k = 0; k < 4; ++k) {
        q[k] = panel_rule<N>(f, label, kids[k]);
        accumulate(sum, q[k], 1.0);
    }
    stats.panels += 4;
    if (stats.panels > opt.max_panels)
        throw Error(ErrorCode::QuadratureNotConverged, "panel budget exhausted before reaching the tolerance");
    const double err = max_abs_diff(sum, parent);
    if (err <= tol) return sum;
    if (depth >= opt.max_depth) {
        stats.unresolved += err;
        return sum;
    }
    Vals<N> acc{};
    for (std::size_t k = 0; k < 4; ++k) accumulate(acc, adapt<N>(f, label, kids[k], q[k], 0.25 * tol, depth + 1, opt, stats), 1.0);
    return acc;
}

} // namespace detail

/// Adaptive 2-D quadrature of a vector-valued integrand over a rectangle.
/// Panels are Gauss-Legendre 7x7; a panel crossed by a single interface
/// (a change of `label`) is split along the chord between the crossings.
template <std::size_t N, class F, class L>
std::array<double, N> integrate_2d(F&& f, L&& label, const Rect& r, const QuadOptions& opt = {},
                                   QuadStats* stats_out = nullptr) {
    QuadStats stats;
    std::array<double, N> total{};
    const int g = std::max(1, opt.initial_grid);
    const double dx = (r.x1 - r.x0) / g, dy = (r.y1 - r.y0) / g;
    const double cell_tol = opt.abs_tol / (g * g);
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) {
            const Rect c{r.x0 + i * dx, r.x0 + (i + 1) * dx, r.y0 + j * dy, r.y0 + (j + 1) * dy};
            const auto q0 = detail::panel_rule<N>(f, label, c);
            detail::accumulate(total, detail::adapt<N>(f, label, c, q0, cell_tol, 0, opt, stats), 1.0);
        }
    if (stats.unresolved > opt.abs_tol)
        throw Error(ErrorCode::QuadratureNotConverged, "unresolved error " + std::to_string(stats.unresolved) + " above tolerance");
    if (stats_out) *stats_out = stats;
    return total;
}

/// Periodic trapezoid rule for a closed circle, spectrally accurate for smooth integrands.
/// f(z, unit_normal) is integrated against arclength.
template <class F>
auto integrate_circle(F&& f, cplx c, double r, int n) {
    using R = decltype(f(c, cplx(1.0, 0.0)));
    R acc{};
    const double w = 2 * pi * r / n;
    for (int k = 0; k < n; ++k) {
        const cplx nu = std::polar(1.0, 2 * pi * k / n);
        acc = acc + w * f(c + r * nu, nu);
    }
    return acc;
}

} // namespace stharm
