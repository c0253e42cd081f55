#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "core.hpp"
#include "curvetrace.hpp"
#include "fields.hpp"
#include "quadrature.hpp"
#include "sheet.hpp"
#include "stationarity.hpp"
#include "test_functions.hpp"

namespace stharm {

/// A support curve with the sampled line density at each vertex. The density is the jump
/// of the normal derivative, with the normal pointing from the lower-labelled side to the
/// higher-labelled side (region order of the partition).
struct DensityCurve {
    TracedCurve curve;
    std::vector<double> density;
};

struct Atom {
    cplx point;
    double weight;
};

struct VorticityMeasure {
    std::vector<DensityCurve> curves;
    std::vector<Atom> atoms;

    bool empty() const { return curves.empty() && atoms.empty(); }
};

/// <Delta h, phi> = -int grad h . grad phi.
template <ScalarField F>
double laplacian_pairing(const F& h, const TestBump& phi, double quad_tol = 1e-8) {
    if (!h.domain().contains_disk(phi.center(), phi.radius()))
        throw Error(ErrorCode::OutOfDomain, "bump support leaves the field's domain");
    auto f = [&](cplx z) -> std::array<double, 1> {
        if (!phi.in_support(z)) return {0.0};
        try {
            return {-dot(h.eval_unchecked(z).grad, phi.gradient(z))};
        } catch (const Error& e) {
            if (e.code() == ErrorCode::AtVortex) return {0.0};
            throw;
        }
    };
    QuadOptions opt;
    opt.abs_tol = quad_tol;
    return integrate_2d<1>(f, detail::interface_label(h), phi.bounding_box(), opt)[0];
}

/// Jump (grad h+ - grad h-) . nu at every vertex of an interface curve.
template <class Base>
std::vector<double> line_density(const SheetField<Base>& h, const TracedCurve& curve) {
    const double off = 2.0 * interface_tolerance(h.domain());
    std::vector<double> out;
    out.reserve(curve.size());
    bool any = false;
    for (std::size_t k = 0; k < curve.size(); ++k) {
        const cplx z = curve.points[k];
        cplx nu = to_cplx(curve.normals[k]);
        cplx zm = z - off * nu, zp = z + off * nu;
        const int lm = h.label(zm), lp = h.label(zp);
        if (lm == lp) {
            out.push_back(0.0);
            continue;
        }
        any = true;
        if (lm > lp) {
            nu = -nu;
            std::swap(zm, zp);
        }
        const Vec2 jump = h.one_sided(z, zp).grad - h.one_sided(z, zm).grad;
        out.push_back(dot(jump, to_vec(nu)));
    }
    if (!any) throw Error(ErrorCode::NotAnInterface, "curve does not separate two sides of the field");
    return out;
}

/// Support curves and their densities; curves with vanishing density are dropped.
template <class Base>
VorticityMeasure measure_reconstruct(const SheetField<Base>& h, double step = 0.0) {
    VorticityMeasure mu;
    for (auto& c : seed_curves_from_support(h, step)) {
        std::vector<double> lam;
        try {
            lam = line_density(h, c);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::NotAnInterface) continue;
            throw;
        }
        if (std::none_of(lam.begin(), lam.end(), [](double v) { return v != 0.0; })) continue;
        mu.curves.push_back({std::move(c), std::move(lam)});
    }
    return mu;
}

/// Atoms 2 pi d_i / M at the vortices.
inline VorticityMeasure measure_reconstruct(const LogPotential& u) {
    VorticityMeasure mu;
    for (std::size_t i = 0; i < u.config().size(); ++i)
        mu.atoms.push_back({u.config().position(i), 2 * pi * u.config().degree(i) / u.mass()});
    return mu;
}

namespace detail {

// Cubic Lagrange interpolation in arclength through four vertices around a segment. Where the
// density vanishes at a curve end (a branch point) it follows a power law fitted to the next
// two vertices, and the end segment is integrated with nodes graded towards the end.
class CurveInterpolant {
public:
    explicit CurveInterpolant(const DensityCurve& c) : c_(c) {
        const std::size_t n = c_.curve.size();
        if (n >= 6) {
            head_ = fit_end(0, 1, 2);
            tail_ = fit_end(n - 1, n - 2, n - 3);
        }
    }

    std::size_t segments() const { return c_.curve.size() < 2 ? 0 : c_.curve.size() - 1; }
    double s0(std::size_t k) const { return c_.curve.arclength[k]; }
    double s1(std::size_t k) const { return c_.curve.arclength[k + 1]; }

    struct Sample {
        cplx point;
        double speed;
        double density;
    };

    Sample at(std::size_t seg, double s) const {
        const std::size_t n = c_.curve.size();
        const auto& S = c_.curve.arclength;
        cplx p = 0.0, dp = 0.0;
        const auto geo = stencil(seg, 0, n);
        for (std::size_t i = 0; i < geo.m; ++i) {
            const auto [l, dl] = lagrange(geo, i, s);
            p += l * c_.curve.points[geo.j0 + i];
            dp += dl * c_.curve.points[geo.j0 + i];
        }
        // density / end weight is smooth, so it is interpolated away from the singular ends
        const auto den = stencil(seg, head_ ? 1 : 0, tail_ ? n - 1 : n);
        double lam = 0.0;
        for (std::size_t i = 0; i < den.m; ++i)
            lam += lagrange(den, i, s).first * c_.density[den.j0 + i] / end_weight(S[den.j0 + i]);
        return {p, std::abs(dp), lam * end_weight(s)};
    }

    /// Gauss nodes on [a, b] inside segment seg, passed as f(sample, weight * speed).
    template <class F>
    void nodes(std::size_t seg, double a, double b, F&& f) const {
        if (b <= a) return;
        const GaussRule& g = gauss_legendre(8);
        const PowerEnd* e = end_for(seg);
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            const double u = 0.5 * (1.0 + g.nodes[i]);
            double s, w;
            if (e) {
                // s = end +- d with d = d0 + (d1 - d0) u^2
                const double d0 = std::abs(a - e->s_end), d1 = std::abs(b - e->s_end);
                const double dlo = std::min(d0, d1), dhi = std::max(d0, d1);
                const double d = dlo + (dhi - dlo) * u * u;
                s = e->s_end + (b > e->s_end ? d : -d);
                w = 0.5 * g.weights[i] * 2.0 * u * (dhi - dlo);
            } else {
                s = a + (b - a) * u;
                w = 0.5 * g.weights[i] * (b - a);
            }
            const Sample q = at(seg, s);
            f(q, w * q.speed);
        }
    }

private:
    struct PowerEnd {
        std::size_t segment;
        double s_end, alpha;
    };

    struct Stencil {
        std::size_t j0, m;
    };

    Stencil stencil(std::size_t seg, std::size_t lo, std::size_t hi) const {
        const std::size_t m = std::min<std::size_t>(4, hi - lo);
        std::size_t j0 = seg > lo ? seg - 1 : lo;
        if (j0 + m > hi) j0 = hi - m;
        return {j0, m};
    }

    std::pair<double, double> lagrange(const Stencil& st, std::size_t i, double s) const {
        const auto& S = c_.curve.arclength;
        double l = 1.0, dl = 0.0;
        for (std::size_t j = 0; j < st.m; ++j) {
            if (j == i) continue;
            const double den = S[st.j0 + i] - S[st.j0 + j];
            const double fac = (s - S[st.j0 + j]) / den;
            dl = dl * fac + l / den;
            l *= fac;
        }
        return {l, dl};
    }

    double end_weight(double s) const {
        double w = 1.0;
        if (head_) w *= std::pow(std::abs(s - head_->s_end), head_->alpha);
        if (tail_) w *= std::pow(std::abs(s - tail_->s_end), tail_->alpha);
        return w;
    }

    std::optional<PowerEnd> fit_end(std::size_t end, std::size_t i1, std::size_t i2) const {
        const auto& S = c_.curve.arclength;
        const auto& lam = c_.density;
        if (lam[end] != 0.0 || lam[i1] == 0.0 || (lam[i1] > 0.0) != (lam[i2] > 0.0)) return std::nullopt;
        const double d1 = std::abs(S[i1] - S[end]), d2 = std::abs(S[i2] - S[end]);
        const double alpha = std::log(lam[i2] / lam[i1]) / std::log(d2 / d1);
        if (!(alpha > 0.0) || !std::isfinite(alpha)) return std::nullopt;
        return PowerEnd{std::min(end, i1), S[end], alpha};
    }

    const PowerEnd* end_for(std::size_t seg) const {
        if (head_ && head_->segment == seg) return &*head_;
        if (tail_ && tail_->segment == seg) return &*tail_;
        return nullptr;
    }

    const DensityCurve& c_;
    std::optional<PowerEnd> head_, tail_;
};

template <class F>
void for_each_curve_node(const DensityCurve& c, F&& f) {
    const CurveInterpolant ip(c);
    for (std::size_t k = 0; k < ip.segments(); ++k) ip.nodes(k, ip.s0(k), ip.s1(k), f);
}

} // namespace detail

/// Sum over curves of the integral of phi * lambda ds, plus the atoms.
inline double pairing_from_measure(const VorticityMeasure& mu, const TestBump& phi) {
    double total = 0.0;
    for (const auto& c : mu.curves)
        detail::for_each_curve_node(c, [&](const detail::CurveInterpolant::Sample& q, double w) {
            total += w * phi.value(q.point) * q.density;
        });
    for (const auto& a : mu.atoms) total += a.weight * phi.value(a.point);
    return total;
}

struct MassSummary {
    double total = 0.0;
    double positive = 0.0;
    double negative = 0.0;
};

/// Total variation and its positive and negative parts inside a disk window.
inline MassSummary mass_and_sign(const VorticityMeasure& mu, const Domain& window) {
    MassSummary m;
    auto add = [&](double v) {
        m.total += std::abs(v);
        if (v > 0.0) m.positive += v;
        else m.negative -= v;
    };
    for (const auto& c : mu.curves) {
        const detail::CurveInterpolant ip(c);
        auto inside = [&](std::size_t k, double s) { return window.contains(ip.at(k, s).point, 1e-9); };
        for (std::size_t k = 0; k < ip.segments(); ++k) {
            double a = ip.s0(k), b = ip.s1(k);
            if (b <= a) continue;
            const bool ia = inside(k, a), ib = inside(k, b);
            if (!ia && !ib) continue;
            if (ia != ib) {
                double lo = a, hi = b;
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (inside(k, mid) == ia) lo = mid; else hi = mid;
                }
                if (ia) b = lo; else a = hi;
            }
            ip.nodes(k, a, b, [&](const detail::CurveInterpolant::Sample& q, double w) { add(w * q.density); });
        }
    }
    for (const auto& a : mu.atoms)
        if (window.contains(a.point, 1e-12)) add(a.weight);
    return m;
}

struct NonRadonReport {
    double window = 0.0;
    int count = 0;
    double variation = 0.0;
    std::vector<Atom> atoms;  // (1/n, jump of h')
    double omega_deviation = 0.0;
};

/// h' = +1 on (1/(n+1), 1/n) for even n and -1 for odd n, on (0, 1).
inline double non_radon_slope(double x) {
    const auto n = static_cast<long>(std::floor(1.0 / x));
    return n % 2 == 0 ? 1.0 : -1.0;
}

/// Atoms of h'' on (a, 1] for the one-dimensional field above.
inline NonRadonReport non_radon_demo(double a) {
    if (!(a > 0.0 && a < 0.5)) throw Error(ErrorCode::BadWindow, "window parameter must lie in (0, 1/2)");
    NonRadonReport r;
    r.window = a;
    for (long n = 2; 1.0 / static_cast<double>(n) > a; ++n) {
        const double x = 1.0 / static_cast<double>(n);
        const double left = 0.5 * (1.0 / static_cast<double>(n + 1) + x);
        const double right = 0.5 * (x + 1.0 / static_cast<double>(n - 1));
        const double jump = non_radon_slope(right) - non_radon_slope(left);
        r.atoms.push_back({cplx(x, 0.0), jump});
        r.variation += std::abs(jump);
        ++r.count;
        r.omega_deviation = std::max({r.omega_deviation, std::abs(non_radon_slope(left) * non_radon_slope(left) - 1.0),
                                      std::abs(non_radon_slope(right) * non_radon_slope(right) - 1.0)});
    }
    return r;
}

} // namespace stharm
