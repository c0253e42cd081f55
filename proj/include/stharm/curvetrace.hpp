#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "core.hpp"
#include "fields.hpp"
#include "quadrature.hpp"
#include "sheet.hpp"

namespace stharm {

enum class EndpointTag { BoundaryHit, BranchPoint, ClosedLoop };

inline const char* to_string(EndpointTag t) {
    switch (t) {
    case EndpointTag::BoundaryHit: return "boundary-hit";
    case EndpointTag::BranchPoint: return "branch-point";
    case EndpointTag::ClosedLoop: return "closed-loop";
    }
    return "unknown";
}

/// Polyline on a level set {H = level}, oriented so that normal = tangent rotated by +pi/2
/// points along grad H.
struct TracedCurve {
    std::vector<cplx> points;
    std::vector<Vec2> tangents;
    std::vector<Vec2> normals;
    std::vector<double> arclength;
    double level = 0.0;
    double step = 0.0;
    EndpointTag start_tag = EndpointTag::BoundaryHit;
    EndpointTag end_tag = EndpointTag::BoundaryHit;

    std::size_t size() const { return points.size(); }
    double length() const { return arclength.empty() ? 0.0 : arclength.back(); }
};

/// Parity of the vanishing order of omega at the point: Even for critical points of a
/// harmonic H (omega = F'^2), Odd for half-integer branch points, RegularZeroOfH for
/// zeros of H with nonvanishing gradient.
enum class CriticalKind { Even, Odd, RegularZeroOfH };

inline const char* to_string(CriticalKind k) {
    switch (k) {
    case CriticalKind::Even: return "even";
    case CriticalKind::Odd: return "odd";
    case CriticalKind::RegularZeroOfH: return "regular-zero-of-H";
    }
    return "unknown";
}

struct CriticalPoint {
    cplx location;
    int order = 0;  // vanishing order of F' (or 2p - 2 for a branch point, as a power of omega's root)
    CriticalKind kind = CriticalKind::Even;
};

namespace detail {

// Horner evaluation of sum c_k (z - center)^k, without the disk check.
inline cplx poly_eval(std::span<const cplx> c, cplx center, cplx z) {
    const cplx w = z - center;
    cplx acc = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) acc = acc * w + c[k];
    return acc;
}

struct CriticalSearch {
    std::span<const cplx> d1;  // F'
    std::span<const cplx> d2;  // F''
    cplx center;
    double scale;

    cplx f(cplx z) const { return poly_eval(d1, center, z); }
    cplx df(cplx z) const { return poly_eval(d2, center, z); }

    // (1 / 2 pi i) of the integral of F''/F' along the segment a -> b.
    cplx edge_count(cplx a, cplx b) const {
        const cplx d = b - a;
        auto integrand = [&](double s) {
            const cplx z = a + s * d;
            const cplx v = f(z);
            if (std::abs(v) <= 1e-11 * scale)
                throw Error(ErrorCode::ZeroOnSubdivisionBoundary, "F' vanishes on a cell edge");
            return df(z) / v * d;
        };
        cplx prev = integrate_interval(integrand, 0.0, 1.0, 16, 4);
        for (int panels = 8; panels <= 2048; panels *= 2) {
            const cplx cur = integrate_interval(integrand, 0.0, 1.0, 16, panels);
            if (std::abs(cur - prev) <= 1e-9) return cur / cplx(0.0, 2 * pi);
            prev = cur;
        }
        throw Error(ErrorCode::ZeroOnSubdivisionBoundary, "edge integral does not settle");
    }

    int cell_count(cplx lo, double side) const {
        const std::array<cplx, 5> v = {lo, lo + side, lo + cplx(side, side), lo + cplx(0.0, side), lo};
        cplx total = 0.0;
        for (std::size_t k = 0; k < 4; ++k) total += edge_count(v[k], v[k + 1]);
        const double n = std::round(total.real());
        if (std::abs(total.real() - n) > 1e-3 || std::abs(total.imag()) > 1e-3)
            throw Error(ErrorCode::ZeroOnSubdivisionBoundary, "non-integer zero count on a cell");
        return static_cast<int>(n);
    }

    std::optional<cplx> polish(cplx z, int multiplicity, cplx lo, double side) const {
        for (int it = 0; it < 200; ++it) {
            const cplx d = df(z);
            const cplx v = f(z);
            if (v == 0.0) break;
            if (d == 0.0) return std::nullopt;
            const cplx dz = static_cast<double>(multiplicity) * v / d;
            z -= dz;
            if (std::abs(dz) <= 1e-15 * (1.0 + std::abs(z))) break;
        }
        const double m = 0.1 * side;
        if (z.real() < lo.real() - m || z.real() > lo.real() + side + m || z.imag() < lo.imag() - m ||
            z.imag() > lo.imag() + side + m)
            return std::nullopt;
        return z;
    }
};

} // namespace detail

/// (1 / 2 pi i) of the closed integral of F''/F' over the outer boundary (minus the inner one).
inline cplx argument_principle_count(const HarmonicField& H, const Domain& dom, int n = 4096) {
    const Series& d1 = H.derivative_series();
    const Series d2 = d1.derivative();
    auto loop = [&](double r) {
        cplx acc = 0.0;
        for (int k = 0; k < n; ++k) {
            const cplx e = std::polar(1.0, 2 * pi * (k + 0.5) / n);
            const cplx z = dom.center + r * e;
            const cplx v = detail::poly_eval(d1.coeffs(), d1.center(), z);
            if (v == 0.0) throw Error(ErrorCode::ZeroOnSubdivisionBoundary, "F' vanishes on the domain boundary");
            acc += detail::poly_eval(d2.coeffs(), d2.center(), z) / v * (cplx(0.0, r) * e) * (2 * pi / n);
        }
        return acc / cplx(0.0, 2 * pi);
    };
    cplx total = loop(dom.outer);
    if (dom.is_annulus()) total -= loop(dom.inner);
    return total;
}

/// Zeros of F' inside the domain with multiplicities, by argument-principle subdivision
/// on jittered square cells followed by Newton polishing.
inline std::vector<CriticalPoint> find_critical_points(const HarmonicField& H, const Domain& dom,
                                                       std::uint64_t seed = 0x5eed) {
    const Series& d1s = H.derivative_series();
    const Series d2s = d1s.derivative();
    double scale = 0.0;
    for (cplx a : d1s.coeffs()) scale = std::max(scale, std::abs(a));
    if (scale == 0.0) throw Error(ErrorCode::IdenticallyZero, "F' vanishes identically");
    bool nonconstant = false;
    for (std::size_t k = 1; k < d1s.coeffs().size(); ++k) nonconstant = nonconstant || d1s.coeffs()[k] != 0.0;
    if (!nonconstant) return {};

    const detail::CriticalSearch cs{d1s.coeffs(), d2s.coeffs(), d1s.center(), scale};
    const cplx audit = argument_principle_count(H, dom);
    const double audit_n = std::round(audit.real());
    if (std::abs(audit.real() - audit_n) > 1e-6 || std::abs(audit.imag()) > 1e-6)
        throw Error(ErrorCode::Inconclusive, "argument principle count on the domain boundary is not an integer");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double R = dom.outer;
    for (int attempt = 0; attempt < 16; ++attempt) {
        try {
            const double side = 2.0 * R * (1.02 + 0.03 * std::abs(U(rng)));
            const cplx lo = dom.center - cplx(0.5 * side, 0.5 * side) + 0.005 * R * cplx(U(rng), U(rng));
            struct Cell { cplx lo; double side; int count; };
            std::vector<Cell> todo{{lo, side, cs.cell_count(lo, side)}};
            std::vector<CriticalPoint> found;
            std::size_t budget = 200000;
            while (!todo.empty()) {
                if (budget-- == 0) throw Error(ErrorCode::Inconclusive, "subdivision budget exhausted");
                const Cell c = todo.back();
                todo.pop_back();
                if (c.count == 0) continue;
                const bool small = c.side <= 1e-5 * R;
                if (c.side <= 0.25 * R || small) {
                    const cplx start = c.lo + cplx(0.5 * c.side, 0.5 * c.side);
                    if (auto z = cs.polish(start, c.count, c.lo, c.side)) {
                        // a multiple zero must hold the whole count in a tiny box
                        const double box = 1e-3 * c.side;
                        bool whole = c.count == 1;
                        try {
                            whole = whole || cs.cell_count(*z - cplx(0.5 * box, 0.5 * box), box) == c.count;
                        } catch (const Error& e) {
                            if (e.code() != ErrorCode::ZeroOnSubdivisionBoundary) throw;
                        }
                        if (whole) {
                            found.push_back({*z, c.count, CriticalKind::Even});
                            continue;
                        }
                    }
                    if (small) {
                        found.push_back({start, c.count, CriticalKind::Even});
                        continue;
                    }
                }
                const double h = 0.5 * c.side;
                int sum = 0;
                for (cplx off : {cplx(0.0, 0.0), cplx(h, 0.0), cplx(0.0, h), cplx(h, h)}) {
                    const int k = cs.cell_count(c.lo + off, h);
                    sum += k;
                    if (k) todo.push_back({c.lo + off, h, k});
                }
                if (sum != c.count) throw Error(ErrorCode::ZeroOnSubdivisionBoundary, "child counts disagree with parent");
            }
            std::vector<CriticalPoint> inside;
            int total = 0;
            for (const auto& p : found)
                if (dom.contains(p.location) && std::abs(p.location - dom.center) < R &&
                    (!dom.is_annulus() || std::abs(p.location - dom.center) > dom.inner)) {
                    inside.push_back(p);
                    total += p.order;
                }
            if (total != static_cast<int>(audit_n))
                throw Error(ErrorCode::Inconclusive, "critical point orders do not match the boundary count");
            std::sort(inside.begin(), inside.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
                return a.location.real() != b.location.real() ? a.location.real() < b.location.real()
                                                              : a.location.imag() < b.location.imag();
            });
            return inside;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ZeroOnSubdivisionBoundary) throw;
        }
    }
    throw Error(ErrorCode::Inconclusive, "every jittered subdivision met a zero on a cell boundary");
}

/// Kind of a zero z of a harmonic field: regular when grad H(z) != 0.
inline CriticalPoint classify_zero(const HarmonicField& H, cplx z, double rel_tol = 1e-10) {
    double scale = 0.0;
    for (cplx a : H.derivative_series().coeffs()) scale = std::max(scale, std::abs(a));
    if (std::abs(H.derivative(z)) > rel_tol * scale) return {z, 0, CriticalKind::RegularZeroOfH};
    const Series& d1 = H.derivative_series();
    const auto recentred = [&] {
        // Taylor coefficients of F' about z
        std::vector<cplx> c(d1.coeffs().begin(), d1.coeffs().end());
        const cplx s = z - d1.center();
        for (std::size_t k = 0; k < c.size(); ++k)
            for (std::size_t j = c.size() - 1; j > k; --j) c[j - 1] += s * c[j];
        return c;
    }();
    int order = 0;
    while (order < static_cast<int>(recentred.size()) && std::abs(recentred[static_cast<std::size_t>(order)]) <= rel_tol * scale) ++order;
    return {z, order, CriticalKind::Even};
}

inline CriticalPoint classify_branch_point(const BranchField& G) {
    return {G.branch_point(), static_cast<int>(std::lround(2.0 * G.half_exponent() - 2.0)), CriticalKind::Odd};
}

namespace detail {

inline double unwrap_angle(double a, double ref) {
    while (a - ref > pi) a -= 2 * pi;
    while (a - ref < -pi) a += 2 * pi;
    return a;
}

struct HarmonicLevel {
    const HarmonicField& H;
    FieldSample sample(cplx z, double) const { return H.eval(z); }
    double angle(cplx, double) const { return 0.0; }
    double field_radius() const { return H.domain().outer; }
    cplx field_center() const { return H.domain().center; }
};

struct BranchLevel {
    const BranchField& G;
    FieldSample sample(cplx z, double ref) const { return G.signed_eval(z, ref); }
    double angle(cplx z, double ref) const { return unwrap_angle(std::arg(z - G.branch_point()), ref); }
    double field_radius() const { return G.domain().outer; }
    cplx field_center() const { return G.domain().center; }
};

struct Node {
    cplx z;
    Vec2 grad;
    double angle;
};

template <class Level>
class Tracer {
public:
    Tracer(const Level& lv, double level, double step, const Domain& dom, std::vector<cplx> candidates)
        : lv_(lv), c_(level), target_(step), dom_(dom), candidates_(std::move(candidates)) {
        for (int k = 0; k < 64; ++k) {
            const cplx z = dom_.center + std::polar(0.99 * dom_.outer, 2 * pi * k / 64);
            scale_ = std::max(scale_, norm(lv_.sample(z, std::arg(z - dom_.center)).grad));
        }
        if (scale_ == 0.0) scale_ = 1.0;
        tol_ = 1e-13 * std::max({1.0, std::abs(c_), scale_ * dom_.outer});
        const double fr = std::abs(lv_.field_center() - dom_.center) + dom_.outer;
        land_outer_ = fr < lv_.field_radius() ? dom_.outer : dom_.outer * (1.0 - 1e-12);
        land_inner_ = dom_.inner * (1.0 + 1e-12);
    }

    Node project(cplx z, double ref) const {
        for (int it = 0; it < 50; ++it) {
            const FieldSample s = lv_.sample(z, ref);
            const double r = s.value - c_;
            if (std::abs(r) <= tol_) return {z, s.grad, lv_.angle(z, ref)};
            const double g2 = dot(s.grad, s.grad);
            if (g2 == 0.0) break;
            z -= (r / g2) * to_cplx(s.grad);
            ref = lv_.angle(z, ref);
        }
        throw Error(ErrorCode::SeedNotOnLevel, "seed could not be projected onto the level set");
    }

    std::vector<Node> march(const Node& start, int dir, EndpointTag& tag) const {
        std::vector<Node> pts{start};
        double h = target_;
        for (int guard = 0; guard < 200000; ++guard) {
            const Node& cur = pts.back();
            const double gn = norm(cur.grad);
            if (gn < 1e-6 * scale_) {
                snap_nearest(pts, h);
                tag = EndpointTag::BranchPoint;
                return pts;
            }
            const Vec2 t = (static_cast<double>(dir) / gn) * Vec2{cur.grad.y, -cur.grad.x};

            if (auto cand = candidate_ahead(cur.z, t, h)) {
                const double D = std::abs(*cand - cur.z);
                if (D > h) {
                    if (auto mid = step_once(cur, t, 0.5 * D)) pts.push_back(*mid);
                }
                pts.push_back({*cand, {}, pts.back().angle});
                tag = EndpointTag::BranchPoint;
                return pts;
            }

            if (dir > 0 && pts.size() >= 10 && std::abs(cur.z - start.z) <= 0.5 * h) {
                const Node closing{start.z, start.grad, cur.angle};
                if (std::abs(cur.z - start.z) < 0.2 * target_) pts.back() = closing;
                else pts.push_back(closing);
                tag = EndpointTag::ClosedLoop;
                return pts;
            }

            const auto [d, inner_hit] = boundary_distance(cur.z, t);
            if (d <= h) {
                pts.push_back(land(cur, t, d, inner_hit));
                tag = EndpointTag::BoundaryHit;
                return pts;
            }
            const double len = d < 1.8 * h ? 0.5 * d : 0.9 * h;
            int iters = 0;
            if (auto next = step_once(cur, t, len, &iters); next && iters <= 3) {
                pts.push_back(*next);
                if (iters <= 2) h = std::min(target_, 2.0 * h);
            } else {
                h *= 0.5;
                if (h < target_ / 1024.0) {
                    tag = EndpointTag::BranchPoint;
                    return pts;
                }
            }
        }
        throw Error(ErrorCode::StagnationNearCriticalPoint, "tracing did not terminate");
    }

private:
    std::optional<Node> step_once(const Node& cur, const Vec2& t, double len, int* iters_out = nullptr) const {
        cplx z = cur.z + len * to_cplx(t);
        double ref = lv_.angle(z, cur.angle);
        try {
            for (int it = 0; it < 8; ++it) {
                const FieldSample s = lv_.sample(z, ref);
                const double r = s.value - c_;
                if (std::abs(r) <= tol_) {
                    if (iters_out) *iters_out = it;
                    if (!dom_.contains(z)) return std::nullopt;
                    return Node{z, s.grad, ref};
                }
                const double g2 = dot(s.grad, s.grad);
                if (g2 == 0.0) return std::nullopt;
                z -= (r / g2) * to_cplx(s.grad);
                ref = lv_.angle(z, ref);
            }
        } catch (const Error&) {
        }
        if (iters_out) *iters_out = 99;
        return std::nullopt;
    }

    std::pair<double, bool> boundary_distance(cplx z, const Vec2& t) const {
        const Vec2 w = to_vec(z - dom_.center);
        const double b = dot(w, t);
        const double ww = dot(w, w);
        double d = -b + std::sqrt(std::max(0.0, b * b - (ww - land_outer_ * land_outer_)));
        bool inner = false;
        if (dom_.is_annulus()) {
            const double disc = b * b - (ww - land_inner_ * land_inner_);
            if (disc >= 0.0) {
                const double t1 = -b - std::sqrt(disc);
                if (t1 > 0.0 && t1 < d) { d = t1; inner = true; }
            }
        }
        return {std::max(d, 0.0), inner};
    }

    // Final vertex on the boundary circle where the level set meets it.
    Node land(const Node& cur, const Vec2& t, double d, bool inner) const {
        const double R = inner ? land_inner_ : land_outer_;
        const cplx p = cur.z + d * to_cplx(t);
        double a = std::arg(p - dom_.center);
        double ref = lv_.angle(p, cur.angle);
        for (int it = 0; it < 50; ++it) {
            const cplx e = std::polar(1.0, a);
            const cplx z = dom_.center + R * e;
            ref = lv_.angle(z, ref);
            const FieldSample s = lv_.sample(z, ref);
            const double r = s.value - c_;
            if (std::abs(r) <= tol_) return {z, s.grad, ref};
            const double der = dot(s.grad, to_vec(cplx(0.0, R) * e));
            if (der == 0.0) break;
            double da = r / der;
            da = std::clamp(da, -0.5 * target_ / R, 0.5 * target_ / R);
            a -= da;
        }
        const cplx z = dom_.center + R * std::polar(1.0, a);
        const double fr = lv_.angle(z, ref);
        return {z, lv_.sample(z, fr).grad, fr};
    }

    std::optional<cplx> candidate_ahead(cplx z, const Vec2& t, double h) const {
        for (cplx c : candidates_) {
            const double D = std::abs(c - z);
            if (D > 1.8 * h || D == 0.0) continue;
            if (dot(to_vec(c - z), t) <= 0.5 * D) continue;
            return c;
        }
        return std::nullopt;
    }

    void snap_nearest(std::vector<Node>& pts, double h) const {
        const cplx z = pts.back().z;
        std::optional<cplx> best;
        for (cplx c : candidates_)
            if (std::abs(c - z) <= 10.0 * h && (!best || std::abs(c - z) < std::abs(*best - z))) best = c;
        if (!best) return;
        if (std::abs(*best - z) < 0.2 * target_ && pts.size() > 1) pts.back() = {*best, {}, pts.back().angle};
        else if (*best != z) pts.push_back({*best, {}, pts.back().angle});
    }

    const Level& lv_;
    double c_;
    double target_;
    Domain dom_;
    std::vector<cplx> candidates_;
    double scale_ = 0.0;
    double tol_ = 0.0;
    double land_outer_ = 0.0;
    double land_inner_ = 0.0;
};

template <class Level>
TracedCurve trace_with(const Level& lv, double level, cplx seed, double step, const Domain& dom,
                       std::vector<cplx> candidates, double seed_angle) {
    if (!(step > 0.0)) step = 1e-2 * dom.outer;
    if (!dom.contains(seed)) throw Error(ErrorCode::SeedNotOnLevel, "seed outside the tracing domain");
    const Tracer<Level> tr(lv, level, step, dom, std::move(candidates));
    const FieldSample s0 = lv.sample(seed, seed_angle);
    const double g0 = norm(s0.grad);
    if (g0 == 0.0) throw Error(ErrorCode::StagnationNearCriticalPoint, "seed sits on a critical point");
    if (std::abs(s0.value - level) > 0.5 * step * g0)
        throw Error(ErrorCode::SeedNotOnLevel, "seed is farther than half a step from the level set");
    const Node start = tr.project(seed, seed_angle);

    EndpointTag fwd_tag{}, bwd_tag{};
    std::vector<Node> fwd = tr.march(start, +1, fwd_tag);
    std::vector<Node> nodes;
    EndpointTag start_tag = fwd_tag;
    if (fwd_tag != EndpointTag::ClosedLoop) {
        std::vector<Node> bwd = tr.march(start, -1, bwd_tag);
        nodes.assign(bwd.rbegin(), bwd.rend());
        nodes.pop_back();
        start_tag = bwd_tag;
    }
    nodes.insert(nodes.end(), fwd.begin(), fwd.end());

    TracedCurve c;
    c.level = level;
    c.step = step;
    c.start_tag = start_tag;
    c.end_tag = fwd_tag;
    const std::size_t n = nodes.size();
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) s += std::abs(nodes[k].z - nodes[k - 1].z);
        Vec2 t;
        const double gn = norm(nodes[k].grad);
        if (gn > 0.0) {
            t = (1.0 / gn) * Vec2{nodes[k].grad.y, -nodes[k].grad.x};
        } else {
            const cplx chord = k > 0 ? nodes[k].z - nodes[k - 1].z : nodes[std::min(k + 1, n - 1)].z - nodes[k].z;
            t = (1.0 / std::max(std::abs(chord), 1e-300)) * to_vec(chord);
        }
        c.points.push_back(nodes[k].z);
        c.tangents.push_back(t);
        c.normals.push_back({-t.y, t.x});
        c.arclength.push_back(s);
    }
    return c;
}

} // namespace detail

/// Predictor-corrector trace of {H = level} through `seed`, in both directions, until the
/// domain boundary, a critical point of H on the level, or loop closure.
inline TracedCurve trace_level(const HarmonicField& H, double level, cplx seed, double step, const Domain& dom) {
    std::vector<cplx> cands;
    try {
        for (const auto& cp : find_critical_points(H, dom))
            if (std::abs(H.value(cp.location) - level) <= 1e-9 * std::max(1.0, std::abs(level))) cands.push_back(cp.location);
    } catch (const Error&) {
    }
    return detail::trace_with(detail::HarmonicLevel{H}, level, seed, step, dom, std::move(cands), 0.0);
}

/// Traces {Re G = level} for the signed continuation of the branch primitive G.
inline TracedCurve trace_level(const BranchField& G, double level, cplx seed, double step, const Domain& dom) {
    std::vector<cplx> cands;
    if (std::abs(level) <= 1e-12) cands.push_back(G.branch_point());
    return detail::trace_with(detail::BranchLevel{G}, level, seed, step, dom, std::move(cands),
                              std::arg(seed - G.branch_point()));
}

namespace detail {

template <class G>
std::vector<double> sign_change_angles(G&& g, double span_end, int n) {
    // g is continuous in the angle on [0, span_end + dphi]
    std::vector<double> out;
    const double dphi = span_end / n;
    double a0 = 0.5 * dphi;
    double v0 = g(a0);
    for (int k = 1; k <= n; ++k) {
        const double a1 = (k + 0.5) * dphi;
        const double v1 = g(a1);
        if ((v0 < 0.0) != (v1 < 0.0)) {
            double lo = a0, hi = a1, vlo = v0;
            while (hi - lo > 1e-9) {
                const double mid = 0.5 * (lo + hi);
                const double vm = g(mid);
                if ((vm < 0.0) == (vlo < 0.0)) { lo = mid; vlo = vm; } else hi = mid;
            }
            double a = std::fmod(0.5 * (lo + hi), 2 * pi);
            if (a < 0.0) a += 2 * pi;
            out.push_back(a);
        }
        a0 = a1;
        v0 = v1;
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace detail

/// Angles in [0, 2 pi) at which the zero set of H - H(z0) leaves z0, sampled on |z - z0| = r.
inline std::vector<double> local_rays(const HarmonicField& H, cplx z0, double r, int samples = 4096) {
    const double h0 = H.value(z0);
    auto at = [&](double rad) {
        return detail::sign_change_angles([&](double a) { return H.value(z0 + std::polar(rad, a)) - h0; }, 2 * pi, samples);
    };
    auto rays = at(r);
    if (at(0.5 * r).size() != rays.size()) throw Error(ErrorCode::UnstableRayCount, "ray count changes between r and r/2");
    return rays;
}

/// Zero rays of Re G around z0, with the argument continued across the cut.
inline std::vector<double> local_rays(const BranchField& G, cplx z0, double r, int samples = 4096) {
    const cplx zb = G.branch_point();
    const bool at_branch = std::abs(z0 - zb) <= 1e-14 * (1.0 + std::abs(zb));
    const double h0 = at_branch ? 0.0 : G.signed_eval(z0, std::arg(z0 - zb)).value;
    const double ref0 = at_branch ? 0.0 : std::arg(z0 - zb);
    auto g = [&](double rad, double a) {
        const cplx z = z0 + std::polar(rad, a);
        if (at_branch) return G.primitive_with_arg(z, a).first.real();
        return G.signed_eval(z, ref0).value - h0;
    };
    auto at = [&](double rad) {
        return detail::sign_change_angles([&](double a) { return g(rad, a); }, 2 * pi, samples);
    };
    auto rays = at(r);
    if (at(0.5 * r).size() != rays.size()) throw Error(ErrorCode::UnstableRayCount, "ray count changes between r and r/2");
    return rays;
}

namespace detail {

inline double hausdorff(const TracedCurve& a, const TracedCurve& b) {
    auto one = [](const TracedCurve& p, const TracedCurve& q) {
        double worst = 0.0;
        for (cplx x : p.points) {
            double best = std::numeric_limits<double>::infinity();
            for (cplx y : q.points) best = std::min(best, std::abs(x - y));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(one(a, b), one(b, a));
}

template <class Base>
std::vector<cplx> interface_seeds_on_circle(const SheetField<Base>& h, double r, std::vector<double>& levels) {
    const Domain dom = h.domain();
    std::vector<cplx> seeds;
    double scale = 0.0;
    for (int k = 0; k < 64; ++k) scale = std::max(scale, std::abs(h.base().value(dom.center + std::polar(r, 2 * pi * k / 64))));
    for (const auto& x : label_crossings_on_circle([&](cplx z) { return h.label(z); }, dom.center, r, 4096)) {
        const int a = x.label_before / 2, b = x.label_after / 2;
        if (a != b) {
            if (auto c = h.interface_level(a, b)) {
                seeds.push_back(x.point);
                levels.push_back(*c);
            }
        } else if (std::abs(h.base().value(x.point)) <= 1e-6 * std::max(scale, 1e-300)) {
            // kink of |Re G| inside one region; other base label changes are the branch cut
            seeds.push_back(x.point);
            levels.push_back(0.0);
        }
    }
    return seeds;
}

} // namespace detail

/// Candidate support of the vorticity of a sheet field: the level curves carrying its interfaces.
template <class Base>
std::vector<TracedCurve> seed_curves_from_support(const SheetField<Base>& h, double step = 0.0) {
    const Domain dom = h.domain();
    if (!(step > 0.0)) step = 1e-2 * dom.outer;
    std::vector<double> levels;
    std::vector<cplx> seeds = detail::interface_seeds_on_circle(h, 0.98 * dom.outer, levels);
    if (dom.is_annulus()) {
        const double r_in = dom.inner + 0.02 * (dom.outer - dom.inner);
        auto more = detail::interface_seeds_on_circle(h, r_in, levels);
        seeds.insert(seeds.end(), more.begin(), more.end());
    }
    std::vector<TracedCurve> curves;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
        TracedCurve c = trace_level(h.base(), levels[k], seeds[k], step, dom);
        bool dup = false;
        for (const auto& e : curves)
            if (std::abs(e.level - c.level) <= 1e-12 * (1.0 + std::abs(c.level)) && detail::hausdorff(e, c) < step) dup = true;
        if (!dup) curves.push_back(std::move(c));
    }
    return curves;
}

namespace detail {

template <class Value, class Trace>
std::vector<TracedCurve> level_curves_from_circle(Value&& value, Trace&& trace, const Domain& dom, double step) {
    const double r = 0.98 * dom.outer;
    std::vector<TracedCurve> curves;
    for (double a : sign_change_angles([&](double t) { return value(dom.center + std::polar(r, t)); }, 2 * pi, 4096)) {
        TracedCurve c;
        try {
            c = trace(dom.center + std::polar(r, a));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::SeedNotOnLevel) continue;  // jump across a branch cut
            throw;
        }
        bool dup = false;
        for (const auto& e : curves)
            if (hausdorff(e, c) < step) dup = true;
        if (!dup) curves.push_back(std::move(c));
    }
    return curves;
}

} // namespace detail

/// Level curves {H = level} that reach the circle of radius 0.98 R.
inline std::vector<TracedCurve> level_curves(const HarmonicField& H, double level, const Domain& dom, double step = 0.0) {
    if (!(step > 0.0)) step = 1e-2 * dom.outer;
    return detail::level_curves_from_circle([&](cplx z) { return H.value(z) - level; },
                                            [&](cplx z) { return trace_level(H, level, z, step, dom); }, dom, step);
}

/// Level curves {|Re G| = level} that reach the circle of radius 0.98 R.
inline std::vector<TracedCurve> level_curves(const BranchField& G, double level, const Domain& dom, double step = 0.0) {
    if (!(step > 0.0)) step = 1e-2 * dom.outer;
    return detail::level_curves_from_circle(
        [&](cplx z) { return level > 0.0 ? G.value(z) - level : G.signed_eval(z, G.cut_angle() - pi).value; },
        [&](cplx z) {
            const double s = G.signed_eval(z, std::arg(z - G.branch_point())).value >= 0.0 ? 1.0 : -1.0;
            return trace_level(G, s * level, z, step, dom);
        },
        dom, step);
}

} // namespace stharm
