#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "core.hpp"
#include "fields.hpp"

namespace stharm {

/// Closed angular sector {arg(z - center) in [from, to]}, with from < to <= from + 2 pi.
struct SectorPredicate {
    cplx center{0.0, 0.0};
    double from = 0.0;
    double to = 0.0;
};

/// Closed half-plane {(z - point) . normal >= 0}.
struct HalfPlanePredicate {
    cplx point{0.0, 0.0};
    Vec2 normal{1.0, 0.0};
};

/// {sign * (H(z) - level) >= 0} for the harmonic base H.
struct LevelPredicate {
    double level = 0.0;
    int sign = 1;
};

struct AllPredicate {};

using RegionPredicate = std::variant<AllPredicate, SectorPredicate, HalfPlanePredicate, LevelPredicate>;

/// One piece of the partition: h = sign * H + offset there.
struct Region {
    RegionPredicate predicate;
    int sign = 1;
    double offset = 0.0;
};

inline bool sector_contains(const SectorPredicate& s, cplx z) {
    const cplx w = z - s.center;
    if (w == cplx(0.0, 0.0)) return true;
    double a = std::fmod(std::arg(w) - s.from, 2 * pi);
    if (a < 0.0) a += 2 * pi;
    return a <= (s.to - s.from) + 1e-15;
}

/// A point where the label of f changes along a circle, bracketed to ~1e-14 of the radius.
struct LabelCrossing {
    cplx point;
    double angle;
    int label_before;
    int label_after;
};

/// Scan the circle |z - c| = r counterclockwise from angle 0 and bisect every label change.
template <class LabelFn>
std::vector<LabelCrossing> label_crossings_on_circle(LabelFn&& label, cplx c, double r, int n = 2048) {
    std::vector<LabelCrossing> out;
    const double dphi = 2 * pi / n;
    auto at = [&](double a) { return c + std::polar(r, a); };
    double a0 = 0.5 * dphi;
    int l0 = label(at(a0));
    for (int k = 1; k <= n; ++k) {
        const double a1 = (k + 0.5) * dphi;
        const int l1 = label(at(a1));
        if (l1 != l0) {
            double lo = a0, hi = a1;
            for (int it = 0; it < 60 && hi - lo > 1e-15; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (label(at(mid)) == l0) lo = mid; else hi = mid;
            }
            const double a = 0.5 * (lo + hi);
            out.push_back({at(a), std::fmod(a, 2 * pi), l0, l1});
        }
        a0 = a1;
        l0 = l1;
    }
    return out;
}

/// h = theta * H + offsets over a partition of a disk or annulus, with theta = +-1 per region.
/// Base is HarmonicField or BranchField.
template <class Base>
class SheetField {
public:
    static constexpr bool harmonic_base = std::is_same_v<Base, HarmonicField>;

    SheetField(Base base, std::vector<Region> regions, Domain domain)
        : base_(std::move(base)), regions_(std::move(regions)), domain_(domain) {
        if (regions_.empty()) throw Error(ErrorCode::InvalidField, "sheet field needs at least one region");
        for (const auto& r : regions_) {
            if (r.sign != 1 && r.sign != -1) throw Error(ErrorCode::InvalidField, "region sign must be +1 or -1");
            if constexpr (!harmonic_base)
                if (std::holds_alternative<LevelPredicate>(r.predicate))
                    throw Error(ErrorCode::InvalidField, "level predicates need a single-valued harmonic base");
        }
        const Domain bd = base_.domain();
        if (std::abs(domain_.center - bd.center) + domain_.outer >= bd.outer)
            throw Error(ErrorCode::InvalidField, "sheet domain must lie inside the base field's disk");
        validate_continuity();
    }

    const Base& base() const { return base_; }
    const std::vector<Region>& regions() const { return regions_; }
    Domain domain() const { return domain_; }

    int region_index(cplx z) const {
        for (std::size_t k = 0; k < regions_.size(); ++k)
            if (holds(regions_[k].predicate, z)) return static_cast<int>(k);
        throw Error(ErrorCode::InvalidField, "regions do not cover the point");
    }

    /// Region index combined with the base's own kink label.
    int label(cplx z) const { return 2 * region_index(z) + base_.label(z); }

    double value(cplx z) const {
        check(z);
        const Region& r = regions_[static_cast<std::size_t>(region_index(z))];
        return r.sign * base_.value(z) + r.offset;
    }

    FieldSample eval(cplx z) const {
        check(z);
        const int k = region_index(z);
        const double tol = interface_tolerance(domain_);
        for (cplx d : {cplx(tol, 0.0), cplx(-tol, 0.0), cplx(0.0, tol), cplx(0.0, -tol)})
            if (region_index(z + d) != k) throw Error(ErrorCode::OnInterface, "gradient requested on a region interface");
        const Region& r = regions_[static_cast<std::size_t>(k)];
        FieldSample s = base_.eval(z);
        return {r.sign * s.value + r.offset, static_cast<double>(r.sign) * s.grad};
    }

    /// Region-wise value and gradient without the interface check.
    FieldSample eval_unchecked(cplx z) const {
        check(z);
        const Region& r = regions_[static_cast<std::size_t>(region_index(z))];
        FieldSample s = base_.eval_unchecked(z);
        return {r.sign * s.value + r.offset, static_cast<double>(r.sign) * s.grad};
    }

    /// Value and gradient of the region containing `side`, evaluated at z.
    FieldSample one_sided(cplx z, cplx side) const {
        const Region& r = regions_[static_cast<std::size_t>(region_index(side))];
        FieldSample s = base_eval_from(z, side);
        return {r.sign * s.value + r.offset, static_cast<double>(r.sign) * s.grad};
    }

    cplx omega(cplx z) const {
        check(z);
        return base_.omega(z);
    }

    /// Level c of H on the interface between regions a and b, when the
    /// field is continuous across a level set there.
    std::optional<double> interface_level(int a, int b) const {
        const Region& ra = regions_[static_cast<std::size_t>(a)];
        const Region& rb = regions_[static_cast<std::size_t>(b)];
        if (ra.sign == rb.sign) return std::nullopt;
        return (rb.offset - ra.offset) / static_cast<double>(ra.sign - rb.sign);
    }

private:
    bool holds(const RegionPredicate& p, cplx z) const {
        return std::visit(
            [&](const auto& q) -> bool {
                using T = std::decay_t<decltype(q)>;
                if constexpr (std::is_same_v<T, AllPredicate>) {
                    return true;
                } else if constexpr (std::is_same_v<T, SectorPredicate>) {
                    return sector_contains(q, z);
                } else if constexpr (std::is_same_v<T, HalfPlanePredicate>) {
                    return dot(to_vec(z - q.point), q.normal) >= 0.0;
                } else {
                    if constexpr (harmonic_base) return q.sign * (base_.value(z) - q.level) >= 0.0;
                    else return false;
                }
            },
            p);
    }

    // Gradient of |H| from the kink side containing `side` (branch bases only differ).
    FieldSample base_eval_from(cplx z, cplx side) const {
        if constexpr (harmonic_base) {
            (void)side;
            return base_.eval(z);
        } else {
            // both points continued on the branch of `side`
            const double ref = std::arg(side - base_.branch_point());
            const FieldSample at = base_.signed_eval(z, ref);
            const double s = base_.signed_eval(side, ref).value >= 0.0 ? 1.0 : -1.0;
            return {std::abs(at.value), s * at.grad};
        }
    }

    void check(cplx z) const {
        if (!domain_.contains(z, 1e-12)) throw Error(ErrorCode::OutOfDomain, "point outside the sheet field's domain");
    }

    void validate_continuity() const {
        const double r_scan = domain_.is_annulus() ? 0.5 * (domain_.inner + domain_.outer) : 0.98 * domain_.outer;
        auto lab = [&](cplx z) { return region_index(z); };
        double scale = 1e-300;
        for (int k = 0; k < 64; ++k) scale = std::max(scale, std::abs(base_.value(domain_.center + std::polar(r_scan, 2 * pi * k / 64))));
        for (const auto& x : label_crossings_on_circle(lab, domain_.center, r_scan, 1024)) {
            const double eps = 1e-10 * domain_.outer;
            const cplx n = x.point - domain_.center;
            const cplx t = cplx(-n.imag(), n.real()) / std::abs(n);
            const double va = value_in(x.label_before, x.point - eps * t);
            const double vb = value_in(x.label_after, x.point + eps * t);
            if (std::abs(va - vb) > 1e-7 * (1.0 + scale))
                throw Error(ErrorCode::InvalidField, "sheet field is discontinuous across a region interface");
        }
    }

    double value_in(int region, cplx z) const {
        const Region& r = regions_[static_cast<std::size_t>(region)];
        return r.sign * base_.value(z) + r.offset;
    }

    Base base_;
    std::vector<Region> regions_;
    Domain domain_;
};

using HarmonicSheet = SheetField<HarmonicField>;
using BranchSheet = SheetField<BranchField>;

} // namespace stharm
