#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "core.hpp"

namespace stharm {

/// Default truncation order K of every series built by the library.
inline constexpr std::size_t kDefaultSeriesOrder = 32;

/// Scalar customization point for series arithmetic. Exact-arithmetic
/// scalars (rationals in the tests) provide their own specialization.
template <class S>
struct scalar_traits;

template <>
struct scalar_traits<cplx> {
    static double magnitude(const cplx& s) { return std::abs(s); }

    // Principal root: nonnegative real part, positive imaginary part on the cut.
    static cplx principal_sqrt(const cplx& s) {
        cplx r = std::sqrt(s);
        if (r.real() == 0.0 && r.imag() < 0.0) r = -r;
        return r;
    }
};

/// Truncated power series sum_k a_k (z - center)^k, valid on |z - center| < radius.
template <class S = cplx>
class HolomorphicSeries {
public:
    HolomorphicSeries(S center, std::vector<S> coeffs, double radius)
        : center_(std::move(center)), coeffs_(std::move(coeffs)), radius_(radius) {
        if (coeffs_.empty()) throw Error(ErrorCode::InvalidField, "series needs at least one coefficient");
        if (!(radius_ > 0.0)) throw Error(ErrorCode::InvalidField, "series radius must be positive");
    }

    static HolomorphicSeries constant(S c, S center = S(0), double radius = 1e6) {
        return HolomorphicSeries(std::move(center), {std::move(c)}, radius);
    }

    const S& center() const { return center_; }
    std::span<const S> coeffs() const { return coeffs_; }
    const S& coeff(std::size_t k) const { return coeffs_[k]; }
    double radius() const { return radius_; }
    std::size_t order() const { return coeffs_.size() - 1; }

    bool in_disk(const S& z) const {
        return scalar_traits<S>::magnitude(z - center_) < radius_;
    }

    S operator()(const S& z) const { return eval(z); }

    S eval(const S& z) const {
        check(z);
        const S w = z - center_;
        S acc = coeffs_.back();
        for (std::size_t k = coeffs_.size() - 1; k-- > 0;) acc = acc * w + coeffs_[k];
        return acc;
    }

    S derivative_at(const S& z) const {
        check(z);
        if (coeffs_.size() == 1) return S(0);
        const S w = z - center_;
        const std::size_t K = coeffs_.size() - 1;
        S acc = coeffs_[K] * S(static_cast<double>(K));
        for (std::size_t k = K - 1; k >= 1; --k) acc = acc * w + coeffs_[k] * S(static_cast<double>(k));
        return acc;
    }

    /// Formal derivative, one order lower.
    HolomorphicSeries derivative() const {
        if (coeffs_.size() == 1) return HolomorphicSeries(center_, {S(0)}, radius_);
        std::vector<S> d(coeffs_.size() - 1);
        for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = coeffs_[k] * S(static_cast<double>(k));
        return HolomorphicSeries(center_, std::move(d), radius_);
    }

    /// Product truncated to the larger of the two orders.
    friend HolomorphicSeries operator*(const HolomorphicSeries& a, const HolomorphicSeries& b) {
        const std::size_t K = std::max(a.order(), b.order());
        std::vector<S> c(K + 1, S(0));
        for (std::size_t i = 0; i <= a.order(); ++i)
            for (std::size_t j = 0; j <= b.order() && i + j <= K; ++j) c[i + j] = c[i + j] + a.coeffs_[i] * b.coeffs_[j];
        return HolomorphicSeries(a.center_, std::move(c), std::min(a.radius_, b.radius_));
    }

private:
    void check(const S& z) const {
        if (!in_disk(z)) throw Error(ErrorCode::OutOfDisk, "evaluation point outside the series disk");
    }

    S center_;
    std::vector<S> coeffs_;
    double radius_;
};

using Series = HolomorphicSeries<cplx>;

/// f(z) for order 0, f'(z) for order 1.
template <class S>
S series_eval(const HolomorphicSeries<S>& f, const S& z, int order = 0) {
    if (order == 0) return f.eval(z);
    if (order == 1) return f.derivative_at(z);
    throw Error(ErrorCode::InvalidField, "series_eval supports order 0 or 1");
}

/// Square root g with g*g == f through the truncation order, principal at the center.
template <class S>
HolomorphicSeries<S> sqrt_series(const HolomorphicSeries<S>& f) {
    const auto a = f.coeffs();
    if (scalar_traits<S>::magnitude(a[0]) == 0.0)
        throw Error(ErrorCode::ZeroAtCenter, "sqrt_series needs f(center) != 0; factor the zero out first");
    const std::size_t K = f.order();
    std::vector<S> g(K + 1, S(0));
    g[0] = scalar_traits<S>::principal_sqrt(a[0]);
    const S two_g0 = g[0] + g[0];
    for (std::size_t k = 1; k <= K; ++k) {
        S acc = a[k];
        for (std::size_t j = 1; j < k; ++j) acc = acc - g[j] * g[k - j];
        g[k] = acc / two_g0;
    }
    return HolomorphicSeries<S>(f.center(), std::move(g), f.radius());
}

template <class S>
struct FactoredZero {
    std::size_t order;
    HolomorphicSeries<S> unit;  // nonvanishing at the center
};

/// Split f = (z - center)^k f1 with f1(center) != 0 using a scale-relative zero cutoff.
template <class S>
FactoredZero<S> factor_zero(const HolomorphicSeries<S>& f, double rel_threshold = 1e-13) {
    const auto a = f.coeffs();
    double scale = 0.0;
    for (const auto& c : a) scale = std::max(scale, scalar_traits<S>::magnitude(c));
    if (scale == 0.0) throw Error(ErrorCode::IdenticallyZero, "all coefficients vanish");
    const double cut = rel_threshold * scale;
    std::size_t k = 0;
    while (scalar_traits<S>::magnitude(a[k]) < cut) ++k;
    std::vector<S> rest(a.begin() + static_cast<std::ptrdiff_t>(k), a.end());
    return {k, HolomorphicSeries<S>(f.center(), std::move(rest), f.radius())};
}

template <class S>
struct HalfIntegerPrimitive {
    HolomorphicSeries<S> factor;  // phi2
    double half_exponent;          // p = m + 3/2
};

/// Primitive of g = (z - z0)^{m+1/2} phi1 written as G = (z - z0)^{m+3/2} phi2,
/// with phi2 coefficients b_k = a_k / (m + 3/2 + k).
template <class S>
HalfIntegerPrimitive<S> primitive_halfinteger(const HolomorphicSeries<S>& phi1, unsigned m) {
    const auto a = phi1.coeffs();
    if (scalar_traits<S>::magnitude(a[0]) == 0.0)
        throw Error(ErrorCode::ZeroAtCenter, "phi1 must not vanish at the branch point");
    std::vector<S> b(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) b[k] = a[k] / (S(static_cast<double>(m + k)) + S(1.5));
    return {HolomorphicSeries<S>(phi1.center(), std::move(b), phi1.radius()), static_cast<double>(m) + 1.5};
}

/// Coefficients c_k of G'(z) = (z - z0)^{p-1} sum_k c_k (z - z0)^k for G = (z - z0)^p phi2,
/// obtained by differentiating term by term.
template <class S>
std::vector<S> halfinteger_derivative_coeffs(const HolomorphicSeries<S>& phi2, double p) {
    const auto b = phi2.coeffs();
    std::vector<S> c(b.size());
    for (std::size_t k = 0; k < b.size(); ++k) c[k] = b[k] * (S(static_cast<double>(k)) + S(p));
    return c;
}

} // namespace stharm
