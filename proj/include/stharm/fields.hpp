#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "core.hpp"
#include "series.hpp"

namespace stharm {

/// Anything the stationarity, curve and measure code can evaluate.
/// label() changes value across every curve where the field may kink.
template <class F>
concept ScalarField = requires(const F& f, cplx z) {
    { f.eval(z) } -> std::same_as<FieldSample>;
    { f.eval_unchecked(z) } -> std::same_as<FieldSample>;
    { f.value(z) } -> std::convertible_to<double>;
    { f.omega(z) } -> std::same_as<cplx>;
    { f.label(z) } -> std::convertible_to<int>;
    { f.domain() } -> std::convertible_to<Domain>;
};

/// H = Re F for a holomorphic primitive F.
class HarmonicField {
public:
    explicit HarmonicField(Series primitive)
        : F_(std::move(primitive)), dF_(F_.derivative()), d2F_(dF_.derivative()) {}

    const Series& primitive() const { return F_; }
    const Series& derivative_series() const { return dF_; }

    double value(cplx z) const { return F_.eval(inside(z)).real(); }
    cplx derivative(cplx z) const { return dF_.eval(inside(z)); }
    cplx second_derivative(cplx z) const { return d2F_.eval(inside(z)); }
    Vec2 gradient(cplx z) const { return gradient_from_derivative(derivative(z)); }
    FieldSample eval(cplx z) const { return {value(z), gradient(z)}; }
    FieldSample eval_unchecked(cplx z) const { return eval(z); }
    cplx omega(cplx z) const {
        const cplx d = derivative(z);
        return d * d;
    }
    int label(cplx) const { return 0; }
    Domain domain() const { return Domain::disk(F_.center(), F_.radius()); }

private:
    cplx inside(cplx z) const {
        if (!F_.in_disk(z)) throw Error(ErrorCode::OutOfDomain, "point outside the harmonic field's disk");
        return z;
    }

    Series F_;
    Series dF_;
    Series d2F_;
};

/// |Re((z - z0)^p phi2(z))| for a half-integer p >= 3/2 (single valued although
/// the primitive itself changes sign around z0).
class BranchField {
public:
    BranchField(cplx branch_point, double half_exponent, Series factor)
        : z0_(branch_point), p_(half_exponent), phi_(std::move(factor)), dphi_(phi_.derivative()) {
        const double twice = 2.0 * p_;
        if (std::abs(twice - std::round(twice)) > 1e-12 || static_cast<long>(std::round(twice)) % 2 == 0 || p_ < 1.5)
            throw Error(ErrorCode::InvalidField, "half exponent must be m + 1/2 with m >= 1");
        if (std::abs(phi_.center() - z0_) > 1e-14 * (1.0 + std::abs(z0_)))
            throw Error(ErrorCode::InvalidField, "branch factor must be expanded about the branch point");
        if (std::abs(phi_.coeff(0)) == 0.0) throw Error(ErrorCode::ZeroAtCenter, "branch factor vanishes at the branch point");
        // label cut along the direction nearest pi where |Re G| is locally maximal
        const double alpha = std::arg(phi_.coeff(0));
        const double k = std::round((p_ * pi + alpha) / pi);
        cut_ = (k * pi - alpha) / p_;
    }

    cplx branch_point() const { return z0_; }
    double half_exponent() const { return p_; }
    const Series& factor() const { return phi_; }

    /// Principal-branch primitive G(z) and its derivative.
    std::pair<cplx, cplx> primitive(cplx z) const { return primitive_with_arg(z, std::arg(z - z0_)); }

    /// G and G' using arg(z - z0) = angle exactly (continuation along a path).
    std::pair<cplx, cplx> primitive_with_arg(cplx z, double angle) const {
        if (!phi_.in_disk(z)) throw Error(ErrorCode::OutOfDomain, "point outside the branch field's disk");
        const cplx w = z - z0_;
        const double r = std::abs(w);
        const cplx f = phi_.eval(z);
        if (r == 0.0) return {0.0, 0.0};
        const cplx df = dphi_.eval(z);
        const cplx wp1 = std::polar(std::pow(r, p_ - 1.0), (p_ - 1.0) * angle);
        const cplx wp = wp1 * w;
        return {wp * f, wp1 * (p_ * f + w * df)};
    }

    /// Signed Re G and its gradient on the branch whose arg(z - z0) lies within pi of ref_angle.
    FieldSample signed_eval(cplx z, double ref_angle) const {
        double a = std::arg(z - z0_);
        while (a - ref_angle > pi) a -= 2 * pi;
        while (a - ref_angle < -pi) a += 2 * pi;
        auto [G, dG] = primitive_with_arg(z, a);
        return {G.real(), gradient_from_derivative(dG)};
    }

    double value(cplx z) const { return std::abs(primitive(z).first.real()); }

    FieldSample eval(cplx z) const {
        auto [G, dG] = primitive(z);
        const double re = G.real();
        if (std::abs(re) <= interface_tolerance(domain()) * std::abs(dG) && std::abs(dG) > 0.0)
            throw Error(ErrorCode::OnInterface, "gradient requested on a zero ray of the branch field");
        const Vec2 g = gradient_from_derivative(dG);
        return {std::abs(re), re >= 0.0 ? g : -g};
    }

    /// Same as eval() without the zero-ray check.
    FieldSample eval_unchecked(cplx z) const {
        auto [G, dG] = primitive(z);
        const Vec2 g = gradient_from_derivative(dG);
        return {std::abs(G.real()), G.real() >= 0.0 ? g : -g};
    }

    /// (G')^2 = (z - z0)^{2p-2} (p phi2 + (z - z0) phi2')^2, single valued.
    cplx omega(cplx z) const {
        if (!phi_.in_disk(z)) throw Error(ErrorCode::OutOfDomain, "point outside the branch field's disk");
        const cplx w = z - z0_;
        const cplx q = p_ * phi_.eval(z) + w * dphi_.eval(z);
        const int n = static_cast<int>(std::lround(2.0 * p_ - 2.0));
        cplx wn = 1.0;
        for (int i = 0; i < n; ++i) wn *= w;
        return wn * q * q;
    }

    /// Sign of Re G on the branch cut along cut_angle(), so that every zero ray separates labels.
    int label(cplx z) const {
        double a = std::arg(z - z0_);
        while (a > cut_) a -= 2 * pi;
        while (a <= cut_ - 2 * pi) a += 2 * pi;
        return primitive_with_arg(z, a).first.real() >= 0.0 ? 1 : 0;
    }
    double cut_angle() const { return cut_; }
    Domain domain() const { return Domain::disk(z0_, phi_.radius()); }

private:
    cplx z0_;
    double p_;
    Series phi_;
    Series dphi_;
    double cut_ = pi;
};

/// h = 1/2 |z - c|^2, whose gradient field rotated by pi/2 is a rigid rotation.
class QuadraticField {
public:
    explicit QuadraticField(Domain domain = Domain::disk(0.0, 1.0)) : domain_(domain) {}

    double value(cplx z) const { return eval(z).value; }
    FieldSample eval(cplx z) const {
        if (!domain_.contains(z, 1e-12)) throw Error(ErrorCode::OutOfDomain, "point outside the quadratic field's domain");
        const cplx w = z - domain_.center;
        return {0.5 * std::norm(w), {w.real(), w.imag()}};
    }
    FieldSample eval_unchecked(cplx z) const { return eval(z); }
    cplx omega(cplx z) const {
        const cplx w = std::conj(z - domain_.center);
        return w * w;
    }
    int label(cplx) const { return 0; }
    Domain domain() const { return domain_; }

private:
    Domain domain_;
};

/// Point vortices with integer degrees.
class VortexConfig {
public:
    VortexConfig(std::vector<cplx> positions, std::vector<int> degrees)
        : positions_(std::move(positions)), degrees_(std::move(degrees)) {
        if (positions_.empty() || positions_.size() != degrees_.size())
            throw Error(ErrorCode::InvalidField, "positions and degrees must be non-empty and of equal length");
        for (int d : degrees_)
            if (d == 0) throw Error(ErrorCode::InvalidField, "vortex degrees must be nonzero");
        const double tol = 1e-12 * std::max(diameter(), 1e-300);
        for (std::size_t i = 0; i < positions_.size(); ++i)
            for (std::size_t j = i + 1; j < positions_.size(); ++j)
                if (std::abs(positions_[i] - positions_[j]) <= tol)
                    throw Error(ErrorCode::CoincidentVortices, "two vortices share a position");
    }

    std::size_t size() const { return positions_.size(); }
    const std::vector<cplx>& positions() const { return positions_; }
    const std::vector<int>& degrees() const { return degrees_; }
    cplx position(std::size_t i) const { return positions_[i]; }
    int degree(std::size_t i) const { return degrees_[i]; }

    int total_mass() const {
        int m = 0;
        for (int d : degrees_) m += std::abs(d);
        return m;
    }
    int total_degree() const {
        int s = 0;
        for (int d : degrees_) s += d;
        return s;
    }
    double diameter() const {
        double d = 0.0;
        for (std::size_t i = 0; i < positions_.size(); ++i)
            for (std::size_t j = i + 1; j < positions_.size(); ++j) d = std::max(d, std::abs(positions_[i] - positions_[j]));
        return d;
    }
    double min_distance() const {
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < positions_.size(); ++i)
            for (std::size_t j = i + 1; j < positions_.size(); ++j) d = std::min(d, std::abs(positions_[i] - positions_[j]));
        return d;
    }

private:
    std::vector<cplx> positions_;
    std::vector<int> degrees_;
};

/// u(z) = (1/M) sum d_i ln|z - z_i| with M = sum |d_i|.
class LogPotential {
public:
    explicit LogPotential(VortexConfig config, std::optional<Domain> domain = std::nullopt)
        : config_(std::move(config)), mass_(config_.total_mass()) {
        if (domain) {
            domain_ = *domain;
        } else {
            cplx c = 0.0;
            for (cplx z : config_.positions()) c += z;
            c /= static_cast<double>(config_.size());
            domain_ = Domain::disk(c, 100.0 * std::max(config_.diameter(), 1.0));
        }
    }

    const VortexConfig& config() const { return config_; }
    double mass() const { return mass_; }

    double value(cplx z) const {
        check(z);
        double u = 0.0;
        for (std::size_t i = 0; i < config_.size(); ++i) u += config_.degree(i) * std::log(std::abs(z - config_.position(i)));
        return u / mass_;
    }

    Vec2 gradient(cplx z) const {
        check(z);
        Vec2 g;
        for (std::size_t i = 0; i < config_.size(); ++i) {
            const cplx w = z - config_.position(i);
            g += (config_.degree(i) / std::norm(w)) * to_vec(w);
        }
        return (1.0 / mass_) * g;
    }

    FieldSample eval(cplx z) const { return {value(z), gradient(z)}; }
    FieldSample eval_unchecked(cplx z) const { return eval(z); }

    cplx omega(cplx z) const {
        check(z);
        cplx d = 0.0;
        for (std::size_t i = 0; i < config_.size(); ++i) d += static_cast<double>(config_.degree(i)) / (z - config_.position(i));
        d /= mass_;
        return d * d;
    }

    int label(cplx) const { return 0; }
    Domain domain() const { return domain_; }

private:
    void check(cplx z) const {
        const double tol = 1e-14 * std::max(1.0, std::abs(z));
        for (cplx p : config_.positions())
            if (std::abs(z - p) <= tol) throw Error(ErrorCode::AtVortex, "evaluation at a vortex position");
    }

    VortexConfig config_;
    double mass_;
    Domain domain_{};
};

/// ln|z - c|.
inline LogPotential log_abs_field(cplx c = 0.0, std::optional<Domain> domain = std::nullopt) {
    return LogPotential(VortexConfig({c}, {1}), domain ? domain : std::optional<Domain>(Domain::disk(c, 1.0)));
}

} // namespace stharm
