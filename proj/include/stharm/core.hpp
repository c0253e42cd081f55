#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace stharm {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

/// Real 2-vector used for gradients, normals and vector-valued residuals.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline Vec2 to_vec(cplx z) { return {z.real(), z.imag()}; }
inline cplx to_cplx(const Vec2& v) { return {v.x, v.y}; }

/// Gradient of Re F from F': (d_x - i d_y) Re F = F'.
inline Vec2 gradient_from_derivative(cplx dF) { return {dF.real(), -dF.imag()}; }

/// Value and gradient of a real field at a point.
struct FieldSample {
    double value = 0.0;
    Vec2 grad;
};

enum class ErrorCode {
    OutOfDisk,
    ZeroAtCenter,
    IdenticallyZero,
    OnInterface,
    OutOfDomain,
    InvalidField,
    ContourOutOfDomain,
    GridOutOfDomain,
    QuadratureNotConverged,
    CircleOutOfDomain,
    DisplacedOutOfDomain,
    CoincidentVortices,
    NoConvergence,
    CollisionDuringIteration,
    AtVortex,
    BallContainsOtherVortex,
    ProbeTouchesVortex,
    ZeroOnSubdivisionBoundary,
    Inconclusive,
    SeedNotOnLevel,
    StagnationNearCriticalPoint,
    UnstableRayCount,
    NotAnInterface,
    BadWindow,
    SchemaError,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
    case ErrorCode::OutOfDisk: return "OutOfDisk";
    case ErrorCode::ZeroAtCenter: return "ZeroAtCenter";
    case ErrorCode::IdenticallyZero: return "IdenticallyZero";
    case ErrorCode::OnInterface: return "OnInterface";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::InvalidField: return "InvalidField";
    case ErrorCode::ContourOutOfDomain: return "ContourOutOfDomain";
    case ErrorCode::GridOutOfDomain: return "GridOutOfDomain";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::CircleOutOfDomain: return "CircleOutOfDomain";
    case ErrorCode::DisplacedOutOfDomain: return "DisplacedOutOfDomain";
    case ErrorCode::CoincidentVortices: return "CoincidentVortices";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::CollisionDuringIteration: return "CollisionDuringIteration";
    case ErrorCode::AtVortex: return "AtVortex";
    case ErrorCode::BallContainsOtherVortex: return "BallContainsOtherVortex";
    case ErrorCode::ProbeTouchesVortex: return "ProbeTouchesVortex";
    case ErrorCode::ZeroOnSubdivisionBoundary: return "ZeroOnSubdivisionBoundary";
    case ErrorCode::Inconclusive: return "Inconclusive";
    case ErrorCode::SeedNotOnLevel: return "SeedNotOnLevel";
    case ErrorCode::StagnationNearCriticalPoint: return "StagnationNearCriticalPoint";
    case ErrorCode::UnstableRayCount: return "UnstableRayCount";
    case ErrorCode::NotAnInterface: return "NotAnInterface";
    case ErrorCode::BadWindow: return "BadWindow";
    case ErrorCode::SchemaError: return "SchemaError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Working domain of a field: a disk, or an annulus when inner > 0.
struct Domain {
    cplx center{0.0, 0.0};
    double inner = 0.0;
    double outer = 1.0;

    static Domain disk(cplx c, double r) { return {c, 0.0, r}; }
    static Domain annulus(cplx c, double r_in, double r_out) { return {c, r_in, r_out}; }

    bool is_annulus() const { return inner > 0.0; }
    double radius() const { return outer; }
    double area() const { return pi * (outer * outer - inner * inner); }

    bool contains(cplx z, double slack = 0.0) const {
        double r = std::abs(z - center);
        return r <= outer * (1.0 + slack) && r >= inner * (1.0 - slack);
    }

    /// True when the closed disk B(c, rho) lies in the domain.
    bool contains_disk(cplx c, double rho) const {
        double d = std::abs(c - center);
        double eps = 1e-12 * outer;
        if (d + rho > outer + eps) return false;
        if (is_annulus() && d - rho < inner - eps) return false;
        if (is_annulus() && d < inner) return false;
        return true;
    }
};

/// Distance below which a gradient request counts as sitting on an interface.
inline double interface_tolerance(const Domain& d) { return 1e-9 * d.radius(); }

} // namespace stharm
