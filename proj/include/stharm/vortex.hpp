#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "core.hpp"
#include "fields.hpp"
#include "quadrature.hpp"
#include "stationarity.hpp"

namespace stharm {

/// R_i = sum_{j != i} d_j (z_i - z_j) / |z_i - z_j|^2.
inline std::vector<Vec2> residual(const VortexConfig& cfg) {
    std::vector<Vec2> out(cfg.size());
    for (std::size_t i = 0; i < cfg.size(); ++i)
        for (std::size_t j = 0; j < cfg.size(); ++j) {
            if (i == j) continue;
            const cplx w = cfg.position(i) - cfg.position(j);
            out[i] += (cfg.degree(j) / std::norm(w)) * to_vec(w);
        }
    return out;
}

inline double max_residual(const VortexConfig& cfg) {
    double m = 0.0;
    for (const Vec2& r : residual(cfg)) m = std::max(m, norm(r));
    return m;
}

/// Pins z_anchor = anchor_position and coordinate `axis` (0 = x, 1 = y) of z_second.
struct Gauge {
    std::size_t anchor = 0;
    cplx anchor_position{0.0, 0.0};
    std::size_t second = 1;
    int axis = 0;
    double value = 1.0;
};

struct SolverStep {
    int iteration = 0;
    double residual = 0.0;  // max |R_i| times the diameter
    double step_length = 0.0;
};

struct EquilibriumSolution {
    VortexConfig config;
    std::vector<SolverStep> trace;
    int iterations = 0;
};

struct SolverOptions {
    int max_iterations = 100;
    double tolerance = 1e-12;  // on max |R_i| * diameter
};

namespace detail {

inline double scaled_residual(const VortexConfig& c) { return max_residual(c) * c.diameter(); }

// F_i = sum_{j != i} d_j / (z_i - z_j), the conjugate of R_i.
inline cplx holomorphic_residual(const std::vector<cplx>& z, const std::vector<int>& d, std::size_t i) {
    cplx s = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j)
        if (j != i) s += static_cast<double>(d[j]) / (z[i] - z[j]);
    return s;
}

} // namespace detail

/// Damped Newton on F_i = 0 for every vortex except the two gauge vortices.
/// The other coordinate of z_second keeps its start value; the gauge vortices' equations
/// then follow from the identities sum d_i F_i = 0 and sum d_i z_i F_i = sum_{i<j} d_i d_j.
inline EquilibriumSolution solve_equilibrium(const VortexConfig& start, const Gauge& gauge, const SolverOptions& opt = {}) {
    const std::size_t n = start.size();
    if (n < 2) return {start, {{0, 0.0, 0.0}}, 0};
    if (gauge.anchor >= n || gauge.second >= n || gauge.anchor == gauge.second || (gauge.axis != 0 && gauge.axis != 1))
        throw Error(ErrorCode::InvalidField, "gauge must name two distinct vortices and an axis");

    std::vector<cplx> z = start.positions();
    z[gauge.anchor] = gauge.anchor_position;
    if (gauge.axis == 0) z[gauge.second].real(gauge.value);
    else z[gauge.second].imag(gauge.value);
    if (z[gauge.anchor] == z[gauge.second]) throw Error(ErrorCode::InvalidField, "gauge places two vortices at one point");

    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i)
        if (i != gauge.anchor && i != gauge.second) free.push_back(i);
    const auto m = static_cast<Eigen::Index>(free.size());

    const std::vector<int>& d = start.degrees();
    VortexConfig cur(z, d);
    EquilibriumSolution sol{cur, {}, 0};
    double err = detail::scaled_residual(cur);
    sol.trace.push_back({0, err, 0.0});

    for (int it = 1; it <= opt.max_iterations; ++it) {
        if (err <= opt.tolerance) return sol;
        if (m == 0) break;
        Eigen::VectorXcd F(m);
        Eigen::MatrixXcd J = Eigen::MatrixXcd::Zero(m, m);
        for (Eigen::Index r = 0; r < m; ++r) {
            const std::size_t i = free[static_cast<std::size_t>(r)];
            F(r) = detail::holomorphic_residual(z, d, i);
            for (Eigen::Index c = 0; c < m; ++c) {
                const std::size_t j = free[static_cast<std::size_t>(c)];
                if (i == j) continue;
                const cplx w = z[i] - z[j];
                J(r, c) = static_cast<double>(d[j]) / (w * w);
            }
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const cplx w = z[i] - z[j];
                J(r, r) -= static_cast<double>(d[j]) / (w * w);
            }
        }
        const Eigen::VectorXcd delta = J.colPivHouseholderQr().solve(-F);
        if (!delta.allFinite()) break;

        const double min_d = cur.min_distance();
        double lambda = 1.0;
        bool accepted = false;
        bool collided = false;
        for (int halving = 0; halving < 40; ++halving, lambda *= 0.5) {
            std::vector<cplx> trial = z;
            for (Eigen::Index k = 0; k < m; ++k) trial[free[static_cast<std::size_t>(k)]] += lambda * delta(k);
            double md = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) md = std::min(md, std::abs(trial[i] - trial[j]));
            if (md < 0.1 * min_d) {
                collided = true;
                continue;
            }
            const VortexConfig next(trial, d);
            const double e = detail::scaled_residual(next);
            if (e < err || e <= opt.tolerance) {
                sol.trace.push_back({it, e, lambda * delta.norm()});
                z = std::move(trial);
                cur = next;
                err = e;
                accepted = true;
                break;
            }
        }
        sol.iterations = it;
        sol.config = cur;
        if (!accepted) {
            if (collided) throw Error(ErrorCode::CollisionDuringIteration, "damping could not keep the vortices apart");
            throw Error(ErrorCode::NoConvergence, "no descent step found");
        }
    }
    if (err <= opt.tolerance) return sol;
    throw Error(ErrorCode::NoConvergence, "no equilibrium reached within the iteration cap");
}

inline FieldSample potential_eval(const LogPotential& u, cplx z) { return u.eval(z); }

/// grad H_i(z_i) for H_i = (1/M) sum_{j != i} d_j ln|z - z_j|.
inline Vec2 partial_gradient(const VortexConfig& cfg, std::size_t i) {
    return (1.0 / cfg.total_mass()) * residual(cfg)[i];
}

struct FluxRow {
    double delta = 0.0;
    Vec2 flux;
    Vec2 predicted;  // -2 pi (d_i / M) grad H_i(z_i)
};

struct FluxCheck {
    std::vector<FluxRow> rows;
    Vec2 grad_partial;        // grad H_i(z_i)
    double linear_constant;   // least-squares c in flux ~ c * delta * grad H_i(z_i)
    double exponent;          // least-squares slope of log|flux| against log delta
};

/// Flux of the stress tensor of u_N around vortex i on circles of the given radii.
inline FluxCheck equilibrium_flux_check(const VortexConfig& cfg, std::size_t i, const std::vector<double>& deltas,
                                        int n_points = 512) {
    const double dmax = *std::max_element(deltas.begin(), deltas.end());
    for (std::size_t j = 0; j < cfg.size(); ++j)
        if (j != i && std::abs(cfg.position(j) - cfg.position(i)) <= dmax)
            throw Error(ErrorCode::BallContainsOtherVortex, "flux circle encloses another vortex");
    const LogPotential u(cfg);
    FluxCheck out{};
    out.grad_partial = partial_gradient(cfg, i);
    const double a = static_cast<double>(cfg.degree(i)) / cfg.total_mass();
    double num = 0.0, den = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (double delta : deltas) {
        const Vec2 f = flux_T(u, cfg.position(i), delta, n_points);
        out.rows.push_back({delta, f, -2 * pi * a * out.grad_partial});
        const Vec2 basis = delta * out.grad_partial;
        num += dot(f, basis);
        den += dot(basis, basis);
        if (norm(f) > 0.0) {
            const double x = std::log(delta), y = std::log(norm(f));
            sx += x; sy += y; sxx += x * x; sxy += x * y;
            ++m;
        }
    }
    out.linear_constant = den > 0.0 ? num / den : 0.0;
    out.exponent = m >= 2 && (m * sxx - sx * sx) != 0.0 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : 0.0;
    return out;
}

enum class ConvergenceFamily {
    UniformSegment,      // d_i = 1 at the midpoints of N equal cells of [-1, 1]
    AlternatingSegment,  // same points, degrees +1, -1, +1, ...
    PointMass,           // N unit vortices packed into [-1e-3, 1e-3]; a single one sits at 0
};

struct ProbeAnnulus {
    cplx center{0.0, 0.0};
    double inner = 1.5;
    double outer = 2.5;
};

struct ConvergenceRow {
    int n = 0;
    double error = 0.0;
};

inline VortexConfig convergence_family_config(ConvergenceFamily fam, int n) {
    if (n < 1) throw Error(ErrorCode::InvalidField, "family size must be positive");
    std::vector<cplx> pos;
    std::vector<int> deg;
    for (int i = 1; i <= n; ++i) {
        if (fam == ConvergenceFamily::PointMass) {
            pos.emplace_back(n == 1 ? 0.0 : 1e-3 * (-1.0 + (2.0 * i - 1.0) / n), 0.0);
            deg.push_back(1);
        } else {
            pos.emplace_back(-1.0 + (2.0 * i - 1.0) / n, 0.0);
            deg.push_back(fam == ConvergenceFamily::AlternatingSegment && i % 2 == 0 ? -1 : 1);
        }
    }
    return VortexConfig(std::move(pos), std::move(deg));
}

/// Potential of the limiting probability measure of a family.
inline double convergence_limit(ConvergenceFamily fam, cplx z) {
    switch (fam) {
    case ConvergenceFamily::UniformSegment: {
        // (1/2) int_{-1}^{1} ln|z - s| ds
        auto F = [&](double s) {
            const cplx w = z - s;
            return (-w * std::log(w) + w).real();
        };
        return 0.5 * (F(1.0) - F(-1.0));
    }
    case ConvergenceFamily::AlternatingSegment: return 0.0;
    case ConvergenceFamily::PointMass: return std::log(std::abs(z));
    }
    return 0.0;
}

/// L^2 distance on the probe annulus between u_N and the limit potential, for each N.
inline std::vector<ConvergenceRow> convergence_demo(ConvergenceFamily fam, const std::vector<int>& sizes,
                                                    const ProbeAnnulus& probe = {}) {
    std::vector<ConvergenceRow> out;
    for (int n : sizes) {
        const VortexConfig cfg = convergence_family_config(fam, n);
        for (cplx p : cfg.positions()) {
            const double r = std::abs(p - probe.center);
            if (r >= probe.inner && r <= probe.outer)
                throw Error(ErrorCode::ProbeTouchesVortex, "a vortex lies in the probe annulus");
        }
        const LogPotential u(cfg, Domain::disk(probe.center, 10.0 * probe.outer));
        const int n_theta = 256;
        const double e2 = integrate_interval(
            [&](double r) {
                double acc = 0.0;
                for (int k = 0; k < n_theta; ++k) {
                    const cplx z = probe.center + std::polar(r, 2 * pi * k / n_theta);
                    const double diff = u.value(z) - convergence_limit(fam, z);
                    acc += diff * diff;
                }
                return acc * (2 * pi / n_theta) * r;
            },
            probe.inner, probe.outer, 16, 4);
        out.push_back({n, std::sqrt(e2)});
    }
    return out;
}

} // namespace stharm
