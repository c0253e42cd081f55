#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "core.hpp"
#include "curvetrace.hpp"
#include "fields.hpp"
#include "io.hpp"
#include "measure.hpp"
#include "sheet.hpp"
#include "stationarity.hpp"
#include "test_functions.hpp"
#include "vortex.hpp"

namespace stharm {

/// Worker count from STHARM_WORKERS, defaulting to the hardware concurrency (at most 8).
inline unsigned worker_count() {
    if (const char* env = std::getenv("STHARM_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    return std::clamp(std::thread::hardware_concurrency(), 1u, 8u);
}

/// Calls f(i) for i in [0, n) on worker threads; results must be written by index.
/// The first exception in index order is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& f, unsigned workers = worker_count()) {
    std::vector<std::exception_ptr> errors(n);
    const unsigned t = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
    auto run = [&](unsigned w) {
        for (std::size_t i = w; i < n; i += t) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (t <= 1) {
        run(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < t; ++w) pool.emplace_back(run, w);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct CheckResult {
    CheckResult() = default;
    CheckResult(std::string name, std::string field) : check(std::move(name)), field_id(std::move(field)) {}

    std::string check;
    std::string field_id;
    Json parameters = Json::object();
    std::vector<double> residuals;
    std::string verdict;
    bool pass = false;
    std::string note;
};

inline Json to_json(const CheckResult& c) {
    Json j = {{"check", c.check}, {"field_id", c.field_id}, {"parameters", c.parameters}, {"residuals", c.residuals},
              {"verdict", c.verdict}, {"pass", c.pass}};
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

enum class Expectation { Stationary, NonStationary };

/// Random test functions used by the checks.
struct TestPlan {
    int count = 5;
    std::uint64_t seed = 1;
    double min_rho = 0.15;   // fractions of the domain radius
    double max_rho = 0.35;
    double keep_out = 0.05;
};

inline double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }
inline double min_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end()); }

namespace detail {

inline std::string stationarity_verdict(double r, double tol) {
    if (r <= tol) return "stationary";
    if (r >= 1e-3) return "non-stationary";
    return "inconclusive";
}

inline bool matches(const std::string& verdict, Expectation e) {
    return verdict == (e == Expectation::Stationary ? "stationary" : "non-stationary");
}

inline std::vector<TestVectorField> plan_vector_fields(const Domain& dom, std::span<const cplx> avoid, const TestPlan& p,
                                                       std::uint64_t salt) {
    std::mt19937_64 rng(p.seed * 0x9e3779b97f4a7c15ULL + salt);
    std::vector<TestVectorField> out;
    for (int k = 0; k < p.count; ++k) {
        const TestBump b = random_bump(rng, dom, p.min_rho * dom.outer, p.max_rho * dom.outer, avoid, p.keep_out * dom.outer);
        out.push_back(random_vector_field(rng, b));
    }
    return out;
}

inline std::vector<TestBump> plan_bumps(const Domain& dom, std::span<const cplx> avoid, const TestPlan& p, std::uint64_t salt) {
    std::mt19937_64 rng(p.seed * 0x9e3779b97f4a7c15ULL + salt);
    std::vector<TestBump> out;
    for (int k = 0; k < p.count; ++k)
        out.push_back(random_bump(rng, dom, p.min_rho * dom.outer, p.max_rho * dom.outer, avoid, p.keep_out * dom.outer));
    return out;
}

/// Square grid inside the domain as far as possible from the given points.
inline Grid default_grid(const Domain& dom, std::span<const cplx> avoid) {
    const double R = dom.outer, half = 0.2 * R;
    Grid best{dom.center - cplx(half, half), dom.center + cplx(half, half), 20, 20};
    double best_d = -1.0;
    for (int ring = 0; ring < 3; ++ring)
        for (int k = 0; k < (ring == 0 ? 1 : 8); ++k) {
            const cplx c = dom.center + std::polar(0.3 * ring * R, 2 * pi * k / 8 + 0.3);
            const Grid g{c - cplx(half, half), c + cplx(half, half), 20, 20};
            bool ok = true;
            for (cplx q : {g.lo, g.hi, cplx(g.lo.real(), g.hi.imag()), cplx(g.hi.real(), g.lo.imag())})
                ok = ok && std::abs(q - dom.center) < 0.95 * R;
            if (dom.is_annulus()) ok = ok && std::abs(c - dom.center) - std::sqrt(2.0) * half > 1.05 * dom.inner;
            if (!ok) continue;
            double d = std::numeric_limits<double>::infinity();
            for (cplx p : avoid) {
                const double cx = std::clamp(p.real(), g.lo.real(), g.hi.real());
                const double cy = std::clamp(p.imag(), g.lo.imag(), g.hi.imag());
                d = std::min(d, std::abs(p - cplx(cx, cy)));
            }
            if (d > best_d) {
                best_d = d;
                best = g;
            }
        }
    return best;
}

} // namespace detail

/// Holomorphy of omega, weak divergence of T, flux of T and the inner variation, as four records.
template <ScalarField F>
std::vector<CheckResult> stationarity_checks(const F& h, const std::string& fid, std::span<const cplx> avoid,
                                             Expectation expect, double tol, const TestPlan& plan) {
    const Domain dom = h.domain();
    const double R = dom.outer;
    const double quad_tol = std::min(1e-8, 1e-2 * tol) * std::max(1.0, dom.area() / pi);
    std::vector<CheckResult> out;

    {
        CheckResult c{"holomorphy", fid};
        std::mt19937_64 rng(plan.seed);
        const auto rects = random_rectangles(rng, dom, 5, avoid, plan.keep_out * R);
        auto omega = [&h](cplx z) { return h.omega(z); };
        std::vector<double> morera;
        for (const auto& r : rects) morera.push_back(morera_residual(omega, Contour{r}, 512));
        const Grid g = detail::default_grid(dom, avoid);
        std::vector<double> cr;
        for (double s : {1e-2, 1e-3, 1e-4, 1e-5}) cr.push_back(cauchy_riemann_residual(omega, g, s * R));
        c.residuals = morera;
        c.residuals.push_back(cr.back());
        c.parameters = {{"rectangles", rects.size()}, {"cr_steps", {1e-2 * R, 1e-3 * R, 1e-4 * R, 1e-5 * R}}, {"cr_by_step", cr},
                        {"grid", {json_io::to_json(g.lo), json_io::to_json(g.hi)}}, {"tol", tol}};
        if (expect == Expectation::Stationary) {
            c.verdict = detail::stationarity_verdict(std::max(max_of(morera), cr.back()), tol);
        } else {
            // a non-holomorphic omega keeps a Cauchy-Riemann residual of order one as the step shrinks
            c.verdict = min_of(cr) >= 1.0 || max_of(morera) >= 1e-3 ? "non-stationary"
                                                                      : detail::stationarity_verdict(cr.back(), tol);
        }
        c.pass = detail::matches(c.verdict, expect);
        out.push_back(std::move(c));
    }

    const auto fields = detail::plan_vector_fields(dom, avoid, plan, 11);
    {
        CheckResult c{"weak-divergence", fid};
        std::vector<double> r(fields.size());
        parallel_for(fields.size(), [&](std::size_t k) {
            const Vec2 v = weakform_divT(h, fields[k], quad_tol);
            r[k] = std::max(std::abs(v.x), std::abs(v.y));
        });
        c.residuals = r;
        c.parameters = {{"test_fields", fields.size()}, {"quad_tol", quad_tol}, {"tol", tol}};
        c.verdict = expect == Expectation::Stationary ? detail::stationarity_verdict(max_of(r), tol)
                                                      : (max_of(r) >= 1e-3 ? "non-stationary" : detail::stationarity_verdict(max_of(r), tol));
        c.pass = detail::matches(c.verdict, expect);
        out.push_back(std::move(c));
    }
    {
        CheckResult c{"flux", fid};
        std::vector<std::pair<cplx, double>> circles;
        for (cplx p : avoid)
            for (double f : {0.05, 0.1, 0.2}) {
                const double d = f * R;
                bool ok = dom.contains_disk(p, d);
                for (cplx q : avoid)
                    if (q != p && std::abs(q - p) <= d * 1.5) ok = false;
                if (ok) circles.emplace_back(p, d);
            }
        std::mt19937_64 rng(plan.seed + 23);
        for (const auto& b : detail::plan_bumps(dom, avoid, plan, 23)) circles.emplace_back(b.center(), b.radius());
        std::vector<double> r;
        Json centers = Json::array();
        for (const auto& [z, d] : circles) {
            r.push_back(norm(flux_T(h, z, d, 512)));
            centers.push_back({{"center", json_io::to_json(z)}, {"radius", d}});
        }
        c.residuals = r;
        c.parameters = {{"circles", centers}, {"tol", tol}};
        c.verdict = expect == Expectation::Stationary ? detail::stationarity_verdict(max_of(r), tol)
                                                      : (max_of(r) >= 1e-3 ? "non-stationary" : detail::stationarity_verdict(max_of(r), tol));
        c.pass = detail::matches(c.verdict, expect);
        out.push_back(std::move(c));
    }
    {
        CheckResult c{"inner-variation", fid};
        std::vector<double> r(fields.size());
        parallel_for(fields.size(), [&](std::size_t k) { r[k] = std::abs(inner_variation_derivative(h, fields[k], 1e-4, quad_tol)); });
        c.residuals = r;
        c.parameters = {{"test_fields", fields.size()}, {"t_step", 1e-4}, {"quad_tol", quad_tol}, {"tol", tol}};
        // smaller threshold for detection: the first variation of a patch is of order 1e-4 on small bumps
        c.verdict = expect == Expectation::Stationary ? detail::stationarity_verdict(max_of(r), tol)
                                                      : (max_of(r) >= 1e-4 ? "non-stationary" : detail::stationarity_verdict(max_of(r), tol));
        c.pass = detail::matches(c.verdict, expect);
        out.push_back(std::move(c));
    }
    return out;
}

template <ScalarField F>
CheckResult euler_check(const F& h, const std::string& fid, std::span<const cplx> avoid, PressureModel pressure, double tol,
                        const TestPlan& plan) {
    const Domain dom = h.domain();
    const double quad_tol = std::min(1e-8, 1e-2 * tol) * std::max(1.0, dom.area() / pi);
    const auto fields = detail::plan_vector_fields(dom, avoid, plan, 37);
    CheckResult c{"euler", fid};
    std::vector<double> r(fields.size());
    parallel_for(fields.size(), [&](std::size_t k) { r[k] = std::abs(euler_weakform(h, fields[k], quad_tol, pressure)); });
    c.residuals = r;
    c.parameters = {{"pressure", pressure == PressureModel::Bernoulli ? "bernoulli" : "rotational"},
                    {"test_fields", fields.size()}, {"quad_tol", quad_tol}, {"tol", tol}};
    c.pass = max_of(r) <= tol;
    c.verdict = c.pass ? "weak-euler-solution" : "not-a-weak-euler-solution";
    return c;
}

/// Options of the measure check.
struct MeasureExpectation {
    std::optional<std::vector<double>> ray_angles;  // expected directions of the support rays
    std::optional<cplx> ray_apex;
    std::optional<std::string> sign;                // "positive", "negative" or "mixed"
    std::optional<double> total_variation;
    std::optional<int> curves;
};

struct MeasureOutcome {
    std::vector<CheckResult> checks;
    VorticityMeasure measure;
};

template <class Base>
MeasureOutcome measure_checks(const SheetField<Base>& h, const std::string& fid, const MeasureExpectation& ex, double tol,
                              const TestPlan& plan) {
    MeasureOutcome out;
    out.measure = measure_reconstruct(h);
    const VorticityMeasure& mu = out.measure;
    const Domain dom = h.domain();

    {
        CheckResult c{"measure-pairing", fid};
        TestPlan p = plan;
        p.keep_out = 0.0;
        const auto bumps = detail::plan_bumps(dom, {}, p, 53);
        std::vector<double> r(bumps.size()), weak(bumps.size());
        parallel_for(bumps.size(), [&](std::size_t k) {
            weak[k] = laplacian_pairing(h, bumps[k], 1e-9);
            r[k] = std::abs(weak[k] - pairing_from_measure(mu, bumps[k]));
        });
        c.residuals = r;
        c.parameters = {{"bumps", bumps.size()}, {"laplacian_pairings", weak}, {"tol", tol}};
        c.pass = max_of(r) <= tol;
        c.verdict = c.pass ? "equivalent" : "mismatch";
        out.checks.push_back(std::move(c));
    }
    {
        CheckResult c{"density-law", fid};
        double worst = 0.0, level_worst = 0.0;
        for (const auto& dc : mu.curves)
            for (std::size_t k = 0; k < dc.curve.size(); ++k) {
                const cplx z = dc.curve.points[k];
                double g = 0.0, v = 0.0;
                if constexpr (SheetField<Base>::harmonic_base) {
                    g = norm(h.base().gradient(z));
                    v = h.base().value(z);
                } else {
                    const auto [G, dG] = h.base().primitive(z);
                    g = std::abs(dG);
                    v = G.real();
                }
                if (dc.density[k] != 0.0) worst = std::max(worst, std::abs(std::abs(dc.density[k]) - 2.0 * g));
                level_worst = std::max(level_worst, std::abs(v - dc.curve.level));
            }
        c.residuals = {worst, level_worst};
        c.parameters = {{"density_tol", 1e-8}, {"level_tol", 1e-10}};
        c.pass = worst <= 1e-8 && level_worst <= 1e-10;
        c.verdict = c.pass ? "density-equals-twice-gradient" : "density-law-violated";
        out.checks.push_back(std::move(c));
    }
    const MassSummary m = mass_and_sign(mu, dom);
    if (ex.sign || ex.total_variation) {
        CheckResult c{"mass-sign", fid};
        c.parameters["total_variation"] = m.total;
        c.parameters["positive_mass"] = m.positive;
        c.parameters["negative_mass"] = m.negative;
        const double small = 1e-9 * std::max(1.0, m.total);
        std::string sign = m.positive > small && m.negative > small ? "mixed"
                           : m.positive > small                     ? "positive"
                           : m.negative > small                     ? "negative"
                                                                    : "zero";
        c.verdict = sign;
        c.pass = true;
        if (ex.sign) {
            c.parameters["expected_sign"] = *ex.sign;
            c.pass = c.pass && sign == *ex.sign;
            if (*ex.sign == "positive") c.residuals.push_back(m.negative);
            if (*ex.sign == "negative") c.residuals.push_back(m.positive);
        }
        if (ex.total_variation) {
            c.parameters["expected_total_variation"] = *ex.total_variation;
            c.residuals.push_back(std::abs(m.total - *ex.total_variation));
            c.pass = c.pass && std::abs(m.total - *ex.total_variation) <= 1e-6 * std::max(1.0, *ex.total_variation);
        }
        out.checks.push_back(std::move(c));
    }
    if (ex.ray_angles || ex.curves) {
        CheckResult c{"support-curves", fid};
        c.parameters["curves_found"] = mu.curves.size();
        c.pass = true;
        if (ex.curves) {
            c.parameters["expected_curves"] = *ex.curves;
            c.pass = static_cast<int>(mu.curves.size()) == *ex.curves;
        }
        if (ex.ray_angles) {
            const cplx apex = ex.ray_apex.value_or(dom.center);
            std::vector<double> found;
            for (const auto& dc : mu.curves) {
                // direction of the curve seen from the apex, taken at its far end
                const cplx a = dc.curve.points.front(), b = dc.curve.points.back();
                const cplx far = std::abs(a - apex) > std::abs(b - apex) ? a : b;
                double ang = std::arg(far - apex);
                if (ang < 0.0) ang += 2 * pi;
                found.push_back(ang);
                double straight = 0.0;
                for (cplx z : dc.curve.points)
                    if (std::abs(z - apex) > 1e-9 * dom.outer) {
                        double d = std::abs(std::remainder(std::arg(z - apex) - ang, 2 * pi));
                        straight = std::max(straight, d);
                    }
                c.residuals.push_back(straight);
            }
            std::sort(found.begin(), found.end());
            std::vector<double> want = *ex.ray_angles;
            std::sort(want.begin(), want.end());
            c.parameters["found_angles"] = found;
            c.parameters["expected_angles"] = want;
            bool ok = found.size() == want.size();
            for (std::size_t k = 0; ok && k < want.size(); ++k) {
                const double d = std::abs(std::remainder(found[k] - want[k], 2 * pi));
                c.residuals.push_back(d);
                ok = d <= 1e-6;
            }
            for (double r : c.residuals) ok = ok && r <= 1e-6;
            c.pass = c.pass && ok;
        }
        c.verdict = c.pass ? "support-as-expected" : "support-differs";
        out.checks.push_back(std::move(c));
    }
    return out;
}

template <class Field>
CheckResult rays_check(const Field& f, const std::string& fid, cplx center, double radius, int count, double spacing) {
    CheckResult c{"rays", fid};
    const auto rays = local_rays(f, center, radius);
    c.parameters = {{"center", json_io::to_json(center)}, {"radius", radius}, {"expected_count", count},
                    {"expected_spacing", spacing}, {"angles", rays}};
    bool ok = static_cast<int>(rays.size()) == count;
    for (std::size_t k = 0; k < rays.size(); ++k) {
        const double next = k + 1 < rays.size() ? rays[k + 1] : rays[0] + 2 * pi;
        const double d = std::abs((next - rays[k]) - spacing);
        c.residuals.push_back(d);
        ok = ok && d <= 1e-6;
    }
    c.pass = ok;
    c.verdict = ok ? "equal-angles" : "angles-differ";
    return c;
}

/// Files produced by a run, keyed by name relative to the scenario's output directory.
struct RunReport {
    std::string id;
    std::string kind;
    std::string description;
    std::string anchor;
    std::vector<CheckResult> checks;
    std::map<std::string, std::string> files;

    bool pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
    }

    Json to_json() const {
        Json cs = Json::array();
        for (const auto& c : checks) cs.push_back(stharm::to_json(c));
        return {{"schema", kReportSchema},
                {"id", id},
                {"kind", kind},
                {"description", description},
                {"anchor", anchor},
                {"conventions",
                 {{"stress_tensor", "T = 1/2 |grad h|^2 I - grad h (x) grad h"},
                  {"density_normal", "nu points from the first listed region to the later one"},
                  {"numbers", "shortest round-trip decimal (JSON), 17 significant digits (CSV)"}}},
                {"checks", cs},
                {"verdict", pass() ? "PASS" : "FAIL"}};
    }

    std::string residuals_csv() const {
        CsvTable t({"check", "field_id", "index", "residual", "pass"});
        for (const auto& c : checks)
            for (std::size_t k = 0; k < c.residuals.size(); ++k)
                t.add({c.check, c.field_id, std::to_string(k), CsvTable::num(c.residuals[k]), c.pass ? "1" : "0"});
        return t.str();
    }
};

/// Scenario after schema validation.
struct Scenario {
    std::string id;
    std::string kind;
    Json payload;
    Json checks = Json::array();
    std::string description;
    std::string anchor;
    std::optional<std::string> output;
};

namespace detail {

inline const std::vector<std::string>& known_kinds() {
    static const std::vector<std::string> k = {"sheet-field", "branch-field", "vortex-config", "builtin-example"};
    return k;
}

inline Expectation expectation(const Json& c, const std::string& where) {
    if (!c.contains("expect")) return Expectation::Stationary;
    const std::string e = json_io::string(c["expect"], where + ".expect");
    if (e == "stationary") return Expectation::Stationary;
    if (e == "non-stationary") return Expectation::NonStationary;
    json_io::schema_error(where, "expect must be 'stationary' or 'non-stationary'");
}

inline TestPlan test_plan(const Json& c, const std::string& where) {
    TestPlan p;
    if (c.contains("test_functions")) p.count = json_io::integer(c["test_functions"], where + ".test_functions");
    if (c.contains("seed")) p.seed = static_cast<std::uint64_t>(json_io::integer(c["seed"], where + ".seed"));
    if (p.count < 1) json_io::schema_error(where, "test_functions must be positive");
    return p;
}

inline void validate_check(const Json& c, const std::string& kind, const std::string& where) {
    if (!c.is_object() || !c.contains("check")) json_io::schema_error(where, "each check needs a 'check' name");
    const std::string name = json_io::string(c["check"], where + ".check");
    const bool field = kind == "sheet-field" || kind == "branch-field";
    const bool vortex = kind == "vortex-config";
    if (name == "stationarity" && (field || vortex)) {
        json_io::check_keys(c, where, {"check"}, {"tol", "expect", "test_functions", "seed"});
        expectation(c, where);
        test_plan(c, where);
    } else if (name == "euler" && (field || vortex)) {
        json_io::check_keys(c, where, {"check"}, {"tol", "pressure", "test_functions", "seed"});
        if (c.contains("pressure")) {
            const std::string p = json_io::string(c["pressure"], where + ".pressure");
            if (p != "bernoulli" && p != "rotational") json_io::schema_error(where, "pressure must be 'bernoulli' or 'rotational'");
        }
        test_plan(c, where);
    } else if (name == "measure" && field) {
        json_io::check_keys(c, where, {"check"},
                            {"tol", "test_functions", "seed", "expect_rays", "ray_apex", "expect_sign", "expect_total_variation", "expect_curves"});
        if (c.contains("expect_rays")) {
            if (!c["expect_rays"].is_array()) json_io::schema_error(where, "expect_rays must be an array of angles");
            for (const auto& a : c["expect_rays"]) json_io::number(a, where + ".expect_rays");
        }
        if (c.contains("ray_apex")) json_io::point(c["ray_apex"], where + ".ray_apex");
        if (c.contains("expect_sign")) {
            const std::string s = json_io::string(c["expect_sign"], where + ".expect_sign");
            if (s != "positive" && s != "negative" && s != "mixed" && s != "zero") json_io::schema_error(where, "bad expect_sign");
        }
        if (c.contains("expect_total_variation")) json_io::number(c["expect_total_variation"], where + ".expect_total_variation");
        if (c.contains("expect_curves")) json_io::integer(c["expect_curves"], where + ".expect_curves");
        test_plan(c, where);
    } else if (name == "rays" && field) {
        json_io::check_keys(c, where, {"check", "count", "spacing"}, {"center", "radius"});
        json_io::integer(c["count"], where + ".count");
        json_io::number(c["spacing"], where + ".spacing");
        if (c.contains("center")) json_io::point(c["center"], where + ".center");
        if (c.contains("radius")) json_io::number(c["radius"], where + ".radius");
    } else if (name == "equilibrium" && vortex) {
        json_io::check_keys(c, where, {"check"}, {"tol", "expect"});
        if (c.contains("expect")) {
            const std::string e = json_io::string(c["expect"], where + ".expect");
            if (e != "equilibrium" && e != "no-equilibrium") json_io::schema_error(where, "expect must be 'equilibrium' or 'no-equilibrium'");
        }
    } else if (name == "flux" && vortex) {
        json_io::check_keys(c, where, {"check"}, {"tol", "deltas"});
        if (c.contains("deltas")) {
            if (!c["deltas"].is_array() || c["deltas"].empty()) json_io::schema_error(where, "deltas must be a non-empty array");
            for (const auto& d : c["deltas"])
                if (!(json_io::number(d, where + ".deltas") > 0.0)) json_io::schema_error(where, "deltas must be positive");
        }
    } else {
        json_io::schema_error(where, "check '" + name + "' is not available for kind '" + kind + "'");
    }
    if (c.contains("tol") && !(json_io::number(c["tol"], where + ".tol") > 0.0)) json_io::schema_error(where, "tol must be positive");
}

} // namespace detail

struct Builtin {
    std::string id;
    std::string description;
    std::string anchor;
    std::function<RunReport(std::optional<double> tol)> run;
    Json document;  // scenario document, null for builtins with a dedicated runner
};

const std::vector<Builtin>& builtins();

/// Validates a scenario document; payloads are constructed once so that invalid fields fail here.
inline Scenario parse_scenario(const Json& j) {
    json_io::check_keys(j, "scenario", {"schema", "id", "kind", "payload"}, {"checks", "output", "description", "anchor"});
    Scenario s;
    if (json_io::string(j["schema"], "scenario.schema") != kScenarioSchema)
        json_io::schema_error("scenario.schema", std::string("expected '") + kScenarioSchema + "'");
    s.id = json_io::string(j["id"], "scenario.id");
    if (s.id.empty() || s.id.find_first_of("/\\") != std::string::npos || s.id == "." || s.id == "..")
        json_io::schema_error("scenario.id", "id must be a plain non-empty name");
    s.kind = json_io::string(j["kind"], "scenario.kind");
    const auto& kinds = detail::known_kinds();
    if (std::find(kinds.begin(), kinds.end(), s.kind) == kinds.end()) json_io::schema_error("scenario.kind", "unknown kind '" + s.kind + "'");
    s.payload = j["payload"];
    if (j.contains("description")) s.description = json_io::string(j["description"], "scenario.description");
    if (j.contains("anchor")) s.anchor = json_io::string(j["anchor"], "scenario.anchor");
    if (j.contains("output")) s.output = json_io::string(j["output"], "scenario.output");
    if (j.contains("checks")) {
        if (!j["checks"].is_array()) json_io::schema_error("scenario.checks", "expected an array");
        s.checks = j["checks"];
    }
    for (std::size_t k = 0; k < s.checks.size(); ++k)
        detail::validate_check(s.checks[k], s.kind, "scenario.checks[" + std::to_string(k) + "]");

    try {
        if (s.kind == "sheet-field") json_io::harmonic_sheet(s.payload, "scenario.payload");
        else if (s.kind == "branch-field") json_io::branch_sheet(s.payload, "scenario.payload");
        else if (s.kind == "vortex-config") json_io::vortex_config(s.payload, "scenario.payload");
        else {
            json_io::check_keys(s.payload, "scenario.payload", {"builtin"});
            const std::string b = json_io::string(s.payload["builtin"], "scenario.payload.builtin");
            const auto& all = builtins();
            if (std::none_of(all.begin(), all.end(), [&](const Builtin& x) { return x.id == b; }))
                json_io::schema_error("scenario.payload.builtin", "unknown builtin '" + b + "'");
            if (!s.checks.empty()) json_io::schema_error("scenario.checks", "builtin examples carry their own checks");
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SchemaError) throw;
        throw Error(ErrorCode::SchemaError, std::string("scenario.payload: ") + e.what());
    }
    return s;
}

namespace detail {

inline double check_tol(const Json& c, std::optional<double> override_tol, double fallback) {
    if (override_tol) return *override_tol;
    if (c.contains("tol")) return c["tol"].get<double>();
    return fallback;
}

inline CheckResult failed_check(const std::string& name, const std::string& fid, const std::exception& e) {
    CheckResult c{name, fid};
    c.verdict = "error";
    c.pass = false;
    c.note = e.what();
    return c;
}

template <class Base>
void run_field_checks(const SheetField<Base>& h, const Scenario& s, std::optional<double> tol, RunReport& rep) {
    std::vector<cplx> avoid;
    std::vector<cplx> markers;
    if constexpr (!SheetField<Base>::harmonic_base) markers.push_back(h.base().branch_point());
    else {
        try {
            for (const auto& cp : find_critical_points(h.base(), h.domain())) markers.push_back(cp.location);
        } catch (const Error&) {
        }
    }
    std::optional<VorticityMeasure> mu;
    for (const auto& c : s.checks) {
        const std::string name = c["check"].get<std::string>();
        try {
            if (name == "stationarity") {
                auto rs = stationarity_checks(h, s.id, avoid, expectation(c, ""), check_tol(c, tol, 1e-6), test_plan(c, ""));
                rep.checks.insert(rep.checks.end(), rs.begin(), rs.end());
            } else if (name == "euler") {
                const PressureModel pm = c.value("pressure", std::string("bernoulli")) == "rotational" ? PressureModel::Rotational
                                                                                                      : PressureModel::Bernoulli;
                rep.checks.push_back(euler_check(h, s.id, avoid, pm, check_tol(c, tol, 1e-6), test_plan(c, "")));
            } else if (name == "measure") {
                MeasureExpectation ex;
                if (c.contains("expect_rays")) ex.ray_angles = c["expect_rays"].get<std::vector<double>>();
                if (c.contains("ray_apex")) ex.ray_apex = json_io::point(c["ray_apex"], "");
                if (c.contains("expect_sign")) ex.sign = c["expect_sign"].get<std::string>();
                if (c.contains("expect_total_variation")) ex.total_variation = c["expect_total_variation"].get<double>();
                if (c.contains("expect_curves")) ex.curves = c["expect_curves"].get<int>();
                auto mo = measure_checks(h, s.id, ex, check_tol(c, tol, 1e-6), test_plan(c, ""));
                rep.checks.insert(rep.checks.end(), mo.checks.begin(), mo.checks.end());
                mu = std::move(mo.measure);
            } else if (name == "rays") {
                const cplx center = c.contains("center") ? json_io::point(c["center"], "") : h.domain().center;
                const double radius = c.contains("radius") ? c["radius"].get<double>() : 0.1 * h.domain().outer;
                rep.checks.push_back(rays_check(h.base(), s.id, center, radius, c["count"].get<int>(), c["spacing"].get<double>()));
            }
        } catch (const std::exception& e) {
            rep.checks.push_back(failed_check(name, s.id, e));
        }
    }
    if (mu) {
        rep.files["measure.json"] = json_io::to_json(*mu).dump(2) + "\n";
        rep.files["curves.csv"] = curves_csv(*mu).str();
        rep.files["plot.svg"] = svg_plot(h.domain(), *mu, markers, s.id);
    }
}

inline void run_vortex_checks(const Scenario& s, std::optional<double> tol, RunReport& rep) {
    std::optional<Gauge> gauge;
    const VortexConfig cfg = json_io::vortex_config(s.payload, "payload", &gauge);
    std::optional<VortexConfig> solved;
    for (const auto& c : s.checks) {
        const std::string name = c["check"].get<std::string>();
        try {
            if (name == "equilibrium") {
                CheckResult r{"equilibrium", s.id};
                const bool want = c.value("expect", std::string("equilibrium")) == "equilibrium";
                const double t = check_tol(c, tol, 1e-12);
                const Gauge g = gauge.value_or(Gauge{0, cfg.position(0), 1, 0, cfg.size() > 1 ? cfg.position(1).real() : 0.0});
                r.parameters = {{"gauge", json_io::to_json(g)}, {"tol", t}};
                try {
                    SolverOptions opt;
                    opt.tolerance = t;
                    const auto sol = solve_equilibrium(cfg, g, opt);
                    r.residuals = {max_residual(sol.config) * sol.config.diameter()};
                    r.parameters["iterations"] = sol.iterations;
                    r.verdict = "equilibrium";
                    CsvTable tr({"iteration", "residual", "step_length"});
                    for (const auto& st : sol.trace)
                        tr.add({std::to_string(st.iteration), CsvTable::num(st.residual), CsvTable::num(st.step_length)});
                    rep.files["solver_trace.csv"] = tr.str();
                    rep.files["solution.json"] = json_io::to_json(sol.config).dump(2) + "\n";
                    solved = sol.config;
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::NoConvergence && e.code() != ErrorCode::CollisionDuringIteration) throw;
                    r.verdict = "no-equilibrium";
                    r.note = e.what();
                }
                r.pass = (r.verdict == "equilibrium") == want;
                rep.checks.push_back(std::move(r));
            } else if (name == "flux") {
                const VortexConfig& use = solved ? *solved : cfg;
                const double t = check_tol(c, tol, 1e-9);
                std::vector<double> deltas;
                if (c.contains("deltas")) deltas = c["deltas"].get<std::vector<double>>();
                else deltas = {0.1 * use.min_distance(), 0.2 * use.min_distance(), 0.4 * use.min_distance()};
                CheckResult r{"flux", s.id};
                Json rows = Json::array();
                for (std::size_t i = 0; i < use.size(); ++i) {
                    const auto fc = equilibrium_flux_check(use, i, deltas);
                    for (const auto& row : fc.rows) {
                        r.residuals.push_back(norm(row.flux - row.predicted));
                        rows.push_back({{"vortex", i}, {"delta", row.delta}, {"flux", json_io::to_json(row.flux)},
                                        {"predicted", json_io::to_json(row.predicted)}});
                    }
                }
                r.parameters = {{"rows", rows}, {"tol", t},
                                {"prediction", "flux = -2 pi (d_i / M) grad H_i(z_i), independent of delta"}};
                r.pass = max_of(r.residuals) <= t;
                r.verdict = r.pass ? "flux-matches-partial-gradient" : "flux-differs";
                rep.checks.push_back(std::move(r));
            } else if (name == "stationarity" || name == "euler") {
                const VortexConfig& use = solved ? *solved : cfg;
                const LogPotential u(use);
                const Domain dom = Domain::disk(u.domain().center, 2.0 * std::max(1.0, use.diameter()));
                const LogPotential uu(use, dom);
                if (name == "stationarity") {
                    auto rs = stationarity_checks(uu, s.id, use.positions(), expectation(c, ""), check_tol(c, tol, 1e-6), test_plan(c, ""));
                    rep.checks.insert(rep.checks.end(), rs.begin(), rs.end());
                } else {
                    const PressureModel pm = c.value("pressure", std::string("bernoulli")) == "rotational" ? PressureModel::Rotational
                                                                                                          : PressureModel::Bernoulli;
                    rep.checks.push_back(euler_check(uu, s.id, use.positions(), pm, check_tol(c, tol, 1e-6), test_plan(c, "")));
                }
            }
        } catch (const std::exception& e) {
            rep.checks.push_back(failed_check(name, s.id, e));
        }
    }
}

} // namespace detail

/// Runs a validated scenario. Check failures are recorded in the report, never thrown.
inline RunReport run_scenario(const Scenario& s, std::optional<double> tol = std::nullopt) {
    if (s.kind == "builtin-example") {
        const std::string b = s.payload["builtin"].get<std::string>();
        for (const auto& x : builtins())
            if (x.id == b) {
                RunReport r = x.run(tol);
                r.id = s.id;
                return r;
            }
        throw Error(ErrorCode::SchemaError, "unknown builtin '" + b + "'");
    }
    RunReport rep;
    rep.id = s.id;
    rep.kind = s.kind;
    rep.description = s.description;
    rep.anchor = s.anchor;
    if (s.kind == "sheet-field") detail::run_field_checks(json_io::harmonic_sheet(s.payload, "payload"), s, tol, rep);
    else if (s.kind == "branch-field") detail::run_field_checks(json_io::branch_sheet(s.payload, "payload"), s, tol, rep);
    else detail::run_vortex_checks(s, tol, rep);
    return rep;
}

/// Writes report.json, residuals.csv and the run's artifacts under dir.
inline void write_report(const RunReport& r, const std::filesystem::path& dir) {
    write_atomic(dir / "report.json", r.to_json().dump(2) + "\n");
    write_atomic(dir / "residuals.csv", r.residuals_csv());
    for (const auto& [name, content] : r.files) write_atomic(dir / name, content);
}

} // namespace stharm

#include "builtins.hpp"
