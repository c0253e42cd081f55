#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "runner.hpp"

namespace stharm {

namespace detail {

inline Json disk_json(double r) { return {{"outer", r}}; }

inline Json sector_region(double from, double to, int sign) {
    return {{"predicate", {{"type", "sector"}, {"from", from}, {"to", to}}}, {"sign", sign}};
}

inline Json field_checks(const Json& measure) {
    Json c = Json::array();
    c.push_back({{"check", "stationarity"}, {"tol", 1e-6}});
    c.push_back({{"check", "euler"}, {"tol", 1e-6}, {"pressure", "bernoulli"}});
    if (!measure.is_null()) c.push_back(measure);
    return c;
}

inline RunReport run_document(const Json& doc, const std::string& description, const std::string& anchor,
                              std::optional<double> tol) {
    Scenario s = parse_scenario(doc);
    s.description = description;
    s.anchor = anchor;
    return run_scenario(s, tol);
}

inline Json doc(const std::string& id, const std::string& kind, Json payload, Json checks) {
    return {{"schema", kScenarioSchema}, {"id", id}, {"kind", kind}, {"payload", std::move(payload)}, {"checks", std::move(checks)}};
}

inline Json re_z2_series() { return {{"coeffs", {0.0, 0.0, 1.0}}}; }

inline RunReport vortex_patch_report(std::optional<double> tol) {
    RunReport rep;
    rep.id = "vortex-patch";
    rep.kind = "builtin-example";
    const QuadraticField h(Domain::disk(0.0, 1.0));
    const TestPlan plan;
    auto rs = stationarity_checks(h, rep.id, {}, Expectation::NonStationary, tol.value_or(1e-6), plan);
    rep.checks.insert(rep.checks.end(), rs.begin(), rs.end());
    rep.checks.push_back(euler_check(h, rep.id, {}, PressureModel::Rotational, tol.value_or(1e-6), plan));
    return rep;
}

inline RunReport non_radon_report(std::optional<double>) {
    RunReport rep;
    rep.id = "non-radon-1d";
    rep.kind = "builtin-example";
    CheckResult exact{"non-radon-variation", rep.id};
    Json rows = Json::array();
    bool ok = true;
    for (double a : {0.45, 0.3, 0.09, 0.009}) {
        const NonRadonReport r = non_radon_demo(a);
        const double want = 2.0 * (std::floor(1.0 / a) - 1.0);
        exact.residuals.push_back(std::abs(r.variation - want));
        rows.push_back({{"a", a}, {"atoms", r.count}, {"variation", r.variation}, {"expected", want},
                        {"omega_deviation", r.omega_deviation}});
        ok = ok && r.variation == want && r.omega_deviation == 0.0;
    }
    exact.parameters = {{"rows", rows}};
    exact.pass = ok;
    exact.verdict = ok ? "variation-2(floor(1/a)-1)" : "variation-differs";
    rep.checks.push_back(std::move(exact));

    CheckResult big{"non-radon-unbounded", rep.id};
    const double a = 0.019;
    const NonRadonReport r = non_radon_demo(a);
    big.residuals = {r.variation};
    big.parameters = {{"a", a}, {"threshold", 100.0}, {"variation", r.variation}};
    big.pass = r.variation > 100.0 && r.omega_deviation == 0.0;
    big.verdict = big.pass ? "variation-exceeds-threshold" : "variation-bounded";
    rep.checks.push_back(std::move(big));

    CsvTable t({"x", "jump"});
    for (const auto& at : non_radon_demo(0.09).atoms) t.add({CsvTable::num(at.point.real()), CsvTable::num(at.weight)});
    rep.files["atoms.csv"] = t.str();
    return rep;
}

inline RunReport segment_convergence_report(std::optional<double>) {
    RunReport rep;
    rep.id = "segment-convergence";
    rep.kind = "builtin-example";
    const std::vector<int> sizes = {8, 16, 32, 64};
    const auto rows = convergence_demo(ConvergenceFamily::UniformSegment, sizes);
    CheckResult c{"convergence", rep.id};
    bool ok = true;
    CsvTable t({"n", "l2_error"});
    for (std::size_t k = 0; k < rows.size(); ++k) {
        c.residuals.push_back(rows[k].error);
        t.add({std::to_string(rows[k].n), CsvTable::num(rows[k].error)});
        if (k > 0) ok = ok && rows[k].error < rows[k - 1].error;
    }
    c.parameters = {{"sizes", sizes}, {"probe", {{"inner", 1.5}, {"outer", 2.5}}}};
    c.pass = ok;
    c.verdict = ok ? "monotone-decrease" : "not-monotone";
    rep.checks.push_back(std::move(c));
    rep.files["convergence.csv"] = t.str();
    return rep;
}

} // namespace detail

inline const std::vector<Builtin>& builtins() {
    using detail::doc;
    using detail::run_document;
    static const std::vector<Builtin> all = [] {
        std::vector<Builtin> b;
        auto add_doc = [&b](std::string id, std::string description, std::string anchor, Json d) {
            b.push_back({id, description, anchor, [d, description, anchor](std::optional<double> tol) {
                             return run_document(d, description, anchor, tol);
                         },
                         d});
        };
        auto add = [&b](std::string id, std::string description, std::string anchor,
                        std::function<RunReport(std::optional<double>)> f) {
            b.push_back({id, description, anchor, [f, description, anchor](std::optional<double> tol) {
                             RunReport r = f(tol);
                             r.description = description;
                             r.anchor = anchor;
                             return r;
                         },
                         Json()});
        };

        add_doc("re-z", "h = Re z on the unit disk", "omega = 1 is holomorphic, so Re z is stationary",
                doc("re-z", "sheet-field", {{"series", {{"coeffs", {0.0, 1.0}}}}, {"domain", detail::disk_json(1.0)}},
                    detail::field_checks({{"check", "measure"}, {"expect_curves", 0}})));

        add_doc("ln-abs-z", "h = ln|z| on the disk of radius 2, one vortex of degree 1",
                "omega = 1/z^2 is holomorphic away from 0 and the flux of T around 0 vanishes",
                doc("ln-abs-z", "vortex-config", {{"positions", {{0.0, 0.0}}}, {"degrees", {1}}},
                    {{{"check", "stationarity"}, {"tol", 1e-6}},
                     {{"check", "euler"}, {"tol", 1e-6}, {"pressure", "bernoulli"}},
                     {{"check", "flux"}, {"tol", 1e-9}, {"deltas", {0.05, 0.1, 0.2}}}}));

        add("vortex-patch", "h = |z|^2 / 2 on the unit disk", "omega = conj(z)^2 is not holomorphic; the velocity is a rigid rotation",
            detail::vortex_patch_report);

        add_doc("abs-x", "h = |x| on the unit disk", "a single straight interface with density 2",
                doc("abs-x", "sheet-field",
                    {{"series", {{"coeffs", {0.0, 1.0}}}},
                     {"domain", detail::disk_json(1.0)},
                     {"regions",
                      {{{"predicate", {{"type", "half-plane"}, {"normal", {1.0, 0.0}}}}, {"sign", 1}},
                       {{"predicate", {{"type", "half-plane"}, {"normal", {-1.0, 0.0}}}}, {"sign", -1}}}}},
                    detail::field_checks({{"check", "measure"}, {"expect_curves", 1}, {"expect_sign", "positive"}})));

        add_doc("abs-re-z2", "h = |Re z^2| on the unit disk", "support is the zero set of Re z^2, four rays with positive density",
                doc("abs-re-z2", "sheet-field",
                    {{"series", detail::re_z2_series()},
                     {"domain", detail::disk_json(1.0)},
                     {"regions",
                      {{{"predicate", {{"type", "level"}, {"level", 0.0}, {"sign", 1}}}, {"sign", 1}},
                       {{"predicate", {{"type", "level"}, {"level", 0.0}, {"sign", -1}}}, {"sign", -1}}}}},
                    detail::field_checks({{"check", "measure"},
                                          {"expect_rays", {pi / 4, 3 * pi / 4, 5 * pi / 4, 7 * pi / 4}},
                                          {"expect_sign", "positive"}})));

        add_doc("theta-cos2phi", "h = theta(phi) r^2 cos 2phi with theta = -1 on [pi/4, 3pi/4]",
                "supp(mu) is the union of the rays at pi/4 and 3pi/4",
                doc("theta-cos2phi", "sheet-field",
                    {{"series", detail::re_z2_series()},
                     {"domain", detail::disk_json(1.0)},
                     {"regions", {detail::sector_region(pi / 4, 3 * pi / 4, -1), detail::sector_region(3 * pi / 4, 9 * pi / 4, 1)}}},
                    detail::field_checks(
                        {{"check", "measure"}, {"expect_rays", {pi / 4, 3 * pi / 4}}, {"expect_sign", "positive"}})));

        add_doc("theta-cos2phi-no-sign", "h = theta(phi) r^2 cos 2phi with theta = +1 on [-3pi/4, pi/4]",
                "the measure carries positive and negative mass",
                doc("theta-cos2phi-no-sign", "sheet-field",
                    {{"series", detail::re_z2_series()},
                     {"domain", detail::disk_json(1.0)},
                     {"regions", {detail::sector_region(-3 * pi / 4, pi / 4, 1), detail::sector_region(pi / 4, 5 * pi / 4, -1)}}},
                    detail::field_checks(
                        {{"check", "measure"}, {"expect_rays", {pi / 4, 5 * pi / 4}}, {"expect_sign", "mixed"}})));

        {
            Json checks = detail::field_checks({{"check", "measure"}, {"expect_curves", 5}, {"expect_sign", "positive"}});
            checks.push_back({{"check", "rays"}, {"count", 5}, {"spacing", 2 * pi / 5}, {"radius", 0.1}});
            add_doc("branch-z-5-2", "h = |Re z^(5/2)| on the unit disk", "the zero set near 0 is five rays at equal angles 2pi/5",
                    doc("branch-z-5-2", "branch-field",
                        {{"half_exponent", 2.5}, {"factor", {{"coeffs", {1.0}}}}, {"domain", detail::disk_json(1.0)}}, checks));
        }

        add_doc("three-vortex-2-neg1-2", "vortices at -1, 0, 1 with degrees 2, -1, 2",
                "the configuration is a stationary equilibrium of the point-vortex system",
                doc("three-vortex-2-neg1-2", "vortex-config",
                    {{"positions", {{-1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}}},
                     {"degrees", {2, -1, 2}},
                     {"gauge", {{"anchor", 1}, {"anchor_position", {0.0, 0.0}}, {"second", 2}, {"axis", 0}, {"value", 1.0}}}},
                    {{{"check", "equilibrium"}, {"tol", 1e-12}},
                     {{"check", "flux"}, {"tol", 1e-9}, {"deltas", {0.1, 0.2, 0.4}}},
                     {{"check", "stationarity"}, {"tol", 1e-6}}}));

        add("non-radon-1d", "h' = +-1 alternating on (1/(n+1), 1/n)", "|h'| = 1 while the variation of h'' on (a, 1) grows like 2/a",
            detail::non_radon_report);

        add("segment-convergence", "N unit vortices on [-1, 1] with degrees 1",
            "u_N converges to the logarithmic potential of the uniform measure on [-1, 1]", detail::segment_convergence_report);
        return b;
    }();
    return all;
}

} // namespace stharm
