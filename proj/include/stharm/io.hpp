#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "curvetrace.hpp"
#include "fields.hpp"
#include "measure.hpp"
#include "series.hpp"
#include "sheet.hpp"
#include "vortex.hpp"

namespace stharm {

using Json = nlohmann::ordered_json;

inline constexpr const char* kScenarioSchema = "stharm-scenario/1";
inline constexpr const char* kReportSchema = "stharm-report/1";

namespace json_io {

[[noreturn]] inline void schema_error(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::SchemaError, where + ": " + what);
}

/// Rejects keys outside `allowed` and requires every key in `required`.
inline void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> required,
                       std::initializer_list<const char*> optional = {}) {
    if (!j.is_object()) schema_error(where, "expected an object");
    std::set<std::string> allowed;
    for (const char* k : required) {
        allowed.insert(k);
        if (!j.contains(k)) schema_error(where, std::string("missing key '") + k + "'");
    }
    for (const char* k : optional) allowed.insert(k);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) schema_error(where, "unknown key '" + it.key() + "'");
}

inline double number(const Json& j, const std::string& where) {
    if (!j.is_number()) schema_error(where, "expected a number");
    return j.get<double>();
}

inline int integer(const Json& j, const std::string& where) {
    if (!j.is_number_integer()) schema_error(where, "expected an integer");
    return j.get<int>();
}

inline std::string string(const Json& j, const std::string& where) {
    if (!j.is_string()) schema_error(where, "expected a string");
    return j.get<std::string>();
}

inline cplx point(const Json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) schema_error(where, "expected a point [x, y]");
    return {number(j[0], where), number(j[1], where)};
}

inline Json to_json(cplx z) { return Json::array({z.real(), z.imag()}); }
inline Json to_json(const Vec2& v) { return Json::array({v.x, v.y}); }

inline Series series(const Json& j, const std::string& where) {
    check_keys(j, where, {"coeffs"}, {"center", "radius"});
    const cplx c = j.contains("center") ? point(j["center"], where + ".center") : cplx(0.0, 0.0);
    const double r = j.contains("radius") ? number(j["radius"], where + ".radius") : 1e6;
    if (!j["coeffs"].is_array() || j["coeffs"].empty()) schema_error(where, "coeffs must be a non-empty array");
    std::vector<cplx> a;
    for (const auto& e : j["coeffs"]) {
        if (e.is_number()) a.emplace_back(e.get<double>(), 0.0);
        else a.push_back(point(e, where + ".coeffs"));
    }
    if (!(r > 0.0)) schema_error(where, "radius must be positive");
    return Series(c, std::move(a), r);
}

inline Json to_json(const Series& s) {
    Json coeffs = Json::array();
    for (cplx a : s.coeffs()) coeffs.push_back(to_json(a));
    return {{"center", to_json(s.center())}, {"coeffs", coeffs}, {"radius", s.radius()}};
}

inline Domain domain(const Json& j, const std::string& where) {
    check_keys(j, where, {"outer"}, {"center", "inner"});
    Domain d;
    d.center = j.contains("center") ? point(j["center"], where + ".center") : cplx(0.0, 0.0);
    d.inner = j.contains("inner") ? number(j["inner"], where + ".inner") : 0.0;
    d.outer = number(j["outer"], where + ".outer");
    if (!(d.outer > 0.0) || d.inner < 0.0 || d.inner >= d.outer) schema_error(where, "need 0 <= inner < outer");
    return d;
}

inline Json to_json(const Domain& d) {
    return {{"center", to_json(d.center)}, {"inner", d.inner}, {"outer", d.outer}};
}

inline RegionPredicate predicate(const Json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("type")) schema_error(where, "predicate needs a 'type'");
    const std::string t = string(j["type"], where + ".type");
    if (t == "all") {
        check_keys(j, where, {"type"});
        return AllPredicate{};
    }
    if (t == "sector") {
        check_keys(j, where, {"type", "from", "to"}, {"center"});
        SectorPredicate s;
        s.center = j.contains("center") ? point(j["center"], where + ".center") : cplx(0.0, 0.0);
        s.from = number(j["from"], where + ".from");
        s.to = number(j["to"], where + ".to");
        if (!(s.to > s.from) || s.to - s.from > 2 * pi + 1e-12) schema_error(where, "sector needs from < to <= from + 2 pi");
        return s;
    }
    if (t == "half-plane") {
        check_keys(j, where, {"type", "normal"}, {"point"});
        HalfPlanePredicate h;
        h.point = j.contains("point") ? point(j["point"], where + ".point") : cplx(0.0, 0.0);
        h.normal = to_vec(point(j["normal"], where + ".normal"));
        return h;
    }
    if (t == "level") {
        check_keys(j, where, {"type", "level", "sign"});
        LevelPredicate l;
        l.level = number(j["level"], where + ".level");
        l.sign = integer(j["sign"], where + ".sign");
        if (l.sign != 1 && l.sign != -1) schema_error(where, "sign must be +1 or -1");
        return l;
    }
    schema_error(where, "unknown predicate type '" + t + "'");
}

inline Json to_json(const RegionPredicate& p) {
    return std::visit(
        [](const auto& q) -> Json {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, AllPredicate>) return {{"type", "all"}};
            else if constexpr (std::is_same_v<T, SectorPredicate>)
                return {{"type", "sector"}, {"center", to_json(q.center)}, {"from", q.from}, {"to", q.to}};
            else if constexpr (std::is_same_v<T, HalfPlanePredicate>)
                return {{"type", "half-plane"}, {"point", to_json(q.point)}, {"normal", to_json(q.normal)}};
            else return {{"type", "level"}, {"level", q.level}, {"sign", q.sign}};
        },
        p);
}

inline std::vector<Region> regions(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) schema_error(where, "expected a non-empty array of regions");
    std::vector<Region> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const std::string w = where + "[" + std::to_string(k) + "]";
        check_keys(j[k], w, {"predicate", "sign"}, {"offset"});
        Region r;
        r.predicate = predicate(j[k]["predicate"], w + ".predicate");
        r.sign = integer(j[k]["sign"], w + ".sign");
        r.offset = j[k].contains("offset") ? number(j[k]["offset"], w + ".offset") : 0.0;
        out.push_back(r);
    }
    return out;
}

inline Json to_json(const std::vector<Region>& rs) {
    Json a = Json::array();
    for (const auto& r : rs) a.push_back({{"predicate", to_json(r.predicate)}, {"sign", r.sign}, {"offset", r.offset}});
    return a;
}

inline HarmonicSheet harmonic_sheet(const Json& j, const std::string& where) {
    check_keys(j, where, {"series", "domain"}, {"regions"});
    HarmonicField base(series(j["series"], where + ".series"));
    std::vector<Region> rs = j.contains("regions") ? regions(j["regions"], where + ".regions")
                                                   : std::vector<Region>{Region{AllPredicate{}, 1, 0.0}};
    return HarmonicSheet(std::move(base), std::move(rs), domain(j["domain"], where + ".domain"));
}

inline BranchSheet branch_sheet(const Json& j, const std::string& where) {
    check_keys(j, where, {"half_exponent", "factor", "domain"}, {"branch_point", "regions"});
    const cplx z0 = j.contains("branch_point") ? point(j["branch_point"], where + ".branch_point") : cplx(0.0, 0.0);
    Json fj = j["factor"];
    if (fj.is_object() && !fj.contains("center")) fj["center"] = to_json(z0);
    BranchField base(z0, number(j["half_exponent"], where + ".half_exponent"), series(fj, where + ".factor"));
    std::vector<Region> rs = j.contains("regions") ? regions(j["regions"], where + ".regions")
                                                   : std::vector<Region>{Region{AllPredicate{}, 1, 0.0}};
    return BranchSheet(std::move(base), std::move(rs), domain(j["domain"], where + ".domain"));
}

inline Json to_json(const HarmonicSheet& h) {
    return {{"series", to_json(h.base().primitive())}, {"regions", to_json(h.regions())}, {"domain", to_json(h.domain())}};
}

inline Json to_json(const BranchSheet& h) {
    return {{"branch_point", to_json(h.base().branch_point())},
            {"half_exponent", h.base().half_exponent()},
            {"factor", to_json(h.base().factor())},
            {"regions", to_json(h.regions())},
            {"domain", to_json(h.domain())}};
}

inline Gauge gauge(const Json& j, const std::string& where) {
    check_keys(j, where, {"anchor", "second"}, {"anchor_position", "axis", "value"});
    Gauge g;
    g.anchor = static_cast<std::size_t>(integer(j["anchor"], where + ".anchor"));
    g.second = static_cast<std::size_t>(integer(j["second"], where + ".second"));
    g.anchor_position = j.contains("anchor_position") ? point(j["anchor_position"], where + ".anchor_position") : cplx(0.0, 0.0);
    g.axis = j.contains("axis") ? integer(j["axis"], where + ".axis") : 0;
    g.value = j.contains("value") ? number(j["value"], where + ".value") : 1.0;
    return g;
}

inline Json to_json(const Gauge& g) {
    return {{"anchor", g.anchor}, {"anchor_position", to_json(g.anchor_position)}, {"second", g.second}, {"axis", g.axis}, {"value", g.value}};
}

/// {positions: [[x, y], ...], degrees: [...]}, plus an optional gauge.
inline VortexConfig vortex_config(const Json& j, const std::string& where, std::optional<Gauge>* gauge_out = nullptr) {
    check_keys(j, where, {"positions", "degrees"}, {"gauge"});
    if (!j["positions"].is_array() || !j["degrees"].is_array()) schema_error(where, "positions and degrees must be arrays");
    std::vector<cplx> pos;
    std::vector<int> deg;
    for (const auto& p : j["positions"]) pos.push_back(point(p, where + ".positions"));
    for (const auto& d : j["degrees"]) deg.push_back(integer(d, where + ".degrees"));
    if (pos.empty() || pos.size() != deg.size()) schema_error(where, "positions and degrees must have equal nonzero length");
    for (int d : deg)
        if (d == 0) schema_error(where, "degrees must be nonzero");
    if (gauge_out) *gauge_out = j.contains("gauge") ? std::optional<Gauge>(gauge(j["gauge"], where + ".gauge")) : std::nullopt;
    return VortexConfig(std::move(pos), std::move(deg));
}

inline Json to_json(const VortexConfig& c) {
    Json pos = Json::array();
    for (cplx z : c.positions()) pos.push_back(to_json(z));
    return {{"positions", pos}, {"degrees", c.degrees()}};
}

inline Json to_json(const TracedCurve& c, const std::vector<double>* density = nullptr) {
    Json verts = Json::array();
    for (std::size_t k = 0; k < c.size(); ++k) {
        Json v = {{"x", c.points[k].real()}, {"y", c.points[k].imag()}, {"s", c.arclength[k]}};
        if (density) v["lambda"] = (*density)[k];
        verts.push_back(v);
    }
    return {{"level", c.level}, {"step", c.step}, {"start", to_string(c.start_tag)}, {"end", to_string(c.end_tag)}, {"vertices", verts}};
}

inline Json to_json(const VorticityMeasure& mu) {
    Json curves = Json::array();
    for (const auto& c : mu.curves) curves.push_back(to_json(c.curve, &c.density));
    Json atoms = Json::array();
    for (const auto& a : mu.atoms) atoms.push_back({{"point", to_json(a.point)}, {"weight", a.weight}});
    return {{"normal_convention", "nu points from the lower-labelled side to the higher-labelled side (first listed region to later region)"},
            {"curves", curves},
            {"atoms", atoms}};
}

} // namespace json_io

/// Writes through a temporary file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// CSV with a header row; numbers printed with 17 significant digits.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(const std::vector<std::string>& row) { rows_.push_back(row); }

    static std::string num(double v) { return format_g17(v); }

    std::string str() const {
        std::ostringstream os;
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << r[k];
            os << "\n";
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return os.str();
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline CsvTable curves_csv(const VorticityMeasure& mu) {
    CsvTable t({"curve", "x", "y", "s", "c", "lambda"});
    for (std::size_t i = 0; i < mu.curves.size(); ++i) {
        const auto& c = mu.curves[i];
        for (std::size_t k = 0; k < c.curve.size(); ++k)
            t.add({std::to_string(i), CsvTable::num(c.curve.points[k].real()), CsvTable::num(c.curve.points[k].imag()),
                   CsvTable::num(c.curve.arclength[k]), CsvTable::num(c.curve.level), CsvTable::num(c.density[k])});
    }
    return t;
}

inline CsvTable curves_csv(const std::vector<TracedCurve>& curves) {
    CsvTable t({"curve", "x", "y", "s", "c"});
    for (std::size_t i = 0; i < curves.size(); ++i)
        for (std::size_t k = 0; k < curves[i].size(); ++k)
            t.add({std::to_string(i), CsvTable::num(curves[i].points[k].real()), CsvTable::num(curves[i].points[k].imag()),
                   CsvTable::num(curves[i].arclength[k]), CsvTable::num(curves[i].level)});
    return t;
}

/// Plot of the domain, support curves coloured by density sign, and marked points.
inline std::string svg_plot(const Domain& dom, const VorticityMeasure& mu, const std::vector<cplx>& markers,
                            const std::string& title) {
    const double R = dom.outer, size = 480.0, pad = 20.0;
    const double s = (size - 2 * pad) / (2 * R);
    auto X = [&](cplx z) { return format_g17(pad + (z.real() - dom.center.real() + R) * s); };
    auto Y = [&](cplx z) { return format_g17(size - pad - (z.imag() - dom.center.imag() + R) * s); };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
    os << "<title>" << title << "</title>\n";
    os << "<circle cx=\"" << X(dom.center) << "\" cy=\"" << Y(dom.center) << "\" r=\"" << format_g17(R * s)
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    if (dom.is_annulus())
        os << "<circle cx=\"" << X(dom.center) << "\" cy=\"" << Y(dom.center) << "\" r=\"" << format_g17(dom.inner * s)
           << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (const auto& c : mu.curves) {
        for (std::size_t k = 0; k + 1 < c.curve.size(); ++k) {
            const double lam = 0.5 * (c.density[k] + c.density[k + 1]);
            os << "<line x1=\"" << X(c.curve.points[k]) << "\" y1=\"" << Y(c.curve.points[k]) << "\" x2=\""
               << X(c.curve.points[k + 1]) << "\" y2=\"" << Y(c.curve.points[k + 1]) << "\" stroke=\""
               << (lam >= 0.0 ? "crimson" : "royalblue") << "\" stroke-width=\"2\"/>\n";
        }
        if (!c.curve.points.empty())
            os << "<text x=\"" << X(c.curve.points.front()) << "\" y=\"" << Y(c.curve.points.front())
               << "\" font-size=\"10\">c=" << format_g17(c.curve.level) << "</text>\n";
    }
    for (const auto& a : mu.atoms)
        os << "<circle cx=\"" << X(a.point) << "\" cy=\"" << Y(a.point) << "\" r=\"4\" fill=\""
           << (a.weight >= 0.0 ? "crimson" : "royalblue") << "\"/>\n";
    for (cplx m : markers)
        os << "<rect x=\"" << format_g17(pad + (m.real() - dom.center.real() + R) * s - 3) << "\" y=\""
           << format_g17(size - pad - (m.imag() - dom.center.imag() + R) * s - 3)
           << "\" width=\"6\" height=\"6\" fill=\"black\"/>\n";
    os << "</svg>\n";
    return os.str();
}

} // namespace stharm
