#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <stharm/runner.hpp>

namespace fs = std::filesystem;
using namespace stharm;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitInput = 1;
constexpr int kExitCheck = 2;

Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::SchemaError, "cannot read '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::SchemaError, path + ": " + e.what());
    }
}

const Builtin* find_builtin(const std::string& id) {
    for (const auto& b : builtins())
        if (b.id == id) return &b;
    return nullptr;
}

// "builtin:ID" or a scenario file.
Scenario load_scenario(const std::string& arg) {
    constexpr std::string_view prefix = "builtin:";
    if (arg.rfind(prefix, 0) == 0) {
        const std::string id = arg.substr(prefix.size());
        if (!find_builtin(id)) throw Error(ErrorCode::SchemaError, "unknown builtin '" + id + "'");
        return parse_scenario(Json{{"schema", kScenarioSchema}, {"id", id}, {"kind", "builtin-example"}, {"payload", {{"builtin", id}}}});
    }
    return parse_scenario(read_json(arg));
}

void print_report(const RunReport& r, const fs::path& dir) {
    std::printf("%s: %s\n", r.id.c_str(), r.pass() ? "PASS" : "FAIL");
    for (const auto& c : r.checks) {
        double worst = 0.0;
        for (double v : c.residuals) worst = std::max(worst, v);
        std::printf("  %-20s %-28s max residual %.3e %s\n", c.check.c_str(), c.verdict.c_str(), worst, c.pass ? "ok" : "FAILED");
        if (!c.note.empty()) std::printf("    note: %s\n", c.note.c_str());
    }
    std::printf("  outputs: %s\n", dir.string().c_str());
}

int cmd_run(const std::string& target, const std::optional<std::string>& out, std::optional<double> tol) {
    Scenario s;
    try {
        s = load_scenario(target);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    }
    const fs::path root = out ? fs::path(*out) : fs::path(s.output.value_or("out"));
    const RunReport r = run_scenario(s, tol);
    const fs::path dir = root / s.id;
    write_report(r, dir);
    print_report(r, dir);
    return r.pass() ? kExitPass : kExitCheck;
}

int cmd_list() {
    std::printf("%-28s %-16s %-52s %s\n", "id", "kind", "description", "anchor");
    for (const auto& b : builtins()) {
        const std::string kind = b.document.is_null() ? "builtin-example" : b.document["kind"].get<std::string>();
        std::printf("%-28s %-16s %-52s %s\n", b.id.c_str(), kind.c_str(), b.description.c_str(), b.anchor.c_str());
    }
    return kExitPass;
}

Json field_document(const std::string& field) {
    if (const Builtin* b = find_builtin(field)) {
        if (b->document.is_null()) throw Error(ErrorCode::SchemaError, "builtin '" + field + "' has no field payload");
        return b->document;
    }
    return read_json(field);
}

int cmd_trace(const std::string& field, double level, double step, const std::string& out) {
    std::vector<TracedCurve> curves;
    std::string id;
    try {
        const Scenario s = parse_scenario(field_document(field));
        id = s.id;
        if (s.kind == "sheet-field") {
            const HarmonicSheet h = json_io::harmonic_sheet(s.payload, "payload");
            curves = level_curves(h.base(), level, h.domain(), step);
        } else if (s.kind == "branch-field") {
            const BranchSheet h = json_io::branch_sheet(s.payload, "payload");
            curves = level_curves(h.base(), level, h.domain(), step);
        } else {
            throw Error(ErrorCode::SchemaError, "trace needs a sheet-field or branch-field");
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    }
    Json arr = Json::array();
    for (const auto& c : curves) arr.push_back(json_io::to_json(c));
    const fs::path dir = fs::path(out) / id;
    write_atomic(dir / "trace.json", Json{{"field", id}, {"level", level}, {"curves", arr}}.dump(2) + "\n");
    write_atomic(dir / "trace.csv", curves_csv(curves).str());
    std::printf("%s: %zu curve(s) at level %.17g\n", id.c_str(), curves.size(), level);
    for (std::size_t k = 0; k < curves.size(); ++k)
        std::printf("  curve %zu: %zu vertices, length %.6g, ends %s / %s\n", k, curves[k].size(), curves[k].length(),
                    to_string(curves[k].start_tag), to_string(curves[k].end_tag));
    std::printf("  outputs: %s\n", dir.string().c_str());
    return kExitPass;
}

int cmd_solve(const std::string& path, const std::string& out, double tol) {
    VortexConfig cfg({0.0}, {1});
    std::optional<Gauge> gauge;
    try {
        cfg = json_io::vortex_config(read_json(path), "config", &gauge);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    }
    const Gauge g = gauge.value_or(Gauge{0, cfg.position(0), 1, 0, cfg.size() > 1 ? cfg.position(1).real() : 0.0});
    const fs::path dir = fs::path(out);
    try {
        SolverOptions opt;
        opt.tolerance = tol;
        const EquilibriumSolution sol = solve_equilibrium(cfg, g, opt);
        CsvTable t({"iteration", "residual", "step_length"});
        for (const auto& st : sol.trace) t.add({std::to_string(st.iteration), CsvTable::num(st.residual), CsvTable::num(st.step_length)});
        write_atomic(dir / "trace.csv", t.str());
        write_atomic(dir / "config.json", json_io::to_json(sol.config).dump(2) + "\n");
        std::printf("converged in %d iteration(s), scaled residual %.3e\n", sol.iterations, sol.trace.back().residual);
        for (std::size_t i = 0; i < sol.config.size(); ++i)
            std::printf("  z%zu = (%.17g, %.17g)  d = %d\n", i, sol.config.position(i).real(), sol.config.position(i).imag(),
                        sol.config.degree(i));
        return kExitPass;
    } catch (const Error& e) {
        std::printf("no equilibrium: %s (%s)\n", e.what(), to_string(e.code()));
        return kExitCheck;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stationary harmonic fields: stationarity checks, vorticity measures and point-vortex equilibria"};
    app.require_subcommand(1);

    std::string target;
    std::optional<std::string> out;
    std::optional<double> tol;
    auto* run = app.add_subcommand("run", "Run a scenario file or builtin:ID");
    run->add_option("scenario", target, "scenario.json or builtin:ID")->required();
    run->add_option("--out", out, "output directory");
    run->add_option("--tol", tol, "override every check tolerance")->check(CLI::PositiveNumber);

    auto* list = app.add_subcommand("list-builtins", "List the builtin scenarios");

    std::string field;
    double level = 0.0, step = 0.0;
    std::string trace_out = "out";
    auto* trace = app.add_subcommand("trace", "Trace level curves of a field's base");
    trace->add_option("--field", field, "builtin id or scenario file of a sheet or branch field")->required();
    trace->add_option("--level", level, "level c")->required();
    trace->add_option("--step", step, "marching step (default R/100)");
    trace->add_option("--out", trace_out, "output directory");

    std::string config;
    std::string solve_out = "out";
    double solve_tol = 1e-12;
    auto* solve = app.add_subcommand("solve-vortex", "Solve for a point-vortex equilibrium");
    solve->add_option("config", config, "config.json with positions, degrees and an optional gauge")->required();
    solve->add_option("--out", solve_out, "output directory");
    solve->add_option("--tol", solve_tol, "residual tolerance")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInput;
    }

    try {
        if (*run) return cmd_run(target, out, tol);
        if (*list) return cmd_list();
        if (*trace) return cmd_trace(field, level, step, trace_out);
        if (*solve) return cmd_solve(config, solve_out, solve_tol);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCheck;
    }
    return kExitInput;
}
