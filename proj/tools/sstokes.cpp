// sstokes command-line front end.
// Exit codes: 0 success, 1 diagnostics (bad input), 2 runtime numerical failure.

#include "sstokes/dsl.hpp"
#include "sstokes/modes.hpp"
#include "sstokes/report.hpp"
#include "sstokes/verify.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>

namespace {

using namespace sstokes;

constexpr int kOk = 0;
constexpr int kDiagnostics = 1;
constexpr int kRuntime = 2;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Writes through `emit` to the path, or to stdout for "-".
template <class F>
void write_output(const std::string& path, bool binary, F&& emit) {
    if (path.empty() || path == "-") {
        emit(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw InputError("cannot write '" + path + "'");
    emit(out);
}

struct Loaded {
    std::string source;
    dsl::CircuitIR ir;
    dsl::Plan plan;
};

// Parses and compiles; prints diagnostics and returns nullopt on failure.
std::optional<Loaded> load(const std::string& path) {
    Loaded l;
    l.source = read_file(path);
    auto parsed = dsl::parse(l.source);
    for (const auto& d : parsed.diagnostics) std::cerr << d.format(path) << '\n';
    if (!parsed.ok()) return std::nullopt;
    l.ir = std::move(parsed.ir);
    auto compiled = dsl::compile(l.ir, l.source);
    for (const auto& d : compiled.diagnostics) std::cerr << d.format(path) << '\n';
    if (!compiled.ok()) return std::nullopt;
    l.plan = std::move(compiled.plan);
    return l;
}

void emit_flat_csv(const json& report, std::ostream& out) {
    std::vector<std::pair<std::string, double>> flat;
    flatten_scalars(report, "", flat);
    out << "key,value\n";
    for (const auto& [k, v] : flat) out << csv_field(k) << ',' << format_double(v) << '\n';
}

int cmd_run(const std::string& path, bool dump_state, const std::string& format, const std::string& out_path,
            std::size_t samples, std::uint64_t seed, bool show_plan) {
    auto l = load(path);
    if (!l) return kDiagnostics;
    if (show_plan) {
        std::cout << dsl::describe(l->plan);
        return kOk;
    }
    dsl::RunOptions opt;
    opt.include_state = dump_state;
    opt.monte_carlo_samples = samples;
    opt.seed = seed;
    const auto result = dsl::run(l->plan, opt);
    if (result.failure) {
        std::cerr << result.failure->format(path) << '\n';
        return kRuntime;
    }
    write_output(out_path, false, [&](std::ostream& os) {
        if (format == "csv") {
            emit_flat_csv(result.report, os);
        } else {
            emit_json(result.report, os);
        }
    });
    return kOk;
}

int cmd_verify() {
    int failed = 0;
    for (const auto& c : run_self_checks()) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
        failed += c.passed ? 0 : 1;
    }
    return failed == 0 ? kOk : kRuntime;
}

int cmd_poincare(const std::string& path, const std::string& out) {
    auto l = load(path);
    if (!l) return kDiagnostics;
    const auto result = dsl::run(l->plan);
    if (result.failure) {
        std::cerr << result.failure->format(path) << '\n';
        return kRuntime;
    }
    std::vector<PoincarePlotData> points;
    for (const auto& d : result.report["detectors"]) {
        if (d["kind"] != "stokes" || !d.contains("report") || d["report"]["poincare"].is_null()) continue;
        const auto& p = d["report"]["poincare"];
        PoincarePlotData pt;
        pt.label = d["statement"].get<std::string>();
        for (std::size_t i = 0; i < 3; ++i) {
            pt.vector[i] = p["vector"][i].get<double>();
            pt.noise_radii[i] = p["noise_radii"][i].get<double>();
        }
        points.push_back(pt);
    }
    if (points.empty()) {
        std::cerr << path << ": no single-beam Stokes detector with non-zero intensity to plot\n";
        return kDiagnostics;
    }
    const bool csv = out == "csv" || ends_with(out, ".csv");
    const bool pgm = out == "pgm" || ends_with(out, ".pgm");
    if (!csv && !pgm) throw InputError("--out must be pgm, csv, or a path ending in .pgm or .csv");
    const std::string target = (out == "csv" || out == "pgm") ? "-" : out;
    write_output(target, pgm, [&](std::ostream& os) {
        if (csv) {
            emit_poincare_csv(points, os);
        } else {
            emit_poincare_pgm(points, os);
        }
    });
    return kOk;
}

int cmd_intensity(const std::string& expr, const std::string& out, int samples, double extent, int bits) {
    Superposition s;
    try {
        s = parse_superposition(expr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDiagnostics;
    }
    GridConfig grid{extent, samples};
    grid.validate();
    const auto img = intensity_grid(synthesize(s.normalized(), grid));
    const bool csv = ends_with(out, ".csv") || out == "csv";
    const std::string target = (out == "csv" || out == "pgm") ? "-" : out;
    write_output(target, !csv, [&](std::ostream& os) {
        if (csv) {
            emit_intensity_csv(img, os);
        } else {
            emit_pgm(img, os, bits);
        }
    });
    return kOk;
}

int cmd_sweep(const std::string& path, const std::string& param, const std::string& range, const std::string& out) {
    auto l = load(path);
    if (!l) return kDiagnostics;
    std::string why;
    const auto values = dsl::parse_range(range, &why);
    if (!values) {
        std::cerr << "error: --range: " << why << '\n';
        return kDiagnostics;
    }
    SweepTable table;
    table.parameter = param;
    auto flat_run = [&](const dsl::CircuitIR& ir, std::vector<std::pair<std::string, double>>& flat) -> int {
        auto compiled = dsl::compile(ir, l->source);
        for (const auto& d : compiled.diagnostics) std::cerr << d.format(path) << '\n';
        if (!compiled.ok()) return kDiagnostics;
        const auto result = dsl::run(compiled.plan);
        if (result.failure) {
            std::cerr << result.failure->format(path) << '\n';
            return kRuntime;
        }
        flatten_scalars(result.report["detectors"], "", flat);
        return kOk;
    };
    // Validate the selector even for an empty range.
    if (auto probe = dsl::substitute(l->ir, param, 0.0); probe.error) {
        std::cerr << "error: --param: " << *probe.error << '\n';
        return kDiagnostics;
    }
    if (values->empty()) {
        std::vector<std::pair<std::string, double>> flat;
        if (int rc = flat_run(l->ir, flat)) return rc;
        for (const auto& [k, v] : flat) table.columns.push_back(k);
    }
    for (double v : *values) {
        const auto sub = dsl::substitute(l->ir, param, v);
        std::vector<std::pair<std::string, double>> flat;
        if (int rc = flat_run(sub.ir, flat)) return rc;
        std::vector<std::string> cols;
        std::vector<double> row;
        for (const auto& [k, x] : flat) {
            cols.push_back(k);
            row.push_back(x);
        }
        if (table.columns.empty()) table.columns = cols;
        if (cols != table.columns) {
            std::cerr << "error: report layout changed at " << param << " = " << v << '\n';
            return kRuntime;
        }
        table.values.push_back(v);
        table.rows.push_back(std::move(row));
    }
    write_output(out, false, [&](std::ostream& os) { emit_csv(table, os); });
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatial Stokes simulator: Gaussian-state modelling of TEM mode pairs"};
    app.require_subcommand(1);

    std::string file, format = "json", out, param, range, mode;
    bool dump_state = false, show_plan = false;
    std::size_t samples = 0;
    std::uint64_t seed = 20240607;
    int grid_samples = 256, bits = 16;
    double extent = 4.0;

    auto* run = app.add_subcommand("run", "Parse, compile and run a circuit file; print the report");
    run->add_option("file", file, "Circuit file")->required();
    run->add_flag("--dump-state", dump_state, "Include the final Gaussian state in the report");
    run->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    run->add_option("--out", out, "Output path (default stdout)");
    run->add_option("--samples", samples, "Monte-Carlo samples for Stokes detectors (0 = off)");
    run->add_option("--seed", seed, "Seed for Monte-Carlo sampling");
    run->add_flag("--plan", show_plan, "Print the compiled plan instead of running it");

    auto* verify = app.add_subcommand("verify", "Run the built-in self checks");

    auto* poincare = app.add_subcommand("poincare", "Plot Poincare-sphere points of a circuit's Stokes detectors");
    poincare->add_option("file", file, "Circuit file")->required();
    poincare->add_option("--out", out, "pgm, csv, or a .pgm/.csv path")->required();

    auto* intensity = app.add_subcommand("intensity", "Render the intensity of a mode superposition");
    intensity->add_option("--mode", mode, "Expression such as u01+iu10")->required();
    intensity->add_option("--out", out, "Output .pgm or .csv path")->required();
    intensity->add_option("--samples", grid_samples, "Pixels per side")->check(CLI::Range(2, 4096));
    intensity->add_option("--extent", extent, "Half-width in beam waists")->check(CLI::PositiveNumber);
    intensity->add_option("--bits", bits, "PGM bit depth")->check(CLI::IsMember({8, 16}));

    auto* sweep = app.add_subcommand("sweep", "Re-run a circuit over a parameter range; CSV table output");
    sweep->add_option("file", file, "Circuit file")->required();
    sweep->add_option("--param", param, "KEY or LINE:KEY")->required();
    sweep->add_option("--range", range, "a:b:n")->required();
    sweep->add_option("--out", out, "Output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kDiagnostics;
    }

    try {
        if (*run) return cmd_run(file, dump_state, format, out, samples, seed, show_plan);
        if (*verify) return cmd_verify();
        if (*poincare) return cmd_poincare(file, out);
        if (*intensity) return cmd_intensity(mode, out, grid_samples, extent, bits);
        if (*sweep) return cmd_sweep(file, param, range, out);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDiagnostics;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kOk;
}
