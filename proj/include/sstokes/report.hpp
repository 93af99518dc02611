// report.hpp
// Serialization of results: canonical JSON, sweep tables as CSV, intensity
// grids as PGM. Writers target any std::ostream.

#pragma once

#include "sstokes/entanglement.hpp"
#include "sstokes/gaussian.hpp"
#include "sstokes/modes.hpp"
#include "sstokes/stokes.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace sstokes {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Canonical form: keys sorted (nlohmann::json objects are ordered maps),
/// shortest round-trip number formatting, no locale dependence, trailing newline.
inline std::string emit_json(const json& report) { return report.dump(2) + "\n"; }

inline void emit_json(const json& report, std::ostream& out) { out << emit_json(report); }

inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (res.ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf.data(), res.ptr);
}

inline json to_json(const GaussianBeamState& s) {
    json basis = json::array();
    for (const auto& e : s.basis()) basis.push_back({{"beam", e.beam}, {"p", e.mode.p}, {"q", e.mode.q}});
    json means = json::array();
    for (const auto& m : s.means()) means.push_back({m.real(), m.imag()});
    json cov = json::array();
    for (Eigen::Index r = 0; r < s.cov().rows(); ++r) {
        for (Eigen::Index c = 0; c < s.cov().cols(); ++c) cov.push_back(s.cov()(r, c));
    }
    return {{"basis", basis}, {"means", means}, {"cov", cov}, {"dimension", s.cov().rows()},
            {"schema_version", kSchemaVersion}};
}

inline json to_json(const StokesMeans& m) { return json::array({m.s0, m.s1, m.s2, m.s3}); }

inline json to_json(const PoincareCoords& p) {
    return {{"vector", {p.vector[0], p.vector[1], p.vector[2]}},
            {"noise_radii", {p.noise_radii[0], p.noise_radii[1], p.noise_radii[2]}}};
}

/// {means, variances_raw, variances_normalized, poincare, squeezed, theta, ...}
inline json to_json(const SqueezingReport& r) {
    json out;
    out["means"] = to_json(r.means);
    out["theta"] = r.means.theta;
    out["variances_raw"] = {r.variances.raw[0], r.variances.raw[1], r.variances.raw[2], r.variances.raw[3]};
    const auto n = r.variances.normalized();
    out["variances_normalized"] = {n[0], n[1], n[2], n[3]};
    out["poincare"] = r.means.s0 > 0.0 ? to_json(poincare_coords(r.means, r.variances)) : json(nullptr);
    out["squeezed"] = r.squeezed();
    json classes = json::array();
    for (auto c : r.classes) classes.push_back(std::string(name(c)));
    out["classes"] = classes;
    out["linearization_warning"] = r.variances.linearization_warning;
    return out;
}

inline json to_json(const ConditionalVariance& c) {
    return {{"observable", c.observable}, {"value", c.value}, {"sign", c.sign == 1 ? "+" : "-"},
            {"other_value", c.other_value}};
}

inline json to_json(const InseparabilityReport& r, std::string_view regime = "exact") {
    return {{"pair", r.pair_label()},
            {"numerator", r.numerator},
            {"denominator", r.denominator},
            {"I", r.value},
            {"separable", r.separable},
            {"sign_choices", {{std::string(name(r.a)), r.delta_a.sign == 1 ? "+" : "-"},
                              {std::string(name(r.b)), r.delta_b.sign == 1 ? "+" : "-"}}},
            {"conditional_variances", {{std::string(name(r.a)), r.delta_a.value}, {std::string(name(r.b)), r.delta_b.value}}},
            {"asymmetry_warning", r.asymmetry_warning},
            {"regime", std::string(regime)}};
}

inline json to_json(const AsymptoticInseparability& a) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return {{"regime", "asymptotic"},
            {"ratio", std::isfinite(a.ratio) ? json(a.ratio) : json("inf")},
            {"theta", a.theta},
            {"I", {{"S1,S2", opt(a.s1_s2)}, {"S3,S1", opt(a.s3_s1)}, {"S2,S3", opt(a.s2_s3)}}},
            {"ratio_warning", a.ratio_warning}};
}

/// Flattens numeric and boolean leaves into dotted paths ("a.b.0").
inline void flatten_scalars(const json& j, const std::string& prefix, std::vector<std::pair<std::string, double>>& out) {
    if (j.is_number()) {
        out.emplace_back(prefix, j.get<double>());
    } else if (j.is_boolean()) {
        out.emplace_back(prefix, j.get<bool>() ? 1.0 : 0.0);
    } else if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            flatten_scalars(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
        }
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            flatten_scalars(j[i], prefix.empty() ? std::to_string(i) : prefix + "." + std::to_string(i), out);
        }
    }
}

struct SweepTable {
    std::string parameter;
    std::vector<double> values;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  // rows[k] matches values[k]

    void validate() const {
        if (rows.size() != values.size()) throw std::invalid_argument("sweep table: row count differs from values");
        for (const auto& r : rows) {
            if (r.size() != columns.size()) throw std::invalid_argument("sweep table: missing cells");
        }
    }
};

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void emit_csv(const SweepTable& t, std::ostream& out) {
    t.validate();
    out << csv_field(t.parameter);
    for (const auto& c : t.columns) out << ',' << csv_field(c);
    out << '\n';
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        out << format_double(t.values[k]);
        for (double v : t.rows[k]) out << ',' << format_double(v);
        out << '\n';
    }
}

inline std::string emit_csv(const SweepTable& t) {
    std::ostringstream os;
    emit_csv(t, os);
    return os.str();
}

/// RFC-4180 reader for the tables written by emit_csv.
inline std::vector<std::vector<std::string>> read_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Binary PGM (P5), row-major, first row at the top. Intensities are scaled
/// linearly so the grid maximum maps to maxval; an all-zero grid stays black.
inline void emit_pgm(const std::vector<double>& values, int width, int height, std::ostream& out, int bits = 16) {
    if (width <= 0 || height <= 0 || values.size() != static_cast<std::size_t>(width) * height) {
        throw std::invalid_argument("emit_pgm: grid is empty or mis-sized");
    }
    if (bits != 8 && bits != 16) throw std::invalid_argument("emit_pgm: bit depth must be 8 or 16");
    const int maxval = bits == 16 ? 65535 : 255;
    const double peak = *std::max_element(values.begin(), values.end());
    out << "P5\n# linear intensity scaling, no gamma\n" << width << ' ' << height << '\n' << maxval << '\n';
    for (double v : values) {
        const double scaled = peak > 0.0 ? std::clamp(v / peak, 0.0, 1.0) * maxval : 0.0;
        const auto level = static_cast<std::uint16_t>(std::lround(scaled));
        if (bits == 16) out.put(static_cast<char>(level >> 8));
        out.put(static_cast<char>(level & 0xff));
    }
}

inline void emit_pgm(const IntensityGrid& grid, std::ostream& out, int bits = 16) {
    emit_pgm(grid.values, grid.grid.samples, grid.grid.samples, out, bits);
}

inline std::string emit_pgm(const IntensityGrid& grid, int bits = 16) {
    std::ostringstream os;
    emit_pgm(grid, os, bits);
    return os.str();
}

/// x,y,intensity rows in image order.
inline void emit_intensity_csv(const IntensityGrid& g, std::ostream& out) {
    out << "x,y,intensity\n";
    for (int r = 0; r < g.grid.samples; ++r) {
        for (int c = 0; c < g.grid.samples; ++c) {
            out << format_double(g.grid.x(c)) << ',' << format_double(g.grid.y(r)) << ',' << format_double(g.at(r, c))
                << '\n';
        }
    }
}

struct PoincarePlotData {
    std::string label;
    std::array<double, 3> vector{};
    std::array<double, 3> noise_radii{};

    void validate() const {
        const double n = std::sqrt(vector[0] * vector[0] + vector[1] * vector[1] + vector[2] * vector[2]);
        if (n > 1.0 + 1e-9) throw std::invalid_argument("Poincare vector longer than 1");
    }
};

inline void emit_poincare_csv(const std::vector<PoincarePlotData>& points, std::ostream& out) {
    out << "label,s1,s2,s3,r1,r2,r3\n";
    for (const auto& p : points) {
        p.validate();
        out << csv_field(p.label);
        for (double v : p.vector) out << ',' << format_double(v);
        for (double v : p.noise_radii) out << ',' << format_double(v);
        out << '\n';
    }
}

/// Orthographic view onto the (S2, S3) plane: sphere outline, axes, and a
/// filled noise ellipse at each point. Radii below 2 px are drawn at 2 px.
inline void emit_poincare_pgm(const std::vector<PoincarePlotData>& points, std::ostream& out, int size = 256) {
    std::vector<double> img(static_cast<std::size_t>(size) * size, 0.0);
    const double half = 0.5 * (size - 1);
    const double radius = 0.45 * size;
    auto to_px = [&](double u, double v) { return std::pair{half + u * radius, half - v * radius}; };
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            const double d = std::hypot(c - half, r - half);
            double& px = img[static_cast<std::size_t>(r) * size + c];
            if (std::abs(d - radius) < 0.75) px = 0.5;
            if ((std::abs(c - half) < 0.5 || std::abs(r - half) < 0.5) && d < radius) px = 0.25;
        }
    }
    for (const auto& p : points) {
        p.validate();
        const auto [cx, cy] = to_px(p.vector[1], p.vector[2]);
        const double rx = std::max(2.0, p.noise_radii[1] * radius);
        const double ry = std::max(2.0, p.noise_radii[2] * radius);
        for (int r = 0; r < size; ++r) {
            for (int c = 0; c < size; ++c) {
                const double u = (c - cx) / rx, v = (r - cy) / ry;
                if (u * u + v * v <= 1.0) img[static_cast<std::size_t>(r) * size + c] = 1.0;
            }
        }
    }
    emit_pgm(img, size, size, out, 8);
}

}  // namespace sstokes
