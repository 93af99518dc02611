// modes.hpp
// Hermite-Gauss transverse mode functions at the beam waist, their
// superpositions, grid synthesis and overlap quadrature.
//
// Lengths are in units of the beam waist (w = 1). Mode functions are
//   u_pq(x, y) = N_pq H_p(sqrt2 x) H_q(sqrt2 y) exp(-(x^2 + y^2)),
//   N_pq = sqrt(2/pi) / sqrt(2^(p+q) p! q!),
// with H_n the physicists' Hermite polynomials, so that each u_pq has unit
// L2 norm over the plane.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <compare>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sstokes {

using complex = std::complex<double>;

inline constexpr int kDefaultMaxOrder = 6;

struct ModeIndex {
    int p = 0;  // order along x
    int q = 0;  // order along y

    constexpr int order() const { return p + q; }
    constexpr ModeIndex swapped() const { return {q, p}; }
    constexpr bool odd_in_x() const { return p % 2 != 0; }

    auto operator<=>(const ModeIndex&) const = default;

    std::string str() const { return "TEM" + std::to_string(p) + std::to_string(q); }
};

inline void validate(ModeIndex m, int max_order = kDefaultMaxOrder) {
    if (m.p < 0 || m.q < 0) {
        throw std::invalid_argument("mode indices must be non-negative, got (" +
                                    std::to_string(m.p) + "," + std::to_string(m.q) + ")");
    }
    if (m.order() > max_order) {
        throw std::out_of_range("mode " + m.str() + " has order " + std::to_string(m.order()) +
                                ", exceeding the configured maximum " +
                                std::to_string(max_order));
    }
}

/// Physicists' Hermite polynomial H_n(x) by the three-term recurrence.
inline double hermite(int n, double x) {
    if (n < 0) throw std::invalid_argument("hermite: negative order");
    double h_prev = 1.0;
    if (n == 0) return h_prev;
    double h = 2.0 * x;
    for (int k = 1; k < n; ++k) {
        const double next = 2.0 * x * h - 2.0 * k * h_prev;
        h_prev = h;
        h = next;
    }
    return h;
}

namespace detail {

inline double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

// One-dimensional factor H_n(sqrt2 t) exp(-t^2); the 2-D mode is the product
// of two of these times the normalization, which keeps index-swap symmetry exact.
inline double axis_factor(int n, double t) {
    return hermite(n, std::numbers::sqrt2 * t) * std::exp(-t * t);
}

inline double normalization(ModeIndex m) {
    const double denom = std::ldexp(factorial(m.p) * factorial(m.q), m.order());
    return std::sqrt(2.0 / std::numbers::pi) / std::sqrt(denom);
}

}  // namespace detail

/// Normalized Hermite-Gauss amplitude u_pq(x, y); rejects modes above max_order.
inline double hg_amplitude(ModeIndex m, double x, double y, int max_order = kDefaultMaxOrder) {
    validate(m, max_order);
    return detail::normalization(m) * (detail::axis_factor(m.p, x) * detail::axis_factor(m.q, y));
}

/// A finite linear combination of Hermite-Gauss modes. Coefficients are kept
/// exactly as given; normalization happens only on request.
class Superposition {
public:
    using Term = std::pair<ModeIndex, complex>;

    Superposition() = default;
    explicit Superposition(ModeIndex m) { add(m, 1.0); }
    Superposition(std::initializer_list<Term> terms) {
        for (const auto& [m, c] : terms) add(m, c);
    }

    Superposition& add(ModeIndex m, complex coefficient, int max_order = kDefaultMaxOrder) {
        validate(m, max_order);
        for (const auto& t : terms_) {
            if (t.first == m) {
                throw std::invalid_argument("superposition already contains " + m.str());
            }
        }
        terms_.emplace_back(m, coefficient);
        return *this;
    }

    const std::vector<Term>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    /// L2 norm of the coefficient vector (equal to the field norm, since the
    /// modes are orthonormal).
    double norm() const {
        double s = 0.0;
        for (const auto& t : terms_) s += std::norm(t.second);
        return std::sqrt(s);
    }

    Superposition normalized() const {
        const double n = norm();
        if (n == 0.0) throw std::invalid_argument("cannot normalize an all-zero superposition");
        Superposition out;
        for (const auto& [m, c] : terms_) out.terms_.emplace_back(m, c / n);
        return out;
    }

    complex evaluate(double x, double y) const {
        complex v = 0.0;
        for (const auto& [m, c] : terms_) v += c * hg_amplitude(m, x, y, m.order());
        return v;
    }

    // Diagonal modes built from a TEM_pq / TEM_qp pair: u_qp + u_pq lies on
    // the positive S2 axis, u_qp - u_pq on the negative one.
    static Superposition diagonal_positive(ModeIndex pq) { return {{pq.swapped(), 1.0}, {pq, 1.0}}; }
    static Superposition diagonal_negative(ModeIndex pq) { return {{pq.swapped(), 1.0}, {pq, -1.0}}; }

    // Two-term orbital superpositions u_0q +/- i u_q0. For q >= 2 these are not
    // textbook Laguerre-Gauss modes; they are kept in this two-term form.
    static Superposition laguerre_positive(int q) {
        return {{ModeIndex{0, q}, 1.0}, {ModeIndex{q, 0}, complex{0.0, 1.0}}};
    }
    static Superposition laguerre_negative(int q) {
        return {{ModeIndex{0, q}, 1.0}, {ModeIndex{q, 0}, complex{0.0, -1.0}}};
    }

private:
    std::vector<Term> terms_;
};

struct GridConfig {
    double extent = 6.0;  // half-width in waists
    int samples = 512;    // points per axis, endpoints included

    void validate() const {
        if (!(extent > 0.0)) throw std::invalid_argument("grid extent must be positive");
        if (samples < 2) throw std::invalid_argument("grid needs at least 2 samples per axis");
    }
    double spacing() const { return 2.0 * extent / (samples - 1); }
    double x(int column) const { return -extent + column * spacing(); }
    // Row 0 is the top of the image (+y).
    double y(int row) const { return extent - row * spacing(); }
};

/// Complex field sampled on a square grid, row-major with row 0 at +y.
struct ModeField {
    GridConfig grid;
    std::vector<complex> values;

    complex at(int row, int column) const {
        return values[static_cast<std::size_t>(row) * grid.samples + column];
    }
};

struct IntensityGrid {
    GridConfig grid;
    std::vector<double> values;

    double at(int row, int column) const {
        return values[static_cast<std::size_t>(row) * grid.samples + column];
    }
    // Plain sum times cell area.
    double power() const {
        double s = 0.0;
        for (double v : values) s += v;
        const double h = grid.spacing();
        return s * h * h;
    }
};

inline ModeField synthesize(const Superposition& s, const GridConfig& grid = {}) {
    grid.validate();
    const int n = grid.samples;
    ModeField field{grid, std::vector<complex>(static_cast<std::size_t>(n) * n, complex{})};
    std::vector<double> fx(n), fy(n);
    for (const auto& [m, c] : s.terms()) {
        for (int k = 0; k < n; ++k) {
            fx[k] = detail::axis_factor(m.p, grid.x(k));
            fy[k] = detail::axis_factor(m.q, grid.y(k));
        }
        const complex scale = c * detail::normalization(m);
        for (int row = 0; row < n; ++row) {
            for (int col = 0; col < n; ++col) {
                field.values[static_cast<std::size_t>(row) * n + col] += scale * (fx[col] * fy[row]);
            }
        }
    }
    return field;
}

inline IntensityGrid intensity_grid(const ModeField& f) {
    IntensityGrid out{f.grid, std::vector<double>(f.values.size())};
    std::transform(f.values.begin(), f.values.end(), out.values.begin(),
                   [](complex v) { return std::norm(v); });
    return out;
}

struct OverlapResult {
    complex value;
    double estimated_error = 0.0;  // discrepancy against a half-resolution grid plus edge leakage
    bool coarse_grid_warning = false;
};

namespace detail {

// Trapezoidal 1-D integral of axis_factor(a) * axis_factor(b) on the grid axis.
inline double axis_overlap(int a, int b, const GridConfig& grid) {
    double s = 0.0;
    const int n = grid.samples;
    for (int k = 0; k < n; ++k) {
        const double t = grid.x(k);
        const double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;
        s += w * axis_factor(a, t) * axis_factor(b, t);
    }
    return s * grid.spacing();
}

inline complex grid_overlap(const Superposition& a, const Superposition& b, const GridConfig& grid) {
    // The 2-D trapezoid rule on a tensor grid factorizes over the axes.
    complex total = 0.0;
    for (const auto& [ma, ca] : a.terms()) {
        for (const auto& [mb, cb] : b.terms()) {
            const double ox = axis_overlap(ma.p, mb.p, grid);
            const double oy = axis_overlap(ma.q, mb.q, grid);
            total += std::conj(ca) * cb * (normalization(ma) * normalization(mb) * ox * oy);
        }
    }
    return total;
}

}  // namespace detail

/// Overlap integral <a|b> = sum over grid of conj(a) b with trapezoidal weights.
inline OverlapResult overlap(const Superposition& a, const Superposition& b, const GridConfig& grid = {},
                             double tolerance = 1e-9) {
    grid.validate();
    OverlapResult r;
    r.value = detail::grid_overlap(a, b, grid);
    GridConfig half = grid;
    half.samples = std::max(2, grid.samples / 2);
    const complex coarse = detail::grid_overlap(a, b, half);
    double edge = 0.0;
    for (const auto* s : {&a, &b}) {
        for (const auto& [m, c] : s->terms()) {
            const double rim = std::max(std::abs(detail::axis_factor(m.p, grid.extent)),
                                        std::abs(detail::axis_factor(m.q, grid.extent)));
            edge = std::max(edge, std::abs(c) * detail::normalization(m) * rim);
        }
    }
    r.estimated_error = std::abs(r.value - coarse) + edge;
    r.coarse_grid_warning = r.estimated_error > tolerance;
    return r;
}

inline OverlapResult overlap(ModeIndex a, ModeIndex b, const GridConfig& grid = {}, double tolerance = 1e-9) {
    return overlap(Superposition{a}, Superposition{b}, grid, tolerance);
}

/// Parses expressions such as "u01+u10", "u01 - i u10", "0.5u(2,0)", "(1+2i)u10".
inline Superposition parse_superposition(std::string_view text, int max_order = kDefaultMaxOrder) {
    std::string s;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    }
    if (s.empty()) throw std::invalid_argument("empty mode expression");
    std::size_t pos = 0;
    auto fail = [&](const std::string& why) -> void {
        throw std::invalid_argument("mode expression '" + std::string(text) + "': " + why +
                                    " at offset " + std::to_string(pos));
    };
    auto read_number = [&]() -> double {
        std::size_t start = pos;
        while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) ++pos;
        if (start == pos) fail("expected a number");
        return std::stod(s.substr(start, pos - start));
    };
    Superposition out;
    bool first = true;
    while (pos < s.size()) {
        double sign = 1.0;
        if (s[pos] == '+' || s[pos] == '-') {
            sign = s[pos] == '-' ? -1.0 : 1.0;
            ++pos;
        } else if (!first) {
            fail("expected '+' or '-'");
        }
        first = false;
        complex coef = 1.0;
        if (pos < s.size() && s[pos] == '(') {
            ++pos;
            double re = 0.0, im = 0.0, part_sign = 1.0;
            bool any = false;
            while (pos < s.size() && s[pos] != ')') {
                if (s[pos] == '+' || s[pos] == '-') {
                    part_sign = s[pos] == '-' ? -1.0 : 1.0;
                    ++pos;
                }
                double mag = 1.0;
                bool has_number = false;
                if (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) {
                    mag = read_number();
                    has_number = true;
                }
                if (pos < s.size() && s[pos] == 'i') {
                    ++pos;
                    im += part_sign * mag;
                } else if (has_number) {
                    re += part_sign * mag;
                } else {
                    fail("malformed complex coefficient");
                }
                part_sign = 1.0;
                any = true;
            }
            if (pos >= s.size() || !any) fail("unterminated coefficient");
            ++pos;
            coef = {re, im};
        } else {
            if (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) {
                coef = read_number();
            }
            if (pos < s.size() && s[pos] == 'i') {
                coef *= complex{0.0, 1.0};
                ++pos;
            }
            if (pos < s.size() && s[pos] == '*') ++pos;
        }
        if (pos >= s.size() || s[pos] != 'u') fail("expected 'u'");
        ++pos;
        ModeIndex m;
        if (pos < s.size() && s[pos] == '(') {
            ++pos;
            m.p = static_cast<int>(read_number());
            if (pos >= s.size() || s[pos] != ',') fail("expected ','");
            ++pos;
            m.q = static_cast<int>(read_number());
            if (pos >= s.size() || s[pos] != ')') fail("expected ')'");
            ++pos;
        } else {
            if (pos + 1 >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos])) ||
                !std::isdigit(static_cast<unsigned char>(s[pos + 1]))) {
                fail("expected two mode digits");
            }
            m.p = s[pos] - '0';
            m.q = s[pos + 1] - '0';
            pos += 2;
        }
        out.add(m, sign * coef, max_order);
    }
    return out;
}

}  // namespace sstokes
