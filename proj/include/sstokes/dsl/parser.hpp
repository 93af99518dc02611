// parser.hpp
// Circuit description language: diagnostics, lexer, value syntax, IR,
// recursive-descent parser with reference checks, and pretty-printer.
//
// One statement per line; '#' starts a comment that runs to end of line.
//   beam NAME
//   source BEAM tem P Q (coherent | squeezed) key=value...
//   element bs A B t=..
//   element phase B phi=..
//   element modal_phase B psix=.. psiy=..      | element modal_phase B lens d=2f f=..
//   element mode_separator IN -> ODD EVEN [eta=..]
//   element mode_combiner ODD EVEN -> OUT
//   detect stokes S1 B [B2]   detect quad angle=.. B [B2]   detect insep S2 S3 X Y
// Values: decimals, pi-expressions (pi/2, 3pi/4, -pi), sqrt2, complex a+bi,
// and a trailing f (multiples of the focal length) for lens separations.

#pragma once

#include "sstokes/gaussian.hpp"
#include "sstokes/modes.hpp"
#include "sstokes/stokes.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

namespace sstokes::dsl {

struct Span {
    int line = 0;    // 1-based
    int column = 0;  // 1-based byte offset within the line
};

enum class Severity { error, warning };

// Code families: L1xx lexical, P2xx syntax, R3xx reference, S4xx semantic,
// N5xx runtime numerical failures.
struct Diagnostic {
    Severity severity = Severity::error;
    std::string code;
    std::string message;
    Span span;
    std::string excerpt;  // the offending source line

    std::string format(std::string_view file = "<input>") const {
        std::ostringstream os;
        os << file << ':' << span.line << ':' << span.column << ": "
           << (severity == Severity::error ? "error" : "warning") << '[' << code << "]: " << message;
        if (!excerpt.empty()) {
            os << "\n    " << excerpt << "\n    " << std::string(static_cast<std::size_t>(std::max(0, span.column - 1)), ' ')
               << '^';
        }
        return os.str();
    }
};

// ---------------------------------------------------------------------------
// Values

struct Value {
    complex number{};
    bool times_f = false;  // value is a multiple of the lens focal length
};

namespace detail {

struct ValueScanner {
    std::string_view s;
    std::size_t pos = 0;

    bool done() const { return pos >= s.size(); }
    char peek() const { return done() ? '\0' : s[pos]; }
    bool eat(std::string_view word) {
        if (s.substr(pos, word.size()) == word) {
            pos += word.size();
            return true;
        }
        return false;
    }
};

inline std::optional<double> scan_number(ValueScanner& sc) {
    const char c = sc.peek();
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.')) return std::nullopt;
    double v = 0.0;
    const char* first = sc.s.data() + sc.pos;
    const auto res = std::from_chars(first, sc.s.data() + sc.s.size(), v, std::chars_format::general);
    if (res.ec != std::errc{} || !std::isfinite(v)) return std::nullopt;
    sc.pos += static_cast<std::size_t>(res.ptr - first);
    return v;
}

// factor := NUMBER ['*'] [CONST] ['/' NUMBER] | CONST ['/' NUMBER] | 'i'-only handled by caller
inline std::optional<double> scan_factor(ValueScanner& sc, bool& any) {
    double v = 1.0;
    any = false;
    if (auto n = scan_number(sc)) {
        v = *n;
        any = true;
        if (sc.peek() == '*') {
            ++sc.pos;
            if (sc.peek() != 'p' && sc.peek() != 's') return std::nullopt;
        }
    }
    if (sc.eat("pi")) {
        v *= std::numbers::pi;
        any = true;
    } else if (sc.eat("sqrt2")) {
        v *= std::numbers::sqrt2;
        any = true;
    }
    if (any && sc.peek() == '/') {
        ++sc.pos;
        auto d = scan_number(sc);
        if (!d || *d == 0.0) return std::nullopt;
        v /= *d;
    }
    return v;
}

}  // namespace detail

/// Parses a value; returns nullopt (with a reason) for malformed text.
inline std::optional<Value> parse_value(std::string_view text, std::string* why = nullptr) {
    auto fail = [&](std::string msg) -> std::optional<Value> {
        if (why) *why = std::move(msg);
        return std::nullopt;
    };
    if (text.empty()) return fail("empty value");
    detail::ValueScanner sc{text};
    Value out;
    bool have_re = false, have_im = false;
    bool first = true;
    while (!sc.done()) {
        double sign = 1.0;
        if (sc.peek() == '+' || sc.peek() == '-') {
            sign = sc.peek() == '-' ? -1.0 : 1.0;
            ++sc.pos;
        } else if (!first) {
            break;
        }
        first = false;
        bool any = false;
        auto f = detail::scan_factor(sc, any);
        if (!f) return fail("malformed number");
        if (sc.peek() == 'i') {
            ++sc.pos;
            if (have_im) return fail("more than one imaginary term");
            have_im = true;
            out.number.imag(sign * *f);
        } else {
            if (!any) return fail("expected a number");
            if (have_re) return fail("more than one real term");
            have_re = true;
            out.number.real(sign * *f);
        }
    }
    if (sc.peek() == 'f' && !have_im) {
        ++sc.pos;
        out.times_f = true;
    }
    if (!sc.done()) return fail("unexpected '" + std::string(1, sc.peek()) + "'");
    if (!std::isfinite(out.number.real()) || !std::isfinite(out.number.imag())) return fail("value is not finite");
    return out;
}

inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string format_value(const Value& v) {
    std::string out;
    const double re = v.number.real(), im = v.number.imag();
    if (im == 0.0) {
        out = format_number(re);
    } else {
        out = format_number(re);
        if (!std::signbit(im)) out += '+';
        out += format_number(im) + "i";
    }
    if (v.times_f) out += 'f';
    return out;
}

// ---------------------------------------------------------------------------
// IR

struct Name {
    std::string text;
    Span span;
};

struct KeyValue {
    std::string key;
    Value value;
    Span span;
};

struct BeamDecl {
    Name name;
    Span span;
};

struct SourceStmt {
    Name beam;
    ModeIndex mode;
    bool squeezed = false;
    std::vector<KeyValue> params;
    Span span;
    Span mode_span;
};

enum class ElementKind { bs, phase, modal_phase, mode_separator, mode_combiner };

inline std::string_view name(ElementKind k) {
    switch (k) {
        case ElementKind::bs: return "bs";
        case ElementKind::phase: return "phase";
        case ElementKind::modal_phase: return "modal_phase";
        case ElementKind::mode_separator: return "mode_separator";
        case ElementKind::mode_combiner: return "mode_combiner";
    }
    return "?";
}

struct ElementStmt {
    ElementKind kind = ElementKind::bs;
    std::vector<Name> inputs;
    std::vector<Name> outputs;  // separator: odd, even; combiner: out
    bool lens = false;          // modal_phase given as a lens pair
    std::vector<KeyValue> params;
    Span span;
};

enum class DetectKind { stokes, quad, insep };

inline std::string_view name(DetectKind k) {
    switch (k) {
        case DetectKind::stokes: return "stokes";
        case DetectKind::quad: return "quad";
        case DetectKind::insep: return "insep";
    }
    return "?";
}

struct DetectStmt {
    DetectKind kind = DetectKind::stokes;
    std::vector<StokesComponent> components;  // 1 for stokes, 2 for insep
    std::vector<Name> beams;
    std::vector<KeyValue> params;
    Span span;
};

using Statement = std::variant<BeamDecl, SourceStmt, ElementStmt, DetectStmt>;

inline Span span_of(const Statement& s) {
    return std::visit([](const auto& v) { return v.span; }, s);
}

struct CircuitIR {
    std::vector<Statement> statements;

    template <class T>
    std::size_t count() const {
        return static_cast<std::size_t>(std::count_if(statements.begin(), statements.end(),
                                                      [](const Statement& s) { return std::holds_alternative<T>(s); }));
    }
    std::size_t count_elements(ElementKind k) const {
        std::size_t n = 0;
        for (const auto& s : statements) {
            if (const auto* e = std::get_if<ElementStmt>(&s); e && e->kind == k) ++n;
        }
        return n;
    }
    std::size_t count_detectors(DetectKind k) const {
        std::size_t n = 0;
        for (const auto& s : statements) {
            if (const auto* d = std::get_if<DetectStmt>(&s); d && d->kind == k) ++n;
        }
        return n;
    }
};

inline const KeyValue* find_param(const std::vector<KeyValue>& params, std::string_view key) {
    for (const auto& kv : params) {
        if (kv.key == key) return &kv;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// Pretty-printer

namespace detail {

inline void print_params(std::ostream& os, const std::vector<KeyValue>& params) {
    for (const auto& kv : params) os << ' ' << kv.key << '=' << format_value(kv.value);
}

}  // namespace detail

inline std::string print(const Statement& st) {
    std::ostringstream os;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, BeamDecl>) {
                os << "beam " << s.name.text;
            } else if constexpr (std::is_same_v<T, SourceStmt>) {
                os << "source " << s.beam.text << " tem " << s.mode.p << ' ' << s.mode.q << ' '
                   << (s.squeezed ? "squeezed" : "coherent");
                detail::print_params(os, s.params);
            } else if constexpr (std::is_same_v<T, ElementStmt>) {
                os << "element " << name(s.kind);
                if (s.kind == ElementKind::mode_separator) {
                    os << ' ' << s.inputs[0].text << " -> " << s.outputs[0].text << ' ' << s.outputs[1].text;
                } else if (s.kind == ElementKind::mode_combiner) {
                    os << ' ' << s.inputs[0].text << ' ' << s.inputs[1].text << " -> " << s.outputs[0].text;
                } else {
                    for (const auto& b : s.inputs) os << ' ' << b.text;
                    if (s.lens) os << " lens";
                }
                detail::print_params(os, s.params);
            } else {
                os << "detect " << name(s.kind);
                for (auto c : s.components) os << ' ' << sstokes::name(c);
                detail::print_params(os, s.params);
                for (const auto& b : s.beams) os << ' ' << b.text;
            }
        },
        st);
    return os.str();
}

/// Canonical text of a program; parsing it yields the same IR up to spans.
inline std::string print(const CircuitIR& ir) {
    std::string out;
    for (const auto& s : ir.statements) out += print(s) + "\n";
    return out;
}

/// Structural equality ignoring spans. The printer is injective on IRs
/// (numbers use shortest round-trip form), so printed text is compared.
inline bool equivalent(const CircuitIR& a, const CircuitIR& b) { return print(a) == print(b); }

// ---------------------------------------------------------------------------
// Parser

struct ParseResult {
    CircuitIR ir;
    std::vector<Diagnostic> diagnostics;

    bool ok() const {
        return std::none_of(diagnostics.begin(), diagnostics.end(),
                            [](const Diagnostic& d) { return d.severity == Severity::error; });
    }
};

namespace detail {

struct Token {
    std::string_view text;
    Span span;
};

inline bool is_ident(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

// Length of a valid UTF-8 sequence starting at s[i], or 0.
inline std::size_t utf8_length(std::string_view s, std::size_t i) {
    const auto b = static_cast<unsigned char>(s[i]);
    std::size_t n = 0;
    unsigned min = 0;
    if (b < 0x80) return 1;
    if ((b & 0xe0) == 0xc0) {
        n = 2;
        min = 0x80;
    } else if ((b & 0xf0) == 0xe0) {
        n = 3;
        min = 0x800;
    } else if ((b & 0xf8) == 0xf0) {
        n = 4;
        min = 0x10000;
    } else {
        return 0;
    }
    if (i + n > s.size()) return 0;
    unsigned cp = b & (0xff >> (n + 1));
    for (std::size_t k = 1; k < n; ++k) {
        const auto c = static_cast<unsigned char>(s[i + k]);
        if ((c & 0xc0) != 0x80) return 0;
        cp = (cp << 6) | (c & 0x3f);
    }
    if (cp < min || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return 0;
    return n;
}

struct BeamInfo {
    Span declared;
    bool live = true;
    int consumed_line = 0;
    int touched_line = 0;  // last element acting on the beam
    int read_line = 0;     // last detector reading the beam
};

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    ParseResult run() {
        std::size_t start = 0;
        int line_no = 0;
        while (start <= text_.size()) {
            std::size_t end = text_.find('\n', start);
            if (end == std::string_view::npos) end = text_.size();
            ++line_no;
            std::string_view line = text_.substr(start, end - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            line_ = line;
            line_no_ = line_no;
            if (auto tokens = lex(line)) parse_line(*tokens);
            if (end == text_.size()) break;
            start = end + 1;
        }
        return std::move(result_);
    }

private:
    std::string_view text_;
    std::string_view line_;
    int line_no_ = 0;
    ParseResult result_;
    std::map<std::string, BeamInfo, std::less<>> beams_;
    std::set<std::pair<std::string, ModeIndex>> sourced_;

    Span at(std::size_t offset) const { return {line_no_, static_cast<int>(offset) + 1}; }

    void error(std::string code, std::string message, Span span) {
        Diagnostic d;
        d.code = std::move(code);
        d.message = std::move(message);
        d.span = span;
        d.span.column = std::clamp(d.span.column, 1, std::max(1, static_cast<int>(line_.size())));
        // Excerpts are kept printable so diagnostics never echo raw bytes.
        for (char c : line_) {
            const auto u = static_cast<unsigned char>(c);
            d.excerpt += (u >= 0x20 && u < 0x7f) || c == '\t' ? c : '?';
        }
        result_.diagnostics.push_back(std::move(d));
    }

    std::optional<std::vector<Token>> lex(std::string_view line) {
        std::vector<Token> tokens;
        std::size_t i = 0;
        while (i < line.size()) {
            const char c = line[i];
            const auto u = static_cast<unsigned char>(c);
            if (c == ' ' || c == '\t') {
                ++i;
                continue;
            }
            if (c == '#') {
                // Comments may hold any valid UTF-8.
                for (std::size_t k = i; k < line.size();) {
                    const std::size_t n = utf8_length(line, k);
                    if (n == 0) {
                        error("L102", "invalid UTF-8 byte in comment", at(k));
                        return std::nullopt;
                    }
                    k += n;
                }
                break;
            }
            if (u < 0x20 || u == 0x7f) {
                error("L101", "control character 0x" + hex(u) + " in source", at(i));
                return std::nullopt;
            }
            if (u >= 0x80) {
                if (utf8_length(line, i) == 0) {
                    error("L102", "invalid UTF-8 byte 0x" + hex(u), at(i));
                } else {
                    error("L103", "non-ASCII character outside a comment", at(i));
                }
                return std::nullopt;
            }
            std::size_t j = i;
            while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '#') {
                const auto v = static_cast<unsigned char>(line[j]);
                if (v < 0x21 || v >= 0x7f) break;
                ++j;
            }
            const std::string_view tok = line.substr(i, j - i);
            const auto bad = tok.find_first_not_of(
                "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_.+-*/=>");
            if (bad != std::string_view::npos) {
                error("L104", std::string("unexpected character '") + tok[bad] + "'", at(i + bad));
                return std::nullopt;
            }
            tokens.push_back({tok, at(i)});
            i = j;
        }
        return tokens;
    }

    static std::string hex(unsigned v) {
        const char* digits = "0123456789abcdef";
        return {digits[(v >> 4) & 0xf], digits[v & 0xf]};
    }

    // --- statement helpers ---------------------------------------------

    struct Split {
        std::vector<Token> words;
        std::vector<KeyValue> params;
        bool ok = true;
    };

    // Separates key=value tokens from positional words; validates keys
    // against the allowed set and parses the values.
    Split split(const std::vector<Token>& tokens, std::size_t from, const std::vector<std::string_view>& allowed,
                std::string_view what) {
        Split out;
        std::set<std::string, std::less<>> seen;
        for (std::size_t i = from; i < tokens.size(); ++i) {
            const auto& t = tokens[i];
            const auto eq = t.text.find('=');
            if (eq == std::string_view::npos) {
                out.words.push_back(t);
                continue;
            }
            const std::string_view key = t.text.substr(0, eq);
            const std::string_view raw = t.text.substr(eq + 1);
            if (!is_ident(key)) {
                error("P205", "malformed key=value '" + std::string(t.text) + "'", t.span);
                out.ok = false;
                continue;
            }
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                std::string list;
                for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
                error("P203",
                      "unknown key '" + std::string(key) + "' for " + std::string(what) +
                          (list.empty() ? " (takes no keys)" : " (allowed: " + list + ")"),
                      t.span);
                out.ok = false;
                continue;
            }
            if (!seen.insert(std::string(key)).second) {
                error("P204", "duplicate key '" + std::string(key) + "'", t.span);
                out.ok = false;
                continue;
            }
            const Span vspan{t.span.line, t.span.column + static_cast<int>(eq) + 1};
            std::string why;
            auto v = parse_value(raw, &why);
            if (!v) {
                error("P206", "bad value for '" + std::string(key) + "': " + why, vspan);
                out.ok = false;
                continue;
            }
            if (key != "alpha" && v->number.imag() != 0.0) {
                error("P207", "'" + std::string(key) + "' must be real", vspan);
                out.ok = false;
                continue;
            }
            if (key != "d" && v->times_f) {
                error("P207", "the f suffix is only allowed for lens separations (d=)", vspan);
                out.ok = false;
                continue;
            }
            if (key == "p" || key == "q") {
                const double x = v->number.real();
                if (x < 0.0 || x != std::floor(x) || x > 1000.0) {
                    error("P207", "'" + std::string(key) + "' must be a non-negative integer", vspan);
                    out.ok = false;
                    continue;
                }
            }
            if (key == "angle" || key == "phi" || key == "psix" || key == "psiy" || key == "theta") {
                v->number = wrap_angle(v->number.real());
            }
            out.params.push_back({std::string(key), *v, t.span});
        }
        return out;
    }

    bool require_keys(const Split& s, const std::vector<std::string_view>& keys, std::string_view what, Span span) {
        bool ok = true;
        for (auto k : keys) {
            if (!find_param(s.params, k)) {
                error("P208", std::string(what) + " requires key '" + std::string(k) + "'", span);
                ok = false;
            }
        }
        return ok;
    }

    bool expect_ident(const Token& t, std::string_view what) {
        if (is_ident(t.text)) return true;
        error("P202", "expected " + std::string(what) + ", found '" + std::string(t.text) + "'", t.span);
        return false;
    }

    bool arity(const std::vector<Token>& words, std::size_t lo, std::size_t hi, std::string_view what,
               const Token& head) {
        if (words.size() < lo) {
            const Span s = words.empty() ? head.span : words.back().span;
            error("P201", std::string(what) + ": expected " + std::to_string(lo) +
                              (hi != lo ? " to " + std::to_string(hi) : "") + " name(s), found " +
                              std::to_string(words.size()),
                  s);
            return false;
        }
        if (words.size() > hi) {
            error("P201", std::string(what) + ": unexpected '" + std::string(words[hi].text) + "'", words[hi].span);
            return false;
        }
        return true;
    }

    // --- reference checks ----------------------------------------------

    BeamInfo* live_beam(const Token& t) {
        auto it = beams_.find(t.text);
        if (it == beams_.end()) {
            error("R302", "beam '" + std::string(t.text) + "' is not declared", t.span);
            return nullptr;
        }
        if (!it->second.live) {
            error("R303",
                  "beam '" + std::string(t.text) + "' was consumed by an element at line " +
                      std::to_string(it->second.consumed_line),
                  t.span);
            return nullptr;
        }
        return &it->second;
    }

    bool distinct(const std::vector<Token>& names) {
        for (std::size_t i = 1; i < names.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                if (names[i].text == names[j].text) {
                    error("R304", "beam aliased with itself", names[i].span);
                    return false;
                }
            }
        }
        return true;
    }

    bool fresh(const Token& t) {
        if (auto it = beams_.find(t.text); it != beams_.end()) {
            error("R308",
                  "output port '" + std::string(t.text) + "' is not a fresh beam name (declared at line " +
                      std::to_string(it->second.declared.line) + ")",
                  t.span);
            return false;
        }
        return true;
    }

    static Name to_name(const Token& t) { return {std::string(t.text), t.span}; }

    // --- statements ----------------------------------------------------

    void parse_line(const std::vector<Token>& tokens) {
        if (tokens.empty()) return;
        const auto& head = tokens[0];
        if (head.text == "beam") return parse_beam(tokens);
        if (head.text == "source") return parse_source(tokens);
        if (head.text == "element") return parse_element(tokens);
        if (head.text == "detect") return parse_detect(tokens);
        error("P200", "unknown statement '" + std::string(head.text) + "' (expected beam, source, element or detect)",
              head.span);
    }

    void parse_beam(const std::vector<Token>& tokens) {
        auto s = split(tokens, 1, {}, "beam");
        if (!s.ok || !arity(s.words, 1, 1, "beam", tokens[0]) || !expect_ident(s.words[0], "a beam name")) return;
        const auto& t = s.words[0];
        if (auto it = beams_.find(t.text); it != beams_.end()) {
            error("R301",
                  "beam '" + std::string(t.text) + "' already declared at line " +
                      std::to_string(it->second.declared.line),
                  t.span);
            return;
        }
        beams_[std::string(t.text)] = BeamInfo{t.span};
        result_.ir.statements.emplace_back(BeamDecl{to_name(t), tokens[0].span});
    }

    std::optional<int> mode_number(const Token& t) {
        int v = -1;
        const auto* b = t.text.data();
        const auto* e = b + t.text.size();
        const auto res = std::from_chars(b, e, v);
        if (res.ec != std::errc{} || res.ptr != e || v < 0) {
            error("P202", "expected a non-negative mode index, found '" + std::string(t.text) + "'", t.span);
            return std::nullopt;
        }
        return v;
    }

    void parse_source(const std::vector<Token>& tokens) {
        // Kind decides the allowed keys, so find it among the positional words first.
        bool squeezed = false;
        for (const auto& t : tokens) squeezed = squeezed || t.text == "squeezed";
        const std::vector<std::string_view> keys =
            squeezed ? std::vector<std::string_view>{"alpha", "vsq", "vanti", "angle"}
                     : std::vector<std::string_view>{"alpha"};
        auto s = split(tokens, 1, keys, squeezed ? "a squeezed source" : "a coherent source");
        if (!s.ok || !arity(s.words, 5, 5, "source BEAM tem P Q KIND", tokens[0])) return;
        const auto& w = s.words;
        if (!expect_ident(w[0], "a beam name")) return;
        if (w[1].text != "tem") {
            error("P202", "expected 'tem', found '" + std::string(w[1].text) + "'", w[1].span);
            return;
        }
        const auto p = mode_number(w[2]);
        const auto q = mode_number(w[3]);
        if (!p || !q) return;
        if (w[4].text != "coherent" && w[4].text != "squeezed") {
            error("P202", "expected 'coherent' or 'squeezed', found '" + std::string(w[4].text) + "'", w[4].span);
            return;
        }
        if (!require_keys(s, squeezed ? std::vector<std::string_view>{"vsq"} : std::vector<std::string_view>{"alpha"},
                          squeezed ? "a squeezed source" : "a coherent source", tokens[0].span)) {
            return;
        }
        BeamInfo* b = live_beam(w[0]);
        if (!b) return;
        if (b->touched_line > 0) {
            error("R305",
                  "source for beam '" + std::string(w[0].text) + "' follows an element acting on it at line " +
                      std::to_string(b->touched_line),
                  w[0].span);
            return;
        }
        const ModeIndex mode{*p, *q};
        if (!sourced_.insert({std::string(w[0].text), mode}).second) {
            error("R306", "mode " + mode.str() + " of beam '" + std::string(w[0].text) + "' already has a source",
                  w[2].span);
            return;
        }
        SourceStmt st;
        st.beam = to_name(w[0]);
        st.mode = mode;
        st.squeezed = squeezed;
        st.params = std::move(s.params);
        st.span = tokens[0].span;
        st.mode_span = w[2].span;
        result_.ir.statements.emplace_back(std::move(st));
    }

    bool touch(const Token& t, bool consume) {
        BeamInfo* b = live_beam(t);
        if (!b) return false;
        if (b->read_line > 0) {
            error("R307",
                  "element acts on beam '" + std::string(t.text) + "' after a detector reads it at line " +
                      std::to_string(b->read_line),
                  t.span);
            return false;
        }
        b->touched_line = line_no_;
        if (consume) {
            b->live = false;
            b->consumed_line = line_no_;
        }
        return true;
    }

    void parse_element(const std::vector<Token>& tokens) {
        if (tokens.size() < 2) {
            error("P201", "element: missing element kind", tokens[0].span);
            return;
        }
        const auto& kind = tokens[1];
        ElementStmt st;
        st.span = tokens[0].span;
        if (kind.text == "bs") {
            st.kind = ElementKind::bs;
            auto s = split(tokens, 2, {"t"}, "bs");
            if (!s.ok || !arity(s.words, 2, 2, "bs", kind) || !expect_ident(s.words[0], "a beam name") ||
                !expect_ident(s.words[1], "a beam name") || !require_keys(s, {"t"}, "bs", kind.span) ||
                !distinct(s.words) || !touch(s.words[0], false) || !touch(s.words[1], false)) {
                return;
            }
            st.inputs = {to_name(s.words[0]), to_name(s.words[1])};
            st.params = std::move(s.params);
        } else if (kind.text == "phase") {
            st.kind = ElementKind::phase;
            auto s = split(tokens, 2, {"phi"}, "phase");
            if (!s.ok || !arity(s.words, 1, 1, "phase", kind) || !expect_ident(s.words[0], "a beam name") ||
                !require_keys(s, {"phi"}, "phase", kind.span) || !touch(s.words[0], false)) {
                return;
            }
            st.inputs = {to_name(s.words[0])};
            st.params = std::move(s.params);
        } else if (kind.text == "modal_phase") {
            st.kind = ElementKind::modal_phase;
            const bool lens = std::any_of(tokens.begin() + 2, tokens.end(), [](const Token& t) { return t.text == "lens"; });
            auto s = split(tokens, 2, lens ? std::vector<std::string_view>{"d", "f"}
                                           : std::vector<std::string_view>{"psix", "psiy"},
                           lens ? "a lens modal_phase" : "modal_phase");
            if (!s.ok || !arity(s.words, lens ? 2 : 1, lens ? 2 : 1, "modal_phase", kind) ||
                !expect_ident(s.words[0], "a beam name")) {
                return;
            }
            if (lens && s.words[1].text != "lens") {
                error("P202", "expected 'lens' after the beam name", s.words[1].span);
                return;
            }
            if (!require_keys(s, lens ? std::vector<std::string_view>{"d"} : std::vector<std::string_view>{"psix", "psiy"},
                              "modal_phase", kind.span) ||
                !touch(s.words[0], false)) {
                return;
            }
            st.lens = lens;
            st.inputs = {to_name(s.words[0])};
            st.params = std::move(s.params);
        } else if (kind.text == "mode_separator") {
            st.kind = ElementKind::mode_separator;
            auto s = split(tokens, 2, {"eta"}, "mode_separator");
            if (!s.ok || !arity(s.words, 4, 4, "mode_separator IN -> ODD EVEN", kind)) return;
            if (s.words[1].text != "->") {
                error("P202", "expected '->', found '" + std::string(s.words[1].text) + "'", s.words[1].span);
                return;
            }
            const std::vector<Token> outs{s.words[2], s.words[3]};
            if (!expect_ident(s.words[0], "a beam name") || !expect_ident(outs[0], "a port name") ||
                !expect_ident(outs[1], "a port name") || !distinct(outs) || !fresh(outs[0]) || !fresh(outs[1]) ||
                !touch(s.words[0], true)) {
                return;
            }
            st.inputs = {to_name(s.words[0])};
            st.outputs = {to_name(outs[0]), to_name(outs[1])};
            for (const auto& o : outs) beams_[std::string(o.text)] = BeamInfo{o.span};
            st.params = std::move(s.params);
        } else if (kind.text == "mode_combiner") {
            st.kind = ElementKind::mode_combiner;
            auto s = split(tokens, 2, {}, "mode_combiner");
            if (!s.ok || !arity(s.words, 4, 4, "mode_combiner ODD EVEN -> OUT", kind)) return;
            if (s.words[2].text != "->") {
                error("P202", "expected '->', found '" + std::string(s.words[2].text) + "'", s.words[2].span);
                return;
            }
            const std::vector<Token> ins{s.words[0], s.words[1]};
            if (!expect_ident(ins[0], "a beam name") || !expect_ident(ins[1], "a beam name") ||
                !expect_ident(s.words[3], "a beam name") || !distinct(ins) || !fresh(s.words[3]) ||
                !touch(ins[0], true) || !touch(ins[1], true)) {
                return;
            }
            st.inputs = {to_name(ins[0]), to_name(ins[1])};
            st.outputs = {to_name(s.words[3])};
            beams_[std::string(s.words[3].text)] = BeamInfo{s.words[3].span};
        } else {
            error("P202",
                  "unknown element '" + std::string(kind.text) +
                      "' (expected bs, phase, modal_phase, mode_separator or mode_combiner)",
                  kind.span);
            return;
        }
        result_.ir.statements.emplace_back(std::move(st));
    }

    std::optional<StokesComponent> component(const Token& t, bool allow_s0) {
        auto c = parse_component(t.text);
        if (!c || (!allow_s0 && *c == StokesComponent::S0)) {
            error("P202",
                  "expected a Stokes component " + std::string(allow_s0 ? "S0..S3" : "S1..S3") + ", found '" +
                      std::string(t.text) + "'",
                  t.span);
            return std::nullopt;
        }
        return c;
    }

    bool read_beams(const std::vector<Token>& beams) {
        for (const auto& b : beams) {
            if (!expect_ident(b, "a beam name")) return false;
        }
        if (!distinct(beams)) return false;
        for (const auto& b : beams) {
            BeamInfo* info = live_beam(b);
            if (!info) return false;
            info->read_line = line_no_;
        }
        return true;
    }

    void parse_detect(const std::vector<Token>& tokens) {
        if (tokens.size() < 2) {
            error("P201", "detect: missing detector kind", tokens[0].span);
            return;
        }
        const auto& kind = tokens[1];
        DetectStmt st;
        st.span = tokens[0].span;
        std::vector<Token> beams;
        if (kind.text == "stokes") {
            st.kind = DetectKind::stokes;
            auto s = split(tokens, 2, {"p", "q", "theta"}, "detect stokes");
            if (!s.ok || !arity(s.words, 2, 3, "detect stokes", kind)) return;
            auto c = component(s.words[0], true);
            if (!c) return;
            st.components = {*c};
            beams.assign(s.words.begin() + 1, s.words.end());
            st.params = std::move(s.params);
        } else if (kind.text == "quad") {
            st.kind = DetectKind::quad;
            auto s = split(tokens, 2, {"angle", "p", "q"}, "detect quad");
            if (!s.ok || !arity(s.words, 1, 2, "detect quad", kind) ||
                !require_keys(s, {"angle"}, "detect quad", kind.span)) {
                return;
            }
            beams = s.words;
            st.params = std::move(s.params);
        } else if (kind.text == "insep") {
            st.kind = DetectKind::insep;
            auto s = split(tokens, 2, {"p", "q"}, "detect insep");
            if (!s.ok || !arity(s.words, 4, 4, "detect insep SA SB X Y", kind)) return;
            auto a = component(s.words[0], false);
            if (!a) return;
            auto b = component(s.words[1], false);
            if (!b) return;
            if (*a == *b) {
                error("P202", "inseparability needs two different components", s.words[1].span);
                return;
            }
            st.components = {*a, *b};
            beams.assign(s.words.begin() + 2, s.words.end());
            st.params = std::move(s.params);
        } else {
            error("P202", "unknown detector '" + std::string(kind.text) + "' (expected stokes, quad or insep)",
                  kind.span);
            return;
        }
        if (!read_beams(beams)) return;
        for (const auto& b : beams) st.beams.push_back(to_name(b));
        result_.ir.statements.emplace_back(std::move(st));
    }
};

}  // namespace detail

/// Total: any byte string yields an IR or diagnostics, never an exception.
inline ParseResult parse(std::string_view text) {
    try {
        return detail::Parser(text).run();
    } catch (const std::exception& e) {
        ParseResult r;
        r.diagnostics.push_back({Severity::error, "P299", std::string("internal parser failure: ") + e.what(), {1, 1}, {}});
        return r;
    }
}

}  // namespace sstokes::dsl
