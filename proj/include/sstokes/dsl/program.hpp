// program.hpp
// Compilation of a parsed circuit into an ordered plan of state operations
// and detector read-outs, execution of the plan, and parameter substitution
// for sweeps.

#pragma once

#include "sstokes/dsl/parser.hpp"
#include "sstokes/entanglement.hpp"
#include "sstokes/gaussian.hpp"
#include "sstokes/report.hpp"
#include "sstokes/stokes.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sstokes::dsl {

namespace op {

struct AddSource {
    BasisEntry entry;
    SqueezerConfig config;
};
struct Phase {
    std::string beam;
    double phi = 0.0;
};
struct BeamSplitter {
    std::string a, b;
    double t = 0.5;
};
struct ModalPhase {
    std::string beam;
    double psi_x = 0.0, psi_y = 0.0;
};
struct Separator {
    std::string in, odd, even;
    double eta = 1.0;
};
struct Combiner {
    std::string odd, even, out;
};

// Stokes read-out. Single beam; split ports of one separator (low/high modes
// in different beams); or two beams giving cross-beam conditional variances.
struct ReadStokes {
    StokesComponent component = StokesComponent::S0;
    ModePair pair;
    std::optional<ModePair> other;  // second beam for conditional variances
    bool split_ports = false;
};
struct ReadQuadrature {
    double angle = 0.0;
    ModePair pair;  // quadrature of pair.low in its own frame
    std::optional<ModePair> other;
};
struct ReadInseparability {
    StokesComponent a = StokesComponent::S2, b = StokesComponent::S3;
    ModePair pair_x, pair_y;
};

}  // namespace op

using Operation = std::variant<op::AddSource, op::Phase, op::BeamSplitter, op::ModalPhase, op::Separator, op::Combiner,
                               op::ReadStokes, op::ReadQuadrature, op::ReadInseparability>;

struct PlanStep {
    Operation operation;
    Span span;
    std::string statement;  // canonical text of the originating statement
};

struct Plan {
    std::vector<PlanStep> steps;

    std::size_t readouts() const {
        return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), [](const PlanStep& s) {
            return s.operation.index() >= 6;
        }));
    }
};

inline std::string describe(const PlanStep& step) {
    std::ostringstream os;
    auto pair_str = [](const ModePair& p) { return p.low.str() + "/" + p.high.str(); };
    std::visit(
        [&](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, op::AddSource>) {
                os << "source " << o.entry.str() << " vsq=" << format_number(o.config.v_sq)
                   << " vanti=" << format_number(o.config.v_anti) << " angle=" << format_number(o.config.angle)
                   << " alpha=" << format_value({o.config.alpha, false});
            } else if constexpr (std::is_same_v<T, op::Phase>) {
                os << "phase " << o.beam << " phi=" << format_number(o.phi);
            } else if constexpr (std::is_same_v<T, op::BeamSplitter>) {
                os << "beamsplitter " << o.a << ' ' << o.b << " t=" << format_number(o.t);
            } else if constexpr (std::is_same_v<T, op::ModalPhase>) {
                os << "modal_phase " << o.beam << " relative=" << format_number(o.psi_x - o.psi_y)
                   << " psix=" << format_number(o.psi_x) << " psiy=" << format_number(o.psi_y);
            } else if constexpr (std::is_same_v<T, op::Separator>) {
                os << "separate " << o.in << " -> " << o.odd << ' ' << o.even << " eta=" << format_number(o.eta);
            } else if constexpr (std::is_same_v<T, op::Combiner>) {
                os << "combine " << o.odd << ' ' << o.even << " -> " << o.out;
            } else if constexpr (std::is_same_v<T, op::ReadStokes>) {
                os << "read " << name(o.component) << ' ' << pair_str(o.pair);
                if (o.other) os << " with " << pair_str(*o.other);
                if (o.split_ports) os << " split";
            } else if constexpr (std::is_same_v<T, op::ReadQuadrature>) {
                os << "read X^" << format_number(o.angle) << ' ' << o.pair.low.str();
                if (o.other) os << " with " << o.other->low.str();
            } else {
                os << "read I(" << name(o.a) << ',' << name(o.b) << ") " << pair_str(o.pair_x) << ' '
                   << pair_str(o.pair_y);
            }
        },
        step.operation);
    return os.str();
}

inline std::string describe(const Plan& plan) {
    std::string out;
    for (const auto& s : plan.steps) out += std::to_string(s.span.line) + ": " + describe(s) + "\n";
    return out;
}

struct CompileResult {
    Plan plan;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return diagnostics.empty(); }
};

namespace detail {

class Compiler {
public:
    explicit Compiler(std::string_view source) : source_(source) {}

    CompileResult run(const CircuitIR& ir) {
        for (const auto& st : ir.statements) {
            std::visit([&](const auto& s) { handle(s); }, st);
        }
        return std::move(result_);
    }

private:
    std::string_view source_;
    CompileResult result_;
    // Separator outputs: port -> (sibling port, is_odd_port).
    std::map<std::string, std::pair<std::string, bool>> ports_;

    void error(std::string code, std::string message, Span span) {
        Diagnostic d;
        d.code = std::move(code);
        d.message = std::move(message);
        d.span = span;
        d.excerpt = line_text(span.line);
        result_.diagnostics.push_back(std::move(d));
    }

    std::string line_text(int line) const {
        std::size_t start = 0;
        for (int l = 1; l < line && start != std::string_view::npos; ++l) {
            start = source_.find('\n', start);
            if (start != std::string_view::npos) ++start;
        }
        if (start == std::string_view::npos || start >= source_.size()) return {};
        const std::size_t end = source_.find('\n', start);
        std::string out(source_.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
        if (!out.empty() && out.back() == '\r') out.pop_back();
        return out;
    }

    void push(Operation o, Span span, const Statement& st) { result_.plan.steps.push_back({std::move(o), span, print(st)}); }

    static double real(const std::vector<KeyValue>& params, std::string_view key, double fallback) {
        const auto* kv = find_param(params, key);
        return kv ? kv->value.number.real() : fallback;
    }

    bool check_mode(ModeIndex m, Span span) {
        try {
            validate(m, kDefaultMaxOrder);
            return true;
        } catch (const std::exception& e) {
            error("S401", e.what(), span);
            return false;
        }
    }

    void handle(const BeamDecl&) {}

    void handle(const SourceStmt& s) {
        if (!check_mode(s.mode, s.mode_span)) return;
        SqueezerConfig c;
        const auto* alpha = find_param(s.params, "alpha");
        c.alpha = alpha ? alpha->value.number : complex{};
        if (s.squeezed) {
            const auto* vsq = find_param(s.params, "vsq");
            c.v_sq = vsq->value.number.real();
            c.v_anti = c.v_sq > 0.0 ? real(s.params, "vanti", 1.0 / c.v_sq) : 1.0;
            c.angle = real(s.params, "angle", 0.0);
            try {
                c.validate();
            } catch (const std::exception& e) {
                error("S402", e.what(), vsq->span);
                return;
            }
        }
        push(op::AddSource{{s.beam.text, s.mode}, c}, s.span, s);
    }

    void handle(const ElementStmt& e) {
        switch (e.kind) {
            case ElementKind::bs: {
                const double t = real(e.params, "t", 0.5);
                if (!(t >= 0.0 && t <= 1.0)) {
                    error("S403", "beamsplitter transmissivity must lie in [0, 1]", find_param(e.params, "t")->span);
                    return;
                }
                push(op::BeamSplitter{e.inputs[0].text, e.inputs[1].text, t}, e.span, e);
                return;
            }
            case ElementKind::phase:
                push(op::Phase{e.inputs[0].text, real(e.params, "phi", 0.0)}, e.span, e);
                return;
            case ElementKind::modal_phase: {
                op::ModalPhase m{e.inputs[0].text, 0.0, 0.0};
                if (e.lens) {
                    const auto* d = find_param(e.params, "d");
                    const double f = real(e.params, "f", 1.0);
                    if (!(f > 0.0)) {
                        error("S404", "lens focal length must be positive", find_param(e.params, "f")->span);
                        return;
                    }
                    const double sep = d->value.number.real() * (d->value.times_f ? f : 1.0);
                    try {
                        const auto ph = lens_pair_phase(sep, f);
                        m.psi_x = ph.psi_x;
                        m.psi_y = ph.psi_y;
                    } catch (const std::exception& ex) {
                        error("S404", ex.what(), d->span);
                        return;
                    }
                } else {
                    m.psi_x = real(e.params, "psix", 0.0);
                    m.psi_y = real(e.params, "psiy", 0.0);
                }
                push(m, e.span, e);
                return;
            }
            case ElementKind::mode_separator: {
                const double eta = real(e.params, "eta", 1.0);
                if (!(eta >= 0.0 && eta <= 1.0)) {
                    error("S405", "mode separator efficiency must lie in [0, 1]", find_param(e.params, "eta")->span);
                    return;
                }
                ports_[e.outputs[0].text] = {e.outputs[1].text, true};
                ports_[e.outputs[1].text] = {e.outputs[0].text, false};
                push(op::Separator{e.inputs[0].text, e.outputs[0].text, e.outputs[1].text, eta}, e.span, e);
                return;
            }
            case ElementKind::mode_combiner:
                push(op::Combiner{e.inputs[0].text, e.inputs[1].text, e.outputs[0].text}, e.span, e);
                return;
        }
    }

    std::optional<ModeIndex> low_mode(const DetectStmt& d, bool need_pair) {
        const ModeIndex m{static_cast<int>(real(d.params, "p", 1.0)), static_cast<int>(real(d.params, "q", 0.0))};
        const auto* kv = find_param(d.params, "p");
        if (!kv) kv = find_param(d.params, "q");
        const Span span = kv ? kv->span : d.span;
        if (!check_mode(m, span)) return std::nullopt;
        if (need_pair && m.p == m.q) {
            error("S406", "a Stokes mode pair needs p != q, got " + m.str(), span);
            return std::nullopt;
        }
        return m;
    }

    static ModePair pair_in(const std::string& beam, ModeIndex low, std::optional<double> theta = std::nullopt) {
        return ModePair{{beam, low}, {beam, low.swapped()}, theta};
    }

    void handle(const DetectStmt& d) {
        const bool pair_needed = d.kind != DetectKind::quad;
        auto low = low_mode(d, pair_needed);
        if (!low) return;
        std::optional<double> theta;
        if (const auto* kv = find_param(d.params, "theta")) theta = kv->value.number.real();
        switch (d.kind) {
            case DetectKind::stokes: {
                op::ReadStokes r;
                r.component = d.components[0];
                r.pair = pair_in(d.beams[0].text, *low, theta);
                if (d.beams.size() == 2) {
                    const auto it = ports_.find(d.beams[0].text);
                    if (it != ports_.end() && it->second.first == d.beams[1].text) {
                        // Odd/even ports of one separator: route each mode to its port.
                        const std::string odd = it->second.second ? d.beams[0].text : d.beams[1].text;
                        const std::string even = it->second.second ? d.beams[1].text : d.beams[0].text;
                        r.pair.low.beam = low->odd_in_x() ? odd : even;
                        r.pair.high.beam = low->swapped().odd_in_x() ? odd : even;
                        r.split_ports = true;
                    } else {
                        r.other = pair_in(d.beams[1].text, *low, theta);
                    }
                }
                push(r, d.span, d);
                return;
            }
            case DetectKind::quad: {
                op::ReadQuadrature r;
                r.angle = real(d.params, "angle", 0.0);
                r.pair = pair_in(d.beams[0].text, *low);
                if (d.beams.size() == 2) r.other = pair_in(d.beams[1].text, *low);
                push(r, d.span, d);
                return;
            }
            case DetectKind::insep: {
                op::ReadInseparability r;
                r.a = d.components[0];
                r.b = d.components[1];
                r.pair_x = pair_in(d.beams[0].text, *low, theta);
                r.pair_y = pair_in(d.beams[1].text, *low, theta);
                push(r, d.span, d);
                return;
            }
        }
    }
};

}  // namespace detail

/// Deterministic: the same IR always yields the same plan. `source` is only
/// used for diagnostic excerpts.
inline CompileResult compile(const CircuitIR& ir, std::string_view source = {}) {
    return detail::Compiler(source).run(ir);
}

// ---------------------------------------------------------------------------
// Execution

struct RunOptions {
    std::size_t monte_carlo_samples = 0;  // > 0 adds sampled Stokes variances
    std::uint64_t seed = 20240607;
    bool include_state = false;
};

struct RunResult {
    json report;                           // canonical report document
    GaussianBeamState state;               // final state
    std::optional<Diagnostic> failure;     // runtime numerical failure
};

namespace detail {

inline GaussianBeamState with_pair(GaussianBeamState s, const ModePair& p) {
    // Modes never sourced or reached by an element are vacuum.
    s = s.with_vacuum(p.low);
    return s.with_vacuum(p.high);
}

inline json read_stokes(GaussianBeamState& s, const op::ReadStokes& r, const RunOptions& opt) {
    s = with_pair(s, r.pair);
    json out;
    out["component"] = std::string(name(r.component));
    const auto idx = static_cast<std::size_t>(r.component);
    if (!r.other) {
        const auto rep = squeezing_report(s, r.pair);
        out["mean"] = rep.means[static_cast<int>(idx)];
        out["variance"] = rep.variances.raw[idx];
        out["normalized_variance"] = rep.variances.normalized()[idx];
        out["class"] = std::string(name(rep.classes[idx]));
        out["report"] = to_json(rep);
        if (opt.monte_carlo_samples > 0) {
            const auto g = stokes_gradient(s, r.pair, r.component);
            const auto samples = sample_fluctuations(s, opt.monte_carlo_samples, opt.seed);
            double sum = 0.0, sum2 = 0.0;
            for (std::size_t k = 0; k < samples.count; ++k) {
                double v = 0.0;
                for (std::size_t c = 0; c < samples.dimension; ++c) v += g(static_cast<Eigen::Index>(c)) * samples.at(k, c);
                sum += v;
                sum2 += v * v;
            }
            const double n = static_cast<double>(samples.count);
            out["sampled_variance"] = (sum2 - sum * sum / n) / (n - 1.0);
            out["samples"] = samples.count;
            out["seed"] = opt.seed;
        }
        return out;
    }
    s = with_pair(s, *r.other);
    const auto cv = conditional_variance(s, Observable::stokes(r.component), r.pair, *r.other);
    out["conditional_variance"] = to_json(cv);
    out["means"] = {{r.pair.low.beam, to_json(stokes_means(s, r.pair))},
                    {r.other->low.beam, to_json(stokes_means(s, *r.other))}};
    return out;
}

inline json read_quadrature(GaussianBeamState& s, const op::ReadQuadrature& r) {
    s = s.with_vacuum(r.pair.low);
    json out;
    out["angle"] = r.angle;
    out["mode"] = r.pair.low.mode.str();
    if (!r.other) {
        out["variance"] = own_quadrature_variance(s, r.pair.low, r.angle);
        return out;
    }
    s = s.with_vacuum(r.other->low);
    out["conditional_variance"] = to_json(conditional_variance(s, Observable::quadrature(r.angle), r.pair, *r.other));
    return out;
}

inline json read_inseparability(GaussianBeamState& s, const op::ReadInseparability& r) {
    s = with_pair(with_pair(s, r.pair_x), r.pair_y);
    json out = to_json(inseparability(s, r.a, r.b, r.pair_x, r.pair_y));
    try {
        out["asymptotic"] = to_json(asymptotic_inseparability(s, r.pair_x, r.pair_y, r.pair_x.theta));
    } catch (const std::domain_error&) {
        out["asymptotic"] = nullptr;  // amplitude ratio outside the asymptotic regime
    }
    return out;
}

inline GaussianBeamState combine(const GaussianBeamState& s, const op::Combiner& o) {
    const bool odd = s.has_beam(o.odd), even = s.has_beam(o.even);
    if (odd && even) return mode_combiner(s, o.odd, o.even, o.out);
    if (!odd && !even) return s;
    // One port carries only vacuum: check parity, then relabel the other.
    const std::string& port = odd ? o.odd : o.even;
    for (auto i : s.beam_indices(port)) {
        if (s.basis()[i].mode.odd_in_x() != odd) {
            throw std::invalid_argument("mode combiner: " + s.basis()[i].str() + " cannot enter the " +
                                        (odd ? "odd" : "even") + " port");
        }
    }
    return relabel_beam(s, port, std::vector<std::string>(s.beam_indices(port).size(), o.out));
}

}  // namespace detail

/// Executes the plan; detector reports appear in declaration order. A
/// numerical failure stops execution and names the originating statement.
inline RunResult run(const Plan& plan, const RunOptions& options = {}) {
    RunResult result;
    GaussianBeamState& s = result.state;
    json detectors = json::array();
    for (const auto& step : plan.steps) {
        try {
            std::visit(
                [&](const auto& o) {
                    using T = std::decay_t<decltype(o)>;
                    json entry;
                    if constexpr (std::is_same_v<T, op::AddSource>) {
                        s = s.with_vacuum(o.entry);
                        s = add_source(s, o.entry, o.config);
                        return;
                    } else if constexpr (std::is_same_v<T, op::Phase>) {
                        // A beam with no modes in the state is vacuum; passive elements leave it alone.
                        if (s.has_beam(o.beam)) s = apply_beam_phase(s, o.beam, o.phi);
                        return;
                    } else if constexpr (std::is_same_v<T, op::BeamSplitter>) {
                        s = apply_beam_beamsplitter(s, o.a, o.b, o.t);
                        return;
                    } else if constexpr (std::is_same_v<T, op::ModalPhase>) {
                        if (s.has_beam(o.beam)) s = apply_modal_phase(s, o.beam, o.psi_x, o.psi_y);
                        return;
                    } else if constexpr (std::is_same_v<T, op::Separator>) {
                        if (s.has_beam(o.in)) s = mode_separator(s, o.in, o.odd, o.even, o.eta);
                        return;
                    } else if constexpr (std::is_same_v<T, op::Combiner>) {
                        s = detail::combine(s, o);
                        return;
                    } else if constexpr (std::is_same_v<T, op::ReadStokes>) {
                        entry = detail::read_stokes(s, o, options);
                        entry["kind"] = "stokes";
                        std::vector<std::string> beams{o.pair.low.beam};
                        if (o.split_ports || o.other) beams.push_back(o.split_ports ? o.pair.high.beam : o.other->low.beam);
                        entry["beams"] = beams;
                        entry["split_ports"] = o.split_ports;
                    } else if constexpr (std::is_same_v<T, op::ReadQuadrature>) {
                        entry = detail::read_quadrature(s, o);
                        entry["kind"] = "quad";
                    } else {
                        entry = detail::read_inseparability(s, o);
                        entry["kind"] = "insep";
                    }
                    entry["line"] = step.span.line;
                    entry["statement"] = step.statement;
                    detectors.push_back(std::move(entry));
                },
                step.operation);
        } catch (const std::exception& e) {
            Diagnostic d;
            d.code = "N501";
            d.message = std::string(e.what());
            d.span = step.span;
            d.excerpt = step.statement;
            result.failure = std::move(d);
            break;
        }
    }
    result.report = {{"schema_version", kSchemaVersion}, {"detectors", detectors}};
    if (options.include_state && s.size() > 0) result.report["state"] = to_json(s);
    return result;
}

// ---------------------------------------------------------------------------
// Sweeps

struct Substitution {
    CircuitIR ir;
    std::optional<std::string> error;
};

/// Replaces one key's value. `selector` is either KEY (must occur exactly
/// once in the program) or LINE:KEY.
inline Substitution substitute(const CircuitIR& ir, std::string_view selector, double value) {
    Substitution out{ir, std::nullopt};
    int line = 0;
    std::string key(selector);
    if (const auto colon = selector.find(':'); colon != std::string_view::npos) {
        const auto head = selector.substr(0, colon);
        const auto res = std::from_chars(head.data(), head.data() + head.size(), line);
        if (res.ec != std::errc{} || res.ptr != head.data() + head.size() || line <= 0) {
            out.error = "bad parameter selector '" + std::string(selector) + "' (expected KEY or LINE:KEY)";
            return out;
        }
        key = std::string(selector.substr(colon + 1));
    }
    std::vector<KeyValue*> hits;
    for (auto& st : out.ir.statements) {
        std::visit(
            [&](auto& s) {
                if constexpr (!std::is_same_v<std::decay_t<decltype(s)>, BeamDecl>) {
                    for (auto& kv : s.params) {
                        if (kv.key == key && (line == 0 || kv.span.line == line)) hits.push_back(&kv);
                    }
                }
            },
            st);
    }
    if (hits.empty()) {
        out.error = "no key '" + key + "'" + (line ? " on line " + std::to_string(line) : std::string()) + " in the program";
        return out;
    }
    if (hits.size() > 1) {
        std::string lines;
        for (const auto* h : hits) lines += (lines.empty() ? "" : ", ") + std::to_string(h->span.line);
        out.error = "key '" + key + "' occurs on lines " + lines + "; select one as LINE:" + key;
        return out;
    }
    const bool angle = key == "angle" || key == "phi" || key == "psix" || key == "psiy" || key == "theta";
    hits[0]->value.number = complex{angle ? wrap_angle(value) : value, 0.0};
    return out;
}

/// a:b:n with n evenly spaced points including both ends.
inline std::optional<std::vector<double>> parse_range(std::string_view text, std::string* why = nullptr) {
    auto fail = [&](std::string m) -> std::optional<std::vector<double>> {
        if (why) *why = std::move(m);
        return std::nullopt;
    };
    const auto c1 = text.find(':');
    const auto c2 = c1 == std::string_view::npos ? c1 : text.find(':', c1 + 1);
    if (c2 == std::string_view::npos) return fail("range must be a:b:n");
    const auto a = parse_value(text.substr(0, c1));
    const auto b = parse_value(text.substr(c1 + 1, c2 - c1 - 1));
    const auto ntext = text.substr(c2 + 1);
    int n = -1;
    const auto res = std::from_chars(ntext.data(), ntext.data() + ntext.size(), n);
    if (!a || !b || a->number.imag() != 0.0 || b->number.imag() != 0.0 || a->times_f || b->times_f) {
        return fail("range bounds must be real numbers");
    }
    if (res.ec != std::errc{} || res.ptr != ntext.data() + ntext.size() || n < 0 || n > 1000000) {
        return fail("range count must be an integer in [0, 1000000]");
    }
    std::vector<double> out;
    const double lo = a->number.real(), hi = b->number.real();
    for (int k = 0; k < n; ++k) out.push_back(n == 1 ? lo : k == n - 1 ? hi : lo + (hi - lo) * k / (n - 1));
    return out;
}

}  // namespace sstokes::dsl
