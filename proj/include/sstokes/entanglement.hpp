// entanglement.hpp
// Two-beam spatial Stokes entanglement: conditional variances, the Duan-type
// degree of inseparability, and the squeezer / beamsplitter / mode-combiner
// generation scheme.
//
// Two beams x and y live in one joint GaussianBeamState with beam-qualified
// basis labels. For an observable O the conditional variance is
//   D2(O) = min over s in {+1, -1} of < (dO_x + s dO_y)^2 >,
// minimized independently for each observable, and
//   I(A, B) = (D2(A) + D2(B)) / (2 |<[dA, dB]>|),
// with I < 1 certifying inseparability.

#pragma once

#include "sstokes/gaussian.hpp"
#include "sstokes/stokes.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace sstokes {

/// A Stokes component of the beam's mode pair, or an own-frame quadrature of
/// one of its modes.
struct Observable {
    enum class Kind { stokes, quadrature };

    Kind kind = Kind::stokes;
    StokesComponent component = StokesComponent::S0;
    double angle = 0.0;      // quadrature angle, own amplitude frame
    bool on_high = false;    // quadrature of TEM_qp instead of TEM_pq

    static Observable stokes(StokesComponent c) { return {Kind::stokes, c, 0.0, false}; }
    static Observable quadrature(double angle, bool on_high = false) {
        return {Kind::quadrature, StokesComponent::S0, angle, on_high};
    }

    std::string label() const {
        if (kind == Kind::stokes) return std::string(name(component));
        return std::string("X^") + std::to_string(angle) + (on_high ? "[qp]" : "[pq]");
    }
};

struct ConditionalVariance {
    std::string observable;
    double value = 0.0;        // minimum over the two signs
    int sign = +1;             // sign achieving the minimum
    double other_value = 0.0;  // variance with the opposite sign
};

namespace detail {

inline Eigen::VectorXd observable_gradient(const GaussianBeamState& state, const Observable& o,
                                           const ModePair& pair) {
    if (o.kind == Observable::Kind::stokes) return stokes_gradient(state, pair, o.component);
    const BasisEntry& e = o.on_high ? pair.high : pair.low;
    const double phi = o.angle + mean_phase(state.mean(e));
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * state.size()));
    const auto k = static_cast<Eigen::Index>(2 * state.index_of(e));
    g(k) = std::cos(phi);
    g(k + 1) = std::sin(phi);
    return g;
}

inline void require_distinct_beams(const ModePair& x, const ModePair& y) {
    for (const auto* a : {&x.low, &x.high}) {
        for (const auto* b : {&y.low, &y.high}) {
            if (a->beam == b->beam) {
                throw std::invalid_argument("conditional variance needs two distinct beams; '" + a->beam +
                                            "' appears on both sides");
            }
        }
    }
}

}  // namespace detail

inline ConditionalVariance conditional_variance(const GaussianBeamState& joint, const Observable& o,
                                                const ModePair& pair_x, const ModePair& pair_y) {
    detail::require_distinct_beams(pair_x, pair_y);
    const Eigen::VectorXd gx = detail::observable_gradient(joint, o, pair_x);
    const Eigen::VectorXd gy = detail::observable_gradient(joint, o, pair_y);
    const Eigen::VectorXd plus = gx + gy;
    const Eigen::VectorXd minus = gx - gy;
    const double vp = plus.dot(joint.cov() * plus);
    const double vm = minus.dot(joint.cov() * minus);
    ConditionalVariance out;
    out.observable = o.label();
    if (vp <= vm) {
        out.value = vp;
        out.sign = +1;
        out.other_value = vm;
    } else {
        out.value = vm;
        out.sign = -1;
        out.other_value = vp;
    }
    return out;
}

struct InseparabilityReport {
    StokesComponent a = StokesComponent::S1;
    StokesComponent b = StokesComponent::S2;
    ConditionalVariance delta_a;
    ConditionalVariance delta_b;
    double numerator = 0.0;
    double denominator = 0.0;
    double value = 0.0;
    bool separable = true;          // value >= 1
    bool asymmetry_warning = false; // beams not interchangeable to 1e-9

    std::string pair_label() const { return std::string(name(a)) + "," + std::string(name(b)); }
};

namespace detail {

inline bool symmetric_amplitudes(const GaussianBeamState& s, const ModePair& x, const ModePair& y,
                                 double rel_tol = 1e-9) {
    auto close = [&](double u, double v) { return std::abs(u - v) <= rel_tol * std::max({1.0, std::abs(u), std::abs(v)}); };
    return close(std::abs(s.mean(x.low)), std::abs(s.mean(y.low))) &&
           close(std::abs(s.mean(x.high)), std::abs(s.mean(y.high)));
}

}  // namespace detail

/// Degree of inseparability between two Stokes components. The commutator
/// magnitude is taken from the linearized means, averaged over the two beams
/// (identical under the symmetric-beam assumption, which is checked).
inline InseparabilityReport inseparability(const GaussianBeamState& joint, StokesComponent a, StokesComponent b,
                                           const ModePair& pair_x, const ModePair& pair_y) {
    const int ia = static_cast<int>(a), ib = static_cast<int>(b);
    if (ia < 1 || ib < 1 || ia == ib) {
        throw std::invalid_argument("inseparability needs two distinct components among S1, S2, S3");
    }
    InseparabilityReport r;
    r.a = a;
    r.b = b;
    r.delta_a = conditional_variance(joint, Observable::stokes(a), pair_x, pair_y);
    r.delta_b = conditional_variance(joint, Observable::stokes(b), pair_x, pair_y);
    r.numerator = r.delta_a.value + r.delta_b.value;
    const auto mx = stokes_means(joint, pair_x);
    const auto my = stokes_means(joint, pair_y);
    r.denominator = commutator_mean(ia, ib, mx) + commutator_mean(ia, ib, my);
    const double scale = mx.s0 + my.s0;
    if (!(r.denominator > 1e-12 * scale) || r.denominator == 0.0) {
        throw std::domain_error("inseparability criterion I(" + r.pair_label() +
                                ") is undefined: the commutator expectation vanishes");
    }
    r.value = r.numerator / r.denominator;
    r.separable = r.value >= 1.0;
    r.asymmetry_warning = !detail::symmetric_amplitudes(joint, pair_x, pair_y);
    return r;
}

struct Fig4Scheme {
    GaussianBeamState state;
    ModePair pair_x;
    ModePair pair_y;
    std::vector<std::string> warnings;
};

/// Two squeezed TEM10 beams, the second phase shifted by pi/2, mixed on a
/// 50:50 beamsplitter; each output is merged with a bright coherent TEM01
/// beam by a mode combiner. The TEM01 phase is chosen so that each output
/// beam has relative phase theta between its TEM10 and TEM01 components.
inline Fig4Scheme build_fig4_scheme(const SqueezerConfig& squeezer_x, const SqueezerConfig& squeezer_y,
                                    double alpha01, double theta) {
    const ModeIndex tem10{1, 0}, tem01{0, 1};
    GaussianBeamState s = vacuum_state({{"sx", tem10}, {"sy", tem10}});
    s = add_source(s, {"sx", tem10}, squeezer_x);
    s = add_source(s, {"sy", tem10}, squeezer_y);
    s = apply_phase(s, {"sy", tem10}, std::numbers::pi / 2.0);
    s = apply_beamsplitter(s, {"sx", tem10}, {"sy", tem10}, 0.5);

    Fig4Scheme out;
    for (const auto& [sq, lo, target] : {std::tuple{"sx", "lx", "x"}, std::tuple{"sy", "ly", "y"}}) {
        const double phase = detail::mean_phase(s.mean({sq, tem10})) + theta;
        s = s.with_vacuum({lo, tem01}, true);
        s = add_source(s, {lo, tem01}, SqueezerConfig::coherent(std::polar(alpha01, phase)));
        s = mode_combiner(s, sq, lo, target);
    }
    out.pair_x = ModePair::in_beam("x", tem10);
    out.pair_y = ModePair::in_beam("y", tem10);
    for (const auto& p : {out.pair_x, out.pair_y}) {
        const double a10 = std::abs(s.mean(p.low));
        if (a10 > 0.0 && alpha01 / a10 < 10.0) {
            out.warnings.push_back("beam " + p.low.beam + ": alpha01/alpha10 = " + std::to_string(alpha01 / a10) +
                                   " is outside the alpha10 << alpha01 regime");
        }
    }
    out.state = std::move(s);
    return out;
}

/// Symmetric variant: only the x squeezer is bright (amplitude sqrt2 alpha10),
/// so both outputs carry TEM10 amplitude alpha10 with equal phase.
inline Fig4Scheme build_fig4_symmetric(double v_sq, double alpha10, double alpha01, double theta) {
    return build_fig4_scheme(SqueezerConfig::pure(v_sq, 0.0, std::numbers::sqrt2 * alpha10),
                             SqueezerConfig::pure(v_sq, 0.0, 0.0), alpha01, theta);
}

struct AsymptoticInseparability {
    std::optional<double> s1_s2;
    std::optional<double> s3_s1;
    std::optional<double> s2_s3;
    double ratio = 0.0;  // alpha01 / alpha10, +inf when alpha10 = 0
    double theta = 0.0;
    bool ratio_warning = false;  // ratio below 30
    ConditionalVariance d_x01_plus;
    ConditionalVariance d_x10_theta;
    ConditionalVariance d_x10_theta_minus_half_pi;
};

/// Closed forms valid for alpha10 << alpha01:
///   I(S1,S2) = alpha01 / (8 alpha10 |sin t|) (D2 X+_01 + D2 X^t_10)
///   I(S3,S1) = alpha01 / (8 alpha10 |cos t|) (D2 X+_01 + D2 X^(t-pi/2)_10)
///   I(S2,S3) = (D2 X^t_10 + D2 X^(t-pi/2)_10) / 4
/// Rejects amplitude ratios below 10.
inline AsymptoticInseparability asymptotic_inseparability(const GaussianBeamState& joint, const ModePair& pair_x,
                                                          const ModePair& pair_y,
                                                          std::optional<double> theta = std::nullopt) {
    AsymptoticInseparability r;
    const double a10 = 0.5 * (std::abs(joint.mean(pair_x.low)) + std::abs(joint.mean(pair_y.low)));
    const double a01 = 0.5 * (std::abs(joint.mean(pair_x.high)) + std::abs(joint.mean(pair_y.high)));
    r.ratio = a10 == 0.0 ? std::numeric_limits<double>::infinity() : a01 / a10;
    if (!(r.ratio >= 10.0 * (1.0 - 1e-12))) {
        throw std::domain_error("asymptotic inseparability needs alpha01/alpha10 >= 10, got " +
                                std::to_string(r.ratio));
    }
    r.ratio_warning = r.ratio < 30.0;
    r.theta = theta ? *theta : resolved_theta(joint, pair_x);
    const double t = r.theta;
    r.d_x01_plus = conditional_variance(joint, Observable::quadrature(0.0, true), pair_x, pair_y);
    r.d_x10_theta = conditional_variance(joint, Observable::quadrature(t), pair_x, pair_y);
    r.d_x10_theta_minus_half_pi =
        conditional_variance(joint, Observable::quadrature(t - std::numbers::pi / 2.0), pair_x, pair_y);
    const double eps = 1e-12;
    if (a10 > 0.0 && std::abs(std::sin(t)) > eps) {
        r.s1_s2 = a01 / (8.0 * a10 * std::abs(std::sin(t))) * (r.d_x01_plus.value + r.d_x10_theta.value);
    }
    if (a10 > 0.0 && std::abs(std::cos(t)) > eps) {
        r.s3_s1 = a01 / (8.0 * a10 * std::abs(std::cos(t))) *
                  (r.d_x01_plus.value + r.d_x10_theta_minus_half_pi.value);
    }
    r.s2_s3 = 0.25 * (r.d_x10_theta.value + r.d_x10_theta_minus_half_pi.value);
    return r;
}

}  // namespace sstokes
