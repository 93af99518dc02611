// stokes.hpp
// Spatial Stokes operators for a TEM_pq / TEM_qp mode pair, in the
// linearized (bright beam) approximation.
//
//   S0 = n_pq + n_qp
//   S1 = n_pq - n_qp
//   S2 = a_pq^dag a_qp e^{i theta} + h.c.
//   S3 = i a_qp^dag a_pq e^{-i theta} - i a_pq^dag a_qp e^{i theta}
//
// Mean fields enter through their magnitudes |alpha_pq|, |alpha_qp|; all phase
// information is carried by theta, which defaults to the relative mean-field
// phase arg(alpha_qp) - arg(alpha_pq). Quadratures in the variance formulas
// are taken in each mode's own amplitude frame (X+ along the mean field), so
// "amplitude squeezed" means squeezed along the mode's own mean.

#pragma once

#include "sstokes/gaussian.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sstokes {

enum class StokesComponent : int { S0 = 0, S1 = 1, S2 = 2, S3 = 3 };

inline std::string_view name(StokesComponent c) {
    static constexpr std::array<std::string_view, 4> names{"S0", "S1", "S2", "S3"};
    return names[static_cast<int>(c)];
}

inline std::optional<StokesComponent> parse_component(std::string_view s) {
    for (int i = 0; i < 4; ++i) {
        if (name(static_cast<StokesComponent>(i)) == s) return static_cast<StokesComponent>(i);
    }
    return std::nullopt;
}

/// The two modes spanning a spatial Poincare sphere. Usually both live in one
/// beam; after a mode separator they may sit in the two output ports.
struct ModePair {
    BasisEntry low;   // TEM_pq
    BasisEntry high;  // TEM_qp
    std::optional<double> theta;

    static ModePair in_beam(const std::string& beam, ModeIndex low = {1, 0},
                            std::optional<double> theta = std::nullopt) {
        ModePair p{{beam, low}, {beam, low.swapped()}, theta};
        p.validate();
        return p;
    }

    void validate() const {
        if (high.mode != low.mode.swapped()) {
            throw std::invalid_argument("mode pair " + low.str() + " / " + high.str() + " is not an index swap");
        }
        if (low.mode.p == low.mode.q) throw std::invalid_argument("mode pair needs p != q, got " + low.str());
    }
};

struct StokesMeans {
    double s0 = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    double s3 = 0.0;
    double theta = 0.0;

    double operator[](int i) const {
        switch (i) {
            case 0: return s0;
            case 1: return s1;
            case 2: return s2;
            case 3: return s3;
            default: throw std::out_of_range("Stokes index must be 0..3");
        }
    }
};

/// Variances in photon-number units; normalized() divides by the coherent
/// benchmark s0.
struct StokesVariances {
    std::array<double, 4> raw{};
    double s0 = 0.0;
    bool linearization_warning = false;

    double operator[](int i) const { return raw.at(static_cast<std::size_t>(i)); }
    std::array<double, 4> normalized() const {
        std::array<double, 4> out{};
        for (std::size_t i = 0; i < 4; ++i) out[i] = s0 > 0.0 ? raw[i] / s0 : 0.0;
        return out;
    }
};

namespace detail {

struct PairFrame {
    std::size_t low = 0, high = 0;         // state indices
    double amp_low = 0.0, amp_high = 0.0;  // |alpha_pq|, |alpha_qp|
    double phase_low = 0.0, phase_high = 0.0;
    double theta = 0.0;
};

inline double mean_phase(complex a) { return a == complex{} ? 0.0 : std::arg(a); }

inline PairFrame frame(const GaussianBeamState& state, const ModePair& pair) {
    pair.validate();
    PairFrame f;
    f.low = state.index_of(pair.low);
    f.high = state.index_of(pair.high);
    const complex al = state.means()[f.low];
    const complex ah = state.means()[f.high];
    f.amp_low = std::abs(al);
    f.amp_high = std::abs(ah);
    f.phase_low = mean_phase(al);
    f.phase_high = mean_phase(ah);
    f.theta = pair.theta ? *pair.theta : std::remainder(f.phase_high - f.phase_low, 2.0 * std::numbers::pi);
    return f;
}

// One term coefficient * X^angle (own frame) of the linearized fluctuation.
struct Term {
    double coefficient;
    bool on_low;
    double angle;
};

// Linearized dS_i as a sum of own-frame quadratures; matches the variance
// rows term by term.
inline std::array<Term, 2> fluctuation_terms(const PairFrame& f, StokesComponent c) {
    const double a = f.amp_low, b = f.amp_high, t = f.theta;
    constexpr double half_pi = std::numbers::pi / 2.0;
    switch (c) {
        case StokesComponent::S0: return {{{a, true, 0.0}, {b, false, 0.0}}};
        case StokesComponent::S1: return {{{a, true, 0.0}, {-b, false, 0.0}}};
        case StokesComponent::S2: return {{{a, false, -t}, {b, true, t}}};
        case StokesComponent::S3: return {{{a, false, -t + half_pi}, {b, true, t - half_pi}}};
    }
    throw std::invalid_argument("bad Stokes component");
}

inline QuadratureSpec own_frame(const GaussianBeamState& state, const PairFrame& f, bool on_low, double angle) {
    const std::size_t i = on_low ? f.low : f.high;
    return {state.basis()[i], angle + (on_low ? f.phase_low : f.phase_high)};
}

}  // namespace detail

inline double resolved_theta(const GaussianBeamState& state, const ModePair& pair) {
    return detail::frame(state, pair).theta;
}

inline StokesMeans stokes_means(const GaussianBeamState& state, const ModePair& pair) {
    const auto f = detail::frame(state, pair);
    const double a2 = f.amp_low * f.amp_low;
    const double b2 = f.amp_high * f.amp_high;
    const double ab = f.amp_low * f.amp_high;
    return {a2 + b2, a2 - b2, 2.0 * ab * std::cos(f.theta), 2.0 * ab * std::sin(f.theta), f.theta};
}

/// Own-frame quadrature variance of one mode of the pair: the X^phi of the
/// variance formulas (phi measured from the mode's own mean-field phase).
inline double own_quadrature_variance(const GaussianBeamState& state, const BasisEntry& e, double phi) {
    return quadrature_variance(state, e, phi + detail::mean_phase(state.mean(e)));
}

namespace detail {

inline bool linearization_suspect(const GaussianBeamState& state, const PairFrame& f, double s0) {
    double worst = 0.0;
    for (auto i : {f.low, f.high}) {
        for (auto j : {f.low, f.high}) worst = std::max(worst, state.block(i, j).cwiseAbs().maxCoeff());
    }
    return s0 < 100.0 * worst;
}

}  // namespace detail

/// Variances with inter-mode cross-covariances included.
inline StokesVariances stokes_variances_general(const GaussianBeamState& state, const ModePair& pair) {
    const auto f = detail::frame(state, pair);
    StokesVariances v;
    for (int i = 0; i < 4; ++i) {
        const auto terms = detail::fluctuation_terms(f, static_cast<StokesComponent>(i));
        const auto qa = detail::own_frame(state, f, terms[0].on_low, terms[0].angle);
        const auto qb = detail::own_frame(state, f, terms[1].on_low, terms[1].angle);
        const double ca = terms[0].coefficient, cb = terms[1].coefficient;
        v.raw[static_cast<std::size_t>(i)] = ca * ca * quadrature_covariance(state, qa, qa) +
                                             cb * cb * quadrature_covariance(state, qb, qb) +
                                             2.0 * ca * cb * quadrature_covariance(state, qa, qb);
    }
    v.s0 = f.amp_low * f.amp_low + f.amp_high * f.amp_high;
    v.linearization_warning = detail::linearization_suspect(state, f, v.s0);
    return v;
}

/// Variances for modes without mutual correlations; rejects correlated input.
inline StokesVariances stokes_variances_uncorrelated(const GaussianBeamState& state, const ModePair& pair,
                                                     double max_cross = 1e-10) {
    const auto f = detail::frame(state, pair);
    const double cross = state.block(f.low, f.high).cwiseAbs().maxCoeff();
    if (cross > max_cross) {
        throw std::invalid_argument("modes of the pair are correlated (max cross-covariance " +
                                    std::to_string(cross) + "); use the general variance form");
    }
    StokesVariances v;
    for (int i = 0; i < 4; ++i) {
        const auto terms = detail::fluctuation_terms(f, static_cast<StokesComponent>(i));
        double sum = 0.0;
        for (const auto& t : terms) {
            const auto q = detail::own_frame(state, f, t.on_low, t.angle);
            sum += t.coefficient * t.coefficient * quadrature_covariance(state, q, q);
        }
        v.raw[static_cast<std::size_t>(i)] = sum;
    }
    v.s0 = f.amp_low * f.amp_low + f.amp_high * f.amp_high;
    v.linearization_warning = detail::linearization_suspect(state, f, v.s0);
    return v;
}

/// Coefficients g with dS_i = g . x over the state's lab-frame quadrature
/// vector x. Lets Stokes fluctuations be combined across beams and sampled.
inline Eigen::VectorXd stokes_gradient(const GaussianBeamState& state, const ModePair& pair, StokesComponent c) {
    const auto f = detail::frame(state, pair);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * state.size()));
    for (const auto& t : detail::fluctuation_terms(f, c)) {
        const auto q = detail::own_frame(state, f, t.on_low, t.angle);
        const auto k = static_cast<Eigen::Index>(2 * state.index_of(q.entry));
        g(k) += t.coefficient * std::cos(q.angle);
        g(k + 1) += t.coefficient * std::sin(q.angle);
    }
    return g;
}

namespace detail {

inline constexpr int levi_civita(int i, int j, int k) {
    if (i == j || j == k || i == k) return 0;
    // even permutations of (1,2,3)
    if ((i == 1 && j == 2 && k == 3) || (i == 2 && j == 3 && k == 1) || (i == 3 && j == 1 && k == 2)) return 1;
    return -1;
}

}  // namespace detail

/// Signed <[S_i, S_j]> / i = 2 eps_ijk <S_k>, for i, j in 1..3.
inline double commutator_expectation(int i, int j, const StokesMeans& m) {
    if (i < 1 || i > 3 || j < 1 || j > 3) throw std::out_of_range("commutator indices must be 1..3");
    if (i == j) return 0.0;
    const int k = 6 - i - j;
    return 2.0 * detail::levi_civita(i, j, k) * m[k];
}

/// |<[S_i, S_j]>| from the linearized means.
inline double commutator_mean(int i, int j, const StokesMeans& m) { return std::abs(commutator_expectation(i, j, m)); }

struct PoincareCoords {
    std::array<double, 3> vector{};
    std::array<double, 3> noise_radii{};
};

inline PoincareCoords poincare_coords(const StokesMeans& m, const StokesVariances& v) {
    if (!(m.s0 > 0.0)) throw std::domain_error("Poincare coordinates need a non-zero mean intensity");
    PoincareCoords out;
    for (int i = 1; i <= 3; ++i) {
        out.vector[static_cast<std::size_t>(i - 1)] = m[i] / m.s0;
        out.noise_radii[static_cast<std::size_t>(i - 1)] = std::sqrt(std::max(0.0, v[i])) / m.s0;
    }
    return out;
}

enum class NoiseClass { squeezed, shot_noise, antisqueezed };

inline std::string_view name(NoiseClass c) {
    switch (c) {
        case NoiseClass::squeezed: return "squeezed";
        case NoiseClass::shot_noise: return "shot-noise";
        case NoiseClass::antisqueezed: return "antisqueezed";
    }
    return "?";
}

inline NoiseClass classify(double variance, double benchmark, double rel_tol = 1e-9) {
    const double margin = rel_tol * benchmark;
    if (variance < benchmark - margin) return NoiseClass::squeezed;
    if (variance > benchmark + margin) return NoiseClass::antisqueezed;
    return NoiseClass::shot_noise;
}

struct SqueezingReport {
    StokesMeans means;
    StokesVariances variances;
    std::array<NoiseClass, 4> classes{};

    std::vector<std::string> squeezed() const {
        std::vector<std::string> out;
        for (int i = 0; i < 4; ++i) {
            if (classes[static_cast<std::size_t>(i)] == NoiseClass::squeezed) {
                out.emplace_back(name(static_cast<StokesComponent>(i)));
            }
        }
        return out;
    }
};

/// Classifies each Stokes variance against the coherent benchmark N = s0.
inline SqueezingReport squeezing_report(const GaussianBeamState& state, const ModePair& pair) {
    SqueezingReport r;
    r.means = stokes_means(state, pair);
    r.variances = stokes_variances_general(state, pair);
    for (std::size_t i = 0; i < 4; ++i) r.classes[i] = classify(r.variances.raw[i], r.means.s0);
    return r;
}

}  // namespace sstokes
