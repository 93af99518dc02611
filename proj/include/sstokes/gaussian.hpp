// gaussian.hpp
// Multimode Gaussian states: complex mean amplitudes plus a real quadrature
// covariance matrix, and the linear optical elements acting on them.
//
// Conventions
//   X+ = a + a^dag, X- = -i(a - a^dag), X^phi = cos(phi) X+ + sin(phi) X-.
//   Vacuum quadrature variance is 1 (shot-noise units), [X+, X-] = 2i.
//   Quadratures are interleaved per basis entry: (X+_0, X-_0, X+_1, X-_1, ...).
//   Every operation returns a new state; states are plain values.

#pragma once

#include "sstokes/modes.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sstokes {

/// One mode of one beam.
struct BasisEntry {
    std::string beam;
    ModeIndex mode;

    auto operator<=>(const BasisEntry&) const = default;
    std::string str() const { return beam + ":" + mode.str(); }
};

/// Parameterization of a single-mode Gaussian source. The squeezed quadrature
/// is X^angle with variance v_sq; its conjugate has variance v_anti.
struct SqueezerConfig {
    double v_sq = 1.0;
    double v_anti = 1.0;
    double angle = 0.0;
    complex alpha{};

    static SqueezerConfig coherent(complex alpha) { return {1.0, 1.0, 0.0, alpha}; }
    static SqueezerConfig pure(double v_sq, double angle = 0.0, complex alpha = {}) {
        return {v_sq, 1.0 / v_sq, angle, alpha};
    }

    void validate() const {
        if (!(v_sq > 0.0)) throw std::invalid_argument("squeezer: v_sq must be positive");
        if (!(v_anti * v_sq >= 1.0 - 1e-12)) {
            throw std::invalid_argument("squeezer: v_anti * v_sq = " + std::to_string(v_anti * v_sq) +
                                        " violates the uncertainty bound (must be >= 1)");
        }
    }
    bool is_pure(double tol = 1e-9) const { return std::abs(v_sq * v_anti - 1.0) <= tol; }
    // Squeeze parameter r with v_sq = exp(-2r); meaningful for pure squeezers.
    double squeeze_parameter() const { return -0.5 * std::log(v_sq); }
};

inline double wrap_angle(double phi) {
    const double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(phi, two_pi);
    if (r < 0.0) r += two_pi;
    return r >= two_pi ? 0.0 : r;
}

struct QuadratureSpec {
    BasisEntry entry;
    double angle = 0.0;

    QuadratureSpec(BasisEntry e, double phi) : entry(std::move(e)), angle(wrap_angle(phi)) {}
};

inline Eigen::Matrix2d rotation(double phi) {
    Eigen::Matrix2d r;
    r << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    return r;
}

class GaussianBeamState {
public:
    GaussianBeamState() = default;

    static GaussianBeamState vacuum(std::vector<BasisEntry> basis) {
        if (basis.empty()) throw std::invalid_argument("vacuum_state: basis must not be empty");
        GaussianBeamState s;
        for (auto& e : basis) s = s.with_vacuum(e, /*require_new=*/true);
        return s;
    }

    /// Block-diagonal joint state of two independent states with disjoint bases.
    static GaussianBeamState product(const GaussianBeamState& a, const GaussianBeamState& b) {
        GaussianBeamState s = a;
        const auto n = static_cast<Eigen::Index>(2 * a.size());
        const auto m = static_cast<Eigen::Index>(2 * b.size());
        for (const auto& e : b.basis_) {
            if (a.find(e)) throw std::invalid_argument("product: basis entry " + e.str() + " in both states");
        }
        s.basis_.insert(s.basis_.end(), b.basis_.begin(), b.basis_.end());
        s.means_.insert(s.means_.end(), b.means_.begin(), b.means_.end());
        s.sourced_.insert(s.sourced_.end(), b.sourced_.begin(), b.sourced_.end());
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n + m, n + m);
        cov.topLeftCorner(n, n) = a.cov_;
        cov.bottomRightCorner(m, m) = b.cov_;
        s.cov_ = std::move(cov);
        return s;
    }

    std::size_t size() const { return basis_.size(); }
    const std::vector<BasisEntry>& basis() const { return basis_; }
    const std::vector<complex>& means() const { return means_; }
    const Eigen::MatrixXd& cov() const { return cov_; }

    std::optional<std::size_t> find(const BasisEntry& e) const {
        for (std::size_t i = 0; i < basis_.size(); ++i) {
            if (basis_[i] == e) return i;
        }
        return std::nullopt;
    }
    bool contains(const BasisEntry& e) const { return find(e).has_value(); }
    std::size_t index_of(const BasisEntry& e) const {
        if (auto i = find(e)) return *i;
        throw std::out_of_range("basis entry " + e.str() + " is not part of the state");
    }

    complex mean(const BasisEntry& e) const { return means_[index_of(e)]; }
    bool is_sourced(const BasisEntry& e) const { return sourced_[index_of(e)]; }

    Eigen::Matrix2d block(std::size_t i, std::size_t j) const {
        return cov_.block<2, 2>(static_cast<Eigen::Index>(2 * i), static_cast<Eigen::Index>(2 * j));
    }

    std::vector<std::size_t> beam_indices(std::string_view beam) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < basis_.size(); ++i) {
            if (basis_[i].beam == beam) out.push_back(i);
        }
        return out;
    }
    bool has_beam(std::string_view beam) const { return !beam_indices(beam).empty(); }

    /// Beam labels in order of first appearance.
    std::vector<std::string> beams() const {
        std::vector<std::string> out;
        for (const auto& e : basis_) {
            if (std::find(out.begin(), out.end(), e.beam) == out.end()) out.push_back(e.beam);
        }
        return out;
    }

    /// Returns a copy with `e` appended in vacuum. Existing entries are left
    /// alone unless require_new is set, in which case duplicates are rejected.
    GaussianBeamState with_vacuum(const BasisEntry& e, bool require_new = false) const {
        if (contains(e)) {
            if (require_new) throw std::invalid_argument("duplicate basis entry " + e.str());
            return *this;
        }
        GaussianBeamState s = *this;
        const auto n = static_cast<Eigen::Index>(2 * size());
        s.basis_.push_back(e);
        s.means_.push_back({});
        s.sourced_.push_back(false);
        s.cov_.conservativeResize(n + 2, n + 2);
        s.cov_.rightCols(2).setZero();
        s.cov_.bottomRows(2).setZero();
        s.cov_.bottomRightCorner(2, 2).setIdentity();
        return s;
    }

private:
    friend GaussianBeamState add_source(const GaussianBeamState&, const BasisEntry&, const SqueezerConfig&);
    friend GaussianBeamState transform_linear(const GaussianBeamState&, const std::vector<std::size_t>&,
                                              const Eigen::MatrixXd&, const Eigen::MatrixXcd&);
    friend GaussianBeamState relabel_beam(const GaussianBeamState&, std::string_view,
                                          const std::vector<std::string>&);
    friend GaussianBeamState attenuate(const GaussianBeamState&, std::size_t, double);

    std::vector<BasisEntry> basis_;
    std::vector<complex> means_;
    std::vector<bool> sourced_;
    Eigen::MatrixXd cov_;
};

inline GaussianBeamState vacuum_state(std::vector<BasisEntry> basis) {
    return GaussianBeamState::vacuum(std::move(basis));
}

inline GaussianBeamState add_source(const GaussianBeamState& state, const BasisEntry& entry,
                                    const SqueezerConfig& config) {
    config.validate();
    const std::size_t i = state.index_of(entry);
    if (state.sourced_[i]) throw std::invalid_argument("entry " + entry.str() + " already has a source");
    GaussianBeamState s = state;
    s.sourced_[i] = true;
    s.means_[i] = config.alpha;
    const Eigen::Matrix2d r = rotation(config.angle);
    const Eigen::Matrix2d d = Eigen::Vector2d(config.v_sq, config.v_anti).asDiagonal();
    s.cov_.block<2, 2>(static_cast<Eigen::Index>(2 * i), static_cast<Eigen::Index>(2 * i)) = r * d * r.transpose();
    return s;
}

/// Applies a passive linear map to the listed entries: `quad` acts on their
/// interleaved quadratures, `amp` on their complex mean amplitudes.
inline GaussianBeamState transform_linear(const GaussianBeamState& state, const std::vector<std::size_t>& entries,
                                          const Eigen::MatrixXd& quad, const Eigen::MatrixXcd& amp) {
    GaussianBeamState s = state;
    const auto n = static_cast<Eigen::Index>(2 * state.size());
    Eigen::MatrixXd full = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t a = 0; a < entries.size(); ++a) {
        for (std::size_t b = 0; b < entries.size(); ++b) {
            full.block<2, 2>(static_cast<Eigen::Index>(2 * entries[a]), static_cast<Eigen::Index>(2 * entries[b])) =
                quad.block<2, 2>(static_cast<Eigen::Index>(2 * a), static_cast<Eigen::Index>(2 * b));
        }
    }
    s.cov_ = full * state.cov_ * full.transpose();
    for (std::size_t a = 0; a < entries.size(); ++a) {
        complex m = 0.0;
        for (std::size_t b = 0; b < entries.size(); ++b) {
            m += amp(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * state.means_[entries[b]];
        }
        s.means_[entries[a]] = m;
    }
    return s;
}

inline GaussianBeamState apply_phase(const GaussianBeamState& state, const BasisEntry& entry, double phi) {
    const std::size_t i = state.index_of(entry);
    Eigen::MatrixXcd amp(1, 1);
    amp(0, 0) = std::polar(1.0, phi);
    return transform_linear(state, {i}, rotation(phi), amp);
}

/// Phase shift of every mode of a beam by the same angle.
inline GaussianBeamState apply_beam_phase(const GaussianBeamState& state, std::string_view beam, double phi) {
    const auto idx = state.beam_indices(beam);
    if (idx.empty()) throw std::out_of_range("unknown beam '" + std::string(beam) + "'");
    GaussianBeamState s = state;
    for (auto i : idx) s = apply_phase(s, state.basis()[i], phi);
    return s;
}

/// a' = sqrt(t) a + sqrt(1-t) b,  b' = sqrt(1-t) a - sqrt(t) b  (both quadratures alike).
inline GaussianBeamState apply_beamsplitter(const GaussianBeamState& state, const BasisEntry& a,
                                            const BasisEntry& b, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("beamsplitter transmissivity must lie in [0, 1]");
    if (a == b) throw std::invalid_argument("beamsplitter inputs alias the same entry " + a.str());
    const std::size_t ia = state.index_of(a);
    const std::size_t ib = state.index_of(b);
    const double c = std::sqrt(t);
    const double s = std::sqrt(1.0 - t);
    Eigen::Matrix2d mix;
    mix << c, s, s, -c;
    Eigen::MatrixXd quad = Eigen::MatrixXd::Zero(4, 4);
    for (int r = 0; r < 2; ++r) {
        for (int k = 0; k < 2; ++k) quad.block<2, 2>(2 * r, 2 * k) = mix(r, k) * Eigen::Matrix2d::Identity();
    }
    return transform_linear(state, {ia, ib}, quad, mix.cast<complex>());
}

/// Beamsplitter acting mode-by-mode between two beams. Modes present in only
/// one beam are paired with fresh vacuum in the other.
inline GaussianBeamState apply_beam_beamsplitter(const GaussianBeamState& state, std::string_view beam_a,
                                                 std::string_view beam_b, double t) {
    if (beam_a == beam_b) throw std::invalid_argument("beamsplitter beam aliased with itself");
    std::vector<ModeIndex> modes;
    for (const auto& e : state.basis()) {
        if ((e.beam == beam_a || e.beam == beam_b) &&
            std::find(modes.begin(), modes.end(), e.mode) == modes.end()) {
            modes.push_back(e.mode);
        }
    }
    GaussianBeamState s = state;
    for (const auto& m : modes) {
        const BasisEntry ea{std::string(beam_a), m};
        const BasisEntry eb{std::string(beam_b), m};
        s = s.with_vacuum(ea).with_vacuum(eb);
        s = apply_beamsplitter(s, ea, eb, t);
    }
    return s;
}

/// Astigmatic modal phase. Mode (p,q) picks up (p - q)(psi_x - psi_y)/2: the
/// piston and the order-dependent common phase are dropped, so only the
/// relative phase psi_x - psi_y between TEM_pq and TEM_qp (p - q = 1) survives.
inline double modal_phase_for(ModeIndex m, double psi_x, double psi_y) {
    return 0.5 * (m.p - m.q) * (psi_x - psi_y);
}

inline GaussianBeamState apply_modal_phase(const GaussianBeamState& state, std::string_view beam, double psi_x,
                                           double psi_y) {
    const auto idx = state.beam_indices(beam);
    if (idx.empty()) throw std::out_of_range("unknown beam '" + std::string(beam) + "'");
    GaussianBeamState s = state;
    for (auto i : idx) {
        const auto& e = state.basis()[i];
        s = apply_phase(s, e, modal_phase_for(e.mode, psi_x, psi_y));
    }
    return s;
}

struct ModalPhase {
    double psi_x = 0.0;
    double psi_y = 0.0;
    double relative() const { return psi_x - psi_y; }
};

/// Cylindrical-lens pair: separation 2f gives a relative modal phase pi,
/// sqrt(2) f gives pi/2. No other separations are modeled.
inline ModalPhase lens_pair_phase(double separation, double focal_length, double rel_tol = 1e-9) {
    if (!(focal_length > 0.0)) throw std::invalid_argument("lens focal length must be positive");
    const double k = separation / focal_length;
    if (std::abs(k - 2.0) <= rel_tol * 2.0) return {std::numbers::pi, 0.0};
    if (std::abs(k - std::numbers::sqrt2) <= rel_tol * std::numbers::sqrt2) return {std::numbers::pi / 2.0, 0.0};
    throw std::invalid_argument("unsupported lens separation " + std::to_string(separation) + " for f = " +
                                std::to_string(focal_length) + "; supported settings are 2f (pi) and sqrt(2) f (pi/2)");
}

/// Mixes entry i with fresh vacuum on a beamsplitter of transmissivity eta and
/// discards the vacuum output.
inline GaussianBeamState attenuate(const GaussianBeamState& state, std::size_t i, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("efficiency must lie in [0, 1]");
    GaussianBeamState s = state;
    const double g = std::sqrt(eta);
    const auto k = static_cast<Eigen::Index>(2 * i);
    s.cov_.middleRows(k, 2) *= g;
    s.cov_.middleCols(k, 2) *= g;
    s.cov_.block<2, 2>(k, k) += (1.0 - eta) * Eigen::Matrix2d::Identity();
    s.means_[i] *= g;
    return s;
}

inline GaussianBeamState relabel_beam(const GaussianBeamState& state, std::string_view beam,
                                      const std::vector<std::string>& new_labels) {
    GaussianBeamState s = state;
    std::size_t k = 0;
    for (auto& e : s.basis_) {
        if (e.beam == beam) e.beam = new_labels.at(k++);
    }
    return s;
}

/// Asymmetric Mach-Zehnder mode separator: modes with odd p leave by the odd
/// port, even p by the even port. Efficiency eta < 1 is modeled as loss
/// before ideal routing; crosstalk between ports is not modeled.
inline GaussianBeamState mode_separator(const GaussianBeamState& state, std::string_view beam,
                                        const std::string& odd_port, const std::string& even_port,
                                        double eta = 1.0) {
    const auto idx = state.beam_indices(beam);
    if (idx.empty()) throw std::out_of_range("unknown beam '" + std::string(beam) + "'");
    if (odd_port == even_port) throw std::invalid_argument("mode separator ports must differ");
    for (const auto& port : {odd_port, even_port}) {
        if (port != beam && state.has_beam(port)) {
            throw std::invalid_argument("mode separator output '" + port + "' is already in use");
        }
    }
    GaussianBeamState s = state;
    if (eta < 1.0) {
        for (auto i : idx) s = attenuate(s, i, eta);
    }
    std::vector<std::string> labels;
    for (auto i : idx) labels.push_back(state.basis()[i].mode.odd_in_x() ? odd_port : even_port);
    return relabel_beam(s, beam, labels);
}

/// The separator run in reverse: merges an odd-port beam and an even-port beam.
inline GaussianBeamState mode_combiner(const GaussianBeamState& state, std::string_view odd_port,
                                       std::string_view even_port, const std::string& out) {
    if (odd_port == even_port) throw std::invalid_argument("mode combiner inputs must differ");
    if (out != odd_port && out != even_port && state.has_beam(out)) {
        throw std::invalid_argument("mode combiner output '" + out + "' is already in use");
    }
    GaussianBeamState s = state;
    for (const auto& [port, want_odd] : {std::pair{odd_port, true}, std::pair{even_port, false}}) {
        const auto idx = state.beam_indices(port);
        if (idx.empty()) throw std::out_of_range("unknown beam '" + std::string(port) + "'");
        for (auto i : idx) {
            if (state.basis()[i].mode.odd_in_x() != want_odd) {
                throw std::invalid_argument("mode combiner: " + state.basis()[i].str() + " cannot enter the " +
                                            (want_odd ? "odd" : "even") + " port");
            }
        }
        s = relabel_beam(s, port, std::vector<std::string>(idx.size(), out));
    }
    return s;
}

/// Symmetrized second moment <dX^phiA dX^phiB> of two lab-frame quadratures.
inline double quadrature_covariance(const GaussianBeamState& state, const QuadratureSpec& a,
                                    const QuadratureSpec& b) {
    const std::size_t ia = state.index_of(a.entry);
    const std::size_t ib = state.index_of(b.entry);
    const Eigen::Vector2d ua(std::cos(a.angle), std::sin(a.angle));
    const Eigen::Vector2d ub(std::cos(b.angle), std::sin(b.angle));
    return ua.dot(state.block(ia, ib) * ub);
}

inline double quadrature_variance(const GaussianBeamState& state, const BasisEntry& e, double phi) {
    const QuadratureSpec s{e, phi};
    return quadrature_covariance(state, s, s);
}

inline double total_photon_number(const GaussianBeamState& state) {
    double n = 0.0;
    for (const auto& m : state.means()) n += std::norm(m);
    return n;
}

/// Smallest eigenvalue of cov + i Omega; negative values flag an unphysical state.
inline double uncertainty_margin(const GaussianBeamState& state) {
    const auto n = static_cast<Eigen::Index>(2 * state.size());
    if (n == 0) return 0.0;
    Eigen::MatrixXcd m = state.cov().cast<complex>();
    for (Eigen::Index k = 0; k < n; k += 2) {
        m(k, k + 1) += complex{0.0, 1.0};
        m(k + 1, k) -= complex{0.0, 1.0};
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Zero-mean Gaussian fluctuation vectors, one row of 2N quadratures per sample.
struct FluctuationSamples {
    std::size_t dimension = 0;
    std::size_t count = 0;
    std::vector<double> data;

    double at(std::size_t sample, std::size_t component) const { return data[sample * dimension + component]; }
};

/// Draws fluctuation vectors with covariance `state.cov()`. Deterministic for
/// a fixed seed (std::mt19937_64 feeding std::normal_distribution).
inline FluctuationSamples sample_fluctuations(const GaussianBeamState& state, std::size_t count,
                                              std::uint64_t seed) {
    const Eigen::MatrixXd& cov = state.cov();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const Eigen::VectorXd lambda = es.eigenvalues();
    const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
    if (lambda.size() > 0 && lambda.minCoeff() < -1e-10 * scale) {
        throw std::domain_error("covariance is not positive semidefinite: eigenvalue " +
                                std::to_string(lambda.minCoeff()));
    }
    const Eigen::MatrixXd factor = es.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    const auto dim = static_cast<std::size_t>(cov.rows());
    FluctuationSamples out{dim, count, std::vector<double>(dim * count)};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < count; ++k) {
        for (auto& v : z) v = normal(rng);
        const Eigen::VectorXd x = factor * z;
        std::copy(x.begin(), x.end(), out.data.begin() + static_cast<std::ptrdiff_t>(k * dim));
    }
    return out;
}

}  // namespace sstokes
