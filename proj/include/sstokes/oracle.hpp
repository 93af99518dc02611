// oracle.hpp
// Exact two-mode reference model in a truncated Fock space. Used to check the
// linearized Stokes formulas; nothing here is linearized.
//
// Basis |n_pq, n_qp> with 0 <= n <= cutoff per mode, lexicographic order
// (n_pq major). Operators are sparse; states are dense coefficient vectors.

#pragma once

#include "sstokes/gaussian.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace sstokes::fock {

using SparseMatrix = Eigen::SparseMatrix<complex>;

// Two-mode dimension (cutoff + 1)^2 must stay within this; the sparse Stokes
// matrices then hold at most a few million non-zeros.
inline constexpr int kMaxTwoModeCutoff = 400;
inline constexpr double kTailThreshold = 1e-10;

struct FockOperator {
    int cutoff = 0;
    SparseMatrix matrix;

    Eigen::Index dimension() const { return matrix.rows(); }
};

inline Eigen::Index two_mode_index(int n_pq, int n_qp, int cutoff) {
    return static_cast<Eigen::Index>(n_pq) * (cutoff + 1) + n_qp;
}

/// Single-mode annihilation operator, <m|a|n> = sqrt(n) delta_{m,n-1}.
inline SparseMatrix annihilation(int cutoff) {
    const int d = cutoff + 1;
    std::vector<Eigen::Triplet<complex>> t;
    for (int n = 1; n < d; ++n) t.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
    SparseMatrix a(d, d);
    a.setFromTriplets(t.begin(), t.end());
    return a;
}

inline SparseMatrix identity(int cutoff) {
    SparseMatrix id(cutoff + 1, cutoff + 1);
    id.setIdentity();
    return id;
}

inline void check_cutoff(int cutoff) {
    if (cutoff < 1) throw std::invalid_argument("Fock cutoff must be at least 1");
    if (cutoff > kMaxTwoModeCutoff) {
        throw std::length_error("two-mode cutoff " + std::to_string(cutoff) + " exceeds the memory budget (max " +
                                std::to_string(kMaxTwoModeCutoff) + ")");
    }
}

/// S0..S3 for the pair, with the e^{+-i theta} factors in S2 and S3.
inline std::array<FockOperator, 4> stokes_matrices(int cutoff, double theta = 0.0) {
    check_cutoff(cutoff);
    const SparseMatrix a1 = annihilation(cutoff);
    const SparseMatrix id = identity(cutoff);
    const SparseMatrix a = Eigen::kroneckerProduct(a1, id).eval();  // a_pq
    const SparseMatrix b = Eigen::kroneckerProduct(id, a1).eval();  // a_qp
    const SparseMatrix ad = a.adjoint();
    const SparseMatrix bd = b.adjoint();
    const complex e = std::polar(1.0, theta);
    const complex i{0.0, 1.0};
    std::array<FockOperator, 4> s;
    s[0] = {cutoff, (ad * a + bd * b).pruned()};
    s[1] = {cutoff, (ad * a - bd * b).pruned()};
    s[2] = {cutoff, (e * (ad * b) + std::conj(e) * (bd * a)).pruned()};
    s[3] = {cutoff, ((i * std::conj(e)) * (bd * a) - (i * e) * (ad * b)).pruned()};
    return s;
}

inline double hermiticity_residual(const FockOperator& op) {
    const SparseMatrix diff = op.matrix - SparseMatrix(op.matrix.adjoint());
    double worst = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    }
    return worst;
}

struct SingleModeState {
    int cutoff = 0;
    Eigen::VectorXcd coeffs;
    double tail = 0.0;  // population of the top level
};

/// Cutoff estimate from mean and spread of the photon number of D(a)S(r)|0>.
inline int suggested_cutoff(const SqueezerConfig& c) {
    const double r = c.squeeze_parameter();
    const double sh = std::sinh(r), ch = std::cosh(r);
    const double n_mean = std::norm(c.alpha) + sh * sh;
    const double phase = c.alpha == complex{} ? 0.0 : std::arg(c.alpha);
    const double var = std::norm(c.alpha) * (std::cosh(2 * r) - std::sinh(2 * r) * std::cos(2.0 * (phase - c.angle))) +
                       2.0 * sh * sh * ch * ch;
    return static_cast<int>(std::ceil(n_mean + 12.0 * std::sqrt(var) + 25.0 + 10.0 * r));
}

namespace detail {

inline Eigen::VectorXcd displaced_squeezed_vacuum(int dim_cutoff, const SqueezerConfig& c) {
    const int d = dim_cutoff + 1;
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(d, d);
    for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    const Eigen::MatrixXcd ad = a.adjoint();
    // S(xi) = exp((conj(xi) a^2 - xi a^dag^2) / 2), xi = r e^{2 i angle}
    const complex xi = std::polar(c.squeeze_parameter(), 2.0 * c.angle);
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
    v(0) = 1.0;
    if (xi != complex{}) {
        const Eigen::MatrixXcd gen = 0.5 * (std::conj(xi) * (a * a) - xi * (ad * ad));
        v = gen.exp() * v;
    }
    if (c.alpha != complex{}) {
        const Eigen::MatrixXcd gen = c.alpha * ad - std::conj(c.alpha) * a;
        v = gen.exp() * v;
    }
    return v;
}

}  // namespace detail

/// D(alpha) S(r)|0> built from matrix exponentials of truncated generators.
/// The exponentials are taken in a padded space and the result truncated, so
/// the edge error of the truncated generators does not reach kept levels.
inline SingleModeState squeezed_coherent_mode(int cutoff, const SqueezerConfig& config,
                                              double tail_threshold = kTailThreshold) {
    config.validate();
    if (!config.is_pure()) throw std::invalid_argument("Fock oracle supports pure squeezers only (v_anti = 1/v_sq)");
    if (cutoff < 1) throw std::invalid_argument("Fock cutoff must be at least 1");
    const int padded = cutoff + std::max(40, cutoff / 2);
    const Eigen::VectorXcd full = detail::displaced_squeezed_vacuum(padded, config);
    SingleModeState s;
    s.cutoff = cutoff;
    s.coeffs = full.head(cutoff + 1);
    s.tail = std::norm(s.coeffs(cutoff));
    const double kept = s.coeffs.squaredNorm();
    if (s.tail > tail_threshold || 1.0 - kept > tail_threshold) {
        int need = cutoff;
        double beyond = std::max(0.0, 1.0 - kept);
        while (need < padded && (beyond > tail_threshold || std::norm(full(need)) > tail_threshold)) {
            ++need;
            beyond = std::max(0.0, beyond - std::norm(full(need)));
        }
        if (need >= padded) need = std::max(padded, suggested_cutoff(config));
        char buf[96];
        std::snprintf(buf, sizeof buf, " (top-level population %.2e, population beyond the cutoff %.2e)", s.tail,
                      std::max(0.0, 1.0 - kept));
        throw std::out_of_range("Fock truncation unsafe at cutoff " + std::to_string(cutoff) + buf +
                                "; a cutoff of about " + std::to_string(need) + " is required");
    }
    s.coeffs /= std::sqrt(kept);
    return s;
}

struct FockState {
    int cutoff = 0;
    Eigen::VectorXcd coeffs;
    double tail = 0.0;  // mass on states with either mode at the top level
    bool truncation_safe = false;
};

/// Product state of two independently squeezed coherent modes (pq, qp).
inline FockState coherent_squeezed_state(int cutoff, const SqueezerConfig& pq, const SqueezerConfig& qp,
                                         double tail_threshold = kTailThreshold) {
    check_cutoff(cutoff);
    const auto m1 = squeezed_coherent_mode(cutoff, pq, tail_threshold);
    const auto m2 = squeezed_coherent_mode(cutoff, qp, tail_threshold);
    FockState s;
    s.cutoff = cutoff;
    s.coeffs = Eigen::kroneckerProduct(m1.coeffs, m2.coeffs).eval();
    s.tail = m1.tail + m2.tail;
    s.truncation_safe = s.tail <= tail_threshold;
    return s;
}

struct ExactMoments {
    std::array<double, 4> means{};
    std::array<double, 4> variances{};
};

inline ExactMoments exact_moments(const FockState& state, const std::array<FockOperator, 4>& ops) {
    ExactMoments m;
    for (std::size_t i = 0; i < 4; ++i) {
        if (ops[i].dimension() != state.coeffs.size()) {
            throw std::invalid_argument("operator and state dimensions differ");
        }
        Eigen::VectorXcd w = ops[i].matrix * state.coeffs;
        const double mean = state.coeffs.dot(w).real();
        w -= mean * state.coeffs;
        m.means[i] = mean;
        m.variances[i] = w.squaredNorm();
    }
    return m;
}

namespace detail {

inline double max_entry_on_subspace(const SparseMatrix& m, int cutoff, int max_total) {
    double worst = 0.0;
    const int d = cutoff + 1;
    auto total = [d](Eigen::Index idx) { return static_cast<int>(idx / d + idx % d); };
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
            if (max_total >= 0 && (total(it.row()) > max_total || total(it.col()) > max_total)) continue;
            worst = std::max(worst, std::abs(it.value()));
        }
    }
    return worst;
}

}  // namespace detail

/// max |([S_i, S_j] - 2i S_k)| entry; with restrict_to_safe only rows and
/// columns of total photon number <= cutoff - 2 are inspected.
inline double commutator_residual(int i, int j, int k, int cutoff, bool restrict_to_safe = true,
                                  double theta = 0.0) {
    if (cutoff < 3) throw std::invalid_argument("commutator check needs cutoff >= 3");
    const bool cyclic = (i == 1 && j == 2 && k == 3) || (i == 2 && j == 3 && k == 1) || (i == 3 && j == 1 && k == 2);
    if (!cyclic) throw std::invalid_argument("commutator check needs a cyclic triple of 1, 2, 3");
    const auto s = stokes_matrices(cutoff, theta);
    const SparseMatrix& a = s[static_cast<std::size_t>(i)].matrix;
    const SparseMatrix& b = s[static_cast<std::size_t>(j)].matrix;
    const SparseMatrix& c = s[static_cast<std::size_t>(k)].matrix;
    const SparseMatrix r = SparseMatrix(a * b) - SparseMatrix(b * a) - complex{0.0, 2.0} * c;
    return detail::max_entry_on_subspace(r, cutoff, restrict_to_safe ? cutoff - 2 : -1);
}

/// max |S1^2 + S2^2 + S3^2 - S0 (S0 + 2)| on the safe subspace.
inline double casimir_residual(int cutoff, double theta = 0.0) {
    if (cutoff < 3) throw std::invalid_argument("Casimir check needs cutoff >= 3");
    const auto s = stokes_matrices(cutoff, theta);
    SparseMatrix two(s[0].matrix.rows(), s[0].matrix.cols());
    two.setIdentity();
    two *= 2.0;
    const SparseMatrix lhs = SparseMatrix(s[1].matrix * s[1].matrix) + SparseMatrix(s[2].matrix * s[2].matrix) +
                             SparseMatrix(s[3].matrix * s[3].matrix);
    const SparseMatrix rhs = s[0].matrix * SparseMatrix(s[0].matrix + two);
    return detail::max_entry_on_subspace(SparseMatrix(lhs - rhs), cutoff, cutoff - 2);
}

}  // namespace sstokes::fock
